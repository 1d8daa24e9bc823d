#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "perc/geometry.hpp"
#include "perc/models.hpp"

namespace perc {

enum class Phase : std::uint8_t { occupied, vacant };

// Crossing / arm / circuit / origin-arm query.  Geometry is expressed in the
// event's own frame: crossings live in [0,w] x [0,h], box events are
// centered at the origin.
struct EventSpec {
  enum class Kind : std::uint8_t {
    cross,         // left-right occupied/vacant crossing of [0,w] x [0,h]
    cross_to_sub,  // right side restricted to [y_low, h]
    arm,           // B_inf(r_inner) to boundary of B_inf(r_outer)
    circuit,       // circuit in the annulus; complement of the dual arm
    origin_arm,    // origin to boundary of B_inf(r_outer)
  };

  Kind kind = Kind::cross;
  Phase phase = Phase::occupied;
  double width = 0.0, height = 0.0;  // cross, cross_to_sub
  double y_low = 0.0;                // cross_to_sub
  double r_inner = 0.0;              // arm, circuit
  double r_outer = 0.0;              // arm, circuit, origin_arm

  static EventSpec cross(double w, double h, Phase ph);
  static EventSpec cross_to_sub(double w, double h, double y_low, Phase ph);
  static EventSpec arm(double r_in, double r_out, Phase ph);
  static EventSpec circuit(double r_in, double r_out, Phase ph);
  static EventSpec origin_arm(double r, Phase ph);

  // Region a realization must cover to decide the event.
  Rect query_window() const;

  std::string describe() const;
};

// Occupancy bitmap over a pixel grid; bit (i,j) is set iff the pixel center
// is occupied.  Convention pairing is fixed: occupied reads 8-connected,
// vacant (complement) 4-connected, which makes discrete crossing duality
// exact on the lattice.
struct Bitmap {
  int nx = 0, ny = 0;
  double x0 = 0.0, y0 = 0.0;
  double dx = 0.0, dy = 0.0;
  int words_per_row = 0;
  std::vector<std::uint64_t> words;

  void init(const Rect& region, int nx_, int ny_);
  double cx(int i) const { return x0 + (i + 0.5) * dx; }
  double cy(int j) const { return y0 + (j + 0.5) * dy; }
  bool get(int i, int j) const {
    return (words[static_cast<std::size_t>(j) * words_per_row + (i >> 6)] >>
            (i & 63)) & 1u;
  }
  void set(int i, int j) {
    words[static_cast<std::size_t>(j) * words_per_row + (i >> 6)] |=
        std::uint64_t{1} << (i & 63);
  }
  void set_row_range(int j, int i_lo, int i_hi);  // inclusive
  std::size_t popcount() const;
};

struct DetectionResult {
  enum class Value : std::uint8_t { no = 0, yes = 1, unresolved = 2 };
  Value value = Value::no;
  double resolution_used = 0.0;  // 0 means exact
  bool exact = false;

  bool is_resolved() const { return value != Value::unresolved; }
  bool truth() const { return value == Value::yes; }
};

// Pixel-center occupancy source for rasterization.  `fill` may override the
// per-pixel loop with something faster (the disc oracle uses row spans).
class PixelOracle {
 public:
  virtual ~PixelOracle() = default;
  virtual bool occupied_at(Point p) const = 0;
  virtual void fill(Bitmap& bm) const;
};

class DiscOracle : public PixelOracle {
 public:
  explicit DiscOracle(const std::vector<Disc>& discs) : discs_(discs) {}
  bool occupied_at(Point p) const override;
  void fill(Bitmap& bm) const override;

 private:
  const std::vector<Disc>& discs_;
};

class FieldOracle : public PixelOracle {
 public:
  explicit FieldOracle(ColorField& field) : field_(field) {}
  bool occupied_at(Point p) const override { return field_.black_at(p); }

 private:
  ColorField& field_;
};

// --- Exact detectors (Boolean model only) ----------------------------------

// Occupied path inside O n K joining segment a to segment b (both on dK).
// Clipped discs are convex, so pairwise intersection inside K characterizes
// the components of the clipped union; connectivity by union-find.
bool detect_cross_occupied(const std::vector<Disc>& discs, const Rect& k,
                           Point a0, Point a1, Point b0, Point b1);

// Vacant left-right crossing of K, through duality: it occurs iff the
// perpendicular occupied crossing does not (tangency ties are measure zero).
bool detect_cross_vacant_lr(const std::vector<Disc>& discs, const Rect& k);

// Occupied connection from B_inf(r_in) to the boundary of B_inf(r_out),
// discs clipped to the outer box.
bool detect_arm_occupied(const std::vector<Disc>& discs, double r_in,
                         double r_out);

// Occupied connection from the origin to the boundary of B_inf(r).
bool detect_origin_arm_occupied(const std::vector<Disc>& discs, double r);

// Dispatch: the exact answer when an exact route exists for this spec
// (occupied rect/arm events, their duals), nullopt otherwise.
std::optional<bool> detect_exact(const EventSpec& spec,
                                 const std::vector<Disc>& discs);

// --- Raster detectors -------------------------------------------------------

Bitmap rasterize(const PixelOracle& oracle, const Rect& region, int nx,
                 int ny);

// Event value on one bitmap under the fixed 8/4 convention.
bool eval_bitmap_event(const Bitmap& bm, const EventSpec& spec);

// Side-to-side crossing on one bitmap: left-right when vertical is false,
// top-bottom when true.
bool eval_bitmap_cross(const Bitmap& bm, Phase phase, bool vertical);

// Event at a fixed resolution (pixel edge length delta); the plain
// single-resolution reference detector.
bool raster_event_at(const EventSpec& spec, const PixelOracle& oracle,
                     double delta);

// Certified refinement: evaluates at delta0 and delta0/2 and keeps halving
// until two consecutive resolutions agree or delta_min is passed; disagreement
// at the floor comes back as `unresolved` carrying the finest value.
DetectionResult detect_raster(const EventSpec& spec, const PixelOracle& oracle,
                              double delta0, double delta_min);

}  // namespace perc
