#pragma once

#include <cstdint>
#include <vector>

namespace perc {

// All sets are closed; tangencies count as intersections.  In/on tests use
// an absolute tolerance of kGeomEps length units.
inline constexpr double kGeomEps = 1e-9;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Disc {
  Point center;
  double radius = 0.0;
};

struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  bool contains(Point p) const {
    return p.x >= x0 - kGeomEps && p.x <= x1 + kGeomEps &&
           p.y >= y0 - kGeomEps && p.y <= y1 + kGeomEps;
  }
  Rect inflated(double pad) const {
    return {x0 - pad, y0 - pad, x1 + pad, y1 + pad};
  }
};

// Sup-norm box [-r, r]^2 centered at the origin.
struct SupBox {
  double half_width = 0.0;
  Rect as_rect() const {
    return {-half_width, -half_width, half_width, half_width};
  }
};

double dist_point_segment(Point p, Point a, Point b);

// Closed disc vs closed rectangle (clamp-center test).
bool disc_rect_intersects(const Disc& d, const Rect& k);

// Closed disc vs closed segment ab.
bool disc_touches_segment(const Disc& d, Point a, Point b);

// Whether d1 n d2 n K is nonempty.  The lens d1 n d2 is convex, so the test
// enumerates: circle-circle intersection points inside K, chord midpoint
// inside K, rectangle corners inside the lens, rectangle edges crossing a
// bounding arc, and K's center inside the lens (K entirely within the lens).
bool disc_disc_rect_intersects(const Disc& d1, const Disc& d2, const Rect& k);

// Uniform-cell spatial hash over disc bounding boxes.  Built once per
// realization, read-only afterwards; buckets are stored CSR-style so a
// bucket is a contiguous index range.
class SpatialGrid {
 public:
  SpatialGrid() = default;
  SpatialGrid(const std::vector<Disc>& discs, double cell_size);

  double cell_size() const { return cell_; }

  std::int64_t cell_of(double v) const;

  // Upper cell index for a bounding-box edge: cells are half-open, so an
  // extent ending exactly on a boundary stays in the left cell.
  std::int64_t cell_hi(double v) const;

  // Disc indices whose bounding box overlaps the cell (cx, cy).
  std::pair<const std::uint32_t*, const std::uint32_t*> bucket(
      std::int64_t cx, std::int64_t cy) const;

  // Appends to `out` (without deduplication) all disc indices whose bounding
  // box overlaps any cell overlapped by `bbox`.
  void candidates(const Rect& bbox, std::vector<std::uint32_t>& out) const;

  // Cell coordinate bounds actually occupied, as [cx0, cx1] x [cy0, cy1].
  bool cell_bounds(std::int64_t& cx0, std::int64_t& cy0, std::int64_t& cx1,
                   std::int64_t& cy1) const;

 private:
  double cell_ = 1.0;
  std::int64_t cx0_ = 0, cy0_ = 0;
  std::int64_t ncx_ = 0, ncy_ = 0;
  std::vector<std::uint32_t> offsets_;  // ncx*ncy + 1
  std::vector<std::uint32_t> entries_;
};

// Median radius clamped to [1e-3, max_extent]; the default bucket sizing
// rule for per-realization grids.
double default_cell_size(const std::vector<Disc>& discs, double max_extent);

}  // namespace perc
