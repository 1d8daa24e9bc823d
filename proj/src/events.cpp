#include "perc/events.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "perc/kernels.hpp"

namespace perc {

EventSpec EventSpec::cross(double w, double h, Phase ph) {
  if (!(w > 0.0 && h > 0.0)) throw std::invalid_argument("bad cross size");
  EventSpec s;
  s.kind = Kind::cross;
  s.phase = ph;
  s.width = w;
  s.height = h;
  return s;
}

EventSpec EventSpec::cross_to_sub(double w, double h, double y_low, Phase ph) {
  if (!(w > 0.0 && h > 0.0) || y_low < 0.0 || y_low > h)
    throw std::invalid_argument("bad cross_to_sub geometry");
  EventSpec s;
  s.kind = Kind::cross_to_sub;
  s.phase = ph;
  s.width = w;
  s.height = h;
  s.y_low = y_low;
  return s;
}

EventSpec EventSpec::arm(double r_in, double r_out, Phase ph) {
  if (!(0.0 < r_in && r_in < r_out))
    throw std::invalid_argument("arm needs 0 < r_inner < r_outer");
  EventSpec s;
  s.kind = Kind::arm;
  s.phase = ph;
  s.r_inner = r_in;
  s.r_outer = r_out;
  return s;
}

EventSpec EventSpec::circuit(double r_in, double r_out, Phase ph) {
  EventSpec s = arm(r_in, r_out, ph);
  s.kind = Kind::circuit;
  s.phase = ph;
  return s;
}

EventSpec EventSpec::origin_arm(double r, Phase ph) {
  if (!(r > 0.0)) throw std::invalid_argument("origin_arm needs r > 0");
  EventSpec s;
  s.kind = Kind::origin_arm;
  s.phase = ph;
  s.r_outer = r;
  return s;
}

Rect EventSpec::query_window() const {
  switch (kind) {
    case Kind::cross:
    case Kind::cross_to_sub:
      return {0.0, 0.0, width, height};
    case Kind::arm:
    case Kind::circuit:
    case Kind::origin_arm:
      return {-r_outer, -r_outer, r_outer, r_outer};
  }
  return {};
}

std::string EventSpec::describe() const {
  const char* ph = phase == Phase::occupied ? "occ" : "vac";
  char buf[96];
  switch (kind) {
    case Kind::cross:
      std::snprintf(buf, sizeof buf, "cross(%gx%g,%s)", width, height, ph);
      break;
    case Kind::cross_to_sub:
      std::snprintf(buf, sizeof buf, "cross_sub(%gx%g,y>=%g,%s)", width,
                    height, y_low, ph);
      break;
    case Kind::arm:
      std::snprintf(buf, sizeof buf, "arm(%g,%g,%s)", r_inner, r_outer, ph);
      break;
    case Kind::circuit:
      std::snprintf(buf, sizeof buf, "cir(%g,%g,%s)", r_inner, r_outer, ph);
      break;
    case Kind::origin_arm:
      std::snprintf(buf, sizeof buf, "arm0(%g,%s)", r_outer, ph);
      break;
  }
  return buf;
}

// ---------------------------------------------------------------------------
// Exact detectors

namespace {

struct UnionFind {
  std::vector<std::uint32_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0u);
  }
  std::uint32_t find(std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// Components of the K-clipped union of discs, via grid buckets with a SIMD
// circle-overlap prefilter and the exact lens-in-rect test on survivors.
UnionFind clipped_components(const std::vector<Disc>& discs, const Rect& k) {
  const std::size_t n = discs.size();
  UnionFind uf(n);
  if (n < 2) return uf;

  const double cell =
      default_cell_size(discs, std::max(k.width(), k.height()));
  const auto cell_of = [cell](double v) {
    return static_cast<std::int64_t>(std::floor(v / cell));
  };

  std::int64_t cx0 = 0, cy0 = 0, cx1 = 0, cy1 = 0;
  std::vector<std::array<std::int64_t, 4>> span(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Disc& d = discs[i];
    span[i] = {cell_of(d.center.x - d.radius), cell_of(d.center.x + d.radius),
               cell_of(d.center.y - d.radius), cell_of(d.center.y + d.radius)};
    if (i == 0) {
      cx0 = span[i][0];
      cx1 = span[i][1];
      cy0 = span[i][2];
      cy1 = span[i][3];
    } else {
      cx0 = std::min(cx0, span[i][0]);
      cx1 = std::max(cx1, span[i][1]);
      cy0 = std::min(cy0, span[i][2]);
      cy1 = std::max(cy1, span[i][3]);
    }
  }
  const std::int64_t ncx = cx1 - cx0 + 1;
  const std::int64_t ncy = cy1 - cy0 + 1;
  const std::size_t ncells = static_cast<std::size_t>(ncx * ncy);

  // Bucket payloads are gathered copies so each bucket scans contiguously.
  std::vector<std::uint32_t> offsets(ncells + 1, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::int64_t cy = span[i][2]; cy <= span[i][3]; ++cy)
      for (std::int64_t cx = span[i][0]; cx <= span[i][1]; ++cx)
        ++offsets[static_cast<std::size_t>((cy - cy0) * ncx + (cx - cx0)) + 1];
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  const std::size_t total = offsets.back();
  std::vector<double> px(total), py(total), pr(total);
  std::vector<std::uint32_t> pid(total);
  {
    std::vector<std::uint32_t> cursor(offsets.begin(), offsets.end() - 1);
    for (std::size_t i = 0; i < n; ++i)
      for (std::int64_t cy = span[i][2]; cy <= span[i][3]; ++cy)
        for (std::int64_t cx = span[i][0]; cx <= span[i][1]; ++cx) {
          const std::size_t c =
              static_cast<std::size_t>((cy - cy0) * ncx + (cx - cx0));
          const std::uint32_t at = cursor[c]++;
          px[at] = discs[i].center.x;
          py[at] = discs[i].center.y;
          pr[at] = discs[i].radius;
          pid[at] = static_cast<std::uint32_t>(i);
        }
  }

  const auto& kb = kernels::active_backend();
  std::vector<std::uint8_t> mask;
  for (std::size_t i = 0; i < n; ++i) {
    const Disc& d = discs[i];
    for (std::int64_t cy = span[i][2]; cy <= span[i][3]; ++cy)
      for (std::int64_t cx = span[i][0]; cx <= span[i][1]; ++cx) {
        const std::size_t c =
            static_cast<std::size_t>((cy - cy0) * ncx + (cx - cx0));
        const std::uint32_t b = offsets[c], e = offsets[c + 1];
        if (b == e) continue;
        mask.resize(e - b);
        kb.overlap_mask(d.center.x, d.center.y, d.radius, px.data() + b,
                        py.data() + b, pr.data() + b, e - b, mask.data());
        for (std::uint32_t t = b; t < e; ++t) {
          if (!mask[t - b]) continue;
          const std::uint32_t j = pid[t];
          if (j <= i) continue;
          if (uf.find(static_cast<std::uint32_t>(i)) == uf.find(j)) continue;
          if (disc_disc_rect_intersects(d, discs[j], k))
            uf.unite(static_cast<std::uint32_t>(i), j);
        }
      }
  }
  return uf;
}

std::vector<Disc> keep_intersecting(const std::vector<Disc>& discs,
                                    const Rect& k) {
  std::vector<Disc> kept;
  for (const Disc& d : discs)
    if (disc_rect_intersects(d, k)) kept.push_back(d);
  return kept;
}

// Generic two-flag connectivity: true iff some component holds both flags.
bool component_joins(const std::vector<Disc>& kept, const Rect& k,
                     const std::vector<std::uint8_t>& flag_a,
                     const std::vector<std::uint8_t>& flag_b) {
  bool any_a = false, any_b = false;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    any_a = any_a || flag_a[i];
    any_b = any_b || flag_b[i];
  }
  if (!any_a || !any_b) return false;
  UnionFind uf = clipped_components(kept, k);
  std::vector<std::uint8_t> root_a(kept.size(), 0), root_b(kept.size(), 0);
  for (std::uint32_t i = 0; i < kept.size(); ++i) {
    const std::uint32_t r = uf.find(i);
    root_a[r] |= flag_a[i];
    root_b[r] |= flag_b[i];
    if (root_a[r] && root_b[r]) return true;
  }
  return false;
}

}  // namespace

bool detect_cross_occupied(const std::vector<Disc>& discs, const Rect& k,
                           Point a0, Point a1, Point b0, Point b1) {
  const std::vector<Disc> kept = keep_intersecting(discs, k);
  std::vector<std::uint8_t> ta(kept.size()), tb(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    ta[i] = disc_touches_segment(kept[i], a0, a1) ? 1 : 0;
    tb[i] = disc_touches_segment(kept[i], b0, b1) ? 1 : 0;
  }
  return component_joins(kept, k, ta, tb);
}

bool detect_cross_vacant_lr(const std::vector<Disc>& discs, const Rect& k) {
  const Point top0{k.x0, k.y1}, top1{k.x1, k.y1};
  const Point bot0{k.x0, k.y0}, bot1{k.x1, k.y0};
  return !detect_cross_occupied(discs, k, top0, top1, bot0, bot1);
}

bool detect_arm_occupied(const std::vector<Disc>& discs, double r_in,
                         double r_out) {
  if (!(0.0 < r_in && r_in < r_out))
    throw std::invalid_argument("arm needs 0 < r_in < r_out");
  const Rect k{-r_out, -r_out, r_out, r_out};
  const Rect inner{-r_in, -r_in, r_in, r_in};
  const std::vector<Disc> kept = keep_intersecting(discs, k);
  std::vector<std::uint8_t> ti(kept.size()), to(kept.size());
  const Point c[4] = {{k.x0, k.y0}, {k.x1, k.y0}, {k.x1, k.y1}, {k.x0, k.y1}};
  for (std::size_t i = 0; i < kept.size(); ++i) {
    ti[i] = disc_rect_intersects(kept[i], inner) ? 1 : 0;
    to[i] = (disc_touches_segment(kept[i], c[0], c[1]) ||
             disc_touches_segment(kept[i], c[1], c[2]) ||
             disc_touches_segment(kept[i], c[2], c[3]) ||
             disc_touches_segment(kept[i], c[3], c[0]))
                ? 1
                : 0;
  }
  return component_joins(kept, k, ti, to);
}

bool detect_origin_arm_occupied(const std::vector<Disc>& discs, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("origin arm needs r > 0");
  const Rect k{-r, -r, r, r};
  const std::vector<Disc> kept = keep_intersecting(discs, k);
  std::vector<std::uint8_t> ti(kept.size()), to(kept.size());
  const Point c[4] = {{k.x0, k.y0}, {k.x1, k.y0}, {k.x1, k.y1}, {k.x0, k.y1}};
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const double dx = kept[i].center.x;
    const double dy = kept[i].center.y;
    const double rr = kept[i].radius + kGeomEps;
    ti[i] = (dx * dx + dy * dy <= rr * rr) ? 1 : 0;
    to[i] = (disc_touches_segment(kept[i], c[0], c[1]) ||
             disc_touches_segment(kept[i], c[1], c[2]) ||
             disc_touches_segment(kept[i], c[2], c[3]) ||
             disc_touches_segment(kept[i], c[3], c[0]))
                ? 1
                : 0;
  }
  return component_joins(kept, k, ti, to);
}

std::optional<bool> detect_exact(const EventSpec& spec,
                                 const std::vector<Disc>& discs) {
  const Rect k = spec.query_window();
  switch (spec.kind) {
    case EventSpec::Kind::cross: {
      if (spec.phase == Phase::occupied)
        return detect_cross_occupied(discs, k, {k.x0, k.y0}, {k.x0, k.y1},
                                     {k.x1, k.y0}, {k.x1, k.y1});
      return detect_cross_vacant_lr(discs, k);
    }
    case EventSpec::Kind::cross_to_sub: {
      if (spec.phase == Phase::occupied)
        return detect_cross_occupied(discs, k, {k.x0, k.y0}, {k.x0, k.y1},
                                     {k.x1, spec.y_low}, {k.x1, k.y1});
      return std::nullopt;  // no convex-duality route for sub-side vacancy
    }
    case EventSpec::Kind::arm:
      if (spec.phase == Phase::occupied)
        return detect_arm_occupied(discs, spec.r_inner, spec.r_outer);
      return std::nullopt;
    case EventSpec::Kind::origin_arm:
      if (spec.phase == Phase::occupied)
        return detect_origin_arm_occupied(discs, spec.r_outer);
      return std::nullopt;
    case EventSpec::Kind::circuit:
      // cir* is definitionally the complement of the occupied arm, which is
      // exact; the occupied circuit needs the vacant arm and rasterizes.
      if (spec.phase == Phase::vacant)
        return !detect_arm_occupied(discs, spec.r_inner, spec.r_outer);
      return std::nullopt;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Raster machinery

void Bitmap::init(const Rect& region, int nx_, int ny_) {
  nx = nx_;
  ny = ny_;
  x0 = region.x0;
  y0 = region.y0;
  dx = region.width() / nx;
  dy = region.height() / ny;
  words_per_row = (nx + 63) / 64;
  words.assign(static_cast<std::size_t>(words_per_row) * ny, 0);
}

void Bitmap::set_row_range(int j, int i_lo, int i_hi) {
  if (i_lo < 0) i_lo = 0;
  if (i_hi >= nx) i_hi = nx - 1;
  if (i_lo > i_hi) return;
  const std::size_t base = static_cast<std::size_t>(j) * words_per_row;
  const int w_lo = i_lo >> 6, w_hi = i_hi >> 6;
  const std::uint64_t first = ~std::uint64_t{0} << (i_lo & 63);
  const std::uint64_t last = ~std::uint64_t{0} >> (63 - (i_hi & 63));
  if (w_lo == w_hi) {
    words[base + w_lo] |= first & last;
    return;
  }
  words[base + w_lo] |= first;
  for (int w = w_lo + 1; w < w_hi; ++w) words[base + w] = ~std::uint64_t{0};
  words[base + w_hi] |= last;
}

std::size_t Bitmap::popcount() const {
  std::size_t n = 0;
  for (std::uint64_t w : words) n += std::popcount(w);
  return n;
}

void PixelOracle::fill(Bitmap& bm) const {
  for (int j = 0; j < bm.ny; ++j)
    for (int i = 0; i < bm.nx; ++i)
      if (occupied_at({bm.cx(i), bm.cy(j)})) bm.set(i, j);
}

bool DiscOracle::occupied_at(Point p) const {
  for (const Disc& d : discs_) {
    const double dx = p.x - d.center.x;
    const double dy = p.y - d.center.y;
    if (dx * dx + dy * dy <= d.radius * d.radius) return true;
  }
  return false;
}

void DiscOracle::fill(Bitmap& bm) const {
  for (const Disc& d : discs_) {
    const double r2 = d.radius * d.radius;
    int j_lo = static_cast<int>(
        std::ceil((d.center.y - d.radius - bm.y0) / bm.dy - 0.5));
    int j_hi = static_cast<int>(
        std::floor((d.center.y + d.radius - bm.y0) / bm.dy - 0.5));
    j_lo = std::max(j_lo, 0);
    j_hi = std::min(j_hi, bm.ny - 1);
    for (int j = j_lo; j <= j_hi; ++j) {
      const double off = bm.cy(j) - d.center.y;
      const double w2 = r2 - off * off;
      if (w2 < 0.0) continue;
      const double w = std::sqrt(w2);
      const int i_lo = static_cast<int>(
          std::ceil((d.center.x - w - bm.x0) / bm.dx - 0.5));
      const int i_hi = static_cast<int>(
          std::floor((d.center.x + w - bm.x0) / bm.dx - 0.5));
      bm.set_row_range(j, i_lo, i_hi);
    }
  }
}

Bitmap rasterize(const PixelOracle& oracle, const Rect& region, int nx,
                 int ny) {
  Bitmap bm;
  bm.init(region, nx, ny);
  oracle.fill(bm);
  return bm;
}

namespace {

// Multi-source BFS over phase pixels: occupied reads the bits 8-connected,
// vacant reads the complement 4-connected.
class BitmapSearch {
 public:
  BitmapSearch(const Bitmap& bm, Phase phase)
      : bm_(bm),
        phase_(phase),
        visited_(static_cast<std::size_t>(bm.words_per_row) * bm.ny, 0) {}

  bool in_phase(int i, int j) const {
    const bool occ = bm_.get(i, j);
    return phase_ == Phase::occupied ? occ : !occ;
  }

  template <class SourcePred, class TargetPred>
  bool reaches(SourcePred is_source, TargetPred is_target) {
    std::vector<std::int32_t> frontier;
    for (int j = 0; j < bm_.ny; ++j)
      for (int i = 0; i < bm_.nx; ++i)
        if (is_source(i, j) && in_phase(i, j)) {
          if (is_target(i, j)) return true;
          if (mark(i, j)) frontier.push_back(j * bm_.nx + i);
        }
    static constexpr int dx8[8] = {1, -1, 0, 0, 1, 1, -1, -1};
    static constexpr int dy8[8] = {0, 0, 1, -1, 1, -1, 1, -1};
    const int ndir = phase_ == Phase::occupied ? 8 : 4;
    while (!frontier.empty()) {
      const std::int32_t p = frontier.back();
      frontier.pop_back();
      const int i = p % bm_.nx;
      const int j = p / bm_.nx;
      for (int d = 0; d < ndir; ++d) {
        const int ni = i + dx8[d];
        const int nj = j + dy8[d];
        if (ni < 0 || ni >= bm_.nx || nj < 0 || nj >= bm_.ny) continue;
        if (!in_phase(ni, nj)) continue;
        if (!mark(ni, nj)) continue;
        if (is_target(ni, nj)) return true;
        frontier.push_back(nj * bm_.nx + ni);
      }
    }
    return false;
  }

 private:
  bool mark(int i, int j) {
    auto& w =
        visited_[static_cast<std::size_t>(j) * bm_.words_per_row + (i >> 6)];
    const std::uint64_t bit = std::uint64_t{1} << (i & 63);
    if (w & bit) return false;
    w |= bit;
    return true;
  }

  const Bitmap& bm_;
  Phase phase_;
  std::vector<std::uint64_t> visited_;
};

bool eval_arm_on_bitmap(const Bitmap& bm, double r_in, Phase phase) {
  BitmapSearch search(bm, phase);
  auto src = [&](int i, int j) {
    return std::max(std::fabs(bm.cx(i)), std::fabs(bm.cy(j))) <= r_in;
  };
  auto tgt = [&](int i, int j) {
    return i == 0 || i == bm.nx - 1 || j == 0 || j == bm.ny - 1;
  };
  return search.reaches(src, tgt);
}

}  // namespace

bool eval_bitmap_cross(const Bitmap& bm, Phase phase, bool vertical) {
  BitmapSearch search(bm, phase);
  if (vertical)
    return search.reaches([](int, int j) { return j == 0; },
                          [&](int, int j) { return j == bm.ny - 1; });
  return search.reaches([](int i, int) { return i == 0; },
                        [&](int i, int) { return i == bm.nx - 1; });
}

bool eval_bitmap_event(const Bitmap& bm, const EventSpec& spec) {
  switch (spec.kind) {
    case EventSpec::Kind::cross:
      return eval_bitmap_cross(bm, spec.phase, false);
    case EventSpec::Kind::cross_to_sub: {
      BitmapSearch search(bm, spec.phase);
      return search.reaches(
          [](int i, int) { return i == 0; },
          [&](int i, int j) {
            return i == bm.nx - 1 && bm.cy(j) >= spec.y_low;
          });
    }
    case EventSpec::Kind::arm:
      return eval_arm_on_bitmap(bm, spec.r_inner, spec.phase);
    case EventSpec::Kind::circuit: {
      const Phase dual =
          spec.phase == Phase::occupied ? Phase::vacant : Phase::occupied;
      return !eval_arm_on_bitmap(bm, spec.r_inner, dual);
    }
    case EventSpec::Kind::origin_arm: {
      BitmapSearch search(bm, spec.phase);
      const int i0 = std::clamp(
          static_cast<int>(std::floor((0.0 - bm.x0) / bm.dx)), 0, bm.nx - 1);
      const int j0 = std::clamp(
          static_cast<int>(std::floor((0.0 - bm.y0) / bm.dy)), 0, bm.ny - 1);
      return search.reaches(
          [&](int i, int j) { return i == i0 && j == j0; },
          [&](int i, int j) {
            return i == 0 || i == bm.nx - 1 || j == 0 || j == bm.ny - 1;
          });
    }
  }
  return false;
}

bool raster_event_at(const EventSpec& spec, const PixelOracle& oracle,
                     double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
  const Rect region = spec.query_window();
  const int nx =
      std::max(1, static_cast<int>(std::llround(region.width() / delta)));
  const int ny =
      std::max(1, static_cast<int>(std::llround(region.height() / delta)));
  const Bitmap bm = rasterize(oracle, region, nx, ny);
  return eval_bitmap_event(bm, spec);
}

DetectionResult detect_raster(const EventSpec& spec, const PixelOracle& oracle,
                              double delta0, double delta_min) {
  if (!(delta0 > delta_min && delta_min > 0.0))
    throw std::invalid_argument("need delta0 > delta_min > 0");
  bool prev = raster_event_at(spec, oracle, delta0);
  double delta = 0.5 * delta0;
  for (;;) {
    const bool v = raster_event_at(spec, oracle, delta);
    if (v == prev)
      return {v ? DetectionResult::Value::yes : DetectionResult::Value::no,
              delta, false};
    if (0.5 * delta < delta_min * (1.0 - 1e-12)) {
      DetectionResult r;
      r.value = DetectionResult::Value::unresolved;
      r.resolution_used = delta;
      r.exact = false;
      return r;
    }
    prev = v;
    delta *= 0.5;
  }
}

}  // namespace perc
