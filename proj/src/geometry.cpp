#include "perc/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace perc {

namespace {

inline double clamp(double v, double lo, double hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

inline bool point_in_disc(Point p, const Disc& d) {
  const double dx = p.x - d.center.x;
  const double dy = p.y - d.center.y;
  const double r = d.radius + kGeomEps;
  return dx * dx + dy * dy <= r * r;
}

// Intersections of segment ab with the circle bounding d, appended to out.
int segment_circle_hits(Point a, Point b, const Disc& d, Point out[2]) {
  const double ex = b.x - a.x;
  const double ey = b.y - a.y;
  const double fx = a.x - d.center.x;
  const double fy = a.y - d.center.y;
  const double qa = ex * ex + ey * ey;
  if (qa == 0.0) return 0;
  const double qb = 2.0 * (fx * ex + fy * ey);
  const double qc = fx * fx + fy * fy - d.radius * d.radius;
  double disc = qb * qb - 4.0 * qa * qc;
  if (disc < -kGeomEps) return 0;
  if (disc < 0.0) disc = 0.0;
  const double sq = std::sqrt(disc);
  int n = 0;
  for (double t : {(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)}) {
    if (t >= -kGeomEps && t <= 1.0 + kGeomEps) {
      out[n].x = a.x + t * ex;
      out[n].y = a.y + t * ey;
      ++n;
    }
  }
  return n;
}

}  // namespace

double dist_point_segment(Point p, Point a, Point b) {
  const double ex = b.x - a.x;
  const double ey = b.y - a.y;
  const double len2 = ex * ex + ey * ey;
  double t = 0.0;
  if (len2 > 0.0) t = clamp(((p.x - a.x) * ex + (p.y - a.y) * ey) / len2, 0.0, 1.0);
  const double dx = p.x - (a.x + t * ex);
  const double dy = p.y - (a.y + t * ey);
  return std::sqrt(dx * dx + dy * dy);
}

bool disc_rect_intersects(const Disc& d, const Rect& k) {
  const double cx = clamp(d.center.x, k.x0, k.x1);
  const double cy = clamp(d.center.y, k.y0, k.y1);
  const double dx = d.center.x - cx;
  const double dy = d.center.y - cy;
  const double r = d.radius + kGeomEps;
  return dx * dx + dy * dy <= r * r;
}

bool disc_touches_segment(const Disc& d, Point a, Point b) {
  return dist_point_segment(d.center, a, b) <= d.radius + kGeomEps;
}

bool disc_disc_rect_intersects(const Disc& d1, const Disc& d2, const Rect& k) {
  const double dx = d2.center.x - d1.center.x;
  const double dy = d2.center.y - d1.center.y;
  const double dist2 = dx * dx + dy * dy;
  const double rsum = d1.radius + d2.radius + kGeomEps;
  if (dist2 > rsum * rsum) return false;  // discs disjoint, lens empty

  const double dist = std::sqrt(dist2);
  // One disc inside the other: the lens is the smaller disc.
  if (dist <= std::fabs(d1.radius - d2.radius) + kGeomEps) {
    const Disc& smaller = (d1.radius <= d2.radius) ? d1 : d2;
    return disc_rect_intersects(smaller, k);
  }

  // Proper lens.  Radical-line chord: endpoints are the circle-circle
  // intersection points, the midpoint sits on the center line.
  const double a = (dist2 + d1.radius * d1.radius - d2.radius * d2.radius) /
                   (2.0 * dist);
  double h2 = d1.radius * d1.radius - a * a;
  if (h2 < 0.0) h2 = 0.0;
  const double h = std::sqrt(h2);
  const double mx = d1.center.x + a * dx / dist;
  const double my = d1.center.y + a * dy / dist;
  const Point p1{mx + h * dy / dist, my - h * dx / dist};
  const Point p2{mx - h * dy / dist, my + h * dx / dist};

  // (a) circle-circle intersection points inside K, (b) chord midpoint.
  if (k.contains(p1) || k.contains(p2)) return true;
  if (k.contains({mx, my})) return true;

  // (d) rectangle corner inside both discs.
  const Point cs[4] = {{k.x0, k.y0}, {k.x1, k.y0}, {k.x1, k.y1}, {k.x0, k.y1}};
  for (const Point& c : cs)
    if (point_in_disc(c, d1) && point_in_disc(c, d2)) return true;

  // (c) a rectangle edge crossing either bounding arc: an edge hit on circle
  // i lying inside disc j is a lens boundary point on the edge.
  const Point edge_a[4] = {cs[0], cs[1], cs[2], cs[3]};
  const Point edge_b[4] = {cs[1], cs[2], cs[3], cs[0]};
  Point hits[2];
  for (int e = 0; e < 4; ++e) {
    int n = segment_circle_hits(edge_a[e], edge_b[e], d1, hits);
    for (int i = 0; i < n; ++i)
      if (point_in_disc(hits[i], d2)) return true;
    n = segment_circle_hits(edge_a[e], edge_b[e], d2, hits);
    for (int i = 0; i < n; ++i)
      if (point_in_disc(hits[i], d1)) return true;
  }

  // (e) K entirely inside the lens.
  const Point kc{0.5 * (k.x0 + k.x1), 0.5 * (k.y0 + k.y1)};
  return point_in_disc(kc, d1) && point_in_disc(kc, d2);
}

SpatialGrid::SpatialGrid(const std::vector<Disc>& discs, double cell_size)
    : cell_(cell_size) {
  if (cell_ <= 0.0) cell_ = 1.0;
  if (discs.empty()) {
    ncx_ = ncy_ = 0;
    offsets_.assign(1, 0);
    return;
  }
  std::int64_t cx1 = 0, cy1 = 0;
  bool first = true;
  std::vector<std::int64_t> lox(discs.size()), hix(discs.size()),
      loy(discs.size()), hiy(discs.size());
  for (std::size_t i = 0; i < discs.size(); ++i) {
    const Disc& d = discs[i];
    lox[i] = cell_of(d.center.x - d.radius);
    hix[i] = cell_hi(d.center.x + d.radius);
    loy[i] = cell_of(d.center.y - d.radius);
    hiy[i] = cell_hi(d.center.y + d.radius);
    if (first) {
      cx0_ = lox[i];
      cx1 = hix[i];
      cy0_ = loy[i];
      cy1 = hiy[i];
      first = false;
    } else {
      cx0_ = std::min(cx0_, lox[i]);
      cx1 = std::max(cx1, hix[i]);
      cy0_ = std::min(cy0_, loy[i]);
      cy1 = std::max(cy1, hiy[i]);
    }
  }
  ncx_ = cx1 - cx0_ + 1;
  ncy_ = cy1 - cy0_ + 1;
  const std::size_t ncells = static_cast<std::size_t>(ncx_ * ncy_);
  offsets_.assign(ncells + 1, 0);
  for (std::size_t i = 0; i < discs.size(); ++i)
    for (std::int64_t cy = loy[i]; cy <= hiy[i]; ++cy)
      for (std::int64_t cx = lox[i]; cx <= hix[i]; ++cx)
        ++offsets_[static_cast<std::size_t>((cy - cy0_) * ncx_ + (cx - cx0_)) + 1];
  for (std::size_t c = 1; c < offsets_.size(); ++c) offsets_[c] += offsets_[c - 1];
  entries_.resize(offsets_.back());
  std::vector<std::uint32_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (std::size_t i = 0; i < discs.size(); ++i)
    for (std::int64_t cy = loy[i]; cy <= hiy[i]; ++cy)
      for (std::int64_t cx = lox[i]; cx <= hix[i]; ++cx) {
        const std::size_t c =
            static_cast<std::size_t>((cy - cy0_) * ncx_ + (cx - cx0_));
        entries_[cursor[c]++] = static_cast<std::uint32_t>(i);
      }
}

std::int64_t SpatialGrid::cell_of(double v) const {
  return static_cast<std::int64_t>(std::floor(v / cell_));
}

std::int64_t SpatialGrid::cell_hi(double v) const {
  return static_cast<std::int64_t>(std::ceil(v / cell_)) - 1;
}

std::pair<const std::uint32_t*, const std::uint32_t*> SpatialGrid::bucket(
    std::int64_t cx, std::int64_t cy) const {
  if (cx < cx0_ || cx >= cx0_ + ncx_ || cy < cy0_ || cy >= cy0_ + ncy_)
    return {nullptr, nullptr};
  const std::size_t c = static_cast<std::size_t>((cy - cy0_) * ncx_ + (cx - cx0_));
  return {entries_.data() + offsets_[c], entries_.data() + offsets_[c + 1]};
}

void SpatialGrid::candidates(const Rect& bbox,
                             std::vector<std::uint32_t>& out) const {
  if (ncx_ == 0) return;
  const std::int64_t lx = std::max(cell_of(bbox.x0), cx0_);
  const std::int64_t hx = std::min(cell_of(bbox.x1), cx0_ + ncx_ - 1);
  const std::int64_t ly = std::max(cell_of(bbox.y0), cy0_);
  const std::int64_t hy = std::min(cell_of(bbox.y1), cy0_ + ncy_ - 1);
  for (std::int64_t cy = ly; cy <= hy; ++cy)
    for (std::int64_t cx = lx; cx <= hx; ++cx) {
      auto [b, e] = bucket(cx, cy);
      out.insert(out.end(), b, e);
    }
}

bool SpatialGrid::cell_bounds(std::int64_t& cx0, std::int64_t& cy0,
                              std::int64_t& cx1, std::int64_t& cy1) const {
  if (ncx_ == 0) return false;
  cx0 = cx0_;
  cy0 = cy0_;
  cx1 = cx0_ + ncx_ - 1;
  cy1 = cy0_ + ncy_ - 1;
  return true;
}

double default_cell_size(const std::vector<Disc>& discs, double max_extent) {
  if (discs.empty()) return std::max(1e-3, max_extent > 0 ? max_extent : 1.0);
  std::vector<double> radii;
  radii.reserve(discs.size());
  for (const Disc& d : discs) radii.push_back(d.radius);
  const std::size_t mid = radii.size() / 2;
  std::nth_element(radii.begin(), radii.begin() + mid, radii.end());
  double cell = radii[mid];
  cell = std::max(cell, 1e-3);
  if (max_extent > 0.0) cell = std::min(cell, max_extent);
  return cell;
}

}  // namespace perc
