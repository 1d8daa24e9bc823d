#include "perc/models.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "perc/kernels.hpp"

namespace perc {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.14159265358979323846;
}  // namespace

PullTable::PullTable(double constant_value) : values_{constant_value} {
  if (!(constant_value > 0.0))
    throw std::invalid_argument("pull value must be positive");
}

PullTable::PullTable(std::vector<double> thresholds,
                     std::vector<double> values)
    : thresholds_(std::move(thresholds)), values_(std::move(values)) {
  if (values_.empty() || values_.size() > 64)
    throw std::invalid_argument("pull table needs 1..64 pieces");
  if (thresholds_.size() + 1 != values_.size())
    throw std::invalid_argument("pull table thresholds/values mismatch");
  double prev_t = 0.0;
  for (double t : thresholds_) {
    if (!(t > prev_t && t < 1.0))
      throw std::invalid_argument("pull thresholds must ascend inside (0,1)");
    prev_t = t;
  }
  double prev_v = 0.0;
  for (double v : values_) {
    if (!(v > 0.0) || v < prev_v)
      throw std::invalid_argument("pull values must be positive non-decreasing");
    prev_v = v;
  }
}

double PullTable::value(double z) const {
  std::size_t k = 0;
  while (k < thresholds_.size() && z >= thresholds_[k]) ++k;
  return values_[k];
}

double PullTable::survival(double r) const {
  if (r <= values_.front()) return 1.0;
  if (r > values_.back()) return 0.0;
  // First piece whose value reaches r; mass above is 1 - its left endpoint.
  for (std::size_t k = 0; k < values_.size(); ++k)
    if (values_[k] >= r) return 1.0 - (k == 0 ? 0.0 : thresholds_[k - 1]);
  return 0.0;
}

std::string PullTable::describe() const {
  if (values_.size() == 1) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", values_[0]);
    return buf;
  }
  std::string s = "steps[";
  for (std::size_t k = 0; k < values_.size(); ++k) {
    char buf[48];
    if (k == 0)
      std::snprintf(buf, sizeof buf, "%g", values_[k]);
    else
      std::snprintf(buf, sizeof buf, ",%g@%g", values_[k], thresholds_[k - 1]);
    s += buf;
  }
  return s + "]";
}

std::pair<std::vector<Disc>, TailBudget> boolean_discs(
    const BooleanModel& model, const Rect& window, double eps,
    RngStream& stream) {
  Realization r = realize_boolean(model.lambda, window, model.law, eps, stream);
  std::vector<Disc> discs;
  discs.reserve(r.points.size());
  for (const MarkedPoint& p : r.points) discs.push_back({p.pos, p.z});
  return {std::move(discs), r.budget};
}

// ---------------------------------------------------------------------------
// Voronoi

VoronoiField::VoronoiField(const VoronoiModel& model, const Rect& window,
                           double eps, RngStream& stream,
                           double pixel_budget) {
  window_ = window;
  pull_max_ = model.pull_max();
  if (!(eps > 0.0 && eps < 1.0))
    throw std::invalid_argument("eps must be in (0,1)");
  // Void bound: P(some queried pixel has no seed within l) <=
  //   pixel_budget * exp(-pi l^2).
  const double l = std::sqrt(std::log(pixel_budget / eps) / kPi);
  const double pad = l * (1.0 + pull_max_ / model.pull_min());
  const Rect region = window.inflated(pad);

  MarkFlags marks;
  marks.z_unit = true;
  marks.s_color = true;
  std::vector<MarkedPoint> seeds =
      sample_ppp(1.0, region, RadiusLaw::constant(1.0), stream, marks);
  if (seeds.empty()) throw EmptyWindowError("voronoi window has no seed");

  cell_ = 1.0;
  cx0_ = static_cast<std::int64_t>(std::floor(region.x0 / cell_));
  cy0_ = static_cast<std::int64_t>(std::floor(region.y0 / cell_));
  const auto cx1 = static_cast<std::int64_t>(std::floor(region.x1 / cell_));
  const auto cy1 = static_cast<std::int64_t>(std::floor(region.y1 / cell_));
  ncx_ = cx1 - cx0_ + 1;
  ncy_ = cy1 - cy0_ + 1;

  auto cell_index = [&](const MarkedPoint& p) {
    const auto cx = static_cast<std::int64_t>(std::floor(p.pos.x / cell_));
    const auto cy = static_cast<std::int64_t>(std::floor(p.pos.y / cell_));
    return (cy - cy0_) * ncx_ + (cx - cx0_);
  };
  std::sort(seeds.begin(), seeds.end(),
            [&](const MarkedPoint& a, const MarkedPoint& b) {
              const auto ca = cell_index(a), cb = cell_index(b);
              if (ca != cb) return ca < cb;
              if (a.pos.x != b.pos.x) return a.pos.x < b.pos.x;
              if (a.pos.y != b.pos.y) return a.pos.y < b.pos.y;
              if (a.z != b.z) return a.z < b.z;
              return a.s < b.s;
            });

  const std::size_t ncells = static_cast<std::size_t>(ncx_ * ncy_);
  offsets_.assign(ncells + 1, 0);
  sx_.reserve(seeds.size());
  for (const MarkedPoint& p : seeds) {
    ++offsets_[static_cast<std::size_t>(cell_index(p)) + 1];
    const bool black = p.s <= model.q;
    const double pull = black ? model.g0.value(p.z) : model.g1.value(p.z);
    sx_.push_back(p.pos.x);
    sy_.push_back(p.pos.y);
    w_.push_back(1.0 / (pull * pull));
    sz_.push_back(p.z);
    ss_.push_back(p.s);
    black_.push_back(black ? 1 : 0);
  }
  std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
}

bool VoronoiField::lex_less(std::uint32_t a, std::uint32_t b) const {
  if (sx_[a] != sx_[b]) return sx_[a] < sx_[b];
  if (sy_[a] != sy_[b]) return sy_[a] < sy_[b];
  if (sz_[a] != sz_[b]) return sz_[a] < sz_[b];
  return ss_[a] < ss_[b];
}

VoronoiField::Best VoronoiField::query(Point y) const {
  const auto& kb = kernels::active_backend();
  double best = kInf;
  std::uint32_t best_idx = 0;
  bool found = false;

  auto scan_cell = [&](std::int64_t cx, std::int64_t cy) {
    if (cx < cx0_ || cx >= cx0_ + ncx_ || cy < cy0_ || cy >= cy0_ + ncy_)
      return;
    const std::size_t c =
        static_cast<std::size_t>((cy - cy0_) * ncx_ + (cx - cx0_));
    const std::uint32_t b = offsets_[c], e = offsets_[c + 1];
    if (b == e) return;
    const double v =
        kb.weighted_min_dist2(y.x, y.y, sx_.data() + b, sy_.data() + b,
                              w_.data() + b, e - b);
    if (v > best) return;
    // Resolve the argmin (and value ties) with the lexicographic rule.
    for (std::uint32_t i = b; i < e; ++i) {
      const double dx = sx_[i] - y.x;
      const double dy = sy_[i] - y.y;
      const double r2 = (dx * dx + dy * dy) * w_[i];
      if (r2 < best || (r2 == best && (!found || lex_less(i, best_idx)))) {
        best = r2;
        best_idx = i;
        found = true;
      }
    }
  };

  const auto ci = static_cast<std::int64_t>(std::floor(y.x / cell_));
  const auto cj = static_cast<std::int64_t>(std::floor(y.y / cell_));
  for (std::int64_t ring = 0;; ++ring) {
    if (ring == 0) {
      scan_cell(ci, cj);
    } else {
      for (std::int64_t dx = -ring; dx <= ring; ++dx) {
        scan_cell(ci + dx, cj - ring);
        scan_cell(ci + dx, cj + ring);
      }
      for (std::int64_t dy = -ring + 1; dy <= ring - 1; ++dy) {
        scan_cell(ci - ring, cj + dy);
        scan_cell(ci + ring, cj + dy);
      }
    }
    // Distance from y to anything outside the explored square of cells;
    // sides beyond the grid hold no seeds and drop out of the minimum.
    double d = kInf;
    if (ci - ring > cx0_) d = std::min(d, y.x - (ci - ring) * cell_);
    if (ci + ring < cx0_ + ncx_ - 1)
      d = std::min(d, (ci + ring + 1) * cell_ - y.x);
    if (cj - ring > cy0_) d = std::min(d, y.y - (cj - ring) * cell_);
    if (cj + ring < cy0_ + ncy_ - 1)
      d = std::min(d, (cj + ring + 1) * cell_ - y.y);
    if (d == kInf) break;  // grid exhausted
    if (found && d > 0.0) {
      const double floor_ratio2 = (d / pull_max_) * (d / pull_max_);
      if (floor_ratio2 > best) break;  // no unseen seed can beat or tie
    }
  }
  if (!found) throw EmptyWindowError("voronoi query found no seed");
  return {best, best_idx};
}

bool VoronoiField::black_at(Point y) { return black_[query(y).idx] != 0; }

bool VoronoiField::black_at_exhaustive(Point y) const {
  double best = kInf;
  std::uint32_t best_idx = 0;
  bool found = false;
  for (std::uint32_t i = 0; i < sx_.size(); ++i) {
    const double dx = sx_[i] - y.x;
    const double dy = sy_[i] - y.y;
    const double r2 = (dx * dx + dy * dy) * w_[i];
    if (r2 < best || (r2 == best && (!found || lex_less(i, best_idx)))) {
      best = r2;
      best_idx = i;
      found = true;
    }
  }
  if (!found) throw EmptyWindowError("no seeds");
  return black_[best_idx] != 0;
}

// ---------------------------------------------------------------------------
// Confetti

ConfettiField::ConfettiField(const ConfettiModel& model, const Rect& window,
                             double eps, RngStream& stream, int max_doublings)
    : model_(model), stream_(stream), doublings_left_(max_doublings) {
  window_ = window;
  if (!(eps > 0.0 && eps < 1.0))
    throw std::invalid_argument("eps must be in (0,1)");
  const double g = model.g_min();
  horizon_ = 4.0 / (kPi * g * g);
  const double t_cap = horizon_ * std::pow(2.0, max_doublings);

  // Exact mixture tail of the confetti radius.
  auto radius_surv = [&](double u) {
    return model.q * model.g0.survival(u) +
           (1.0 - model.q) * model.g1.survival(u);
  };
  // P(an external confetti with t <= t_cap reaches the window) <=
  //   t_cap * integral_pad^inf (2(w+h) + 2 pi u) * radius_surv(u) du,
  // evaluated by midpoint sums over the piecewise-constant tail; zero once
  // the padding passes the largest table value.
  const double per = 2.0 * (window.width() + window.height());
  auto reach_bound = [&](double pad) {
    const double top = model.g_max();
    if (pad >= top) return 0.0;
    double sum = 0.0;
    const int steps = 512;
    const double h = (top - pad) / steps;
    for (int i = 0; i < steps; ++i) {
      const double u = pad + (i + 0.5) * h;
      sum += (per + 2.0 * kPi * u) * radius_surv(u) * h;
    }
    return t_cap * sum;
  };
  double pad = 1e-3;
  while (pad < model.g_max() && reach_bound(pad) > eps) pad *= 1.05;
  padding_ = pad;
  padded_ = window.inflated(pad);

  MarkFlags marks;
  marks.z_unit = true;
  marks.s_color = true;
  marks.t_time = true;
  marks.t_horizon = horizon_;
  raw_ = sample_ppp(horizon_, padded_, RadiusLaw::constant(1.0), stream_,
                    marks);
  rebuild_buckets();
}

void ConfettiField::extend() {
  if (doublings_left_ <= 0)
    throw std::runtime_error("confetti horizon cap exhausted");
  --doublings_left_;
  MarkFlags marks;
  marks.z_unit = true;
  marks.s_color = true;
  marks.t_time = true;
  marks.t_horizon = horizon_;  // fresh points fall in (T, 2T]
  std::vector<MarkedPoint> fresh =
      sample_ppp(horizon_, padded_, RadiusLaw::constant(1.0), stream_, marks);
  for (MarkedPoint& p : fresh) {
    p.t += horizon_;
    raw_.push_back(p);
  }
  horizon_ *= 2.0;
  rebuild_buckets();
}

void ConfettiField::rebuild_buckets() {
  std::vector<Disc> discs;
  discs.reserve(raw_.size());
  std::vector<double> radius(raw_.size());
  std::vector<std::uint8_t> black(raw_.size());
  for (std::size_t i = 0; i < raw_.size(); ++i) {
    const MarkedPoint& p = raw_[i];
    const bool b = p.s <= model_.q;
    radius[i] = b ? model_.g0.value(p.z) : model_.g1.value(p.z);
    black[i] = b ? 1 : 0;
    discs.push_back({p.pos, radius[i]});
  }
  cell_ = default_cell_size(discs, std::max(padded_.width(), padded_.height()));
  cx0_ = static_cast<std::int64_t>(std::floor(padded_.x0 / cell_));
  cy0_ = static_cast<std::int64_t>(std::floor(padded_.y0 / cell_));
  const auto cx1 =
      static_cast<std::int64_t>(std::floor(padded_.x1 / cell_)) ;
  const auto cy1 = static_cast<std::int64_t>(std::floor(padded_.y1 / cell_));
  ncx_ = cx1 - cx0_ + 1;
  ncy_ = cy1 - cy0_ + 1;
  const std::size_t ncells = static_cast<std::size_t>(ncx_ * ncy_);

  auto clamp_cell = [](std::int64_t v, std::int64_t lo, std::int64_t hi) {
    return v < lo ? lo : (v > hi ? hi : v);
  };
  offsets_.assign(ncells + 1, 0);
  std::vector<std::array<std::int64_t, 4>> span(raw_.size());
  for (std::size_t i = 0; i < raw_.size(); ++i) {
    const MarkedPoint& p = raw_[i];
    span[i] = {
        clamp_cell(static_cast<std::int64_t>(
                       std::floor((p.pos.x - radius[i]) / cell_)),
                   cx0_, cx0_ + ncx_ - 1),
        clamp_cell(static_cast<std::int64_t>(
                       std::floor((p.pos.x + radius[i]) / cell_)),
                   cx0_, cx0_ + ncx_ - 1),
        clamp_cell(static_cast<std::int64_t>(
                       std::floor((p.pos.y - radius[i]) / cell_)),
                   cy0_, cy0_ + ncy_ - 1),
        clamp_cell(static_cast<std::int64_t>(
                       std::floor((p.pos.y + radius[i]) / cell_)),
                   cy0_, cy0_ + ncy_ - 1)};
    for (std::int64_t cy = span[i][2]; cy <= span[i][3]; ++cy)
      for (std::int64_t cx = span[i][0]; cx <= span[i][1]; ++cx)
        ++offsets_[static_cast<std::size_t>((cy - cy0_) * ncx_ + (cx - cx0_)) +
                   1];
  }
  std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
  const std::size_t total = offsets_.back();
  bx_.resize(total);
  by_.resize(total);
  brad2_.resize(total);
  bt_.resize(total);
  bblack_.resize(total);
  std::vector<std::uint32_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (std::size_t i = 0; i < raw_.size(); ++i) {
    const MarkedPoint& p = raw_[i];
    for (std::int64_t cy = span[i][2]; cy <= span[i][3]; ++cy)
      for (std::int64_t cx = span[i][0]; cx <= span[i][1]; ++cx) {
        const std::size_t c =
            static_cast<std::size_t>((cy - cy0_) * ncx_ + (cx - cx0_));
        const std::uint32_t at = cursor[c]++;
        bx_[at] = p.pos.x;
        by_[at] = p.pos.y;
        brad2_[at] = radius[i] * radius[i];
        bt_[at] = p.t;
        bblack_[at] = black[i];
      }
  }
}

bool ConfettiField::black_at(Point y) {
  const auto& kb = kernels::active_backend();
  for (;;) {
    const auto cx = static_cast<std::int64_t>(std::floor(y.x / cell_));
    const auto cy = static_cast<std::int64_t>(std::floor(y.y / cell_));
    if (cx >= cx0_ && cx < cx0_ + ncx_ && cy >= cy0_ && cy < cy0_ + ncy_) {
      const std::size_t c =
          static_cast<std::size_t>((cy - cy0_) * ncx_ + (cx - cx0_));
      const std::uint32_t b = offsets_[c], e = offsets_[c + 1];
      if (b != e) {
        const double tmin =
            kb.min_time_covering(y.x, y.y, bx_.data() + b, by_.data() + b,
                                 brad2_.data() + b, bt_.data() + b, e - b);
        if (tmin != kInf) {
          for (std::uint32_t i = b; i < e; ++i)
            if (bt_[i] == tmin) {
              const double dx = bx_[i] - y.x;
              const double dy = by_[i] - y.y;
              if (dx * dx + dy * dy <= brad2_[i]) return bblack_[i] != 0;
            }
        }
      }
    }
    extend();  // uncovered at the current horizon
  }
}

std::unique_ptr<ColorField> realize_colorfield(const VoronoiModel& model,
                                               const Rect& window, double eps,
                                               RngStream& stream) {
  return std::make_unique<VoronoiField>(model, window, eps, stream);
}

std::unique_ptr<ColorField> realize_colorfield(const ConfettiModel& model,
                                               const Rect& window, double eps,
                                               RngStream& stream) {
  return std::make_unique<ConfettiField>(model, window, eps, stream);
}

}  // namespace perc
