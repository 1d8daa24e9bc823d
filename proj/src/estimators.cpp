#include "perc/estimators.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <thread>

#include "perc/rng.hpp"

namespace perc {

namespace {

constexpr double kZ95 = 1.959963984540054;

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// t-distribution 97.5% quantiles for small residual degrees of freedom.
double t_quantile_975(int df) {
  static const double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447,
                                 2.365,  2.306, 2.262, 2.228, 2.201, 2.179,
                                 2.160,  2.145, 2.131, 2.120, 2.110, 2.101,
                                 2.093,  2.086, 2.080, 2.074, 2.069, 2.064,
                                 2.060,  2.056, 2.052, 2.048, 2.045, 2.042};
  if (df < 1) return 12.706;
  if (df <= 30) return table[df - 1];
  return 1.96;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t salt) {
  std::uint64_t bytes[2] = {master_seed, salt};
  return fnv1a64(bytes, sizeof bytes);
}

std::string describe_model(const ModelSpec& model) {
  char buf[160];
  if (const auto* b = std::get_if<BooleanModel>(&model)) {
    std::snprintf(buf, sizeof buf, "boolean(%s,lambda=%g)",
                  b->law.describe().c_str(), b->lambda);
  } else if (const auto* v = std::get_if<VoronoiModel>(&model)) {
    std::snprintf(buf, sizeof buf, "voronoi(q=%g,g0=%s,g1=%s)", v->q,
                  v->g0.describe().c_str(), v->g1.describe().c_str());
  } else {
    const auto& c = std::get<ConfettiModel>(model);
    std::snprintf(buf, sizeof buf, "confetti(q=%g,g0=%s,g1=%s)", c.q,
                  c.g0.describe().c_str(), c.g1.describe().c_str());
  }
  return buf;
}

double model_level(const ModelSpec& model) {
  if (const auto* b = std::get_if<BooleanModel>(&model)) return b->lambda;
  if (const auto* v = std::get_if<VoronoiModel>(&model)) return v->q;
  return std::get<ConfettiModel>(model).q;
}

ModelSpec with_level(const ModelSpec& model, double level) {
  ModelSpec out = model;
  if (auto* b = std::get_if<BooleanModel>(&out))
    b->lambda = level;
  else if (auto* v = std::get_if<VoronoiModel>(&out))
    v->q = level;
  else
    std::get<ConfettiModel>(out).q = level;
  return out;
}

double DetectorPolicy::delta0_for(const Rect& region) const {
  return std::min(region.width(), region.height()) / pixels0;
}

double DetectorPolicy::delta_min_for(const Rect& region) const {
  return std::min(region.width(), region.height()) / pixels_min;
}

std::pair<double, double> wilson_interval(std::uint64_t successes,
                                          std::uint64_t n) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = kZ95 * kZ95;
  const double denom = 1.0 + z2 / nn;
  const double center = p + z2 / (2.0 * nn);
  const double spread =
      kZ95 * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
  double lo = (center - spread) / denom;
  double hi = (center + spread) / denom;
  if (successes == 0) lo = 0.0;  // exact endpoints, no rounding residue
  if (successes == n) hi = 1.0;
  return {std::clamp(lo, 0.0, 1.0), std::clamp(hi, 0.0, 1.0)};
}

double Estimate::sigma() const {
  if (n == 0) return 1.0;
  const double nn = static_cast<double>(n);
  return std::max(std::sqrt(p_hat * (1.0 - p_hat) / nn), 1.0 / nn);
}

namespace {

Outcome from_detection(const DetectionResult& d) {
  switch (d.value) {
    case DetectionResult::Value::yes:
      return Outcome::kTrue;
    case DetectionResult::Value::no:
      return Outcome::kFalse;
    case DetectionResult::Value::unresolved:
      return Outcome::kUnresolved;
  }
  return Outcome::kFalse;
}

Outcome evaluate_boolean(const BooleanModel& model, const EventSpec& spec,
                         RngStream& stream, const DetectorPolicy& policy) {
  const Rect window = spec.query_window();
  Realization real =
      realize_boolean(model.lambda, window, model.law, policy.eps, stream);
  std::vector<Disc> discs;
  discs.reserve(real.points.size());
  for (const MarkedPoint& p : real.points) discs.push_back({p.pos, p.z});
  if (!policy.raster_only) {
    if (auto exact = detect_exact(spec, discs))
      return *exact ? Outcome::kTrue : Outcome::kFalse;
  }
  DiscOracle oracle(discs);
  return from_detection(detect_raster(spec, oracle, policy.delta0_for(window),
                                      policy.delta_min_for(window)));
}

Outcome evaluate_field(const ModelSpec& model, const EventSpec& spec,
                       std::uint64_t master_seed, std::uint64_t replicate,
                       const DetectorPolicy& policy) {
  const Rect window = spec.query_window();
  for (std::uint64_t attempt = 0; attempt < 4; ++attempt) {
    RngStream stream(derive_seed(master_seed, attempt), replicate);
    try {
      std::unique_ptr<ColorField> field;
      if (const auto* v = std::get_if<VoronoiModel>(&model))
        field = realize_colorfield(*v, window, policy.eps, stream);
      else
        field = realize_colorfield(std::get<ConfettiModel>(model), window,
                                   policy.eps, stream);
      FieldOracle oracle(*field);
      return from_detection(detect_raster(spec, oracle,
                                          policy.delta0_for(window),
                                          policy.delta_min_for(window)));
    } catch (const EmptyWindowError&) {
      continue;
    }
  }
  return Outcome::kRejected;
}

}  // namespace

Outcome evaluate_replicate(const ModelSpec& model, const EventSpec& spec,
                           std::uint64_t master_seed, std::uint64_t replicate,
                           const DetectorPolicy& policy) {
  if (const auto* b = std::get_if<BooleanModel>(&model)) {
    RngStream stream(derive_seed(master_seed, 0), replicate);
    return evaluate_boolean(*b, spec, stream, policy);
  }
  return evaluate_field(model, spec, master_seed, replicate, policy);
}

namespace {

// Truncation bias bound shared by every replicate of a run.
double realization_bias(const ModelSpec& model, const EventSpec& spec,
                        const DetectorPolicy& policy) {
  if (const auto* b = std::get_if<BooleanModel>(&model)) {
    const Rect w = spec.query_window();
    const double half = std::max(0.5 * std::max(w.width(), w.height()), 1.0);
    return padding_for(b->law, b->lambda, half, policy.eps).bias_bound;
  }
  return policy.eps;  // color fields are built against this budget directly
}

Estimate finish_estimate(const std::vector<Outcome>& outcomes,
                         double bias_base, std::uint64_t master_seed,
                         double wall_ms) {
  const Tally t = tally_outcomes(outcomes);
  Estimate e;
  e.n = t.total();
  e.master_seed = master_seed;
  e.rep_lo = 0;
  e.rep_hi = outcomes.size();
  e.outcome_digest = digest_outcomes(outcomes);
  e.wall_ms = wall_ms;
  if (e.n > 0) {
    e.p_hat = static_cast<double>(t.yes) / static_cast<double>(e.n);
    std::tie(e.ci_low, e.ci_high) = wilson_interval(t.yes, e.n);
    e.unresolved_rate =
        static_cast<double>(t.unresolved) / static_cast<double>(e.n);
  }
  e.rejected_rate = outcomes.empty()
                        ? 0.0
                        : static_cast<double>(t.rejected) /
                              static_cast<double>(outcomes.size());
  e.bias = bias_base + e.unresolved_rate + e.rejected_rate;
  return e;
}

}  // namespace

Estimate estimate(const ModelSpec& model, const EventSpec& spec,
                  std::uint64_t n, std::uint64_t master_seed,
                  const DetectorPolicy& policy, int threads) {
  if (n == 0) throw std::invalid_argument("estimate needs n >= 1");
  const auto t0 = Clock::now();
  const double bias_base = realization_bias(model, spec, policy);
  const auto outcomes =
      run_replicates(0, n, threads, [&](std::uint64_t rep) {
        return evaluate_replicate(model, spec, master_seed, rep, policy);
      });
  return finish_estimate(outcomes, bias_base, master_seed, ms_since(t0));
}

// ---------------------------------------------------------------------------
// Crossing curve with monotone coupling across levels

std::vector<Outcome> curve_replicate(const ModelSpec& model,
                                     const EventSpec& spec,
                                     const std::vector<double>& levels,
                                     std::uint64_t master_seed,
                                     std::uint64_t replicate,
                                     const DetectorPolicy& policy) {
  const std::size_t nl = levels.size();
  std::vector<Outcome> row(nl, Outcome::kRejected);
  if (std::holds_alternative<BooleanModel>(model)) {
    // One base realization at the top intensity; levels are u-mark
    // thinnings of it, so the indicator is monotone per replicate.
    const double top = *std::max_element(levels.begin(), levels.end());
    const BooleanModel& bm = std::get<BooleanModel>(model);
    const Rect window = spec.query_window();
    RngStream stream(derive_seed(master_seed, 0), replicate);
    MarkFlags marks;
    marks.u_level = true;
    Realization real =
        realize_boolean(top, window, bm.law, policy.eps, stream, {}, marks);
    std::vector<Disc> discs;
    for (std::size_t li = 0; li < nl; ++li) {
      const double keep = levels[li] / top;
      discs.clear();
      for (const MarkedPoint& p : real.points)
        if (p.u <= keep) discs.push_back({p.pos, p.z});
      std::optional<bool> exact;
      if (!policy.raster_only) exact = detect_exact(spec, discs);
      if (exact) {
        row[li] = *exact ? Outcome::kTrue : Outcome::kFalse;
      } else {
        DiscOracle oracle(discs);
        row[li] = from_detection(detect_raster(spec, oracle,
                                               policy.delta0_for(window),
                                               policy.delta_min_for(window)));
      }
    }
    return row;
  }
  // Color models couple through shared s-marks: the same draws are replayed
  // for each q, so raising q only flips white to black.
  for (std::size_t li = 0; li < nl; ++li) {
    const ModelSpec m = with_level(model, levels[li]);
    row[li] = evaluate_replicate(m, spec, master_seed, replicate, policy);
  }
  return row;
}

std::vector<CurvePoint> crossing_curve(const ModelSpec& model,
                                       const std::vector<double>& levels,
                                       double kappa,
                                       const std::vector<double>& r_list,
                                       Phase phase, std::uint64_t n,
                                       std::uint64_t master_seed,
                                       const DetectorPolicy& policy,
                                       int threads) {
  if (levels.empty() || r_list.empty())
    throw std::invalid_argument("curve grids must be non-empty");
  std::vector<CurvePoint> out;
  std::uint64_t salt = 0;
  for (double r : r_list) {
    const EventSpec spec = EventSpec::cross(kappa * r, r, phase);
    const std::uint64_t seed = derive_seed(master_seed, ++salt);
    const std::size_t nl = levels.size();
    std::vector<Outcome> grid(static_cast<std::size_t>(n) * nl,
                              Outcome::kFalse);
    const auto t0 = Clock::now();
    run_replicates(0, n, threads, [&](std::uint64_t rep) {
      const auto row = curve_replicate(model, spec, levels, seed, rep, policy);
      std::copy(row.begin(), row.end(), grid.begin() + rep * nl);
      return Outcome::kTrue;
    });
    const double wall = ms_since(t0);
    for (std::size_t li = 0; li < nl; ++li) {
      std::vector<Outcome> col(n);
      for (std::uint64_t rep = 0; rep < n; ++rep)
        col[rep] = grid[rep * nl + li];
      const ModelSpec m = with_level(model, levels[li]);
      Estimate est = finish_estimate(col, realization_bias(m, spec, policy),
                                     seed, wall / static_cast<double>(nl));
      out.push_back({levels[li], r, spec, est});
    }
  }
  return out;
}

Outcome duality_replicate(const BooleanModel& model, double r, int pixels,
                          std::uint64_t master_seed, std::uint64_t replicate,
                          double eps) {
  const Rect window{0.0, 0.0, r, r};
  RngStream stream(derive_seed(master_seed, 0), replicate);
  Realization real =
      realize_boolean(model.lambda, window, model.law, eps, stream);
  std::vector<Disc> discs;
  for (const MarkedPoint& p : real.points) discs.push_back({p.pos, p.z});
  const bool exact_occ_lr = detect_cross_occupied(
      discs, window, {window.x0, window.y0}, {window.x0, window.y1},
      {window.x1, window.y0}, {window.x1, window.y1});
  DiscOracle oracle(discs);
  const Bitmap bm = rasterize(oracle, window, pixels, pixels);
  const bool raster_vac_tb = eval_bitmap_cross(bm, Phase::vacant, true);
  return (exact_occ_lr != raster_vac_tb) ? Outcome::kTrue : Outcome::kFalse;
}

// ---------------------------------------------------------------------------
// Finite-size classification

namespace {

// Occupied and vacant left-right crossings of the same rectangle, evaluated
// on shared realizations (and shared bitmaps on the raster path).
struct PairOutcome {
  Outcome occ = Outcome::kRejected;
  Outcome vac = Outcome::kRejected;
};

PairOutcome classify_pair_replicate(const ModelSpec& model, double r,
                                    std::uint64_t master_seed,
                                    std::uint64_t rep,
                                    const DetectorPolicy& policy) {
  const EventSpec occ_spec = EventSpec::cross(3.0 * r, r, Phase::occupied);
  const EventSpec vac_spec = EventSpec::cross(3.0 * r, r, Phase::vacant);
  const Rect window = occ_spec.query_window();
  PairOutcome out;

  if (const auto* b = std::get_if<BooleanModel>(&model)) {
    RngStream stream(derive_seed(master_seed, 0), rep);
    Realization real =
        realize_boolean(b->lambda, window, b->law, policy.eps, stream);
    std::vector<Disc> discs;
    for (const MarkedPoint& p : real.points) discs.push_back({p.pos, p.z});
    const bool occ = *detect_exact(occ_spec, discs);
    const bool vac = *detect_exact(vac_spec, discs);
    out.occ = occ ? Outcome::kTrue : Outcome::kFalse;
    out.vac = vac ? Outcome::kTrue : Outcome::kFalse;
    return out;
  }

  for (std::uint64_t attempt = 0; attempt < 4; ++attempt) {
    RngStream stream(derive_seed(master_seed, attempt), rep);
    try {
      std::unique_ptr<ColorField> field;
      if (const auto* v = std::get_if<VoronoiModel>(&model))
        field = realize_colorfield(*v, window, policy.eps, stream);
      else
        field = realize_colorfield(std::get<ConfettiModel>(model), window,
                                   policy.eps, stream);
      FieldOracle oracle(*field);
      // Shared-bitmap refinement for the two dual events.
      double delta = policy.delta0_for(window);
      const double delta_min = policy.delta_min_for(window);
      bool prev_occ = false, prev_vac = false;
      bool have_prev = false;
      bool occ_resolved = false, vac_resolved = false;
      bool occ_val = false, vac_val = false;
      while (true) {
        const int nx = std::max(
            1, static_cast<int>(std::llround(window.width() / delta)));
        const int ny = std::max(
            1, static_cast<int>(std::llround(window.height() / delta)));
        const Bitmap bm = rasterize(oracle, window, nx, ny);
        const bool o = eval_bitmap_event(bm, occ_spec);
        const bool v = eval_bitmap_event(bm, vac_spec);
        if (have_prev) {
          if (!occ_resolved && o == prev_occ) {
            occ_resolved = true;
            occ_val = o;
          }
          if (!vac_resolved && v == prev_vac) {
            vac_resolved = true;
            vac_val = v;
          }
          if (occ_resolved && vac_resolved) break;
        }
        prev_occ = o;
        prev_vac = v;
        have_prev = true;
        if (0.5 * delta < delta_min * (1.0 - 1e-12)) break;
        delta *= 0.5;
      }
      out.occ = occ_resolved
                    ? (occ_val ? Outcome::kTrue : Outcome::kFalse)
                    : Outcome::kUnresolved;
      out.vac = vac_resolved
                    ? (vac_val ? Outcome::kTrue : Outcome::kFalse)
                    : Outcome::kUnresolved;
      return out;
    } catch (const EmptyWindowError&) {
      continue;
    }
  }
  return out;  // rejected
}

}  // namespace

Classification classify(const ModelSpec& model, double theta,
                        const std::vector<double>& r_schedule, std::uint64_t n,
                        std::uint64_t master_seed,
                        const DetectorPolicy& policy, int threads) {
  if (r_schedule.empty() || n == 0)
    throw std::invalid_argument("classify needs a schedule and n >= 1");
  for (std::size_t i = 1; i < r_schedule.size(); ++i)
    if (!(r_schedule[i] > r_schedule[i - 1]))
      throw std::invalid_argument("schedule must increase");

  Classification cls;
  cls.theta = theta;
  std::uint64_t salt = 0;
  for (double r : r_schedule) {
    const std::uint64_t seed = derive_seed(master_seed, ++salt);
    std::vector<Outcome> occ(n), vac(n);
    const auto t0 = Clock::now();
    run_replicates(0, n, threads, [&](std::uint64_t rep) {
      const PairOutcome po =
          classify_pair_replicate(model, r, seed, rep, policy);
      occ[rep] = po.occ;
      vac[rep] = po.vac;
      return Outcome::kTrue;
    });
    const double wall = ms_since(t0);
    const EventSpec occ_spec = EventSpec::cross(3.0 * r, r, Phase::occupied);
    const EventSpec vac_spec = EventSpec::cross(3.0 * r, r, Phase::vacant);
    const double bias =
        realization_bias(model, occ_spec, policy);
    Estimate occ_est = finish_estimate(occ, bias, seed, wall);
    Estimate vac_est = finish_estimate(vac, bias, seed, wall);
    cls.evidence.push_back({model_level(model), r, occ_spec, occ_est});
    cls.evidence.push_back({model_level(model), r, vac_spec, vac_est});
    if (occ_est.wilson_low() > 1.0 - theta) {
      cls.verdict = Classification::Verdict::kSupercritical;
      cls.trigger_r = r;
      return cls;
    }
    if (vac_est.wilson_low() > 1.0 - theta) {
      cls.verdict = Classification::Verdict::kSubcritical;
      cls.trigger_r = r;
      return cls;
    }
  }
  cls.verdict = Classification::Verdict::kUndetermined;
  return cls;
}

Bracket bisect_critical(const ModelSpec& model, double lo, double hi,
                        double rel_tolerance, int max_classify_calls,
                        double theta, std::vector<double> r_schedule,
                        std::uint64_t n, std::uint64_t master_seed,
                        const DetectorPolicy& policy, int threads,
                        int extensions) {
  if (!(lo < hi)) throw BadBracketError("bracket endpoints out of order");
  Bracket br;
  br.lo = lo;
  br.hi = hi;

  std::uint64_t salt = 0;
  auto run_classify = [&](double level) {
    Classification c =
        classify(with_level(model, level), theta, r_schedule, n,
                 derive_seed(master_seed, 0x5150 + ++salt), policy, threads);
    ++br.classify_calls;
    for (auto& cp : c.evidence) br.evidence.push_back(cp);
    return c;
  };

  Classification c_lo = run_classify(lo);
  if (c_lo.verdict != Classification::Verdict::kSubcritical)
    throw BadBracketError("lower endpoint lacks subcritical evidence");
  Classification c_hi = run_classify(hi);
  if (c_hi.verdict != Classification::Verdict::kSupercritical)
    throw BadBracketError("upper endpoint lacks supercritical evidence");

  int ext_used = 0;
  while ((br.hi - br.lo) > rel_tolerance * br.hi &&
         br.classify_calls < max_classify_calls) {
    const double mid = 0.5 * (br.lo + br.hi);
    Classification c = run_classify(mid);
    if (c.verdict == Classification::Verdict::kSupercritical) {
      br.hi = mid;
    } else if (c.verdict == Classification::Verdict::kSubcritical) {
      br.lo = mid;
    } else {
      // Undetermined midpoint: schedule a larger top scale and retry before
      // declaring failure.
      if (ext_used >= extensions) break;
      ++ext_used;
      r_schedule.push_back(2.0 * r_schedule.back());
    }
  }
  br.converged = (br.hi - br.lo) <= rel_tolerance * br.hi;
  return br;
}

// ---------------------------------------------------------------------------
// Arm decay fit

DecayFit fit_arm_decay(const ModelSpec& model, Phase phase,
                       const std::vector<double>& radii, std::uint64_t n,
                       std::uint64_t master_seed, const DetectorPolicy& policy,
                       int threads) {
  if (radii.size() < 4) throw std::invalid_argument("need at least 4 radii");
  const auto [mn, mx] = std::minmax_element(radii.begin(), radii.end());
  if (*mx / *mn < 8.0)
    throw std::invalid_argument("radii must span a factor of 8");

  DecayFit fit;
  fit.radii = radii;
  std::uint64_t salt = 0;
  for (double r : radii) {
    const EventSpec spec = EventSpec::origin_arm(r, phase);
    fit.points.push_back(estimate(model, spec, n,
                                  derive_seed(master_seed, 0xA7 + ++salt),
                                  policy, threads));
  }

  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (fit.points[i].p_hat > 0.0) {
      xs.push_back(std::log(radii[i]));
      ys.push_back(std::log(fit.points[i].p_hat));
    }
  }
  const std::size_t k = xs.size();
  if (k < 4)
    throw std::runtime_error("too many zero arm estimates for a decay fit");
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < k; ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx_ = sx / k, my_ = sy / k;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (xs[i] - mx_) * (xs[i] - mx_);
    sxy += (xs[i] - mx_) * (ys[i] - my_);
    syy += (ys[i] - my_) * (ys[i] - my_);
  }
  fit.slope = sxy / sxx;
  const double intercept = my_ - fit.slope * mx_;
  double ss_res = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double resid = ys[i] - (intercept + fit.slope * xs[i]);
    ss_res += resid * resid;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  const int df = static_cast<int>(k) - 2;
  const double se = std::sqrt(std::max(ss_res, 0.0) / std::max(df, 1) / sxx);
  fit.slope_halfwidth = t_quantile_975(df) * se;
  return fit;
}

// ---------------------------------------------------------------------------
// Spatial correlation against the decoupling bound

std::uint8_t corr_replicate(const BooleanModel& model, double r, double s,
                            std::uint64_t master_seed, std::uint64_t replicate,
                            double eps) {
  const Rect rect1{-r, -r / 3.0, r, r / 3.0};
  const Rect rect2{r + s, -r / 3.0, r + s + 2.0 * r, r / 3.0};
  const Rect hull{rect1.x0, rect1.y0, rect2.x1, rect1.y1};
  RngStream stream(derive_seed(master_seed, 0), replicate);
  Realization real = realize_boolean(model.lambda, hull, model.law, eps, stream);
  std::vector<Disc> discs;
  for (const MarkedPoint& p : real.points) discs.push_back({p.pos, p.z});
  const bool f1 = detect_cross_occupied(
      discs, rect1, {rect1.x0, rect1.y0}, {rect1.x0, rect1.y1},
      {rect1.x1, rect1.y0}, {rect1.x1, rect1.y1});
  const bool f2 = detect_cross_occupied(
      discs, rect2, {rect2.x0, rect2.y0}, {rect2.x0, rect2.y1},
      {rect2.x1, rect2.y0}, {rect2.x1, rect2.y1});
  return static_cast<std::uint8_t>((f1 ? 1 : 0) | (f2 ? 2 : 0));
}

CorrEstimate estimate_correlation(const BooleanModel& model, double r,
                                  double s, std::uint64_t n,
                                  std::uint64_t master_seed,
                                  const DetectorPolicy& policy, int threads) {
  if (!(r > 0.0) || !(s > 0.0))
    throw std::invalid_argument("correlation needs r > 0 and s > 0");
  // f1 observes a rectangle inside B_inf(r); f2 the same shape starting at
  // x = r + s, outside B_inf(r + s); corr_replicate owns the geometry, the
  // precondition is checked here.
  const Rect rect2{r + s, -r / 3.0, r + s + 2.0 * r, r / 3.0};
  if (!(rect2.x0 >= r + s))
    throw std::invalid_argument("separation precondition violated");

  std::vector<std::uint8_t> bits(n, 0);
  const auto t0 = Clock::now();
  run_replicates(0, n, threads, [&](std::uint64_t rep) {
    bits[rep] = corr_replicate(model, r, s, master_seed, rep, policy.eps);
    return Outcome::kTrue;
  });
  const double wall = ms_since(t0);

  std::uint64_t c1 = 0, c2 = 0, c12 = 0;
  for (std::uint8_t b : bits) {
    c1 += b & 1;
    c2 += (b >> 1) & 1;
    c12 += (b & 3) == 3;
  }
  const double nn = static_cast<double>(n);
  const double m1 = c1 / nn, m2 = c2 / nn;
  CorrEstimate ce;
  ce.rho_hat = c12 / nn - m1 * m2;
  double var = 0.0;
  for (std::uint8_t b : bits) {
    const double prod = ((b & 1) - m1) * (((b >> 1) & 1) - m2);
    var += (prod - ce.rho_hat) * (prod - ce.rho_hat);
  }
  ce.sigma = std::sqrt(var / (nn - 1.0)) / std::sqrt(nn);
  const double f = 1.0 + r / s;
  ce.bound = 8.0 * model.lambda * f * f * model.law.tail_m2(0.5 * s);

  std::vector<Outcome> o1(n), o2(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    o1[i] = (bits[i] & 1) ? Outcome::kTrue : Outcome::kFalse;
    o2[i] = (bits[i] & 2) ? Outcome::kTrue : Outcome::kFalse;
  }
  const EventSpec tag = EventSpec::cross(2.0 * r, 2.0 * r / 3.0, Phase::occupied);
  const double bias = realization_bias(ModelSpec{model}, tag, policy);
  ce.f1 = finish_estimate(o1, bias, master_seed, wall);
  ce.f2 = finish_estimate(o2, bias, master_seed, wall);
  ce.bits_digest = fnv1a64(bits.data(), bits.size());
  return ce;
}

// ---------------------------------------------------------------------------
// Margulis-Russo check via the two-stage construction

RussoReplicate russo_replicate(const BooleanModel& model, double lambda_target,
                               double r, int m, double dp,
                               std::uint64_t master_seed,
                               std::uint64_t replicate, double eps) {
  const double p0 = 0.5;
  // lambda_ref = 2*lambda_target puts the target at p = 1/2; the base
  // process runs at m * lambda_ref and is thinned by u <= p, v <= 1/m.
  const double lambda_base = 2.0 * m * lambda_target;
  const EventSpec spec = EventSpec::cross(4.0 * r, r, Phase::occupied);
  const Rect window = spec.query_window();

  RngStream stream(derive_seed(master_seed, 0), replicate);
  MarkFlags marks;
  marks.u_level = true;
  marks.v_slot = true;
  Realization real =
      realize_boolean(lambda_base, window, model.law, eps, stream, {}, marks);
  // Only points whose disc meets the query box can matter.
  std::vector<MarkedPoint> base;
  for (const MarkedPoint& p : real.points)
    if (disc_rect_intersects({p.pos, p.z}, window)) base.push_back(p);

  const double slot = 1.0 / m;
  auto detect_at = [&](double p, std::int64_t flip) {
    std::vector<Disc> discs;
    for (std::size_t i = 0; i < base.size(); ++i) {
      const bool kept = base[i].u <= p && base[i].v <= slot;
      const bool present =
          (flip == static_cast<std::int64_t>(i)) ? !kept : kept;
      if (present) discs.push_back({base[i].pos, base[i].z});
    }
    return detect_cross_occupied(discs, window, {window.x0, window.y0},
                                 {window.x0, window.y1},
                                 {window.x1, window.y0},
                                 {window.x1, window.y1});
  };

  RussoReplicate out;
  const bool f_hi = detect_at(p0 + dp, -1);
  const bool f_lo = detect_at(p0 - dp, -1);
  out.diff = static_cast<std::int8_t>((f_hi ? 1 : 0) - (f_lo ? 1 : 0));

  const bool f_base = detect_at(p0, -1);
  for (std::size_t i = 0; i < base.size(); ++i) {
    const bool kept = base[i].u <= p0 && base[i].v <= slot;
    // Monotonicity: removing a disc can only destroy a crossing, adding one
    // can only create it, so half the flips can be skipped outright.
    if (kept != f_base) continue;
    if (detect_at(p0, static_cast<std::int64_t>(i)) != f_base) ++out.pivots;
  }
  return out;
}

RussoCheck russo_check(const BooleanModel& model, double lambda_target,
                       double r, int m, double dp, std::uint64_t n,
                       std::uint64_t master_seed, const DetectorPolicy& policy,
                       int threads) {
  if (m < 2) throw std::invalid_argument("russo check needs m >= 2");
  const double p0 = 0.5;
  if (!(dp > 0.0) || p0 + dp >= 1.0 || p0 - dp <= 0.0)
    throw std::invalid_argument("dp places p outside (0,1)");

  std::vector<std::int8_t> diff(n, 0);
  std::vector<std::uint32_t> pivots(n, 0);
  run_replicates(0, n, threads, [&](std::uint64_t rep) {
    const RussoReplicate rr = russo_replicate(model, lambda_target, r, m, dp,
                                              master_seed, rep, policy.eps);
    diff[rep] = rr.diff;
    pivots[rep] = rr.pivots;
    return Outcome::kTrue;
  });

  const double nn = static_cast<double>(n);
  double sum_d = 0, sum_s = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    sum_d += diff[i];
    sum_s += pivots[i];
  }
  const double mean_d = sum_d / nn;
  const double mean_s = sum_s / nn;
  double var_d = 0, var_s = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    var_d += (diff[i] - mean_d) * (diff[i] - mean_d);
    var_s += (pivots[i] - mean_s) * (pivots[i] - mean_s);
  }
  var_d /= (nn - 1.0);
  var_s /= (nn - 1.0);

  RussoCheck rc;
  rc.m = m;
  rc.fd = mean_d / (2.0 * dp);
  rc.fd_sigma = std::sqrt(var_d / nn) / (2.0 * dp);
  rc.pivotal_sum = mean_s / m;
  rc.pivotal_sigma = std::sqrt(var_s / nn) / m;
  rc.diff_digest = fnv1a64(diff.data(), diff.size());
  rc.pivots_digest = fnv1a64(pivots.data(), pivots.size() * sizeof(pivots[0]));
  return rc;
}

std::vector<TruncationRow> truncation_convergence(
    const BooleanModel& model, const std::vector<double>& caps, double lo,
    double hi, double rel_tolerance, double theta,
    const std::vector<double>& r_schedule, std::uint64_t n,
    std::uint64_t master_seed, const DetectorPolicy& policy, int threads) {
  std::vector<TruncationRow> rows;
  std::uint64_t salt = 0;
  for (double cap : caps) {
    BooleanModel truncated{model.lambda, model.law.truncated(cap)};
    TruncationRow row;
    row.cap = cap;
    row.bracket = bisect_critical(
        ModelSpec{truncated}, lo, hi, rel_tolerance, 40, theta, r_schedule, n,
        derive_seed(master_seed, 0x7C + ++salt), policy, threads);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace perc
