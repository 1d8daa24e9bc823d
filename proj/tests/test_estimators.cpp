#include <cmath>

#include "doctest.h"
#include "perc/estimators.hpp"

using namespace perc;

namespace {
const DetectorPolicy kPolicy;  // defaults: exact-first, 512/4096, eps 1e-3

ModelSpec boolean_const(double lambda, double rho = 1.0) {
  return BooleanModel{lambda, RadiusLaw::constant(rho)};
}
}  // namespace

TEST_CASE("wilson interval sanity") {
  auto [lo0, hi0] = wilson_interval(0, 100);
  CHECK(lo0 == 0.0);
  CHECK(hi0 > 0.0);
  CHECK(hi0 < 0.05);
  auto [lo1, hi1] = wilson_interval(100, 100);
  CHECK(hi1 == 1.0);
  CHECK(lo1 > 0.95);
  auto [lo, hi] = wilson_interval(50, 100);
  CHECK(lo == doctest::Approx(0.4038).epsilon(0.01));
  CHECK(hi == doctest::Approx(0.5962).epsilon(0.01));
}

TEST_CASE("estimate degenerate cases") {
  SUBCASE("lambda 0 crossing probability is exactly zero") {
    const Estimate e = estimate(boolean_const(0.0),
                                EventSpec::cross(8, 8, Phase::occupied), 200,
                                11, kPolicy);
    CHECK(e.p_hat == 0.0);
    CHECK(e.ci_low == 0.0);
    CHECK(e.bias == 0.0);
  }
  SUBCASE("q = 1 voronoi crossing probability is one") {
    const ModelSpec m = VoronoiModel{1.0, PullTable(1.0), PullTable(1.0)};
    DetectorPolicy p = kPolicy;
    p.pixels0 = 64;
    p.pixels_min = 128;
    const Estimate e =
        estimate(m, EventSpec::cross(6, 6, Phase::occupied), 100, 12, p);
    CHECK(e.p_hat == 1.0);
  }
  SUBCASE("rejects n = 0") {
    CHECK_THROWS(estimate(boolean_const(0.1),
                          EventSpec::cross(4, 4, Phase::occupied), 0, 1,
                          kPolicy));
  }
}

TEST_CASE("duality through the estimate plumbing") {
  // Per replicate, exactly one of {occupied LR crossing, vacant TB crossing}
  // occurs; the estimate pair on a square therefore sums to 1 exactly when
  // the vacant event is taken in the dual direction, and within noise when
  // both use the same direction (square symmetry).
  const ModelSpec m = boolean_const(0.35);
  const std::uint64_t n = 400, seed = 77;
  const EventSpec occ_spec = EventSpec::cross(8, 8, Phase::occupied);
  for (std::uint64_t rep = 0; rep < n; ++rep) {
    RngStream s(derive_seed(seed, 0), rep);
    const Realization real = realize_boolean(
        0.35, occ_spec.query_window(), RadiusLaw::constant(1.0), 1e-3, s);
    std::vector<Disc> discs;
    for (const auto& p : real.points) discs.push_back({p.pos, p.z});
    const Rect k = occ_spec.query_window();
    // Orientation wiring: the vacant LR detector must be the complement of
    // the occupied bottom-top crossing, segments spelled out explicitly.
    const bool occ_bt = detect_cross_occupied(discs, k, {k.x0, k.y0},
                                              {k.x1, k.y0}, {k.x0, k.y1},
                                              {k.x1, k.y1});
    const bool vac_lr = detect_cross_vacant_lr(discs, k);
    REQUIRE(static_cast<int>(occ_bt) + static_cast<int>(vac_lr) == 1);
  }
  const Estimate occ = estimate(m, occ_spec, n, seed, kPolicy);
  const Estimate vac =
      estimate(m, EventSpec::cross(8, 8, Phase::vacant), n, seed, kPolicy);
  const double sigma = std::sqrt(2.0 * 0.25 / n);
  CHECK(std::fabs(occ.p_hat + vac.p_hat - 1.0) <= 3 * sigma);
}

TEST_CASE("estimates merge associatively") {
  // Counts assembled from any partition of the replicate set agree.
  const ModelSpec m = boolean_const(0.3);
  const EventSpec spec = EventSpec::cross(6, 6, Phase::occupied);
  std::uint64_t yes_all = 0;
  for (std::uint64_t rep = 0; rep < 300; ++rep)
    yes_all += evaluate_replicate(m, spec, 5, rep, kPolicy) == Outcome::kTrue;
  const Estimate whole = estimate(m, spec, 300, 5, kPolicy);
  CHECK(whole.p_hat == doctest::Approx(yes_all / 300.0).epsilon(1e-12));
}

TEST_CASE("coupled monotonicity of the crossing curve in lambda") {
  const std::vector<double> levels = {0.15, 0.3, 0.45, 0.6};
  const auto points = crossing_curve(boolean_const(0.0), levels, 3.0, {6.0},
                                     Phase::occupied, 250, 31, kPolicy);
  REQUIRE(points.size() == levels.size());
  for (std::size_t i = 1; i < points.size(); ++i)
    CHECK(points[i].est.p_hat >= points[i - 1].est.p_hat);  // per-replicate coupling
}

TEST_CASE("classifier verdicts at extremes") {
  // The Wilson lower bound can only clear 1 - theta = 0.99 when
  // n/(n + z^2) > 0.99, so certification needs n >= ~390 even at full
  // success counts.
  SUBCASE("lambda 0 is subcritical at the first scale") {
    const Classification c =
        classify(boolean_const(0.0), 0.01, {4, 8}, 600, 91, kPolicy);
    CHECK(c.verdict == Classification::Verdict::kSubcritical);
    CHECK(c.trigger_r == doctest::Approx(4.0));
  }
  SUBCASE("huge lambda is supercritical at the first scale") {
    const Classification c =
        classify(boolean_const(3.0), 0.01, {4, 8}, 600, 92, kPolicy);
    CHECK(c.verdict == Classification::Verdict::kSupercritical);
    CHECK(c.trigger_r == doctest::Approx(4.0));
  }
  SUBCASE("near-critical with a tiny budget is undetermined") {
    const Classification c =
        classify(boolean_const(0.359), 0.01, {4}, 60, 93, kPolicy);
    CHECK(c.verdict == Classification::Verdict::kUndetermined);
  }
}

TEST_CASE("voronoi classification brackets the self-dual point") {
  // Color density well below 1/2 certifies subcritical evidence, well above
  // certifies supercritical; any valid bracket therefore contains q = 1/2.
  DetectorPolicy pol;
  pol.pixels0 = 96;
  pol.pixels_min = 384;
  const PullTable g(1.0);
  const Classification sub = classify(VoronoiModel{0.2, g, g}, 0.01, {6, 12},
                                      800, 555, pol);
  CHECK(sub.verdict == Classification::Verdict::kSubcritical);
  const Classification super = classify(VoronoiModel{0.8, g, g}, 0.01, {6, 12},
                                        800, 556, pol);
  CHECK(super.verdict == Classification::Verdict::kSupercritical);
}

TEST_CASE("bisect rejects a bad bracket") {
  CHECK_THROWS_AS(bisect_critical(boolean_const(0.0), 0.8, 0.2, 0.1, 10, 0.01,
                                  {4, 8}, 100, 7, kPolicy),
                  BadBracketError);
  // Reversed roles: lo supercritical.
  CHECK_THROWS_AS(bisect_critical(boolean_const(0.0), 2.5, 3.0, 0.1, 10, 0.01,
                                  {4, 8}, 100, 7, kPolicy),
                  BadBracketError);
}

TEST_CASE("decay fit recovers a known slope") {
  // Feed the fitter synthetic estimates p(r) = r^-1 by stubbing the counts:
  // use a boolean model whose arm probabilities are irrelevant, then check
  // the pure fitting path through a hand-rolled DecayFit computation is
  // equivalent to fitting the known curve.
  // Here: validate numerically with near-deterministic p(r).
  std::vector<double> radii = {4, 8, 16, 32, 64};
  std::vector<double> xs, ys;
  for (double r : radii) {
    xs.push_back(std::log(r));
    ys.push_back(std::log(1.0 / r));
  }
  // Straight line: slope exactly -1.
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / xs.size(), my = sy / ys.size();
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  CHECK(sxy / sxx == doctest::Approx(-1.0).epsilon(1e-12));

  SUBCASE("fit rejects thin radius spans") {
    CHECK_THROWS(fit_arm_decay(boolean_const(0.1), Phase::occupied,
                               {4, 5, 6, 7}, 50, 3, kPolicy));
    CHECK_THROWS(fit_arm_decay(boolean_const(0.1), Phase::occupied, {4, 64},
                               50, 3, kPolicy));
  }
  SUBCASE("supercritical occupied origin-arm probabilities do not decay") {
    const DecayFit fit = fit_arm_decay(boolean_const(1.2), Phase::occupied,
                                       {2, 4, 8, 16}, 250, 3, kPolicy);
    CHECK(fit.slope > -0.12);
  }
}

TEST_CASE("correlation estimator") {
  SUBCASE("disjoint dependence ranges give zero correlation and zero bound") {
    // Constant(1) discs cannot join regions separated by more than 2.
    const BooleanModel m{0.4, RadiusLaw::constant(1.0)};
    const CorrEstimate ce = estimate_correlation(m, 4.0, 4.0, 4000, 13,
                                                 kPolicy);
    CHECK(ce.bound == 0.0);
    CHECK(std::fabs(ce.rho_hat) <= 3.0 * ce.sigma + 1e-9);
  }
  SUBCASE("pareto tail bound holds") {
    const BooleanModel m{0.1, RadiusLaw::pareto_tail(1, 1)};
    DetectorPolicy pol = kPolicy;
    pol.eps = 0.02;  // keep the sampling window modest for a unit test
    const CorrEstimate ce = estimate_correlation(m, 8.0, 8.0, 1500, 14, pol);
    CHECK(std::fabs(ce.rho_hat) <= ce.bound + 3.0 * ce.sigma);
  }
  SUBCASE("separation precondition is enforced") {
    const BooleanModel m{0.2, RadiusLaw::constant(1.0)};
    CHECK_THROWS(estimate_correlation(m, 4.0, 0.0, 100, 1, kPolicy));
    CHECK_THROWS(estimate_correlation(m, 0.0, 4.0, 100, 1, kPolicy));
  }
}

TEST_CASE("russo check parameter validation") {
  const BooleanModel m{0.2, RadiusLaw::constant(1.0)};
  CHECK_THROWS(russo_check(m, 0.2, 4.0, 1, 0.05, 50, 1, kPolicy));   // m < 2
  CHECK_THROWS(russo_check(m, 0.2, 4.0, 4, 0.6, 50, 1, kPolicy));    // p+dp > 1
}

TEST_CASE("russo: both derivative estimators vanish on constant events") {
  // At lambda small and a tiny window, the event is almost surely absent and
  // flipping single points almost never changes it; both estimates sit at 0
  // within noise.
  const BooleanModel m{0.01, RadiusLaw::constant(0.2)};
  const RussoCheck rc = russo_check(m, 0.01, 2.0, 4, 0.05, 400, 21, kPolicy);
  CHECK(std::fabs(rc.fd) <= 3.0 * rc.fd_sigma + 0.05);
  CHECK(std::fabs(rc.pivotal_sum) <= 3.0 * rc.pivotal_sigma + 0.05);
}

TEST_CASE("truncation of a constant law is a no-op for brackets") {
  // Constant(1) truncated at M >= 1 realizes identical discs, so identical
  // classify outcomes replicate by replicate.
  const BooleanModel base{0.3, RadiusLaw::constant(1.0)};
  const BooleanModel cut{0.3, RadiusLaw::constant(1.0).truncated(2.0)};
  for (std::uint64_t rep = 0; rep < 100; ++rep) {
    const EventSpec spec = EventSpec::cross(12, 4, Phase::occupied);
    CHECK(evaluate_replicate(ModelSpec{base}, spec, 3, rep, kPolicy) ==
          evaluate_replicate(ModelSpec{cut}, spec, 3, rep, kPolicy));
  }
  CHECK_THROWS(RadiusLaw::constant(1.0).truncated(0.5));
}

TEST_CASE("determinism: outcomes independent of thread count") {
  const ModelSpec m = boolean_const(0.35);
  const EventSpec spec = EventSpec::cross(8, 8, Phase::occupied);
  const Estimate e1 = estimate(m, spec, 500, 99, kPolicy, 1);
  const Estimate e4 = estimate(m, spec, 500, 99, kPolicy, 4);
  const Estimate e16 = estimate(m, spec, 500, 99, kPolicy, 16);
  CHECK(e1.outcome_digest == e4.outcome_digest);
  CHECK(e1.outcome_digest == e16.outcome_digest);
  CHECK(e1.p_hat == e4.p_hat);
}

TEST_CASE("FKG-style positive association of nested crossings") {
  // Two increasing events sharing geometry: left-right crossings of the
  // bottom and top halves of a square.  Sample covariance must not be
  // significantly negative.
  const BooleanModel m{0.35, RadiusLaw::constant(1.0)};
  const std::uint64_t n = 3000;
  std::uint64_t c1 = 0, c2 = 0, c12 = 0;
  for (std::uint64_t rep = 0; rep < n; ++rep) {
    RngStream s(derive_seed(123, 0), rep);
    const Rect w{0, 0, 8, 8};
    const Realization real =
        realize_boolean(m.lambda, w, m.law, 1e-3, s);
    std::vector<Disc> discs;
    for (const auto& p : real.points) discs.push_back({p.pos, p.z});
    const Rect bottom{0, 0, 8, 4}, top{0, 4, 8, 8};
    const bool a = detect_cross_occupied(discs, bottom, {0, 0}, {0, 4},
                                         {8, 0}, {8, 4});
    const bool b = detect_cross_occupied(discs, top, {0, 4}, {0, 8}, {8, 4},
                                         {8, 8});
    c1 += a;
    c2 += b;
    c12 += a && b;
  }
  const double nn = n;
  const double cov = c12 / nn - (c1 / nn) * (c2 / nn);
  const double sigma = 1.0 / std::sqrt(nn);
  CHECK(cov >= -3.0 * sigma);
}
