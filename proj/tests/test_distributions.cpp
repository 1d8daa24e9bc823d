#include <cmath>

#include "doctest.h"
#include "perc/distributions.hpp"
#include "perc/oracle.hpp"
#include "perc/rng.hpp"

using namespace perc;

TEST_CASE("survival closed forms") {
  const double e = std::exp(1.0);
  CHECK(RadiusLaw::constant(2).survival(1) == 1.0);
  CHECK(RadiusLaw::constant(2).survival(3) == 0.0);
  CHECK(RadiusLaw::pareto_tail(1, 1).survival(4) ==
        doctest::Approx(0.015625).epsilon(1e-12));
  CHECK(RadiusLaw::log_pareto2(e).survival(e * e) ==
        doctest::Approx(std::exp(-4.0) / 4.0).epsilon(1e-12));
  CHECK(RadiusLaw::uniform(1, 3).survival(2) == doctest::Approx(0.5));
  CHECK(RadiusLaw::pareto2(1).survival(10) == doctest::Approx(0.01));
}

TEST_CASE("survival is non-increasing on a grid") {
  const std::vector<RadiusLaw> laws = {
      RadiusLaw::constant(1.5),
      RadiusLaw::uniform(0.5, 2.5),
      RadiusLaw::pareto_tail(1, 1),
      RadiusLaw::pareto_tail(0.5, 2),
      RadiusLaw::pareto2(1),
      RadiusLaw::log_pareto2(3.0),
      RadiusLaw::log_pareto2_alpha(1.0, 3.0),
      RadiusLaw::pareto_tail(1, 1).truncated(8.0),
  };
  for (const auto& law : laws) {
    double prev = 1.0;
    for (int i = 0; i <= 1000; ++i) {
      const double x = 0.02 * i;
      const double s = law.survival(x);
      CHECK(s <= prev + 1e-15);
      CHECK(s >= 0.0);
      CHECK(s <= 1.0);
      prev = s;
    }
  }
}

TEST_CASE("inverse-CDF sampling") {
  CHECK(RadiusLaw::constant(3.5).sample(0.77) == 3.5);
  CHECK(RadiusLaw::uniform(1, 3).sample(0.5) == doctest::Approx(2.0));
  // S(x) = x^-3, u = 0.875 -> solve x^-3 = 0.125 -> x = 2.
  CHECK(RadiusLaw::pareto_tail(1, 1).sample(0.875) ==
        doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("empirical survival matches analytic at 1e6 draws") {
  // Heavy tails lack a finite fourth moment, so moment-based standard errors
  // are meaningless there; the calibration check compares the empirical
  // survival function instead, which is binomial at every grid point.
  const std::vector<RadiusLaw> laws = {RadiusLaw::pareto_tail(1, 1),
                                       RadiusLaw::log_pareto2(3.0)};
  const std::uint64_t n = 1000000;
  for (const auto& law : laws) {
    RngStream rng(2024, 7);
    std::vector<double> draws(n);
    for (auto& d : draws) d = law.sample(rng.next_unit());
    for (double x : {1.5, 2.0, 4.0, 8.0, 32.0}) {
      std::uint64_t above = 0;
      for (double d : draws) above += d > x ? 1 : 0;
      const double p = law.survival(x);
      const double sigma = std::sqrt(std::max(p * (1 - p), 1e-12) / n);
      CHECK(std::fabs(static_cast<double>(above) / n - p) <= 5 * sigma + 1e-9);
    }
  }
}

TEST_CASE("sample second moment for light-tailed laws") {
  const std::vector<RadiusLaw> laws = {RadiusLaw::constant(2.0),
                                       RadiusLaw::uniform(1, 3),
                                       RadiusLaw::pareto_tail(3, 1)};
  const std::uint64_t n = 1000000;
  for (const auto& law : laws) {
    RngStream rng(55, 1);
    double sum = 0.0, sum_sq = 0.0;
    for (std::uint64_t i = 0; i < n; ++i) {
      const double z = law.sample(rng.next_unit());
      sum += z * z;
      sum_sq += z * z * z * z;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    const double se = std::sqrt(std::max(var, 1e-12) / n);
    CHECK(std::fabs(mean - law.second_moment()) <= 5 * se + 1e-9);
  }
}

TEST_CASE("tail_m2 closed forms") {
  CHECK(RadiusLaw::constant(1).tail_m2(2) == 0.0);
  CHECK(RadiusLaw::constant(1).tail_m2(0) == doctest::Approx(1.0));
  // ParetoTail(1,1): 3/s for s >= 1.
  CHECK(RadiusLaw::pareto_tail(1, 1).tail_m2(5) == doctest::Approx(0.6));
  CHECK(RadiusLaw::pareto_tail(1, 1).tail_m2(1) == doctest::Approx(3.0));
  CHECK(RadiusLaw::uniform(1, 3).tail_m2(0) == doctest::Approx(13.0 / 3.0));
  CHECK_THROWS_AS(RadiusLaw::pareto2(1).tail_m2(5), UnpaddableError);
}

TEST_CASE("tail_m2 agrees with quadrature on random pairs") {
  const std::vector<RadiusLaw> laws = {
      RadiusLaw::constant(1.7),
      RadiusLaw::uniform(0.5, 4.0),
      RadiusLaw::pareto_tail(1, 1),
      RadiusLaw::pareto_tail(2.5, 0.7),
      RadiusLaw::log_pareto2(3.0),
      RadiusLaw::log_pareto2_alpha(1.5, 3.0),
      RadiusLaw::pareto_tail(1, 1).truncated(12.0),
  };
  RngStream rng(99, 0);
  for (int it = 0; it < 100; ++it) {
    const auto& law = laws[it % laws.size()];
    const double s = rng.next_range(0.0, 10.0);
    const double analytic = law.tail_m2(s);
    const double numeric = quadrature_m2(law, s);
    CHECK(analytic ==
          doctest::Approx(numeric).epsilon(1e-6).scale(std::max(1.0, numeric)));
  }
}

TEST_CASE("padding_for satisfies its defining inequality minimally") {
  SUBCASE("constant law pads just past the radius") {
    const TailBudget b = padding_for(RadiusLaw::constant(1.0), 2.0, 10.0, 0.5);
    CHECK(b.padding > 1.0);
    CHECK(b.padding < 1.06);
    CHECK(b.bias_bound == 0.0);
  }
  SUBCASE("pareto tail regression point") {
    // 24 (1 + 11/s)^2 / s <= 1e-3; the exact root is near s = 24022 and the
    // 1.05 grid from 1e-3 lands one step above it, at 1e-3 * 1.05^349.
    const RadiusLaw law = RadiusLaw::pareto_tail(1, 1);
    const TailBudget b = padding_for(law, 1.0, 10.0, 1e-3);
    CHECK(leakage_bound(law, 1.0, 10.0, b.padding) <= 1e-3);
    CHECK(leakage_bound(law, 1.0, 10.0, b.padding / 1.05) > 1e-3);
    CHECK(b.padding == doctest::Approx(24835.07).epsilon(1e-4));
  }
  SUBCASE("eps = 1 is degenerate but legal") {
    const TailBudget b = padding_for(RadiusLaw::pareto_tail(1, 1), 1.0, 2.0,
                                     1.0);
    CHECK(b.bias_bound <= 1.0);
    CHECK(leakage_bound(RadiusLaw::pareto_tail(1, 1), 1.0, 2.0,
                        b.padding / 1.05) > 1.0);
  }
  SUBCASE("pareto2 is unpaddable") {
    CHECK_THROWS_AS(padding_for(RadiusLaw::pareto2(1), 1.0, 10.0, 0.1),
                    UnpaddableError);
  }
}

TEST_CASE("moment flags per variant") {
  CHECK(RadiusLaw::constant(1).moments().has_m2);
  CHECK(RadiusLaw::constant(1).moments().has_m2log);
  CHECK(RadiusLaw::pareto_tail(1, 1).moments().has_m2);
  CHECK(RadiusLaw::pareto_tail(1, 1).moments().m2alpha == doctest::Approx(1.0));
  CHECK(!RadiusLaw::pareto2(1).moments().has_m2);
  CHECK(RadiusLaw::log_pareto2(3.0).moments().has_m2);
  CHECK(!RadiusLaw::log_pareto2(3.0).moments().has_m2log);
  CHECK(RadiusLaw::log_pareto2_alpha(0.5, 3.0).moments().has_m2log);
}

TEST_CASE("truncation") {
  const RadiusLaw base = RadiusLaw::pareto_tail(1, 1);
  const RadiusLaw cut = base.truncated(4.0);
  CHECK(cut.max_radius() == 4.0);
  CHECK(cut.survival(5.0) == 0.0);
  CHECK(cut.survival(2.0) == base.survival(2.0));
  CHECK(cut.sample(0.999999) <= 4.0);
  // Mass above the cap moves to an atom at the cap.
  CHECK(cut.tail_m2(0.0) ==
        doctest::Approx(base.tail_m2(0) - base.tail_m2(4.0) +
                        16.0 * base.survival(4.0)));
  CHECK_THROWS(base.truncated(0.5));  // below the support
}
