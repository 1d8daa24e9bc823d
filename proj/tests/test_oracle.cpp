#include <cmath>
#include <cstdlib>

#include "doctest.h"
#include "perc/oracle.hpp"

using namespace perc;

TEST_CASE("quadrature_m2 reference values") {
  CHECK(quadrature_m2(RadiusLaw::constant(1.0), 0.0) == doctest::Approx(1.0));
  CHECK(quadrature_m2(RadiusLaw::pareto_tail(1, 1), 1.0) ==
        doctest::Approx(3.0).epsilon(1e-8));
  CHECK(quadrature_m2(RadiusLaw::uniform(1, 3), 0.0) ==
        doctest::Approx(13.0 / 3.0).epsilon(1e-8));
  CHECK_THROWS_AS(quadrature_m2(RadiusLaw::pareto2(1), 0.0), UnpaddableError);
}

TEST_CASE("raster oracle basic answers") {
  const EventSpec cross = EventSpec::cross(4, 2, Phase::occupied);
  CHECK(!raster_oracle(cross, std::vector<Disc>{}, 0.01));
  CHECK(raster_oracle(cross, std::vector<Disc>{{{2, 1}, 5}}, 0.01));
  // Oracle self-consistency: inserting a disc never destroys an occupied
  // event.
  std::vector<Disc> discs;
  bool prev = false;
  for (double x : {0.5, 1.5, 2.5, 3.5}) {
    discs.push_back({{x, 1.0}, 0.8});
    const bool now = raster_oracle(cross, discs, 0.02);
    CHECK(now >= prev);
    prev = now;
  }
}

TEST_CASE("void probability check: analytic vs empirical") {
  SUBCASE("lambda zero is certain vacancy") {
    const VoidCheck vc =
        void_probability_check(RadiusLaw::constant(1.0), 0.0, 20.0, 2000, 77);
    CHECK(vc.analytic == 1.0);
    CHECK(vc.empirical == 1.0);
  }
  SUBCASE("constant law matches exp(-lambda pi (1+R... truncated))") {
    // Covering intensity for constant radius 1: int_0^1 2 pi x dx = pi.
    const double lambda = 0.25;
    const VoidCheck vc = void_probability_check(RadiusLaw::constant(1.0),
                                                lambda, 30.0, 40000, 4242);
    CHECK(vc.analytic == doctest::Approx(std::exp(-lambda * M_PI)).epsilon(1e-9));
    const double sigma =
        std::sqrt(vc.analytic * (1 - vc.analytic) / 40000.0);
    CHECK(std::fabs(vc.empirical - vc.analytic) <= 4 * sigma);
  }
  SUBCASE("pareto2 coverage mass grows without bound in the padding") {
    // The plane is a.s. covered for any positive intensity; the truncated
    // analytic value keeps falling as the horizon grows.
    const double a1 =
        void_probability_check(RadiusLaw::pareto2(1), 0.5, 20.0, 1, 1).analytic;
    const double a2 =
        void_probability_check(RadiusLaw::pareto2(1), 0.5, 200.0, 1, 1).analytic;
    const double a3 =
        void_probability_check(RadiusLaw::pareto2(1), 0.5, 2000.0, 1, 1).analytic;
    CHECK(a2 < a1);
    CHECK(a3 < a2);
  }
}

TEST_CASE("tinyconfig corpus is certified by exact and raster detectors") {
  const char* dir = std::getenv("PERC_FIXTURES");
  const std::string path =
      std::string(dir ? dir : "tests/fixtures") + "/tinyconfig.json";
  std::vector<TinyConfig> corpus;
  try {
    corpus = load_tinyconfig_corpus(path);
  } catch (const std::exception& e) {
    FAIL("fixture not found: ", path, " (", e.what(),
         "); set PERC_FIXTURES");
  }
  REQUIRE(corpus.size() >= 40);
  for (const auto& tc : corpus) {
    INFO("case: ", tc.name);
    const Rect w = tc.spec.query_window();
    const double side = std::min(w.width(), w.height());
    // Dual-resolution certification.
    CHECK(raster_oracle(tc.spec, tc.discs, side / 512) == tc.expected);
    CHECK(raster_oracle(tc.spec, tc.discs, side / 1024) == tc.expected);
    // Exact route, where one exists.
    if (auto exact = detect_exact(tc.spec, tc.discs)) {
      CHECK(*exact == tc.expected);
    }
  }
}
