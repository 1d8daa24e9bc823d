#pragma once

#include <string>
#include <vector>

#include "perc/distributions.hpp"
#include "perc/events.hpp"
#include "perc/rng.hpp"

namespace perc {

// Independent brute-force references.  These are deliberately slow and live
// in the shipped artifact (reachable behind --oracle) so acceptance runs can
// cross-validate the fast detectors in the field.

// Event evaluated by BFS on a fixed delta-pixelation with the 8/4
// convention; no refinement.  This is the reference the refined detector is
// judged against at a given resolution.
bool raster_oracle(const EventSpec& spec, const PixelOracle& oracle,
                   double delta);
bool raster_oracle(const EventSpec& spec, const std::vector<Disc>& discs,
                   double delta);

// Adaptive Simpson integral of x^2 over the radius measure on (s, inf),
// relative error ~1e-8; atoms handled analytically.  Signals divergence for
// laws without a second moment.
double quadrature_m2(const RadiusLaw& law, double s);

// Adaptive Simpson integral of f over [a, b].
double adaptive_simpson(double (*f)(double, const void*), const void* ctx,
                        double a, double b, double tol);

struct VoidCheck {
  double analytic = 0.0;   // exp(-lambda * int_0^R 2 pi x S(x) dx)
  double empirical = 0.0;  // frequency of "no sampled disc covers the origin"
  std::uint64_t n = 0;
};

// One replicate of the origin-vacancy check: samples centers in the square
// of half-width r_pad but counts only those within Euclidean distance r_pad,
// matching the radial analytic integral exactly.  True means vacant.
bool void_replicate(const RadiusLaw& law, double lambda, double r_pad,
                    std::uint64_t master_seed, std::uint64_t replicate);

VoidCheck void_probability_check(const RadiusLaw& law, double lambda,
                                 double r_pad, std::uint64_t n,
                                 std::uint64_t master_seed, int threads = 0);

// Hand-built corpus entry: a few discs, an event, the certified answer.
struct TinyConfig {
  std::string name;
  std::vector<Disc> discs;
  EventSpec spec;
  bool expected = false;
};

std::vector<TinyConfig> load_tinyconfig_corpus(const std::string& path);

}  // namespace perc
