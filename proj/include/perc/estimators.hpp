#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "perc/events.hpp"
#include "perc/models.hpp"
#include "perc/montecarlo.hpp"

namespace perc {

using ModelSpec = std::variant<BooleanModel, VoronoiModel, ConfettiModel>;

std::string describe_model(const ModelSpec& model);

// The model's driving level: intensity lambda for Boolean, color density q
// for Voronoi/confetti.
double model_level(const ModelSpec& model);
ModelSpec with_level(const ModelSpec& model, double level);

struct DetectorPolicy {
  bool exact_first = true;   // exact detectors where a route exists
  bool raster_only = false;  // force rasterization (cross-validation mode)
  int pixels0 = 512;         // delta0 = short side / pixels0
  int pixels_min = 4096;     // delta_min = short side / pixels_min
  double eps = 1e-3;         // truncation bias budget per realization

  double delta0_for(const Rect& region) const;
  double delta_min_for(const Rect& region) const;
};

struct Estimate {
  double p_hat = 0.0;
  std::uint64_t n = 0;
  double ci_low = 0.0;
  double ci_high = 1.0;
  double bias = 0.0;  // realization bias bound + unresolved + rejection rate
  double unresolved_rate = 0.0;
  double rejected_rate = 0.0;
  std::uint64_t master_seed = 0;
  std::uint64_t rep_lo = 0, rep_hi = 0;
  std::uint64_t outcome_digest = 0;
  double wall_ms = 0.0;

  double wilson_low() const { return ci_low; }
  double wilson_high() const { return ci_high; }
  double sigma() const;  // binomial standard error at p_hat
};

// 95% Wilson score interval.
std::pair<double, double> wilson_interval(std::uint64_t successes,
                                          std::uint64_t n);

// Monte Carlo estimate of P(spec) under the model: n replicates with streams
// keyed by (master_seed, replicate).  Unresolved raster outcomes widen the
// bias term and never enter p_hat.
Estimate estimate(const ModelSpec& model, const EventSpec& spec,
                  std::uint64_t n, std::uint64_t master_seed,
                  const DetectorPolicy& policy, int threads = 0);

// Single-replicate evaluation; exposed for replay verification.
Outcome evaluate_replicate(const ModelSpec& model, const EventSpec& spec,
                           std::uint64_t master_seed, std::uint64_t replicate,
                           const DetectorPolicy& policy);

struct CurvePoint {
  double level = 0.0;
  double r = 0.0;
  EventSpec spec;
  Estimate est;
};

// One coupled replicate of a level sweep: Boolean families realize once at
// the top intensity and thin by u-marks per level; color families replay the
// same draws per q.  Returns one outcome per level.
std::vector<Outcome> curve_replicate(const ModelSpec& model,
                                     const EventSpec& spec,
                                     const std::vector<double>& levels,
                                     std::uint64_t master_seed,
                                     std::uint64_t replicate,
                                     const DetectorPolicy& policy);

// XOR agreement between the exact occupied left-right crossing and the
// rasterized vacant top-bottom crossing of the r x r square at the fixed
// resolution r/pixels: kTrue when exactly one of the two occurs.
Outcome duality_replicate(const BooleanModel& model, double r, int pixels,
                          std::uint64_t master_seed, std::uint64_t replicate,
                          double eps);

// One shared realization evaluated for both correlation indicators; bit 0
// carries f1, bit 1 carries f2.
std::uint8_t corr_replicate(const BooleanModel& model, double r, double s,
                            std::uint64_t master_seed, std::uint64_t replicate,
                            double eps);

struct RussoReplicate {
  std::int8_t diff = 0;        // f(p0+dp) - f(p0-dp) on coupled marks
  std::uint32_t pivots = 0;    // count of retention-pivotal base points
};

RussoReplicate russo_replicate(const BooleanModel& model, double lambda_target,
                               double r, int m, double dp,
                               std::uint64_t master_seed,
                               std::uint64_t replicate, double eps);

// One estimate per (level, r) with the event cross(kappa*r, r) in the given
// phase.  Boolean families couple across lambda through shared u-marks.
std::vector<CurvePoint> crossing_curve(const ModelSpec& model,
                                       const std::vector<double>& levels,
                                       double kappa,
                                       const std::vector<double>& r_list,
                                       Phase phase, std::uint64_t n,
                                       std::uint64_t master_seed,
                                       const DetectorPolicy& policy,
                                       int threads = 0);

struct Classification {
  enum class Verdict { kSupercritical, kSubcritical, kUndetermined };
  Verdict verdict = Verdict::kUndetermined;
  std::optional<double> trigger_r;
  double theta = 0.01;
  std::vector<CurvePoint> evidence;  // occupied and vacant rows per scheduled r
};

// Finite-size classification: supercritical evidence when the Wilson lower
// bound of P(cross(3r,r)) clears 1-theta at some scheduled r, subcritical
// evidence for the vacant analogue.
Classification classify(const ModelSpec& model, double theta,
                        const std::vector<double>& r_schedule, std::uint64_t n,
                        std::uint64_t master_seed,
                        const DetectorPolicy& policy, int threads = 0);

struct BadBracketError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Bracket {
  double lo = 0.0;
  double hi = 0.0;
  bool converged = false;
  int classify_calls = 0;
  std::vector<CurvePoint> evidence;

  double mid() const { return 0.5 * (lo + hi); }
  double rel_width() const { return (hi - lo) / hi; }
};

// Bisection on the model level holding Subcritical evidence at lo and
// Supercritical at hi.  Undetermined midpoints retry with the schedule top
// doubled (up to `extensions` times) before the run stops.
Bracket bisect_critical(const ModelSpec& model, double lo, double hi,
                        double rel_tolerance, int max_classify_calls,
                        double theta, std::vector<double> r_schedule,
                        std::uint64_t n, std::uint64_t master_seed,
                        const DetectorPolicy& policy, int threads = 0,
                        int extensions = 2);

struct DecayFit {
  std::vector<double> radii;
  std::vector<Estimate> points;
  double slope = 0.0;
  double slope_halfwidth = 0.0;  // studentized 95%
  double r_squared = 0.0;
};

// Log-log least squares on origin-arm probabilities over the given radii
// (at least 4, spanning a factor of 8 or more).
DecayFit fit_arm_decay(const ModelSpec& model, Phase phase,
                       const std::vector<double>& radii, std::uint64_t n,
                       std::uint64_t master_seed, const DetectorPolicy& policy,
                       int threads = 0);

struct CorrEstimate {
  double rho_hat = 0.0;
  double sigma = 0.0;
  double bound = 0.0;  // 8 lambda (1 + r/s)^2 tail_m2(s/2)
  Estimate f1, f2;
  std::uint64_t bits_digest = 0;
};

// Sample covariance of two crossing indicators on shared realizations: f1
// crosses a 2r x (2r/3) rectangle inside B_inf(r), f2 the same shape
// translated to start at x = r + s, outside B_inf(r + s).
CorrEstimate estimate_correlation(const BooleanModel& model, double r,
                                  double s, std::uint64_t n,
                                  std::uint64_t master_seed,
                                  const DetectorPolicy& policy,
                                  int threads = 0);

struct RussoCheck {
  double fd = 0.0;
  double fd_sigma = 0.0;
  double pivotal_sum = 0.0;
  double pivotal_sigma = 0.0;
  int m = 0;
  std::uint64_t diff_digest = 0;
  std::uint64_t pivots_digest = 0;
};

// Two estimators of dZ/dp at p = 1/2 under the two-stage construction with
// base intensity 2 m lambda_target: a coupled central difference of the
// crossing indicator, and the pivotality sum scaled by 1/m.
RussoCheck russo_check(const BooleanModel& model, double lambda_target,
                       double r, int m, double dp, std::uint64_t n,
                       std::uint64_t master_seed, const DetectorPolicy& policy,
                       int threads = 0);

struct TruncationRow {
  double cap = 0.0;
  Bracket bracket;
};

std::vector<TruncationRow> truncation_convergence(
    const BooleanModel& model, const std::vector<double>& caps, double lo,
    double hi, double rel_tolerance, double theta,
    const std::vector<double>& r_schedule, std::uint64_t n,
    std::uint64_t master_seed, const DetectorPolicy& policy, int threads = 0);

// Deterministic per-experiment sub-seed derivation.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t salt);

}  // namespace perc
