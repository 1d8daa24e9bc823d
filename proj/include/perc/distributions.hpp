#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace perc {

// Raised when a law without a finite second moment is asked for a truncation
// budget.  Such laws are only admitted to the coverage experiment, never to
// crossing estimation.
struct UnpaddableError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MomentFlags {
  bool has_m2 = false;      // integral of x^2 finite
  bool has_m2log = false;   // integral of x^2 log x finite
  std::optional<double> m2alpha;  // largest a with integral of x^(2+a) finite
};

struct TailBudget {
  double padding = 0.0;
  double bias_bound = 0.0;  // evaluated truncation-leakage bound at `padding`
};

// Radius laws with closed-form survival function, inverse CDF and
// second-moment tail integral.
//
//   Constant(rho)            point mass at rho
//   Uniform(a, b)            uniform on [a, b]
//   ParetoTail(alpha, xmin)  S(x) = (x/xmin)^-(2+alpha) on [xmin, inf)
//   Pareto2(xmin)            S(x) = (x/xmin)^-2, infinite second moment
//   LogPareto2(x0)           S(x) = x^-2 (log x)^-2 on [x0, inf), x0 >= e,
//                            with an atom at x0 carrying the missing mass
//   LogPareto2Alpha(a, x0)   S(x) = x^-(2+a) (log x)^-2 on [x0, inf)
class RadiusLaw {
 public:
  enum class Kind {
    kConstant,
    kUniform,
    kParetoTail,
    kPareto2,
    kLogPareto2,
    kLogPareto2Alpha,
  };

  static RadiusLaw constant(double rho);
  static RadiusLaw uniform(double a, double b);
  static RadiusLaw pareto_tail(double alpha, double xmin);
  static RadiusLaw pareto2(double xmin);
  static RadiusLaw log_pareto2(double x0);
  static RadiusLaw log_pareto2_alpha(double alpha, double x0);

  // Truncation at cap M: mass above M moves to an atom at M.  Requires M to
  // be at least the law's minimum support point.
  RadiusLaw truncated(double cap) const;

  Kind kind() const { return kind_; }
  double param_a() const { return a_; }
  double param_b() const { return b_; }
  const MomentFlags& moments() const { return flags_; }
  bool truncated_at(double* cap) const;

  // P(Z > x); non-increasing, right-continuous.
  double survival(double x) const;

  // Inverse-CDF transform of u in (0,1).
  double sample(double u) const;

  // Integral of x^2 over the radius measure restricted to (s, inf).
  // Throws UnpaddableError for Pareto2.
  double tail_m2(double s) const;

  // Full second moment (tail_m2 at 0).
  double second_moment() const { return tail_m2(0.0); }

  // Largest radius the law can produce, +inf for unbounded laws.
  double max_radius() const;

  // Smallest radius with positive mass at or above it.
  double min_support() const;

  // Canonical spec string, e.g. "pareto_tail(1,1)".
  std::string describe() const;

 private:
  RadiusLaw(Kind k, double a, double b, MomentFlags f)
      : kind_(k), a_(a), b_(b), flags_(f) {}

  double survival_raw(double x) const;  // before truncation
  double sample_raw(double u) const;
  double tail_m2_raw(double s) const;

  Kind kind_;
  double a_ = 0.0;
  double b_ = 0.0;
  MomentFlags flags_;
  bool trunc_ = false;
  double cap_ = 0.0;
};

// Smallest padding s on the geometric grid s0 * 1.05^k with
//   8 * lambda * (1 + (r+1)/s)^2 * tail_m2(law, s) <= eps.
// The grid keeps the search deterministic; the bound is the certified
// probability that deleting discs beyond the padding changes anything inside
// the window.  Throws UnpaddableError when the law has no second moment.
TailBudget padding_for(const RadiusLaw& law, double lambda, double r,
                       double eps);

// Leakage bound evaluated at a given padding (the left side of the
// inequality above); exposed for tests.
double leakage_bound(const RadiusLaw& law, double lambda, double r, double s);

}  // namespace perc
