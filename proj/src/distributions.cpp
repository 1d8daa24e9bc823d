#include "perc/distributions.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace perc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEulerGamma = 0.5772156649015328606;

// Exponential integral E1(x) for x > 0: power series below 1, modified
// Lentz continued fraction above.
double expint_e1(double x) {
  if (x <= 0.0) return kInf;
  if (x <= 1.0) {
    double sum = 0.0;
    double term = 1.0;
    for (int k = 1; k <= 40; ++k) {
      term *= -x / k;
      sum += -term / k;
    }
    return -kEulerGamma - std::log(x) + sum;
  }
  double b = x + 1.0;
  double c = 1e308;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 120; ++i) {
    const double a = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (a * d + b);
    c = b + a / c;
    const double del = c * d;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x);
}

// Upper incomplete gamma at negative integer order, via the recurrence
// Gamma(s, x) = (Gamma(s+1, x) - x^s e^-x) / s starting from Gamma(0,x)=E1.
double gamma_neg1(double x) { return std::exp(-x) / x - expint_e1(x); }
double gamma_neg2(double x) {
  return 0.5 * (std::exp(-x) / (x * x) - gamma_neg1(x));
}

}  // namespace

RadiusLaw RadiusLaw::constant(double rho) {
  if (!(rho > 0.0) || !std::isfinite(rho))
    throw std::invalid_argument("constant radius must be positive finite");
  return RadiusLaw(Kind::kConstant, rho, 0.0, {true, true, kInf});
}

RadiusLaw RadiusLaw::uniform(double a, double b) {
  if (!(0.0 < a && a < b) || !std::isfinite(b))
    throw std::invalid_argument("uniform radius law needs 0 < a < b");
  return RadiusLaw(Kind::kUniform, a, b, {true, true, kInf});
}

RadiusLaw RadiusLaw::pareto_tail(double alpha, double xmin) {
  if (!(alpha > 0.0) || !(xmin > 0.0))
    throw std::invalid_argument("pareto_tail needs alpha > 0, xmin > 0");
  return RadiusLaw(Kind::kParetoTail, alpha, xmin, {true, true, alpha});
}

RadiusLaw RadiusLaw::pareto2(double xmin) {
  if (!(xmin > 0.0)) throw std::invalid_argument("pareto2 needs xmin > 0");
  return RadiusLaw(Kind::kPareto2, xmin, 0.0, {false, false, std::nullopt});
}

RadiusLaw RadiusLaw::log_pareto2(double x0) {
  const double e = std::exp(1.0);
  if (!(x0 >= e)) throw std::invalid_argument("log_pareto2 needs x0 >= e");
  return RadiusLaw(Kind::kLogPareto2, x0, 0.0, {true, false, std::nullopt});
}

RadiusLaw RadiusLaw::log_pareto2_alpha(double alpha, double x0) {
  const double e = std::exp(1.0);
  if (!(alpha > 0.0) || !(x0 >= e))
    throw std::invalid_argument("log_pareto2_alpha needs alpha > 0, x0 >= e");
  return RadiusLaw(Kind::kLogPareto2Alpha, alpha, x0, {true, true, alpha});
}

RadiusLaw RadiusLaw::truncated(double cap) const {
  if (trunc_) throw std::invalid_argument("already truncated");
  if (!(cap >= min_support()))
    throw std::invalid_argument("truncation cap below the law's support");
  RadiusLaw out = *this;
  out.trunc_ = true;
  out.cap_ = cap;
  out.flags_ = {true, true, kInf};
  return out;
}

bool RadiusLaw::truncated_at(double* cap) const {
  if (trunc_ && cap) *cap = cap_;
  return trunc_;
}

double RadiusLaw::survival_raw(double x) const {
  switch (kind_) {
    case Kind::kConstant:
      return x < a_ ? 1.0 : 0.0;
    case Kind::kUniform:
      if (x < a_) return 1.0;
      if (x >= b_) return 0.0;
      return (b_ - x) / (b_ - a_);
    case Kind::kParetoTail:
      return x < b_ ? 1.0 : std::pow(x / b_, -(2.0 + a_));
    case Kind::kPareto2:
      return x < a_ ? 1.0 : (a_ / x) * (a_ / x);
    case Kind::kLogPareto2: {
      if (x < a_) return 1.0;
      const double lx = std::log(x);
      return 1.0 / (x * x * lx * lx);
    }
    case Kind::kLogPareto2Alpha: {
      if (x < b_) return 1.0;
      const double lx = std::log(x);
      return std::pow(x, -(2.0 + a_)) / (lx * lx);
    }
  }
  return 0.0;
}

double RadiusLaw::survival(double x) const {
  if (trunc_ && x >= cap_) return 0.0;
  return survival_raw(x);
}

double RadiusLaw::sample_raw(double u) const {
  const double tail = 1.0 - u;  // target survival level
  switch (kind_) {
    case Kind::kConstant:
      return a_;
    case Kind::kUniform:
      return a_ + u * (b_ - a_);
    case Kind::kParetoTail:
      return b_ * std::pow(tail, -1.0 / (2.0 + a_));
    case Kind::kPareto2:
      return a_ / std::sqrt(tail);
    case Kind::kLogPareto2:
    case Kind::kLogPareto2Alpha: {
      const double x0 = kind_ == Kind::kLogPareto2 ? a_ : b_;
      const double expo = kind_ == Kind::kLogPareto2 ? 2.0 : 2.0 + a_;
      if (tail >= survival_raw(x0)) return x0;  // atom at the cut
      // Solve expo * t + 2 log t = log(1/tail) for t = log x by bisection;
      // the left side is increasing on t >= 1.
      const double c = std::log(1.0 / tail);
      double lo = std::log(x0);
      double hi = c / expo + 1.0;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (expo * mid + 2.0 * std::log(mid) < c)
          lo = mid;
        else
          hi = mid;
      }
      return std::exp(0.5 * (lo + hi));
    }
  }
  return 0.0;
}

double RadiusLaw::sample(double u) const {
  const double z = sample_raw(u);
  return trunc_ ? std::min(z, cap_) : z;
}

// Closed-at-s convention: includes any atom sitting exactly at s, which
// keeps the budget conservative.
double RadiusLaw::tail_m2_raw(double s) const {
  switch (kind_) {
    case Kind::kConstant:
      return s <= a_ ? a_ * a_ : 0.0;
    case Kind::kUniform: {
      const double m = std::min(std::max(s, a_), b_);
      return (b_ * b_ * b_ - m * m * m) / (3.0 * (b_ - a_));
    }
    case Kind::kParetoTail: {
      const double m = std::max(s, b_);
      return (2.0 + a_) / a_ * std::pow(b_, 2.0 + a_) * std::pow(m, -a_);
    }
    case Kind::kPareto2:
      throw UnpaddableError("pareto2 has infinite second moment");
    case Kind::kLogPareto2: {
      double v = 0.0;
      if (s <= a_) v += a_ * a_ * (1.0 - survival_raw(a_));  // atom at x0
      const double lm = std::log(std::max(s, a_));
      v += 2.0 / lm + 1.0 / (lm * lm);
      return v;
    }
    case Kind::kLogPareto2Alpha: {
      double v = 0.0;
      if (s <= b_) v += b_ * b_ * (1.0 - survival_raw(b_));
      const double y = a_ * std::log(std::max(s, b_));
      v += (2.0 + a_) * a_ * gamma_neg1(y) + 2.0 * a_ * a_ * gamma_neg2(y);
      return v;
    }
  }
  return 0.0;
}

double RadiusLaw::tail_m2(double s) const {
  if (!trunc_) return tail_m2_raw(s);
  if (s > cap_) return 0.0;
  // Mass above the cap collapses onto an atom at the cap.
  const double above = survival_raw(cap_);
  double v = cap_ * cap_ * above;
  if (s < cap_) v += tail_m2_raw(s) - tail_m2_raw(cap_);
  return v;
}

double RadiusLaw::max_radius() const {
  if (trunc_) return cap_;
  switch (kind_) {
    case Kind::kConstant:
      return a_;
    case Kind::kUniform:
      return b_;
    default:
      return kInf;
  }
}

double RadiusLaw::min_support() const {
  switch (kind_) {
    case Kind::kConstant:
    case Kind::kUniform:
    case Kind::kPareto2:
    case Kind::kLogPareto2:
      return a_;
    case Kind::kParetoTail:
    case Kind::kLogPareto2Alpha:
      return b_;
  }
  return 0.0;
}

std::string RadiusLaw::describe() const {
  char buf[96];
  switch (kind_) {
    case Kind::kConstant:
      std::snprintf(buf, sizeof buf, "constant(%g)", a_);
      break;
    case Kind::kUniform:
      std::snprintf(buf, sizeof buf, "uniform(%g,%g)", a_, b_);
      break;
    case Kind::kParetoTail:
      std::snprintf(buf, sizeof buf, "pareto_tail(%g,%g)", a_, b_);
      break;
    case Kind::kPareto2:
      std::snprintf(buf, sizeof buf, "pareto2(%g)", a_);
      break;
    case Kind::kLogPareto2:
      std::snprintf(buf, sizeof buf, "log_pareto2(%g)", a_);
      break;
    case Kind::kLogPareto2Alpha:
      std::snprintf(buf, sizeof buf, "log_pareto2_alpha(%g,%g)", a_, b_);
      break;
  }
  std::string s = buf;
  if (trunc_) {
    std::snprintf(buf, sizeof buf, "trunc(%s,%g)", s.c_str(), cap_);
    s = buf;
  }
  return s;
}

double leakage_bound(const RadiusLaw& law, double lambda, double r, double s) {
  const double f = 1.0 + (r + 1.0) / s;
  return 8.0 * lambda * f * f * law.tail_m2(s);
}

TailBudget padding_for(const RadiusLaw& law, double lambda, double r,
                       double eps) {
  if (!law.moments().has_m2)
    throw UnpaddableError("law " + law.describe() + " is unpaddable");
  if (!(eps > 0.0) || !(eps <= 1.0))
    throw std::invalid_argument("eps must be in (0,1]");
  double s = 1e-3;
  for (int k = 0; k < 1200; ++k) {
    const double bound = leakage_bound(law, lambda, r, s);
    if (bound <= eps) return {s, bound};
    s *= 1.05;
  }
  throw UnpaddableError("padding search exhausted for " + law.describe());
}

}  // namespace perc
