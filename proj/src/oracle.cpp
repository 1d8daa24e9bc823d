#include "perc/oracle.hpp"

#include <cmath>
#include <fstream>
#include <functional>

#include "json.hpp"
#include "perc/geometry.hpp"
#include "perc/montecarlo.hpp"

namespace perc {

bool raster_oracle(const EventSpec& spec, const PixelOracle& oracle,
                   double delta) {
  return raster_event_at(spec, oracle, delta);
}

bool raster_oracle(const EventSpec& spec, const std::vector<Disc>& discs,
                   double delta) {
  DiscOracle o(discs);
  return raster_event_at(spec, o, delta);
}

namespace {

double simpson(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_step(const std::function<double(double)>& f, double a,
                     double b, double fa, double fm, double fb, double whole,
                     double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(a, m, fa, flm, fm);
  const double right = simpson(m, b, fm, frm, fb);
  if (depth <= 0 || std::fabs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  return adaptive_step(f, a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), tol,
                       48);
}

}  // namespace

double adaptive_simpson(double (*f)(double, const void*), const void* ctx,
                        double a, double b, double tol) {
  return integrate([&](double x) { return f(x, ctx); }, a, b, tol);
}

// Stieltjes integral of x^2 against -dS via integration by parts:
//   int_(s,inf) x^2 mu(dx) = s^2 S(s) + int_s^inf 2 x S(x) dx,
// which needs no density and handles atoms uniformly.  The second integral
// runs in log-space, g(t) = 2 e^{2t} S(e^t), because log-corrected tails
// (x^2 S(x) ~ 1/log^2 x) converge too slowly for any x-space truncation.
// Whatever tail is left at the domain edge is closed by a measured power
// extrapolation of g, which is exact for those pure log forms and
// irrelevant for exponentially decaying g.
double quadrature_m2(const RadiusLaw& law, double s) {
  if (!law.moments().has_m2)
    throw UnpaddableError("no finite second moment: " + law.describe());
  const double lo = std::max(s, 0.0);
  double total = lo * lo * law.survival(lo);

  const double cap = law.max_radius();
  auto g = [&](double t) {
    const double x = std::exp(t);
    return 2.0 * x * x * law.survival(x);
  };

  // Below x = 1 (or the cap) work in x-space; 2 x S(x) is bounded there.
  auto fx = [&](double x) { return 2.0 * x * law.survival(x); };
  const double mid = std::isfinite(cap) ? std::min(1.0, cap) : 1.0;
  if (lo < mid) total += integrate(fx, lo, mid, 1e-13);

  double t = std::log(std::max(lo, mid));
  // 330 keeps x^2 log^2 x clear of double overflow for the log-tail laws.
  const double t_cap = std::isfinite(cap) ? std::log(cap) : 330.0;
  bool tail_negligible = false;
  while (t < t_cap) {
    const double t_next = std::min(t + 2.0, t_cap);
    total += integrate(g, t, t_next, 1e-13 * std::max(1.0, total));
    t = t_next;
    if (g(t) * std::max(t, 1.0) < 1e-12 * std::max(total, 1e-300)) {
      tail_negligible = true;
      break;
    }
  }
  if (!std::isfinite(cap) && !tail_negligible) {
    // Tail closure: fit g ~ c t^-q locally and add c T^{1-q}/(q-1).  The
    // finite-difference exponent carries an O(h/T) bias, removed by
    // Richardson so the closure is exact for pure power tails.
    const double h = 0.25;
    const double gt = g(t);
    const double q1 = (std::log(g(t - h)) - std::log(gt)) / h * t;
    const double q2 = (std::log(g(t - 2 * h)) - std::log(gt)) / (2 * h) * t;
    const double q = 2.0 * q1 - q2;
    if (gt > 0.0 && q > 1.000001) total += gt * t / (q - 1.0);
  }
  return total;
}

bool void_replicate(const RadiusLaw& law, double lambda, double r_pad,
                    std::uint64_t master_seed, std::uint64_t replicate) {
  const Rect square{-r_pad, -r_pad, r_pad, r_pad};
  const double mean = lambda * square.area();
  RngStream stream(master_seed, replicate);
  const std::uint64_t count = stream.next_poisson(mean);
  bool covered = false;
  for (std::uint64_t i = 0; i < count; ++i) {
    const double x = stream.next_range(square.x0, square.x1);
    const double y = stream.next_range(square.y0, square.y1);
    const double z = law.sample(stream.next_unit());
    if (covered) continue;  // keep the draw count fixed per replicate
    const double d2 = x * x + y * y;
    if (d2 <= r_pad * r_pad && d2 <= z * z) covered = true;
  }
  return !covered;
}

VoidCheck void_probability_check(const RadiusLaw& law, double lambda,
                                 double r_pad, std::uint64_t n,
                                 std::uint64_t master_seed, int threads) {
  VoidCheck out;
  out.n = n;
  // Analytic side: radial quadrature of the covering intensity, in
  // geometric blocks so compact supports are never stepped over whole.
  auto f = [&](double x) { return 2.0 * M_PI * x * law.survival(x); };
  double mass = 0.0;
  double a = 0.0, b = std::min(1.0, r_pad);
  while (a < r_pad) {
    mass += integrate(f, a, b, 1e-13);
    a = b;
    b = std::min(2.0 * b, r_pad);
  }
  mass *= lambda;
  out.analytic = std::exp(-mass);

  const auto outcomes = run_replicates(0, n, threads, [&](std::uint64_t rep) {
    return void_replicate(law, lambda, r_pad, master_seed, rep)
               ? Outcome::kTrue
               : Outcome::kFalse;
  });
  const Tally t = tally_outcomes(outcomes);
  out.empirical = static_cast<double>(t.yes) / static_cast<double>(n);
  return out;
}

std::vector<TinyConfig> load_tinyconfig_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus: " + path);
  nlohmann::json j;
  in >> j;
  std::vector<TinyConfig> out;
  for (const auto& e : j.at("cases")) {
    TinyConfig tc;
    tc.name = e.at("name").get<std::string>();
    for (const auto& d : e.at("discs"))
      tc.discs.push_back(
          {{d.at(0).get<double>(), d.at(1).get<double>()}, d.at(2).get<double>()});
    const auto& ev = e.at("event");
    const std::string kind = ev.at("kind").get<std::string>();
    const Phase ph =
        ev.at("phase").get<std::string>() == "occupied" ? Phase::occupied
                                                        : Phase::vacant;
    if (kind == "cross")
      tc.spec = EventSpec::cross(ev.at("width").get<double>(),
                                 ev.at("height").get<double>(), ph);
    else if (kind == "cross_to_sub")
      tc.spec = EventSpec::cross_to_sub(ev.at("width").get<double>(),
                                        ev.at("height").get<double>(),
                                        ev.at("y_low").get<double>(), ph);
    else if (kind == "arm")
      tc.spec = EventSpec::arm(ev.at("r_inner").get<double>(),
                               ev.at("r_outer").get<double>(), ph);
    else if (kind == "circuit")
      tc.spec = EventSpec::circuit(ev.at("r_inner").get<double>(),
                                   ev.at("r_outer").get<double>(), ph);
    else if (kind == "origin_arm")
      tc.spec = EventSpec::origin_arm(ev.at("r").get<double>(), ph);
    else
      throw std::runtime_error("unknown event kind in corpus: " + kind);
    tc.expected = e.at("expected").get<bool>();
    out.push_back(std::move(tc));
  }
  return out;
}

}  // namespace perc
