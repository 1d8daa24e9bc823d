#include "perc/pointprocess.hpp"

#include <stdexcept>

namespace perc {

std::vector<MarkedPoint> sample_ppp(double lambda, const Rect& region,
                                    const RadiusLaw& law, RngStream& stream,
                                    const MarkFlags& marks) {
  if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  if (!(region.width() > 0.0) || !(region.height() > 0.0))
    throw std::invalid_argument("degenerate sampling region");
  const double mean = lambda * region.area();
  const std::uint64_t count = stream.next_poisson(mean);
  std::vector<MarkedPoint> pts;
  pts.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    MarkedPoint p;
    p.pos.x = stream.next_range(region.x0, region.x1);
    p.pos.y = stream.next_range(region.y0, region.y1);
    if (marks.z_radius)
      p.z = law.sample(stream.next_unit());
    else if (marks.z_unit)
      p.z = stream.next_unit();
    if (marks.t_time) p.t = marks.t_horizon * stream.next_unit();
    if (marks.s_color) p.s = stream.next_unit();
    if (marks.u_level) p.u = stream.next_unit();
    if (marks.v_slot) p.v = stream.next_unit();
    pts.push_back(p);
  }
  return pts;
}

Realization realize_boolean(double lambda, const Rect& window,
                            const RadiusLaw& law, double eps,
                            RngStream& stream, const SeedInfo& info,
                            const MarkFlags& extra_marks) {
  const double half_diam = 0.5 * std::max(window.width(), window.height());
  const TailBudget budget =
      padding_for(law, lambda, std::max(half_diam, 1.0), eps);
  Realization r;
  r.window = window;
  r.padded_window = window.inflated(budget.padding);
  r.budget = budget;
  r.seed_info = info;
  MarkFlags marks = extra_marks;
  marks.z_radius = true;
  marks.z_unit = false;
  r.points = sample_ppp(lambda, r.padded_window, law, stream, marks);
  return r;
}

std::vector<MarkedPoint> thin(const std::vector<MarkedPoint>& points, double p,
                              int m) {
  if (m < 1) throw std::invalid_argument("thinning slots m must be >= 1");
  std::vector<MarkedPoint> kept;
  const double slot = 1.0 / static_cast<double>(m);
  for (const MarkedPoint& q : points)
    if (q.u <= p && q.v <= slot) kept.push_back(q);
  return kept;
}

}  // namespace perc
