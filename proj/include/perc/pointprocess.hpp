#pragma once

#include <cstdint>
#include <vector>

#include "perc/distributions.hpp"
#include "perc/geometry.hpp"
#include "perc/rng.hpp"

namespace perc {

// Which marks to draw per point, and in which role the z mark is sampled.
// Draw order per point is fixed (x, y, z, t, s, u, v) so that realizations
// replay bit-exactly.
struct MarkFlags {
  bool z_radius = false;   // z via the radius law (Boolean model)
  bool z_unit = false;     // z uniform in (0,1) (Voronoi / confetti pull)
  bool t_time = false;     // fall time, uniform in (0, t_horizon)
  bool s_color = false;    // color mark
  bool u_level = false;    // thinning level
  bool v_slot = false;     // thinning slot
  double t_horizon = 1.0;
};

struct MarkedPoint {
  Point pos;
  double z = 0.0;
  double t = 0.0;
  double s = 0.0;
  double u = 0.0;
  double v = 0.0;
};

struct SeedInfo {
  std::uint64_t master_seed = 0;
  std::uint64_t replicate_index = 0;
};

struct Realization {
  Rect window;
  Rect padded_window;
  std::vector<MarkedPoint> points;
  TailBudget budget;
  SeedInfo seed_info;
};

// Poisson(lambda * area) many points, positions i.i.d. uniform in `region`,
// marks per flags.
std::vector<MarkedPoint> sample_ppp(double lambda, const Rect& region,
                                    const RadiusLaw& law, RngStream& stream,
                                    const MarkFlags& marks);

// Boolean realization: window inflated by the certified padding for the law
// at this intensity, bias bound recorded.  The half sup-norm diameter of the
// window enters the leakage bound as the box radius.
Realization realize_boolean(double lambda, const Rect& window,
                            const RadiusLaw& law, double eps,
                            RngStream& stream, const SeedInfo& info = {},
                            const MarkFlags& extra_marks = {});

// Keeps points with u <= p and v <= 1/m; the retained set is coupled
// monotonically in p on fixed marks.
std::vector<MarkedPoint> thin(const std::vector<MarkedPoint>& points, double p,
                              int m);

}  // namespace perc
