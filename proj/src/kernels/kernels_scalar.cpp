#include <limits>

#include "perc/kernels.hpp"

namespace perc::kernels {
namespace {

void overlap_mask_scalar(double qx, double qy, double qr, const double* xs,
                         const double* ys, const double* rs, std::size_t n,
                         std::uint8_t* mask) {
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - qx;
    const double dy = ys[i] - qy;
    const double rr = rs[i] + qr;
    mask[i] = (dx * dx + dy * dy <= rr * rr) ? 1 : 0;
  }
}

double weighted_min_dist2_scalar(double qx, double qy, const double* xs,
                                 const double* ys, const double* w,
                                 std::size_t n) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - qx;
    const double dy = ys[i] - qy;
    const double v = (dx * dx + dy * dy) * w[i];
    if (v < best) best = v;
  }
  return best;
}

double min_time_covering_scalar(double qx, double qy, const double* xs,
                                const double* ys, const double* rad2,
                                const double* ts, std::size_t n) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - qx;
    const double dy = ys[i] - qy;
    if (dx * dx + dy * dy <= rad2[i] && ts[i] < best) best = ts[i];
  }
  return best;
}

}  // namespace

const Backend& scalar_backend() {
  static const Backend b{overlap_mask_scalar, weighted_min_dist2_scalar,
                         min_time_covering_scalar, "scalar"};
  return b;
}

}  // namespace perc::kernels
