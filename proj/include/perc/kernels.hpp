#pragma once

#include <cstddef>
#include <cstdint>

// Data-parallel inner loops behind the detectors, in two variants: a scalar
// reference and an AVX2 path selected at runtime.  Both variants are written
// with the same multiply/add order and no FMA contraction, so their outputs
// are bit-identical; the equivalence tests assert exactly that.  Everything
// operates on structure-of-arrays slices so grid buckets can be processed as
// contiguous ranges.

namespace perc::kernels {

struct Backend {
  // Writes mask[i] = 1 iff (xs[i]-qx)^2 + (ys[i]-qy)^2 <= (rs[i]+qr)^2,
  // i.e. the candidate circle overlaps the query circle.  Prefilter for
  // union-find edge generation.
  void (*overlap_mask)(double qx, double qy, double qr, const double* xs,
                       const double* ys, const double* rs, std::size_t n,
                       std::uint8_t* mask);

  // Minimum over i of ((xs[i]-qx)^2 + (ys[i]-qy)^2) * w[i].  Returns +inf
  // for n == 0.  Weighted nearest-seed query (w = 1/pull^2).
  double (*weighted_min_dist2)(double qx, double qy, const double* xs,
                               const double* ys, const double* w,
                               std::size_t n);

  // Minimum over i of ts[i] subject to (xs[i]-qx)^2 + (ys[i]-qy)^2 <=
  // rad2[i].  Returns +inf when no candidate covers the query point.
  double (*min_time_covering)(double qx, double qy, const double* xs,
                              const double* ys, const double* rad2,
                              const double* ts, std::size_t n);

  const char* name;
};

const Backend& scalar_backend();

// Backend chosen at load time from CPU capabilities (AVX2 when available,
// scalar otherwise).  PERC_FORCE_SCALAR=1 in the environment forces scalar.
const Backend& active_backend();

#if defined(PERC_HAVE_AVX2_BUILD)
const Backend& avx2_backend();
bool avx2_supported();
#endif

}  // namespace perc::kernels
