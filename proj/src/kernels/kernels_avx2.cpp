#include <immintrin.h>

#include <limits>

#include "perc/kernels.hpp"

// AVX2 variants.  Four doubles per lane-group, plain mul/add (no FMA) so the
// rounding matches the scalar reference bit for bit.  Tails fall back to the
// same scalar expressions.

namespace perc::kernels {
namespace {

void overlap_mask_avx2(double qx, double qy, double qr, const double* xs,
                       const double* ys, const double* rs, std::size_t n,
                       std::uint8_t* mask) {
  const __m256d vqx = _mm256_set1_pd(qx);
  const __m256d vqy = _mm256_set1_pd(qy);
  const __m256d vqr = _mm256_set1_pd(qr);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs + i), vqx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys + i), vqy);
    const __m256d rr = _mm256_add_pd(_mm256_loadu_pd(rs + i), vqr);
    const __m256d d2 =
        _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
    const __m256d cmp = _mm256_cmp_pd(d2, _mm256_mul_pd(rr, rr), _CMP_LE_OQ);
    const int bits = _mm256_movemask_pd(cmp);
    mask[i + 0] = (bits >> 0) & 1;
    mask[i + 1] = (bits >> 1) & 1;
    mask[i + 2] = (bits >> 2) & 1;
    mask[i + 3] = (bits >> 3) & 1;
  }
  for (; i < n; ++i) {
    const double dx = xs[i] - qx;
    const double dy = ys[i] - qy;
    const double rr = rs[i] + qr;
    mask[i] = (dx * dx + dy * dy <= rr * rr) ? 1 : 0;
  }
}

double weighted_min_dist2_avx2(double qx, double qy, const double* xs,
                               const double* ys, const double* w,
                               std::size_t n) {
  const __m256d vqx = _mm256_set1_pd(qx);
  const __m256d vqy = _mm256_set1_pd(qy);
  __m256d vbest = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs + i), vqx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys + i), vqy);
    const __m256d d2 =
        _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
    vbest = _mm256_min_pd(vbest, _mm256_mul_pd(d2, _mm256_loadu_pd(w + i)));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, vbest);
  double best = lanes[0];
  for (int k = 1; k < 4; ++k)
    if (lanes[k] < best) best = lanes[k];
  for (; i < n; ++i) {
    const double dx = xs[i] - qx;
    const double dy = ys[i] - qy;
    const double v = (dx * dx + dy * dy) * w[i];
    if (v < best) best = v;
  }
  return best;
}

double min_time_covering_avx2(double qx, double qy, const double* xs,
                              const double* ys, const double* rad2,
                              const double* ts, std::size_t n) {
  const __m256d vqx = _mm256_set1_pd(qx);
  const __m256d vqy = _mm256_set1_pd(qy);
  const __m256d vinf = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  __m256d vbest = vinf;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs + i), vqx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys + i), vqy);
    const __m256d d2 =
        _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
    const __m256d inside =
        _mm256_cmp_pd(d2, _mm256_loadu_pd(rad2 + i), _CMP_LE_OQ);
    const __m256d t =
        _mm256_blendv_pd(vinf, _mm256_loadu_pd(ts + i), inside);
    vbest = _mm256_min_pd(vbest, t);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, vbest);
  double best = lanes[0];
  for (int k = 1; k < 4; ++k)
    if (lanes[k] < best) best = lanes[k];
  for (; i < n; ++i) {
    const double dx = xs[i] - qx;
    const double dy = ys[i] - qy;
    if (dx * dx + dy * dy <= rad2[i] && ts[i] < best) best = ts[i];
  }
  return best;
}

}  // namespace

const Backend& avx2_backend() {
  static const Backend b{overlap_mask_avx2, weighted_min_dist2_avx2,
                         min_time_covering_avx2, "avx2"};
  return b;
}

bool avx2_supported() { return __builtin_cpu_supports("avx2"); }

}  // namespace perc::kernels
