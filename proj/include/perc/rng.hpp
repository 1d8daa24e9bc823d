#pragma once

#include <cmath>
#include <cstdint>

namespace perc {

// Counter-free keyed stream: the state is derived from (master_seed,
// replicate_index) through two SplitMix64 finalizer rounds, and draws step a
// SplitMix64 sequence.  Two streams with equal keys emit identical sequences
// on every platform and under any thread schedule; that is the whole replay
// contract, so nothing here may depend on global state.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t replicate_index) {
    std::uint64_t key = master_seed;
    key += 0x9E3779B97F4A7C15ull * (replicate_index + 1);
    key = mix(key);
    key = mix(key ^ 0xD1B54A32D192ED03ull);
    state_ = key;
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return mix(state_);
  }

  // Uniform on the open interval (0,1); never returns an exact 0 or 1, so
  // inverse-CDF transforms stay finite.
  double next_unit() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform on [lo, hi).
  double next_range(double lo, double hi) {
    return lo + (hi - lo) * next_unit();
  }

  // Poisson sample.  Sequential inversion below mean 30, Hormann's PTRS
  // transformed rejection above.  The method switch point is fixed; changing
  // it silently breaks stored replays.
  std::uint64_t next_poisson(double mean);

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

inline std::uint64_t RngStream::next_poisson(double mean) {
  if (mean <= 0.0) return 0;
  if (mean < 30.0) {
    // Inversion by sequential search.
    double p = std::exp(-mean);
    double cdf = p;
    std::uint64_t k = 0;
    const double u = next_unit();
    while (u > cdf && k < 1000000) {
      ++k;
      p *= mean / static_cast<double>(k);
      cdf += p;
    }
    return k;
  }
  // PTRS (Hormann 1993).
  const double b = 0.931 + 2.53 * std::sqrt(mean);
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  const double log_mean = std::log(mean);
  for (;;) {
    double u = next_unit() - 0.5;
    double v = next_unit();
    double us = 0.5 - std::fabs(u);
    double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (kf < 0.0) continue;
    if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(kf);
    if (us < 0.013 && v > us) continue;
    double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
    double rhs = kf * log_mean - mean - std::lgamma(kf + 1.0);
    if (lhs <= rhs) return static_cast<std::uint64_t>(kf);
  }
}

// 64-bit FNV-1a over raw bytes; used to digest per-replicate outcomes for
// replay verification.
inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 0xCBF29CE484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ull;
  }
  return h;
}

}  // namespace perc
