#include "perc/montecarlo.hpp"

#include <atomic>
#include <thread>

#include "perc/rng.hpp"

namespace perc {

std::vector<Outcome> run_replicates(
    std::uint64_t rep_lo, std::uint64_t rep_hi, int threads,
    const std::function<Outcome(std::uint64_t)>& work) {
  const std::uint64_t n = rep_hi > rep_lo ? rep_hi - rep_lo : 0;
  std::vector<Outcome> out(n, Outcome::kFalse);
  if (n == 0) return out;
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  const unsigned nthreads =
      threads > 0 ? static_cast<unsigned>(threads) : hw;
  if (nthreads <= 1 || n == 1) {
    for (std::uint64_t i = 0; i < n; ++i) out[i] = work(rep_lo + i);
    return out;
  }
  std::atomic<std::uint64_t> cursor{0};
  const std::uint64_t chunk = std::max<std::uint64_t>(1, n / (nthreads * 16));
  auto body = [&] {
    for (;;) {
      const std::uint64_t start = cursor.fetch_add(chunk);
      if (start >= n) return;
      const std::uint64_t stop = std::min(n, start + chunk);
      for (std::uint64_t i = start; i < stop; ++i) out[i] = work(rep_lo + i);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  return out;
}

Tally tally_outcomes(const std::vector<Outcome>& outcomes) {
  Tally t;
  for (Outcome o : outcomes) switch (o) {
      case Outcome::kTrue:
        ++t.yes;
        break;
      case Outcome::kFalse:
        ++t.no;
        break;
      case Outcome::kUnresolved:
        ++t.unresolved;
        break;
      case Outcome::kRejected:
        ++t.rejected;
        break;
    }
  return t;
}

std::uint64_t digest_outcomes(const std::vector<Outcome>& outcomes) {
  return fnv1a64(outcomes.data(), outcomes.size());
}

}  // namespace perc
