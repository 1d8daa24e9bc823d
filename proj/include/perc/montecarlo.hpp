#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace perc {

// Per-replicate detector outcome.  kUnresolved widens the interval, never
// the point estimate; kRejected marks a discarded realization (e.g. an
// empty color-field window).
enum class Outcome : std::uint8_t {
  kFalse = 0,
  kTrue = 1,
  kUnresolved = 2,
  kRejected = 3,
};

// Runs `work(replicate_index)` for indices [rep_lo, rep_hi) on up to
// `threads` workers and returns outcomes in replicate order.  Each replicate
// derives its own RngStream from its index, so the result is independent of
// the thread count and of scheduling; the reduction is a plain indexed
// store.
std::vector<Outcome> run_replicates(
    std::uint64_t rep_lo, std::uint64_t rep_hi, int threads,
    const std::function<Outcome(std::uint64_t)>& work);

struct Tally {
  std::uint64_t yes = 0;
  std::uint64_t no = 0;
  std::uint64_t unresolved = 0;
  std::uint64_t rejected = 0;
  std::uint64_t total() const { return yes + no + unresolved; }
};

Tally tally_outcomes(const std::vector<Outcome>& outcomes);

// FNV digest of the outcome bytes in replicate order; the replay contract
// compares these.
std::uint64_t digest_outcomes(const std::vector<Outcome>& outcomes);

}  // namespace perc
