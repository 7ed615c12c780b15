#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace astm {

/// SplitMix64 generator. Satisfies UniformRandomBitGenerator, so it plugs
/// into the <random> distributions. Used because substreams are derived by
/// hashing a counter path, and seeding is a single 64-bit store.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t state) : state_(state) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Deterministic substream for a counter path below a root seed. Distinct
/// paths give statistically independent streams; equal paths give equal ones.
inline SplitMix64 substream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = SplitMix64::mix(seed ^ 0x6a09e667f3bcc909ULL);
  for (std::uint64_t p : path) {
    h = SplitMix64::mix(h ^ SplitMix64::mix(p + 0x9e3779b97f4a7c15ULL));
  }
  return SplitMix64(h);
}

/// Identifies one inner trial of one outer iteration of one run.
struct TrialStream {
  std::uint64_t seed = 0;
  std::uint64_t outer = 0;
  std::uint64_t trial = 0;

  SplitMix64 for_sample(std::uint64_t index) const {
    return substream(seed, {outer, trial, index});
  }
};

}  // namespace astm
