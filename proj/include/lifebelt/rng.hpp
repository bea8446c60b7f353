#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace lifebelt {

// SplitMix64 finaliser; used both as the stream hash and as the generator step.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives a substream key from a base seed and a list of counters
/// (e.g. {purpose, time, particle}). Equal inputs give equal keys, so every
/// particle draws from the same stream no matter which thread evaluates it.
constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::initializer_list<std::uint64_t> counters) noexcept {
  std::uint64_t h = mix64(seed + 0x9e3779b97f4a7c15ULL);
  for (auto c : counters) h = mix64(h ^ (c + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
  return h;
}

/// Small counter-seeded engine satisfying UniformRandomBitGenerator, so it
/// plugs into the <random> distributions. Construction is a single store,
/// which matters because the filters build one per particle per step.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr Rng(std::uint64_t seed) noexcept : state_(seed) {}
  constexpr Rng(std::uint64_t seed, std::initializer_list<std::uint64_t> counters) noexcept
      : state_(derive_seed(seed, counters)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  /// Uniform double in [0, 1).
  constexpr double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

// Purpose tags for derive_seed, keeping streams of different roles disjoint.
namespace stream {
inline constexpr std::uint64_t init = 1;
inline constexpr std::uint64_t resample = 2;
inline constexpr std::uint64_t propagate = 3;
inline constexpr std::uint64_t apf_chunk = 4;
inline constexpr std::uint64_t mcmc_proposal = 5;
inline constexpr std::uint64_t mcmc_accept = 6;
inline constexpr std::uint64_t mcmc_filter = 7;
inline constexpr std::uint64_t replicate = 8;
}  // namespace stream

}  // namespace lifebelt
