#ifndef DIVW_RNG_HPP
#define DIVW_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace divw {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Derives an independent substream key from a seed and a path of
/// coordinates such as (replication, cohort, snp).
constexpr std::uint64_t stream_key(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t key = mix64(seed + kGolden);
  for (std::uint64_t coord : path) key = mix64(key ^ mix64(coord + kGolden));
  return key;
}

/// SplitMix64 engine; satisfies UniformRandomBitGenerator so it plugs into
/// the <random> distributions. word(k) gives random access to the k-th
/// output, which is what lets genotype columns be regenerated on demand.
class SplitMix64 {
public:
  using result_type = std::uint64_t;

  explicit constexpr SplitMix64(std::uint64_t key) noexcept : state_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    state_ += kGolden;
    return mix64(state_);
  }

  static constexpr result_type word(std::uint64_t key, std::uint64_t k) noexcept {
    return mix64(key + (k + 1) * kGolden);
  }

private:
  std::uint64_t state_;
};

}  // namespace divw

#endif
