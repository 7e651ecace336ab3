#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace hardneg {

/// SplitMix64. Every draw is defined bit-for-bit, so seeded results match
/// across platforms and ports.
///
///   state += 0x9E3779B97F4A7C15
///   z = state
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   return z ^ (z >> 31)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  /// Uniform integer in [0, bound) by rejection on the top of the range.
  std::uint64_t below(std::uint64_t bound);

  /// Uniform in [lo, hi] inclusive.
  std::int64_t between(std::int64_t lo, std::int64_t hi);

  /// Uniform double in [0, 1) from the top 53 bits.
  double uniform();

  /// Fisher-Yates, iterating i = n-1 .. 1 and swapping with below(i + 1).
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

/// One SplitMix64 finalization step over `seed ^ (stream * golden)`; used to
/// give every stage / iteration / sample its own independent stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// FNV-1a 64 of a string, for deriving per-key streams.
std::uint64_t fnv1a(std::string_view s);

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream) {
  return derive_seed(seed, fnv1a(stream));
}

}  // namespace hardneg
