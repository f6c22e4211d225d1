#pragma once

#include <cstdint>
#include <random>

namespace sirgraph {

/// SplitMix64 finalizer. A bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Child seed for the pair (a, b) under a master seed. For a fixed master the
/// map is injective over a, b < 2^32 since it is a composition of bijections.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint32_t a,
                                    std::uint32_t b) noexcept {
  const std::uint64_t key = (static_cast<std::uint64_t>(a) << 32) | b;
  return mix64(mix64(key) ^ mix64(master ^ 0x5bd1e995ULL));
}

/// Seeded random stream. Uniform doubles are built from the top 53 bits of
/// the engine output so sequences are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). Requires n > 0.
  std::uint64_t below(std::uint64_t n) {
    // Lemire-style rejection keeps the draw unbiased.
    const std::uint64_t limit = (~std::uint64_t{0} - n + 1) % n;
    std::uint64_t x = engine_();
    while (x < limit) x = engine_();
    return x % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Fisher-Yates shuffle driven by Rng::below, portable unlike std::shuffle.
template <class Range>
void shuffle(Range& range, Rng& rng) {
  const auto n = static_cast<std::uint64_t>(std::size(range));
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = rng.below(i);
    using std::swap;
    swap(range[i - 1], range[j]);
  }
}

}  // namespace sirgraph
