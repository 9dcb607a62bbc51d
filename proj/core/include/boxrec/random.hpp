#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace boxrec {

// Portable random source. The standard distributions are implementation
// defined, so every draw used by the library is derived here directly from
// the 64-bit Mersenne Twister output; results are identical across standard
// libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t index(std::uint64_t n);

  /// Standard normal via Box-Muller (no cached second value).
  double normal();

  /// Draws an index with probability proportional to weights[i]. Returns
  /// weights.size() when every weight is zero.
  std::size_t weighted(std::span<const double> weights);

  template <class It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const auto j = index(i);
      std::iter_swap(first + (i - 1), first + j);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Mixes a base seed with a stream id so independent consumers do not share draws.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace boxrec
