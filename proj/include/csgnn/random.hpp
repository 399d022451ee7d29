#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "csgnn/matrix.hpp"

namespace csgnn {

/// SplitMix64 stream. Cheap to fork: each parameter tensor gets its own
/// stream derived from (seed, stream id).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  SplitMix64(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next();
  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  /// Uniform integer in [0, n) by multiply-shift.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal by Box-Muller (one draw per call, no caching).
  double normal();

 private:
  std::uint64_t state_;
};

/// Fisher-Yates shuffle driven by the given stream.
template <typename T>
void shuffle(std::vector<T>& v, SplitMix64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

/// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] with fan_in = rows.
Matrix init_uniform(std::size_t rows, std::size_t cols, std::uint64_t seed, std::uint64_t stream);

}  // namespace csgnn
