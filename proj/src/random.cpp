#include "csgnn/random.hpp"

#include <cmath>

namespace csgnn {

SplitMix64::SplitMix64(std::uint64_t seed, std::uint64_t stream) : state_(seed) {
  // Decorrelate streams by running the stream id through the mixer once.
  SplitMix64 mix(stream ^ 0x9E3779B97F4A7C15ULL);
  state_ ^= mix.next();
}

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::uint64_t SplitMix64::below(std::uint64_t n) {
  __extension__ using u128 = unsigned __int128;
  return static_cast<std::uint64_t>((static_cast<u128>(next()) * n) >> 64);
}

double SplitMix64::normal() {
  const double u1 = 1.0 - uniform01();  // (0, 1]
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Matrix init_uniform(std::size_t rows, std::size_t cols, std::uint64_t seed, std::uint64_t stream) {
  SplitMix64 rng(seed, stream);
  const double bound = rows > 0 ? 1.0 / std::sqrt(static_cast<double>(rows)) : 0.0;
  Matrix m(rows, cols);
  for (double& x : m.values()) x = rng.uniform(-bound, bound);
  return m;
}

}  // namespace csgnn
