#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace cabin {

/// SplitMix64 finalizer, used to derive independent stream seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(seed);
  for (auto p : path) s = mix64(s ^ mix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

/// Seeded stream over mt19937_64. The real-valued draws are computed here
/// rather than through <random> distributions so that traces are identical
/// across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Pareto with the given shape and mean (shape > 1).
  double pareto(double shape, double mean) {
    const double scale = mean * (shape - 1.0) / shape;
    return scale / std::pow(1.0 - uniform(), 1.0 / shape);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cabin
