#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "normsmooth/types.hpp"

namespace normsmooth {

// Portable deterministic RNG: mt19937_64 (bit-exact by the standard) with
// hand-rolled output transforms, since the stdlib distribution classes are
// implementation-defined. Uniforms take the top 53 bits; normals use the
// Marsaglia polar method.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static const char* algorithm() { return "mt19937_64-polar"; }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  /// Uniform integer in [0, n).
  Index uniform_index(Index n) {
    return static_cast<Index>(uniform() * static_cast<double>(n)) % n;
  }

  Vector normal_vector(Index n) {
    Vector out(n);
    for (Index i = 0; i < n; ++i) out[i] = normal();
    return out;
  }

  /// Fisher-Yates shuffle driven by uniform_index.
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (Index i = static_cast<Index>(values.size()) - 1; i > 0; --i) {
      const Index j = uniform_index(i + 1);
      std::swap(values[i], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace normsmooth
