#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "sclab/mat.hpp"

namespace sclab {

// Seeded generator. The integer stream is the standard-mandated mt19937_64
// sequence; uniform/normal transforms are implemented here rather than via
// std distributions, whose output is implementation-defined and would break
// the same-seed-same-run contract across toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), engine_(seed) {}

  uint64_t seed() const { return seed_; }

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Marsaglia polar method; one spare cached between calls.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double v1, v2, s;
    do {
      v1 = 2.0 * uniform() - 1.0;
      v2 = 2.0 * uniform() - 1.0;
      s = v1 * v1 + v2 * v2;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v2 * f;
    has_spare_ = true;
    return v1 * f;
  }

  // Uniform integer in [0, n). Modulo bias is negligible for n << 2^64.
  int randint(int n) { return int(next_u64() % uint64_t(n)); }

  // Fisher-Yates with our own bounded draw (std::shuffle's algorithm is
  // unspecified by the standard).
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int i = int(v.size()) - 1; i > 0; --i) {
      std::swap(v[std::size_t(i)], v[std::size_t(randint(i + 1))]);
    }
  }

  Matrix gaussian(int rows, int cols, float mean, float stddev) {
    Matrix m(rows, cols);
    for (auto& x : m.data) x = mean + stddev * float(normal());
    return m;
  }

  Matrix uniform_mat(int rows, int cols, float lo, float hi) {
    Matrix m(rows, cols);
    for (auto& x : m.data) x = float(uniform(double(lo), double(hi)));
    return m;
  }

  // Derives an independent generator for a named substream. Pure function of
  // (seed, stream); drawing from the parent does not affect the child.
  Rng derive(uint64_t stream) const {
    return Rng(splitmix64(seed_ ^ (0x9e3779b97f4a7c15ULL * (stream + 1))));
  }

  static uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

 private:
  uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sclab
