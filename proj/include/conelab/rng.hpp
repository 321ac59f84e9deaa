#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace conelab {

// Seeded generator with hand-rolled double conversions so that streams are
// reproducible bit-for-bit on any platform with IEEE doubles. Every
// randomized operation in the library takes an explicit seed and derives
// per-item substreams with split(), which keeps results independent of
// thread count and evaluation order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t u64() { return engine_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller, two fresh uniforms per draw (no cached spare).
  double normal() {
    double u1 = (static_cast<double>(u64() >> 11) + 1.0) * 0x1.0p-53;
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  std::vector<double> normal_vec(std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = normal();
    return v;
  }

  // Uniform on the unit sphere of R^n (Euclidean norm).
  std::vector<double> unit_sphere(std::size_t n) {
    while (true) {
      std::vector<double> v = normal_vec(n);
      double s = 0.0;
      for (double x : v) s += x * x;
      s = std::sqrt(s);
      if (s > 1e-30) {
        for (double& x : v) x /= s;
        return v;
      }
    }
  }

 private:
  std::mt19937_64 engine_;
};

// splitmix64 finalizer; used to derive independent substream seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline Rng split(std::uint64_t seed, std::uint64_t stream) {
  return Rng(mix_seed(seed, stream));
}

}  // namespace conelab
