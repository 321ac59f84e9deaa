#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "conelab/rng.hpp"
#include "conelab/yspace.hpp"

namespace conelab {

// Training inputs x_d (pairwise distinct) plus optional labels.
struct Dataset {
  int n = 0;
  int dx = 0;
  std::vector<double> xs;  // n * dx, row-major
  std::optional<YVector> labels;

  std::span<const double> x(int k) const {
    return {xs.data() + static_cast<std::size_t>(k) * dx, static_cast<std::size_t>(dx)};
  }

  static Dataset create(int n, int dx, std::vector<double> xs,
                        std::optional<YVector> labels = std::nullopt) {
    if (n < 2) throw std::invalid_argument("dataset: need n >= 2");
    if (dx < 1) throw std::invalid_argument("dataset: need dx >= 1");
    if (static_cast<int>(xs.size()) != n * dx) throw std::invalid_argument("dataset: xs size mismatch");
    Dataset d{n, dx, std::move(xs), std::move(labels)};
    for (int j = 0; j < n; ++j) {
      for (int k = j + 1; k < n; ++k) {
        double gap = 0.0;
        for (int i = 0; i < dx; ++i) gap = std::max(gap, std::abs(d.x(j)[i] - d.x(k)[i]));
        if (gap == 0.0) throw std::invalid_argument("dataset: inputs must be pairwise distinct");
      }
    }
    return d;
  }

  // 1-d helpers (free-knot splines and the toy scheme assume ascending inputs)
  bool ascending_1d() const {
    if (dx != 1) return false;
    for (int k = 1; k < n; ++k) {
      if (!(xs[static_cast<std::size_t>(k)] > xs[static_cast<std::size_t>(k) - 1])) return false;
    }
    return true;
  }

  double min_gap_1d() const {
    if (dx != 1) throw std::logic_error("min_gap_1d: requires dx == 1");
    std::vector<double> s = xs;
    std::sort(s.begin(), s.end());
    double g = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < s.size(); ++k) g = std::min(g, s[k] - s[k - 1]);
    return g;
  }
};

// Evenly spread points on [-1,1] with deterministic jitter; ascending,
// pairwise distinct by construction.
inline Dataset random_dataset_1d(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> xs(static_cast<std::size_t>(n));
  const double h = 2.0 / (n - 1);
  for (int k = 0; k < n; ++k) {
    xs[static_cast<std::size_t>(k)] = -1.0 + h * k + 0.3 * h * (rng.uniform() - 0.5);
  }
  std::sort(xs.begin(), xs.end());
  return Dataset::create(n, 1, std::move(xs));
}

inline Dataset random_dataset(int n, int dx, std::uint64_t seed) {
  if (dx == 1) return random_dataset_1d(n, seed);
  Rng rng(seed);
  std::vector<double> xs(static_cast<std::size_t>(n) * dx);
  for (auto& v : xs) v = rng.uniform(-1.0, 1.0);
  return Dataset::create(n, dx, std::move(xs));
}

inline YVector random_unit_label(int n, int dy, Rng& rng) {
  YVector y(n, dy, rng.normal_vec(static_cast<std::size_t>(n) * dy));
  const double nm = norm(y);
  y *= 1.0 / nm;
  return y;
}

}  // namespace conelab
