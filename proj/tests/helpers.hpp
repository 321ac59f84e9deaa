#pragma once

#include <vector>

#include "conelab/constructions.hpp"
#include "conelab/scheme.hpp"

namespace testutil {

using namespace conelab;

inline YVector make_y(int n, std::vector<double> flat) {
  return YVector(n, 1, std::move(flat));
}

inline Scheme tanh_net(int dx, std::vector<int> widths) {
  std::vector<Activation> acts(widths.size(), Activation::make(Act::Tanh));
  return Scheme::feedforward(dx, 1, std::move(widths), std::move(acts));
}

inline Scheme sigmoid_net(int dx, std::vector<int> widths) {
  std::vector<Activation> acts(widths.size(), Activation::make(Act::Sigmoid));
  return Scheme::feedforward(dx, 1, std::move(widths), std::move(acts));
}

inline Scheme heaviside_net(int dx, int dy, std::vector<int> widths) {
  std::vector<Activation> acts(widths.size(), Activation::make(Act::Heaviside));
  return Scheme::feedforward(dx, dy, std::move(widths), std::move(acts));
}

inline Scheme relu_net(int dx, std::vector<int> widths) {
  std::vector<Activation> acts(widths.size(), Activation::make(Act::ReLU));
  return Scheme::feedforward(dx, 1, std::move(widths), std::move(acts));
}

inline Scheme leaky_net(int dx, std::vector<int> widths, double c = 0.01) {
  std::vector<Activation> acts(widths.size(), Activation::make(Act::LeakyReLU, c));
  return Scheme::feedforward(dx, 1, std::move(widths), std::move(acts));
}

// max relative component error between two gradients, ignoring entries where
// both are below `floor`
inline double grad_rel_err(const std::vector<double>& a, const std::vector<double>& b,
                           double floor = 1e-7) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max(std::abs(a[i]), std::abs(b[i]));
    if (scale < floor) continue;
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

}  // namespace testutil
