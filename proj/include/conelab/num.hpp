#pragma once

#include <cmath>
#include <span>

namespace conelab {

inline double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double linf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// sum_i |v_i|^p (the regularizer g for p-norms)
inline double lp_power_sum(std::span<const double> v, double p) {
  if (p == 2.0) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
  }
  if (p == 1.0) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
  }
  double s = 0.0;
  for (double x : v) s += std::pow(std::abs(x), p);
  return s;
}

}  // namespace conelab
