#pragma once

#include <optional>
#include <string>
#include <vector>

namespace conelab {

enum class Act {
  Heaviside,
  Sigmoid,
  Tanh,
  Arctan,
  SoftSign,
  ISRU,
  SoftClip,
  SQNL,
  ReLU,
  LeakyReLU,
  SoftPlus,
  BentIdentity,
  SiLU,
  ISRLU,
  ELU,
  ToyLightning,
};

// Open interval on which the activation is exactly affine with slope != 0.
struct AffineSegment {
  double lo, hi;  // may be +-inf
  double slope;
  double intercept;
};

struct ConstSegment {
  double lo, hi;  // may be +-inf
  double value;
};

struct Limits {
  double neg, pos;
};

// Scalar activation together with the structural descriptors the
// constructions rely on: saturation limits, the shifted-difference limits
// (sigma(s) - sigma(s-1)), affine/constant segments, kink locations.
struct Activation {
  Act tag = Act::Tanh;
  double c = 1.0;  // Heaviside value at 0, ISRU/SoftClip/ISRLU/ELU shape, LeakyReLU slope

  static Activation make(Act tag);
  static Activation make(Act tag, double c);
  static Activation parse(const std::string& name, std::optional<double> c = std::nullopt);
  std::string name() const;

  double operator()(double s) const;
  // Right derivative at kinks; zero a.e. for Heaviside.
  double deriv(double s) const;
  double deriv2(double s) const;

  bool differentiable() const;
  bool twice_differentiable() const;

  // Finite distinct limits at +-inf ("sigmoid type").
  std::optional<Limits> saturation_limits() const;
  // Limits of sigma(s) - sigma(s-1) when finite and distinct ("ReLU type").
  std::optional<Limits> relu_type_limits() const;
  bool sigmoid_type() const { return saturation_limits().has_value(); }
  bool relu_type() const { return relu_type_limits().has_value(); }
  // lim_{g->inf} sigma(g s)/g = a*min(0,s) + b*max(0,s) with a != b
  // (positively homogeneous limit used by residual networks).
  std::optional<Limits> homogeneous_limits() const;

  std::optional<AffineSegment> affine_segment() const;
  std::optional<ConstSegment> constant_segment() const;

  // Points where the derivative jumps (kinks); used for gradient flags.
  std::vector<double> kinks() const;
  // Breakpoints between monotone pieces, for exact range evaluation.
  std::vector<double> monotone_breakpoints() const;
  // Exact (up to rounding) range of sigma over [lo, hi].
  std::pair<double, double> range_on(double lo, double hi) const;
};

}  // namespace conelab
