#pragma once

#include <optional>
#include <string>
#include <vector>

#include "conelab/activation.hpp"
#include "conelab/dataset.hpp"
#include "conelab/yspace.hpp"

namespace conelab {

enum class SchemeKind {
  Linear,            // psi(a, x) = a1*x + a2            (dx = dy = 1, m = 2)
  ToyLightning,      // psi(a, x) = sigma(a1*x + a2)     (dx = dy = 1, m = 2)
  ToyLightningConic, // psi(a, x) = a3*sigma(a1*x + a2)  (dx = dy = 1, m = 3)
  FreeKnotSpline,    // piecewise-linear interpolant with p movable knots
  FeedForwardNN,
  ResNet,
};

using ParamVector = std::vector<double>;

struct GradResult {
  std::vector<double> grad;
  bool smooth = true;            // no pre-activation within kink_tol of a kink
  std::vector<int> kink_layers;  // layers (1-based; 0 = spline knot) that were hit
};

// Immutable description of an approximation family instance. Parameters are
// carried separately as flat vectors; the flat order for networks is
// (A1 row-major, b1, A2, b2, ..., b_{L+1}) and (beta, gamma) for splines.
struct Scheme {
  SchemeKind kind = SchemeKind::FeedForwardNN;
  int dx = 1;
  int dy = 1;
  int knots = 0;                          // FreeKnotSpline: p >= 3
  std::vector<int> widths;                // hidden widths w1..wL
  std::vector<Activation> activations;    // one per hidden layer
  std::vector<std::vector<double>> skips; // ResNet: E_i (w_i x w_{i-1}, row-major)

  static Scheme linear();
  static Scheme toy_lightning();
  static Scheme toy_lightning_conic();
  static Scheme free_knot_spline(int p);
  static Scheme feedforward(int dx, int dy, std::vector<int> widths,
                            std::vector<Activation> activations);
  // skips default to identity-padded matrices
  static Scheme resnet(int dx, int dy, std::vector<int> widths,
                       std::vector<Activation> activations,
                       std::vector<std::vector<double>> skips = {});

  int depth() const { return static_cast<int>(widths.size()); }
  int width(int i) const;  // w_0 = dx, ..., w_{L+1} = dy
  int param_count() const;

  // offsets into the flat vector
  int offset_A(int layer) const;  // layer in 1..L+1
  int offset_b(int layer) const;
  int offset_beta() const { return 0; }
  int offset_gamma() const { return knots; }

  bool is_network() const { return kind == SchemeKind::FeedForwardNN || kind == SchemeKind::ResNet; }

  // Throws if alpha is outside the admissible set (wrong length, or spline
  // knots out of order).
  void check_domain(const ParamVector& alpha) const;
  bool in_domain(const ParamVector& alpha) const;

  // alpha' with eval_batch(alpha') = s * eval_batch(alpha), exact by the
  // affine top layer / top coefficients. Not available for Linear/ToyLightning.
  ParamVector scale_output(const ParamVector& alpha, double s) const;

  std::string kind_name() const;
};

std::vector<double> eval(const Scheme& scheme, const ParamVector& alpha,
                         std::span<const double> x);
YVector eval_batch(const Scheme& scheme, const ParamVector& alpha, const Dataset& data);
double loss(const Scheme& scheme, const ParamVector& alpha, const Dataset& data,
            const YVector& y_d);

inline constexpr double kKinkTol = 1e-9;

// Reverse-mode gradient of the loss. Kink-family activations use the right
// derivative; any pre-activation within kKinkTol of a kink clears `smooth`.
GradResult grad_loss(const Scheme& scheme, const ParamVector& alpha, const Dataset& data,
                     const YVector& y_d);

// Central differences, step h*(1+|alpha_i|) per coordinate.
std::vector<double> fd_grad(const Scheme& scheme, const ParamVector& alpha, const Dataset& data,
                            const YVector& y_d, double h = 1e-6);

// Analytic directional derivative d/dt eval_batch(alpha + t h) at t = 0
// (forward-mode). Requires differentiable activations at the visited points.
YVector jvp(const Scheme& scheme, const ParamVector& alpha, const Dataset& data,
            const std::vector<double>& h);

}  // namespace conelab
