#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "conelab/scheme.hpp"

namespace conelab {

// ---------------------------------------------------------------------------
// Separation of one sample from the rest by a two-row affine map.

struct SeparatingHyperplane {
  std::vector<double> direction;  // a, shared by both rows
  std::vector<double> A;          // 2 x dx, row-major
  double b[2];
  double margin;  // min_k |a^T (x_k - x_l)|
  int l;          // separated sample (0-based)
};

// Rows satisfy A x_l + b in (0,inf) x (-inf,0) and A x_k + b in
// (-inf,0)^2 u (0,inf)^2 for k != l. Direction sampled on the sphere,
// resampled until the margin clears 1e-9 * scale; eps = margin / 2.
SeparatingHyperplane separating_hyperplane(const Dataset& data, int l, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Exact single-sample fits.

// Heaviside network parameters with eval_batch = y_l on block l, zero
// elsewhere (exact). Requires every activation Heaviside and w1 >= 2.
ParamVector heaviside_unit_fit(const Scheme& scheme, const Dataset& data,
                               const std::vector<double>& y_l, int l, std::uint64_t seed);

enum class SaturationOrder { BottomUp, TopDown, Uniform };

struct SaturatedFit {
  ParamVector alpha;
  double residual;        // || eval_batch - y_l e_l ||_Y at the requested gamma
  double gamma;
  SaturationOrder order;
};

// Approximate single-sample fit for sigmoid/ReLU-type stacks: the Heaviside
// construction is emulated by scaled layers, ReLU-type layers through the
// paired-unit difference sigma(s) - sigma(s-1). The per-layer scale factors
// grow geometrically toward the bottom (BottomUp), toward the top (TopDown),
// or not at all (Uniform).
SaturatedFit saturated_fit(const Scheme& scheme, const Dataset& data,
                           const std::vector<double>& y_l, int l, double gamma,
                           std::uint64_t seed, SaturationOrder order = SaturationOrder::BottomUp);

// Checks the sigmoid/ReLU-type split (Heaviside counts as sigmoid type) and
// the width requirements; returns a reason when not satisfiable.
std::optional<std::string> saturated_fit_obstruction(const Scheme& scheme);

// ---------------------------------------------------------------------------
// Expressiveness witness: a parameter whose loss strictly beats ||y_d||^2.

struct Witness {
  ParamVector alpha;
  double witness_loss;
  int block;  // sample index used for the single-sample fit
  std::string route;
};

struct WitnessOptions {
  double gamma = 1e6;
  SaturationOrder order = SaturationOrder::BottomUp;
  std::uint64_t seed = 1;
};

Witness expressiveness_witness(const Scheme& scheme, const Dataset& data, const YVector& y_d,
                               const WitnessOptions& opts = {});

// ---------------------------------------------------------------------------
// Subspace embeddings: parameter points whose neighborhoods map into a
// proper subspace of Y.

struct EmbeddingResult {
  ParamVector alpha_bar;
  double neighborhood_radius;  // certified inf-norm radius in parameter space
  SubspaceBasis subspace;
  std::string route;           // "affine", "constant", "freeknot_affine"
};

// Network with activations that are affine on open segments: alpha_bar with
// eval_batch = {A x_k + b} exactly; radius certified by interval propagation.
// Requires min(dx, dy) <= min(widths).
EmbeddingResult affine_embed(const Scheme& scheme, const Dataset& data,
                             const std::vector<double>& A, const std::vector<double>& b);

// Activation constant on an open segment at layer j (0-based hidden layer
// index resolved internally): embeds the constant-blocks subspace.
EmbeddingResult constant_embed(const Scheme& scheme, const Dataset& data,
                               const std::vector<double>& b);

// Free-knot spline with all samples inside the first knot interval; V is the
// degree-one fit space.
EmbeddingResult freeknot_affine_embed(const Scheme& scheme, const Dataset& data, double a,
                                      double b);

// True when the certified ball keeps every sample's activation inside its
// segment (used by tests; certification is re-runnable).
bool embedding_ball_certified(const Scheme& scheme, const Dataset& data,
                              const ParamVector& alpha_bar, double radius);

// ---------------------------------------------------------------------------
// Label constructions.

struct BadLabel {
  YVector y_d;
  double s;
  YVector v;     // unit direction orthogonal to the embedded subspace
  YVector base;  // eval_batch(alpha_bar)
  double theta_cap;
  double threshold;  // sqrt(theta/(1-theta)) * ||base||
};

// y_d = base + s v with s = multiplier * threshold (s = multiplier when the
// base vanishes). Requires multiplier > 1 and the subspace proper.
BadLabel bad_label(const Scheme& scheme, const Dataset& data, const EmbeddingResult& embedding,
                   double s_multiplier, double theta_cap, std::uint64_t seed);

// Orthonormal basis of the vectors {P(x_k)}_k for all vector-valued
// polynomials P of degree <= degree (1 or 2).
SubspaceBasis poly_space_basis(const Dataset& data, int degree, int dy);

// ---------------------------------------------------------------------------
// Regularized spurious construction.

struct RegSpuriousCertificate {
  ParamVector alpha_bar;
  YVector y_d;
  double nu;
  double p;
  double C;
  ParamVector witness;
  double loss_at_bar;      // plain loss at alpha_bar under y_d
  double witness_reg_gap;  // reg value at alpha_bar minus reg value at witness
  double s;
  YVector v;
  double growth_radius;    // suggested radius for the quadratic-growth check
  std::uint64_t seed;
};

// Point (beta, 0) with zero first weight matrix, label Psi(alpha_bar) + s v
// with v orthogonal to the degree-two polynomial space, s grown until the
// witness undercuts the value at alpha_bar by C + 2, nu = 0.5 / g(witness).
// Requires 0.5*(dx+2)*(dx+1) < n and twice-differentiable activations.
RegSpuriousCertificate reg_spurious_construct(const Scheme& scheme, const Dataset& data,
                                              const ParamVector& alpha_bar, double p, double C,
                                              std::uint64_t seed);

}  // namespace conelab
