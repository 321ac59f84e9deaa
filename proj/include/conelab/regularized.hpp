#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "conelab/constructions.hpp"
#include "conelab/scheme.hpp"

namespace conelab {

// Regularized training problem: loss + nu * ||alpha - reference||_p^p.
struct RegProblem {
  Scheme scheme;
  Dataset dataset;
  YVector y_d;
  double nu = 0.0;
  double p = 2.0;
  ParamVector reference;  // empty = origin

  RegProblem(Scheme s, Dataset d, YVector y, double nu_, double p_,
             ParamVector ref = {});
};

double reg_loss(const RegProblem& prob, const ParamVector& alpha);

struct RegGrad {
  std::vector<double> grad;
  bool smooth;                     // p = 1 only: false when a coordinate sits at the reference
  std::vector<int> at_reference;   // offending coordinates for p = 1
};

// p > 1 is smooth; p = 1 uses the sign subgradient away from zeros and flags
// coordinates at the reference.
RegGrad reg_grad(const RegProblem& prob, const ParamVector& alpha);

struct RegCertificateReport {
  double fitted_epsilon;   // min sampled (reg(alpha) - reg(alpha_bar)) / ||alpha-alpha_bar||^2
  bool epsilon_positive;
  double gap;              // reg value at alpha_bar minus reg value at the witness
  bool gap_pass;           // gap >= C
  bool radius_boundary;    // requested radius exceeded the certificate's radius
  int samples;
};

RegCertificateReport verify_reg_certificate(const RegProblem& prob,
                                            const RegSpuriousCertificate& cert, double radius,
                                            int samples, std::uint64_t seed);

struct KillProbeStep {
  double s;
  double best_found;     // multistart minimum of the regularized objective
  double value_at_zero;  // s^2 (loss of alpha = 0) plus zero regularizer
  bool zero_optimal;     // no start beat the origin beyond tolerance
};

struct KillProbeReport {
  std::vector<KillProbeStep> steps;
  double empirical_threshold;  // largest s with zero_optimal
  double predicted_threshold;  // min(nu c1, sqrt(nu c2), sqrt(nu c1) r) with measured r
  double measured_r;           // radius of validity of the second-order Taylor bound
};

// Labels y^s = s v with v orthogonal to the degree-two polynomial space;
// multistart minimization probes where alpha = 0 stops being globally
// optimal. Heuristic, not certified. Requires Psi(0) = 0.
KillProbeReport approx_kill_probe(const Scheme& scheme, const Dataset& data, double nu, double p,
                                  const std::vector<double>& s_grid, int starts,
                                  std::uint64_t seed);

struct TaylorResiduals {
  double r1;  // orthogonal residual of Psi + J h against the degree-1 space
  double r2;  // same for the second-order expansion against the degree-2 space
  double scale;
};

// At alpha_bar = (beta, 0): first-order images stay in the degree-1 space,
// second-order images in the degree-2 space. J analytic; the quadratic term
// estimated by a normalized central difference of directional derivatives.
TaylorResiduals taylor_subspace_check(const Scheme& scheme, const Dataset& data,
                                      const ParamVector& alpha_bar, int num_dirs,
                                      double h_norm, std::uint64_t seed);

struct InstabilityTraceStep {
  double s;
  double F;             // multistart infimum of the regularized objective
  double value_at_bar;  // value of the objective at alpha_bar
};

struct InstabilityDemo {
  bool demo_found = false;
  double nu = 0.0;
  double s0 = 0.0;                  // crossing located by bisection
  YVector y_d;                      // label at the crossing
  std::vector<InstabilityTraceStep> trace;
  // (a) for s slightly above s0: better points away from alpha_bar
  std::vector<double> above_s;
  std::vector<double> above_distance;   // ||alpha_s - alpha_bar||_inf
  std::vector<double> above_improvement;
  // (b) their objective values under the s0 label approach the value at alpha_bar
  std::vector<double> family_values;
  double bar_value_at_s0 = 0.0;
};

// Traces F(s) = inf reg-objective along y^s = Psi(alpha_bar) + s v, locates
// the crossing with the value at alpha_bar, and exhibits minimizers that
// avoid a neighborhood of alpha_bar just above the crossing.
InstabilityDemo reg_instability_demo(const Scheme& scheme, const Dataset& data,
                                     const ParamVector& alpha_bar, double p, std::uint64_t seed);

}  // namespace conelab
