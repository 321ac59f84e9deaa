#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "conelab/constructions.hpp"
#include "conelab/scheme.hpp"

namespace conelab {

enum class CertificateKind { SpuriousMin, SaddleOrSpuriousPair, RegularizedSpurious };

struct GrowthRow {
  double h_norm;  // inf-norm of the perturbation
  double lhs;     // loss(alpha) - loss(alpha_bar)
  double rhs;     // ||Psi(alpha) - Psi(alpha_bar)||^2
  bool inside_rho;
  bool inequality_pass;              // lhs >= rhs - 1e-9
  std::optional<bool> equality_pass; // |lhs - rhs| <= 1e-9 (1 + |lhs|), inside rho only
};

struct GrowthReport {
  std::vector<GrowthRow> rows;
  bool radius_exceeds_rho = false;
  bool all_pass = true;
};

struct SpuriousCertificate {
  CertificateKind kind = CertificateKind::SpuriousMin;
  Scheme scheme;
  Dataset dataset;
  ParamVector alpha_bar;
  YVector y_d;
  double loss_at_bar = 0.0;
  ParamVector witness;
  double witness_loss = 0.0;
  double gap = 0.0;  // loss_at_bar - witness_loss
  std::optional<double> grad_norm;
  GrowthReport growth;
  double s = 0.0;
  YVector v;
  double theta_used = 0.0;
  double rho = 0.0;  // certified embedding radius (0 when none)
  std::string provenance;
  std::uint64_t seed = 0;
};

struct StationarityResult {
  double grad_norm;
  bool pass;
  bool kink_clear;
};

StationarityResult check_stationarity(const Scheme& scheme, const ParamVector& alpha,
                                      const Dataset& data, const YVector& y_d, double tol);

// Samples alpha_bar + h with ||h||_inf <= radius; inside the certified rho the
// growth identity must hold with relative slack 1e-9, outside only the
// inequality is asserted.
GrowthReport check_local_growth(const Scheme& scheme, const SpuriousCertificate& cert,
                                double radius, int num_samples, std::uint64_t seed);

struct SpuriousCheck {
  bool pass;
  double recomputed_loss_at_bar;
  double recomputed_witness_loss;
  double margin;  // loss_at_bar - witness_loss - min_gap
};

// Recomputes both losses from scratch; pass iff witness + min_gap <= bar with
// min_gap = 1e-9 (1 + loss_at_bar) by default.
SpuriousCheck check_spurious(const SpuriousCertificate& cert,
                             std::optional<double> min_gap = std::nullopt);

enum class Classification { LocalMinLike, SaddleLike, MaxLike, Flat, Inconclusive };

std::string classification_name(Classification c);

struct PointClassification {
  Classification cls = Classification::Inconclusive;
  double grad_norm = 0.0;
  std::optional<double> min_eig;
  std::optional<double> max_eig;
  double min_sampled_diff = 0.0;
  double max_sampled_diff = 0.0;
  double witness_gap = 0.0;  // loss(alpha_bar) - witness loss, when a witness exists
};

struct PairClassification {
  PointClassification plus;
  PointClassification minus;
  bool pair_ok = false;  // at least one branch neither max-like nor globally optimal
};

// Classifies alpha_bar for the labels base +- s v by sampled loss differences
// on a sphere of radius r_probe plus finite-difference Hessian eigenvalue
// signs (when the scheme is smooth).
PairClassification classify_pair(const Scheme& scheme, const ParamVector& alpha_bar,
                                 const Dataset& data, const YVector& base, const YVector& v,
                                 double s, std::uint64_t seed,
                                 std::optional<double> rho = std::nullopt);

// End-to-end constructor: embedding -> bad label -> witness -> growth report.
struct SpuriousBuildOptions {
  double s_multiplier = 2.0;
  std::optional<double> theta = std::nullopt;  // default: certified cap 1 - 1/n
  std::optional<double> target_gap = std::nullopt;  // grow s until gap >= C
  int growth_samples = 200;
  std::uint64_t seed = 1;
  double witness_gamma = 1e6;
};

SpuriousCertificate build_spurious_certificate(const Scheme& scheme, const Dataset& data,
                                               const EmbeddingResult& embedding,
                                               const SpuriousBuildOptions& opts);

// gamma^2-homogeneity: scales (y_d, top layer) by gamma and reports the
// relative errors of loss_at_bar, witness_loss, and gap.
struct ScalingCheck {
  double rel_err_loss_at_bar;
  double rel_err_witness_loss;
  double rel_err_gap;
  bool verdicts_preserved;
};

ScalingCheck certificate_scaling_check(const SpuriousCertificate& cert, double gamma);

}  // namespace conelab
