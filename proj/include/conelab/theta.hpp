#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "conelab/constructions.hpp"
#include "conelab/scheme.hpp"

namespace conelab {

struct ThetaSample {
  YVector y_d;
  double best_loss;
  double witness_loss;  // NaN when the scheme has no witness construction
  int starts_used;
};

struct ThetaEstimate {
  double heuristic = 0.0;  // max over samples of the best loss found (not certified)
  double cap = 1.0;        // 1 - 1/n for conic single-sample-fitting schemes, else 1
  std::vector<ThetaSample> samples;
};

struct ThetaOptions {
  int num_labels = 16;
  int num_starts = 8;
  int max_iters = 2000;
  double label_scale = 1.0;
  double witness_gamma = 1e6;
  std::uint64_t seed = 1;
};

// Certified analytic cap on the worst-case squared distance for unit labels:
// 1 - 1/n when the scheme can fit a single sample of arbitrary value (free-
// knot splines, networks under the saturation hypotheses, the conic toy
// scheme), 1 otherwise.
double theta_cap(const Scheme& scheme, int n);

// Multistart local descent over sampled unit-sphere labels. The reported
// maximum upper-bounds nothing and lower-bounds nothing with certainty; only
// the cap is proof-backed. Every label's warm start is the expressiveness
// witness when available, so best_loss <= witness_loss always.
ThetaEstimate theta_heuristic(const Scheme& scheme, const Dataset& data, const ThetaOptions& opts);

// sqrt(theta/(1-theta)) * base_norm; 0 when base_norm = 0. theta in [0,1).
double s_threshold(double theta, double base_norm);

// C * sqrt((dimY - 1) / (2 dimY (theta - theta^2))); theta in (0,1).
double instability_scale(double theta, int dim_y, double C);

}  // namespace conelab
