#pragma once

#include <functional>
#include <vector>

#include "conelab/scheme.hpp"

namespace conelab {

struct Objective {
  std::function<double(const ParamVector&)> value;
  std::function<std::vector<double>(const ParamVector&)> grad;
  std::function<bool(const ParamVector&)> feasible;  // optional; default = always
};

struct DescentOptions {
  int max_iters = 2000;
  double grad_tol = 1e-8;
};

struct DescentResult {
  ParamVector alpha;
  double value = 0.0;
  int iters = 0;
  bool converged = false;
};

// Fixed-step gradient descent with Armijo backtracking. Infeasible trial
// points count as failed line-search steps. Deterministic.
DescentResult armijo_descent(const Objective& objective, ParamVector start,
                             const DescentOptions& opts = {});

// Plain-loss objective; uses the analytic gradient when the scheme's
// activations are differentiable, central differences otherwise.
Objective loss_objective(const Scheme& scheme, const Dataset& data, const YVector& y_d);

bool scheme_grad_is_smooth(const Scheme& scheme);

}  // namespace conelab
