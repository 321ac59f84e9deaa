#include "conelab/optim.hpp"

#include <cmath>

#include "conelab/num.hpp"

namespace conelab {

DescentResult armijo_descent(const Objective& objective, ParamVector start,
                             const DescentOptions& opts) {
  DescentResult res;
  res.alpha = std::move(start);
  res.value = objective.value(res.alpha);
  double step = 1.0;
  auto feasible = [&](const ParamVector& a) { return !objective.feasible || objective.feasible(a); };

  for (res.iters = 0; res.iters < opts.max_iters; ++res.iters) {
    const std::vector<double> g = objective.grad(res.alpha);
    const double gn2 = [&] {
      double s = 0.0;
      for (double x : g) s += x * x;
      return s;
    }();
    if (std::sqrt(gn2) <= opts.grad_tol) {
      res.converged = true;
      return res;
    }
    bool accepted = false;
    double t = step;
    for (int back = 0; back < 60; ++back) {
      ParamVector trial = res.alpha;
      for (std::size_t i = 0; i < trial.size(); ++i) trial[i] -= t * g[i];
      if (feasible(trial)) {
        const double fv = objective.value(trial);
        if (fv <= res.value - 1e-4 * t * gn2) {
          res.alpha = std::move(trial);
          res.value = fv;
          step = std::min(t * 2.0, 1e6);
          accepted = true;
          break;
        }
      }
      t *= 0.5;
    }
    if (!accepted) return res;  // line search stalled
  }
  return res;
}

bool scheme_grad_is_smooth(const Scheme& scheme) {
  switch (scheme.kind) {
    case SchemeKind::Linear:
      return true;
    case SchemeKind::ToyLightning:
    case SchemeKind::ToyLightningConic:
    case SchemeKind::FreeKnotSpline:
      return false;
    case SchemeKind::FeedForwardNN:
    case SchemeKind::ResNet:
      for (const auto& a : scheme.activations) {
        if (!a.differentiable()) return false;
      }
      return true;
  }
  return false;
}

Objective loss_objective(const Scheme& scheme, const Dataset& data, const YVector& y_d) {
  Objective obj;
  obj.value = [=](const ParamVector& a) { return loss(scheme, a, data, y_d); };
  if (scheme_grad_is_smooth(scheme)) {
    obj.grad = [=](const ParamVector& a) { return grad_loss(scheme, a, data, y_d).grad; };
  } else {
    obj.grad = [=](const ParamVector& a) { return fd_grad(scheme, a, data, y_d, 1e-6); };
  }
  obj.feasible = [=](const ParamVector& a) { return scheme.in_domain(a); };
  return obj;
}

}  // namespace conelab
