#include "conelab/theta.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "conelab/optim.hpp"
#include "conelab/parallel.hpp"

namespace conelab {

double theta_cap(const Scheme& scheme, int n) {
  switch (scheme.kind) {
    case SchemeKind::FreeKnotSpline:
    case SchemeKind::ToyLightningConic:
      return 1.0 - 1.0 / n;
    case SchemeKind::FeedForwardNN:
    case SchemeKind::ResNet: {
      bool all_heaviside = scheme.kind == SchemeKind::FeedForwardNN;
      for (const auto& a : scheme.activations) all_heaviside = all_heaviside && a.tag == Act::Heaviside;
      if (all_heaviside && scheme.width(1) >= 2) return 1.0 - 1.0 / n;
      if (!saturated_fit_obstruction(scheme)) return 1.0 - 1.0 / n;
      return 1.0;
    }
    default:
      return 1.0;
  }
}

namespace {

// exact interpolation start for splines with n <= p (all labels realizable)
std::optional<ParamVector> spline_interpolation_start(const Scheme& scheme, const Dataset& data,
                                                      const YVector& y_d) {
  if (scheme.kind != SchemeKind::FreeKnotSpline || data.n > scheme.knots) return std::nullopt;
  if (!data.ascending_1d()) return std::nullopt;
  const int p = scheme.knots;
  ParamVector a(static_cast<std::size_t>(2) * p, 0.0);
  double* beta = a.data();
  double* g = a.data() + p;
  for (int k = 0; k < data.n; ++k) {
    g[k] = data.xs[static_cast<std::size_t>(k)];
    beta[k] = y_d.block(k)[0];
  }
  for (int j = data.n; j < p; ++j) {
    g[j] = g[data.n - 1] + (j - data.n + 1);
    beta[j] = beta[data.n - 1];
  }
  return a;
}

}  // namespace

ThetaEstimate theta_heuristic(const Scheme& scheme, const Dataset& data, const ThetaOptions& opts) {
  ThetaEstimate est;
  est.cap = theta_cap(scheme, data.n);
  est.samples.resize(static_cast<std::size_t>(opts.num_labels));

  parallel_for(static_cast<std::size_t>(opts.num_labels), [&](std::size_t i) {
    Rng rng = split(opts.seed, i);
    YVector y = random_unit_label(data.n, scheme.dy, rng);
    if (opts.label_scale != 1.0) y *= opts.label_scale;

    ThetaSample sample;
    sample.witness_loss = std::numeric_limits<double>::quiet_NaN();
    sample.starts_used = 0;

    std::vector<ParamVector> starts;
    try {
      WitnessOptions wopts;
      wopts.gamma = opts.witness_gamma;
      wopts.seed = mix_seed(opts.seed, 0x77777777u + i);
      const Witness w = expressiveness_witness(scheme, data, y, wopts);
      sample.witness_loss = w.witness_loss;
      starts.push_back(w.alpha);
    } catch (const std::exception&) {
      // schemes without the property (linear) run from random starts only
    }
    if (auto interp = spline_interpolation_start(scheme, data, y)) starts.push_back(std::move(*interp));
    for (int s = 0; s < opts.num_starts; ++s) {
      Rng srng = split(opts.seed, 1000003ull * (i + 1) + static_cast<std::uint64_t>(s));
      ParamVector a0 = srng.normal_vec(static_cast<std::size_t>(scheme.param_count()));
      if (!scheme.in_domain(a0) && scheme.kind == SchemeKind::FreeKnotSpline) {
        std::sort(a0.begin() + scheme.knots, a0.end());
        for (int j = 1; j < scheme.knots; ++j) {
          double& prev = a0[static_cast<std::size_t>(scheme.knots + j - 1)];
          double& cur = a0[static_cast<std::size_t>(scheme.knots + j)];
          if (!(cur > prev)) cur = prev + 1e-3;
        }
      }
      starts.push_back(std::move(a0));
    }

    const Objective obj = loss_objective(scheme, data, y);
    DescentOptions dopts;
    dopts.max_iters = opts.max_iters;
    double best = std::numeric_limits<double>::infinity();
    for (auto& a0 : starts) {
      if (!scheme.in_domain(a0)) continue;
      const DescentResult r = armijo_descent(obj, a0, dopts);
      best = std::min(best, r.value);
      sample.starts_used++;
    }
    sample.best_loss = best;
    sample.y_d = std::move(y);
    est.samples[i] = std::move(sample);
  });

  est.heuristic = 0.0;
  for (const auto& s : est.samples) est.heuristic = std::max(est.heuristic, s.best_loss);
  return est;
}

double s_threshold(double theta, double base_norm) {
  if (!(theta >= 0.0 && theta < 1.0)) throw std::invalid_argument("s_threshold: theta in [0,1)");
  if (base_norm == 0.0) return 0.0;
  return std::sqrt(theta / (1.0 - theta)) * base_norm;
}

double instability_scale(double theta, int dim_y, double C) {
  if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("instability_scale: theta in (0,1)");
  if (dim_y < 2) throw std::invalid_argument("instability_scale: dim_y >= 2");
  return C * std::sqrt((dim_y - 1.0) / (2.0 * dim_y * (theta - theta * theta)));
}

}  // namespace conelab
