#include "conelab/regularized.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "conelab/num.hpp"
#include "conelab/optim.hpp"
#include "conelab/parallel.hpp"

namespace conelab {

RegProblem::RegProblem(Scheme s, Dataset d, YVector y, double nu_, double p_, ParamVector ref)
    : scheme(std::move(s)), dataset(std::move(d)), y_d(std::move(y)), nu(nu_), p(p_),
      reference(std::move(ref)) {
  if (!(nu >= 0.0)) throw std::invalid_argument("reg problem: nu >= 0");
  if (!(p >= 1.0 && p <= 2.0)) throw std::invalid_argument("reg problem: p in [1,2]");
  if (reference.empty()) reference.assign(static_cast<std::size_t>(scheme.param_count()), 0.0);
  if (static_cast<int>(reference.size()) != scheme.param_count()) {
    throw std::invalid_argument("reg problem: reference size mismatch");
  }
}

namespace {

double reg_term(const RegProblem& prob, const ParamVector& alpha) {
  std::vector<double> diff(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) diff[i] = alpha[i] - prob.reference[i];
  return lp_power_sum(diff, prob.p);
}

}  // namespace

double reg_loss(const RegProblem& prob, const ParamVector& alpha) {
  return loss(prob.scheme, alpha, prob.dataset, prob.y_d) + prob.nu * reg_term(prob, alpha);
}

RegGrad reg_grad(const RegProblem& prob, const ParamVector& alpha) {
  RegGrad out;
  out.smooth = true;
  out.grad = scheme_grad_is_smooth(prob.scheme)
                 ? grad_loss(prob.scheme, alpha, prob.dataset, prob.y_d).grad
                 : fd_grad(prob.scheme, alpha, prob.dataset, prob.y_d, 1e-6);
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    const double z = alpha[i] - prob.reference[i];
    if (prob.p == 1.0) {
      if (std::abs(z) < 1e-12) {
        out.smooth = false;
        out.at_reference.push_back(static_cast<int>(i));
      } else {
        out.grad[i] += prob.nu * (z > 0.0 ? 1.0 : -1.0);
      }
    } else if (prob.p == 2.0) {
      out.grad[i] += prob.nu * 2.0 * z;
    } else {
      out.grad[i] += prob.nu * prob.p * std::pow(std::abs(z), prob.p - 1.0) * (z > 0.0 ? 1.0 : (z < 0.0 ? -1.0 : 0.0));
    }
  }
  return out;
}

RegCertificateReport verify_reg_certificate(const RegProblem& prob,
                                            const RegSpuriousCertificate& cert, double radius,
                                            int samples, std::uint64_t seed) {
  RegCertificateReport report{};
  report.samples = samples;
  report.radius_boundary = radius > cert.growth_radius;

  const double bar_value = reg_loss(prob, cert.alpha_bar);
  std::vector<double> quotients(static_cast<std::size_t>(samples));
  parallel_for(static_cast<std::size_t>(samples), [&](std::size_t i) {
    Rng rng = split(seed, i);
    ParamVector a = cert.alpha_bar;
    double h2 = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
      const double h = radius * (2.0 * rng.uniform() - 1.0);
      a[j] += h;
      h2 += h * h;
    }
    quotients[i] = h2 > 0.0 ? (reg_loss(prob, a) - bar_value) / h2
                            : std::numeric_limits<double>::infinity();
  });
  report.fitted_epsilon = *std::min_element(quotients.begin(), quotients.end());
  report.epsilon_positive = report.fitted_epsilon > 0.0;

  report.gap = bar_value - reg_loss(prob, cert.witness);
  report.gap_pass = report.gap >= cert.C;
  return report;
}

namespace {

DescentResult multistart_reg(const RegProblem& prob, const std::vector<ParamVector>& starts,
                             int max_iters) {
  Objective obj;
  obj.value = [&prob](const ParamVector& a) { return reg_loss(prob, a); };
  obj.grad = [&prob](const ParamVector& a) { return reg_grad(prob, a).grad; };
  obj.feasible = [&prob](const ParamVector& a) { return prob.scheme.in_domain(a); };
  DescentOptions dopts;
  dopts.max_iters = max_iters;
  DescentResult best;
  best.value = std::numeric_limits<double>::infinity();
  for (const auto& a0 : starts) {
    if (!prob.scheme.in_domain(a0)) continue;
    DescentResult r = armijo_descent(obj, a0, dopts);
    if (r.value < best.value) best = std::move(r);
  }
  return best;
}

}  // namespace

KillProbeReport approx_kill_probe(const Scheme& scheme, const Dataset& data, double nu, double p,
                                  const std::vector<double>& s_grid, int starts,
                                  std::uint64_t seed) {
  const int m = scheme.param_count();
  {
    ParamVector zero(static_cast<std::size_t>(m), 0.0);
    const YVector psi0 = eval_batch(scheme, zero, data);
    if (norm(psi0) != 0.0) throw std::invalid_argument("approx_kill_probe: needs Psi(0) = 0");
  }
  const SubspaceBasis V2 = poly_space_basis(data, 2, scheme.dy);
  if (V2.dim() >= V2.ambient_dim()) {
    throw std::invalid_argument("approx_kill_probe: degree-2 space spans Y");
  }
  Rng rng(seed);
  const YVector v = complement_direction(V2, rng);

  KillProbeReport report{};
  // measured r: largest radius where the second-order Taylor remainder of
  // Psi along random rays stays below ||alpha||^2 / 2
  {
    double r = 2.0;
    ParamVector zero(static_cast<std::size_t>(m), 0.0);
    for (int iter = 0; iter < 24; ++iter, r *= 0.5) {
      bool ok = true;
      for (int probe = 0; probe < 16 && ok; ++probe) {
        Rng prng = split(seed, 900 + static_cast<std::uint64_t>(probe));
        std::vector<double> dir = prng.unit_sphere(static_cast<std::size_t>(m));
        ParamVector a(dir.size());
        for (std::size_t i = 0; i < dir.size(); ++i) a[i] = r * dir[i];
        // f(t) = Psi(t a); remainder of f(0) + f'(0) + f''(0)/2 at t = 1
        const double t = 1e-4;
        YVector f1 = eval_batch(scheme, a, data);
        YVector f0 = eval_batch(scheme, zero, data);
        ParamVector ap(a.size()), am(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
          ap[i] = t * a[i];
          am[i] = -t * a[i];
        }
        YVector fp = eval_batch(scheme, ap, data);
        YVector fm = eval_batch(scheme, am, data);
        // f'(0) ~ (fp - fm)/(2t), f''(0) ~ (fp - 2 f0 + fm)/t^2
        YVector taylor = f0;
        YVector d1 = fp;
        d1 -= fm;
        taylor.axpy(1.0 / (2.0 * t), d1);
        YVector d2 = fp;
        d2.axpy(-2.0, f0);
        d2 += fm;
        taylor.axpy(0.5 / (t * t), d2);
        YVector rem = f1;
        rem -= taylor;
        if (norm(rem) > 0.5 * r * r) ok = false;
      }
      if (ok) break;
    }
    report.measured_r = r;
  }
  const double c1 = (p == 2.0) ? 1.0 : 1.0;  // ||z||_p^p >= ||z||_2^2 on the unit ball for p <= 2
  const double c2 = 1.0;                     // value on the unit sphere
  report.predicted_threshold =
      std::min({nu * c1, std::sqrt(nu * c2), std::sqrt(nu * c1) * report.measured_r});

  report.empirical_threshold = 0.0;
  for (double s : s_grid) {
    YVector y = v;
    y *= s;
    RegProblem prob(scheme, data, y, nu, p);
    std::vector<ParamVector> start_vs;
    for (int st = 0; st < starts; ++st) {
      Rng srng = split(seed, 10'000 + static_cast<std::uint64_t>(st));
      start_vs.push_back(srng.normal_vec(static_cast<std::size_t>(m)));
    }
    if (s != 0.0) {
      try {
        start_vs.push_back(expressiveness_witness(scheme, data, y).alpha);
      } catch (const std::exception&) {
      }
    }
    const DescentResult best = multistart_reg(prob, start_vs, 1200);
    KillProbeStep step;
    step.s = s;
    step.best_found = best.value;
    step.value_at_zero = s * s;  // ||0 - s v||_Y^2 with ||v||_Y = 1, regularizer 0
    step.zero_optimal = best.value >= step.value_at_zero * (1.0 - 1e-6) - 1e-12;
    if (step.zero_optimal) report.empirical_threshold = std::max(report.empirical_threshold, s);
    report.steps.push_back(step);
  }
  return report;
}

TaylorResiduals taylor_subspace_check(const Scheme& scheme, const Dataset& data,
                                      const ParamVector& alpha_bar, int num_dirs, double h_norm,
                                      std::uint64_t seed) {
  if (scheme.kind != SchemeKind::FeedForwardNN) {
    throw std::invalid_argument("taylor_subspace_check: feedforward networks only");
  }
  for (const auto& act : scheme.activations) {
    if (!act.twice_differentiable()) {
      throw std::invalid_argument("taylor_subspace_check: activations must be twice differentiable");
    }
  }
  {
    const double* A1 = alpha_bar.data() + scheme.offset_A(1);
    for (int i = 0; i < scheme.width(1) * scheme.dx; ++i) {
      if (A1[i] != 0.0) throw std::invalid_argument("taylor_subspace_check: first weight matrix must be zero");
    }
  }
  const SubspaceBasis V1 = poly_space_basis(data, 1, scheme.dy);
  const SubspaceBasis V2 = poly_space_basis(data, 2, scheme.dy);
  const YVector psi0 = eval_batch(scheme, alpha_bar, data);
  const int m = scheme.param_count();

  TaylorResiduals out{0.0, 0.0, std::max(1.0, norm(psi0))};
  const double delta = 1e-3;  // norm of the probing step for the quadratic term
  for (int d = 0; d < num_dirs; ++d) {
    Rng rng = split(seed, static_cast<std::uint64_t>(d));
    std::vector<double> h = rng.unit_sphere(static_cast<std::size_t>(m));
    for (auto& x : h) x *= h_norm;

    YVector first = psi0;
    first += jvp(scheme, alpha_bar, data, h);
    out.r1 = std::max(out.r1, V1.residual_norm(first));

    // 0.5 d^2Psi<h,h> = (||h||/delta)^2 * (J(a+u)<u> - J(a-u)<u>)/4 with
    // u = delta h/||h|| (central difference, bilinear rescaling)
    std::vector<double> u(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) u[i] = h[i] * (delta / h_norm);
    ParamVector ap = alpha_bar, am = alpha_bar;
    for (std::size_t i = 0; i < h.size(); ++i) {
      ap[i] += u[i];
      am[i] -= u[i];
    }
    YVector jp = jvp(scheme, ap, data, u);
    YVector jm = jvp(scheme, am, data, u);
    jp -= jm;
    YVector second = first;
    second.axpy(0.25 * (h_norm / delta) * (h_norm / delta), jp);
    out.r2 = std::max(out.r2, V2.residual_norm(second));
  }
  return out;
}

InstabilityDemo reg_instability_demo(const Scheme& scheme, const Dataset& data,
                                     const ParamVector& alpha_bar, double p, std::uint64_t seed) {
  InstabilityDemo demo;
  // reuse the spurious construction to obtain (nu, v, a starting s-bracket)
  const RegSpuriousCertificate cert = reg_spurious_construct(scheme, data, alpha_bar, p, 1.0, seed);
  demo.nu = cert.nu;
  const YVector base = eval_batch(scheme, alpha_bar, data);
  const int m = scheme.param_count();

  auto reg_value = [&](double s, const ParamVector& a) {
    YVector y = base;
    y.axpy(s, cert.v);
    RegProblem prob(scheme, data, y, cert.nu, p, alpha_bar);
    return reg_loss(prob, a);
  };
  // F(s): multistart with warm start continuation
  ParamVector warm = cert.witness;
  auto F = [&](double s) {
    YVector y = base;
    y.axpy(s, cert.v);
    RegProblem prob(scheme, data, y, cert.nu, p, alpha_bar);
    std::vector<ParamVector> starts;
    starts.push_back(warm);
    for (int st = 0; st < 20; ++st) {
      Rng srng = split(seed, 40'000 + static_cast<std::uint64_t>(st));
      starts.push_back(srng.normal_vec(static_cast<std::size_t>(m)));
    }
    const DescentResult best = multistart_reg(prob, starts, 800);
    warm = best.alpha;
    return std::pair<double, ParamVector>(best.value, best.alpha);
  };
  auto value_at_bar = [&](double s) { return reg_value(s, alpha_bar); };

  const double s_hi = cert.s;
  double lo = 0.0, hi = s_hi;
  {
    // trace and bracket the crossing F(s) < value_at_bar(s)
    const int trace_steps = 12;
    double prev = 0.0;
    bool bracketed = false;
    for (int i = 0; i <= trace_steps; ++i) {
      const double s = s_hi * static_cast<double>(i) / trace_steps;
      const auto [fv, arg] = F(s);
      demo.trace.push_back(InstabilityTraceStep{s, fv, value_at_bar(s)});
      const bool below = fv < value_at_bar(s) - 1e-9 * (1.0 + std::abs(fv));
      if (below && !bracketed) {
        lo = prev;
        hi = s;
        bracketed = true;
      }
      prev = s;
    }
    if (!bracketed) return demo;  // reported, not fabricated
  }
  while (hi - lo > 1e-4) {
    const double mid = 0.5 * (lo + hi);
    const auto [fv, arg] = F(mid);
    if (fv < value_at_bar(mid) - 1e-9 * (1.0 + std::abs(fv))) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  demo.s0 = 0.5 * (lo + hi);
  demo.y_d = base;
  demo.y_d.axpy(demo.s0, cert.v);
  demo.bar_value_at_s0 = value_at_bar(demo.s0);
  demo.demo_found = true;

  for (double factor : {1.02, 1.05, 1.1, 1.25}) {
    const double s = demo.s0 * factor;
    if (s > s_hi * 4.0) break;
    const auto [fv, arg] = F(s);
    if (fv >= value_at_bar(s)) continue;
    double dist = 0.0;
    for (int i = 0; i < m; ++i) dist = std::max(dist, std::abs(arg[static_cast<std::size_t>(i)] - alpha_bar[static_cast<std::size_t>(i)]));
    demo.above_s.push_back(s);
    demo.above_distance.push_back(dist);
    demo.above_improvement.push_back(value_at_bar(s) - fv);
    demo.family_values.push_back(reg_value(demo.s0, arg));
  }
  return demo;
}

}  // namespace conelab
