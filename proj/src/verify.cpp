#include "conelab/verify.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "conelab/num.hpp"
#include "conelab/optim.hpp"
#include "conelab/parallel.hpp"
#include "conelab/theta.hpp"

namespace conelab {

std::string classification_name(Classification c) {
  switch (c) {
    case Classification::LocalMinLike: return "local-min-like";
    case Classification::SaddleLike: return "saddle-like";
    case Classification::MaxLike: return "max-like";
    case Classification::Flat: return "flat";
    case Classification::Inconclusive: return "inconclusive";
  }
  return "?";
}

StationarityResult check_stationarity(const Scheme& scheme, const ParamVector& alpha,
                                      const Dataset& data, const YVector& y_d, double tol) {
  const GradResult g = grad_loss(scheme, alpha, data, y_d);
  StationarityResult r;
  r.grad_norm = l2_norm(g.grad);
  r.kink_clear = g.smooth;
  r.pass = g.smooth && r.grad_norm <= tol;
  return r;
}

GrowthReport check_local_growth(const Scheme& scheme, const SpuriousCertificate& cert,
                                double radius, int num_samples, std::uint64_t seed) {
  GrowthReport report;
  report.radius_exceeds_rho = cert.rho > 0.0 && radius > cert.rho;
  report.rows.resize(static_cast<std::size_t>(num_samples));
  const double loss_bar = loss(scheme, cert.alpha_bar, cert.dataset, cert.y_d);
  const YVector psi_bar = eval_batch(scheme, cert.alpha_bar, cert.dataset);

  parallel_for(static_cast<std::size_t>(num_samples), [&](std::size_t i) {
    Rng rng = split(seed, i);
    ParamVector a = cert.alpha_bar;
    double hmax = 0.0;
    // resample until feasible (spline knots can cross only outside rho)
    for (int attempt = 0; attempt < 64; ++attempt) {
      hmax = 0.0;
      for (std::size_t j = 0; j < a.size(); ++j) {
        const double h = radius * (2.0 * rng.uniform() - 1.0);
        a[j] = cert.alpha_bar[j] + h;
        hmax = std::max(hmax, std::abs(h));
      }
      if (scheme.in_domain(a)) break;
    }
    GrowthRow row;
    row.h_norm = hmax;
    row.inside_rho = cert.rho > 0.0 && hmax <= cert.rho;
    row.lhs = loss(scheme, a, cert.dataset, cert.y_d) - loss_bar;
    YVector diff = eval_batch(scheme, a, cert.dataset);
    diff -= psi_bar;
    row.rhs = inner(diff, diff);
    row.inequality_pass = row.lhs >= row.rhs - 1e-9;
    if (row.inside_rho) {
      row.equality_pass = std::abs(row.lhs - row.rhs) <= 1e-9 * (1.0 + std::abs(row.lhs));
    }
    report.rows[i] = row;
  });
  for (const auto& row : report.rows) {
    report.all_pass = report.all_pass && row.inequality_pass &&
                      (!row.equality_pass.has_value() || *row.equality_pass);
  }
  return report;
}

SpuriousCheck check_spurious(const SpuriousCertificate& cert, std::optional<double> min_gap_opt) {
  SpuriousCheck chk;
  chk.recomputed_loss_at_bar = loss(cert.scheme, cert.alpha_bar, cert.dataset, cert.y_d);
  chk.recomputed_witness_loss = loss(cert.scheme, cert.witness, cert.dataset, cert.y_d);
  const double min_gap = min_gap_opt.value_or(1e-9 * (1.0 + chk.recomputed_loss_at_bar));
  chk.margin = chk.recomputed_loss_at_bar - chk.recomputed_witness_loss - min_gap;
  chk.pass = chk.recomputed_witness_loss + min_gap <= chk.recomputed_loss_at_bar;
  return chk;
}

namespace {

PointClassification classify_point(const Scheme& scheme, const ParamVector& alpha_bar,
                                   const Dataset& data, const YVector& y_d, double r_probe,
                                   std::uint64_t seed) {
  PointClassification pc;
  const GradResult g = grad_loss(scheme, alpha_bar, data, y_d);
  pc.grad_norm = l2_norm(g.grad);
  const double loss_bar = loss(scheme, alpha_bar, data, y_d);

  if (!g.smooth) {
    pc.cls = Classification::Inconclusive;
    return pc;
  }

  const int m = scheme.param_count();
  const int num_dirs = 2 * m + 64;
  std::vector<double> diffs(static_cast<std::size_t>(num_dirs));
  parallel_for(static_cast<std::size_t>(num_dirs), [&](std::size_t i) {
    ParamVector a = alpha_bar;
    if (i < static_cast<std::size_t>(2 * m)) {
      const std::size_t coord = i / 2;
      const double sign = (i % 2 == 0) ? 1.0 : -1.0;
      a[coord] += sign * r_probe;
    } else {
      Rng rng = split(seed, i);
      std::vector<double> u = rng.unit_sphere(static_cast<std::size_t>(m));
      for (int j = 0; j < m; ++j) a[static_cast<std::size_t>(j)] += r_probe * u[static_cast<std::size_t>(j)];
    }
    diffs[i] = scheme.in_domain(a) ? loss(scheme, a, data, y_d) - loss_bar
                                   : std::numeric_limits<double>::quiet_NaN();
  });

  double dmin = std::numeric_limits<double>::infinity();
  double dmax = -std::numeric_limits<double>::infinity();
  for (double d : diffs) {
    if (std::isnan(d)) continue;
    dmin = std::min(dmin, d);
    dmax = std::max(dmax, d);
  }
  pc.min_sampled_diff = dmin;
  pc.max_sampled_diff = dmax;

  // FD Hessian of the loss from analytic gradients
  bool smooth_everywhere = true;
  Eigen::MatrixXd H(m, m);
  {
    const double h0 = 1e-5;
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(m));
    parallel_for(static_cast<std::size_t>(m), [&](std::size_t j) {
      ParamVector a = alpha_bar;
      const double h = h0 * (1.0 + std::abs(alpha_bar[j]));
      a[j] = alpha_bar[j] + h;
      const GradResult gp = grad_loss(scheme, a, data, y_d);
      a[j] = alpha_bar[j] - h;
      const GradResult gm = grad_loss(scheme, a, data, y_d);
      std::vector<double> row(static_cast<std::size_t>(m));
      for (int i = 0; i < m; ++i) {
        row[static_cast<std::size_t>(i)] = (gp.grad[static_cast<std::size_t>(i)] - gm.grad[static_cast<std::size_t>(i)]) / (2.0 * h);
      }
      if (!gp.smooth || !gm.smooth) row.clear();
      rows[j] = std::move(row);
    });
    for (int j = 0; j < m; ++j) {
      if (rows[static_cast<std::size_t>(j)].empty()) {
        smooth_everywhere = false;
        break;
      }
      for (int i = 0; i < m; ++i) H(i, j) = rows[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
    }
  }
  if (smooth_everywhere) {
    Eigen::MatrixXd Hs = 0.5 * (H + H.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hs);
    pc.min_eig = es.eigenvalues().minCoeff();
    pc.max_eig = es.eigenvalues().maxCoeff();
  }

  const double tol_diff = 1e-12 * (1.0 + std::abs(loss_bar)) + 1e-16 / std::max(r_probe, 1e-30);
  const double eig_scale = pc.min_eig ? std::max(std::abs(*pc.min_eig), std::abs(*pc.max_eig)) : 0.0;
  const double tol_eig = 1e-7 * (1.0 + eig_scale);

  const bool eig_neg = pc.min_eig && *pc.min_eig < -tol_eig;
  const bool eig_pos = pc.max_eig && *pc.max_eig > tol_eig;

  if (dmax <= tol_diff && dmin >= -tol_diff && !eig_neg && !eig_pos) {
    pc.cls = Classification::Flat;
  } else if (dmin >= -tol_diff && !eig_neg) {
    pc.cls = Classification::LocalMinLike;
  } else if (dmax <= tol_diff && !eig_pos) {
    pc.cls = Classification::MaxLike;
  } else {
    pc.cls = Classification::SaddleLike;
  }
  return pc;
}

}  // namespace

PairClassification classify_pair(const Scheme& scheme, const ParamVector& alpha_bar,
                                 const Dataset& data, const YVector& base, const YVector& v,
                                 double s, std::uint64_t seed, std::optional<double> rho) {
  PairClassification pair;
  double r_probe = 1e-3 * (1.0 + linf_norm(alpha_bar));
  if (rho) r_probe = std::min(r_probe, *rho / 2.0);

  for (int sign = 0; sign < 2; ++sign) {
    YVector y_d = base;
    y_d.axpy(sign == 0 ? s : -s, v);
    PointClassification pc =
        classify_point(scheme, alpha_bar, data, y_d, r_probe, mix_seed(seed, static_cast<std::uint64_t>(sign)));
    // witness gap: does some parameter beat alpha_bar for this label?
    if (norm(y_d) > 0.0) {
      try {
        const Witness w = expressiveness_witness(scheme, data, y_d);
        pc.witness_gap = loss(scheme, alpha_bar, data, y_d) - w.witness_loss;
      } catch (const std::exception&) {
        pc.witness_gap = 0.0;
      }
    }
    (sign == 0 ? pair.plus : pair.minus) = pc;
  }
  auto usable = [](const PointClassification& pc) {
    return pc.cls != Classification::MaxLike && pc.cls != Classification::Inconclusive &&
           pc.witness_gap > 0.0;
  };
  pair.pair_ok = usable(pair.plus) || usable(pair.minus);
  return pair;
}

SpuriousCertificate build_spurious_certificate(const Scheme& scheme, const Dataset& data,
                                               const EmbeddingResult& embedding,
                                               const SpuriousBuildOptions& opts) {
  SpuriousCertificate cert;
  cert.kind = CertificateKind::SpuriousMin;
  cert.scheme = scheme;
  cert.dataset = data;
  cert.alpha_bar = embedding.alpha_bar;
  cert.rho = embedding.neighborhood_radius;
  cert.seed = opts.seed;
  cert.theta_used = opts.theta.value_or(theta_cap(scheme, data.n));
  cert.provenance = embedding.route;

  BadLabel label = bad_label(scheme, data, embedding, opts.s_multiplier, cert.theta_used, opts.seed);
  WitnessOptions wopts;
  wopts.gamma = opts.witness_gamma;
  wopts.seed = mix_seed(opts.seed, 3);

  if (opts.target_gap) {
    // grow s until the witness undercuts the value at alpha_bar by C
    double s = label.s;
    for (int i = 0; i < 200; ++i, s *= 2.0) {
      YVector y = label.base;
      y.axpy(s, label.v);
      const Witness w = expressiveness_witness(scheme, data, y, wopts);
      const double bar = loss(scheme, embedding.alpha_bar, data, y);
      if (bar - w.witness_loss >= *opts.target_gap) {
        label.s = s;
        label.y_d = std::move(y);
        break;
      }
    }
  }

  cert.y_d = label.y_d;
  cert.s = label.s;
  cert.v = label.v;
  cert.loss_at_bar = loss(scheme, cert.alpha_bar, data, cert.y_d);
  const Witness w = expressiveness_witness(scheme, data, cert.y_d, wopts);
  cert.witness = w.alpha;
  cert.witness_loss = w.witness_loss;
  cert.gap = cert.loss_at_bar - cert.witness_loss;
  if (scheme_grad_is_smooth(scheme)) {
    cert.grad_norm = l2_norm(grad_loss(scheme, cert.alpha_bar, data, cert.y_d).grad);
  }
  cert.growth = check_local_growth(scheme, cert, cert.rho, opts.growth_samples, mix_seed(opts.seed, 7));
  return cert;
}

ScalingCheck certificate_scaling_check(const SpuriousCertificate& cert, double gamma) {
  ScalingCheck chk{};
  YVector y_scaled = cert.y_d;
  y_scaled *= gamma;
  const ParamVector bar_scaled = cert.scheme.scale_output(cert.alpha_bar, gamma);
  const ParamVector wit_scaled = cert.scheme.scale_output(cert.witness, gamma);

  const double g2 = gamma * gamma;
  const double lb = loss(cert.scheme, bar_scaled, cert.dataset, y_scaled);
  const double lw = loss(cert.scheme, wit_scaled, cert.dataset, y_scaled);
  auto rel = [](double got, double want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-300);
  };
  chk.rel_err_loss_at_bar = rel(lb, g2 * cert.loss_at_bar);
  chk.rel_err_witness_loss = rel(lw, g2 * cert.witness_loss);
  chk.rel_err_gap = rel(lb - lw, g2 * cert.gap);

  SpuriousCertificate scaled = cert;
  scaled.alpha_bar = bar_scaled;
  scaled.witness = wit_scaled;
  scaled.y_d = std::move(y_scaled);
  scaled.loss_at_bar = lb;
  scaled.witness_loss = lw;
  scaled.gap = lb - lw;
  chk.verdicts_preserved = check_spurious(scaled).pass == check_spurious(cert).pass;
  return chk;
}

}  // namespace conelab
