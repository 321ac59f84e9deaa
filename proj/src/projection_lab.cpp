#include "conelab/projection_lab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "conelab/num.hpp"
#include "conelab/parallel.hpp"

namespace conelab {

std::size_t GridSpec::axis_points() const {
  if (!(hi > lo) || !(step > 0.0)) throw std::invalid_argument("grid: need hi > lo and step > 0");
  return static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
}

ImageCloud::ImageCloud(Scheme scheme, Dataset data, const CloudSpec& spec)
    : scheme_(std::move(scheme)), data_(std::move(data)) {
  if (data_.n * scheme_.dy > kMaxBruteForceDim) {
    throw std::invalid_argument("cloud: brute-force regime requires n*dy <= 4");
  }
  if (!spec.grid && spec.num_random == 0) {
    throw std::invalid_argument("cloud: empty spec");
  }
  const int m = scheme_.param_count();
  if (spec.grid) {
    if (m != 2) throw std::invalid_argument("cloud: grids require a 2-parameter scheme");
    grid_ = spec.grid;
    axis_ = grid_->axis_points();
    grid_points_ = axis_ * axis_;
  }
  total_ = grid_points_ + spec.num_random;
  if (total_ > kMaxCloudPoints) throw std::invalid_argument("cloud: point budget exceeded (1e7)");
  if (total_ == 0) throw std::invalid_argument("cloud: empty spec");

  if (spec.num_random > 0) {
    random_params_.resize(spec.num_random * static_cast<std::size_t>(m));
    for (std::size_t i = 0; i < spec.num_random; ++i) {
      Rng rng = split(spec.seed, i);
      for (int j = 0; j < m; ++j) {
        double v = rng.uniform(-spec.random_radius, spec.random_radius);
        random_params_[i * static_cast<std::size_t>(m) + static_cast<std::size_t>(j)] = v;
      }
      if (scheme_.kind == SchemeKind::FreeKnotSpline) {
        double* gamma = random_params_.data() + i * static_cast<std::size_t>(m) + scheme_.knots;
        std::sort(gamma, gamma + scheme_.knots);
        for (int j = 1; j < scheme_.knots; ++j) {
          if (!(gamma[j] > gamma[j - 1])) gamma[j] = gamma[j - 1] + 1e-6;
        }
      }
    }
  }

  // y-space spacing bound for one grid step: |dPsi/da1| <= max|x|, |dPsi/da2| <= 1
  // per block for slope-bounded two-parameter schemes, ||.||_Y scales by
  // sqrt(n / 2n) = 1/sqrt(2).
  if (grid_) {
    double xmax = 0.0;
    for (int k = 0; k < data_.n; ++k) xmax = std::max(xmax, linf_norm(data_.x(k)));
    resolution_ = grid_->step * (1.0 + xmax) / std::sqrt(2.0);
  } else {
    resolution_ = 0.0;
  }
}

ParamVector ImageCloud::params(std::size_t i) const {
  const int m = scheme_.param_count();
  if (i < grid_points_) {
    const std::size_t r = i / axis_;
    const std::size_t c = i % axis_;
    return {grid_->lo + static_cast<double>(c) * grid_->step,
            grid_->lo + static_cast<double>(r) * grid_->step};
  }
  const std::size_t j = i - grid_points_;
  ParamVector a(static_cast<std::size_t>(m));
  std::copy(random_params_.begin() + static_cast<std::ptrdiff_t>(j) * m,
            random_params_.begin() + static_cast<std::ptrdiff_t>(j + 1) * m, a.begin());
  return a;
}

YVector ImageCloud::value(std::size_t i) const { return eval_batch(scheme_, params(i), data_); }

namespace {

double toy_sigma_fast(double s) {
  return std::min(0.0, std::abs(s + 1.0) - 1.0) + std::max(0.0, 1.0 - std::abs(s - 1.0));
}

}  // namespace

double ImageCloud::dist_to(std::size_t i, const YVector& target) const {
  // allocation-free path for the scan-heavy two/three-parameter schemes
  const SchemeKind kind = scheme_.kind;
  if (kind == SchemeKind::Linear || kind == SchemeKind::ToyLightning ||
      kind == SchemeKind::ToyLightningConic) {
    double a1, a2, a3 = 1.0;
    if (i < grid_points_) {
      const std::size_t r = i / axis_;
      const std::size_t c = i % axis_;
      a1 = grid_->lo + static_cast<double>(c) * grid_->step;
      a2 = grid_->lo + static_cast<double>(r) * grid_->step;
    } else {
      const int m = scheme_.param_count();
      const double* p = random_params_.data() + (i - grid_points_) * static_cast<std::size_t>(m);
      a1 = p[0];
      a2 = p[1];
      if (m > 2) a3 = p[2];
    }
    double acc = 0.0;
    for (int k = 0; k < data_.n; ++k) {
      const double t = a1 * data_.xs[static_cast<std::size_t>(k)] + a2;
      double v;
      if (kind == SchemeKind::Linear) {
        v = t;
      } else {
        v = toy_sigma_fast(t);
        if (kind == SchemeKind::ToyLightningConic) v *= a3;
      }
      const double d = v - target[k];
      acc += d * d;
    }
    return std::sqrt(acc / (2.0 * data_.n));
  }
  YVector diff = value(i);
  diff -= target;
  return norm(diff);
}

namespace {

ProjectionResult project_impl(const ImageCloud& cloud, const YVector& y_d, double cluster_tol,
                              std::optional<double> sep_tol_opt, bool parallel) {
  ProjectionResult res;
  res.cluster_tol = cluster_tol;
  res.resolution = cloud.resolution();
  res.sep_tol = sep_tol_opt.value_or(std::max(10.0 * cloud.resolution(), 1e-9));

  const std::size_t n = cloud.size();
  auto dist_at = [&](std::size_t i) { return cloud.dist_to(i, y_d); };
  const ArgMin best = parallel ? blocked_argmin_parallel(n, dist_at) : blocked_argmin_serial(n, dist_at);
  res.min_dist = best.value;

  const double cut = res.min_dist * (1.0 + cluster_tol) + 1e-300;
  auto near = [&](std::size_t i) { return dist_at(i) <= cut; };
  const std::vector<std::size_t> cand =
      parallel ? collect_indices_parallel(n, near) : collect_indices_serial(n, near);

  // greedy spatial clustering, ascending index order (deterministic)
  for (std::size_t idx : cand) {
    const YVector v = cloud.value(idx);
    const double d = cloud.dist_to(idx, y_d);
    bool joined = false;
    for (auto& cl : res.clusters) {
      YVector diff = v;
      diff -= cl.point;
      if (norm(diff) < res.sep_tol) {
        if (d < cl.dist) {  // keep the best representative per cluster
          cl.point = v;
          cl.alpha = cloud.params(idx);
          cl.dist = d;
          cl.index = idx;
        }
        joined = true;
        break;
      }
    }
    if (!joined) res.clusters.push_back(ProjectionCluster{v, cloud.params(idx), d, idx});
  }
  res.multivalued = res.clusters.size() >= 2;
  return res;
}

}  // namespace

ProjectionResult project(const ImageCloud& cloud, const YVector& y_d, double cluster_tol,
                         std::optional<double> sep_tol) {
  return project_impl(cloud, y_d, cluster_tol, sep_tol, true);
}

ProjectionResult project_serial(const ImageCloud& cloud, const YVector& y_d, double cluster_tol,
                                std::optional<double> sep_tol) {
  return project_impl(cloud, y_d, cluster_tol, sep_tol, false);
}

DiscontinuityProbe discontinuity_probe(const ImageCloud& cloud, const YVector& y_d,
                                       const ProjectionCluster& z1, const ProjectionCluster& z2,
                                       int steps, double cluster_tol,
                                       std::optional<double> sep_tol) {
  DiscontinuityProbe probe;
  {
    YVector diff = z1.point;
    diff -= z2.point;
    probe.cluster_separation = norm(diff);
  }
  probe.all_single_valued = true;
  probe.labels_converge = true;

  const ProjectionCluster* zs[2] = {&z1, &z2};
  for (int side = 0; side < 2; ++side) {
    auto& seq = (side == 0) ? probe.toward_z1 : probe.toward_z2;
    for (int l = 1; l <= steps; ++l) {
      const double t = 1.0 / l;
      YVector label = y_d;
      label *= (1.0 - t);
      label.axpy(t, zs[side]->point);
      const ProjectionResult pr = project(cloud, label, cluster_tol, sep_tol);
      ProbeStep step;
      step.t = t;
      step.label = label;
      step.representative = pr.clusters.front().point;
      step.min_dist = pr.min_dist;
      step.single_valued = !pr.multivalued;
      if (l >= 2) probe.all_single_valued = probe.all_single_valued && step.single_valued;
      seq.push_back(std::move(step));
    }
    YVector tail = seq.back().label;
    tail -= y_d;
    probe.labels_converge = probe.labels_converge && norm(tail) <= zs[side]->dist / steps + 1e-12;
  }
  YVector finals = probe.toward_z1.back().representative;
  finals -= probe.toward_z2.back().representative;
  probe.final_separation = norm(finals);
  return probe;
}

SolarReport solar_check(const ImageCloud& cloud, const YVector& y_d, const YVector& ybar,
                        double theta, const std::vector<double>& s_values, double cluster_tol,
                        std::optional<double> sep_tol) {
  SolarReport report;
  if (!(theta >= 0.0 && theta < 1.0)) throw std::invalid_argument("solar_check: theta in [0,1)");
  report.threshold = std::sqrt(theta / (1.0 - theta)) * norm(ybar);

  YVector dir = y_d;
  dir -= ybar;
  const double dn = norm(dir);
  if (dn == 0.0) throw std::invalid_argument("solar_check: y_d must differ from ybar");
  dir *= 1.0 / dn;

  for (double s : s_values) {
    YVector target = ybar;
    target.axpy(s, dir);
    const ProjectionResult pr = project(cloud, target, cluster_tol, sep_tol);
    SolarStep step;
    step.s = s;
    YVector diff = target;
    diff -= ybar;
    step.dist_target_to_ybar = norm(diff);
    step.min_dist = pr.min_dist;
    step.excluded = step.dist_target_to_ybar > pr.min_dist + pr.sep_tol;
    if (s > report.threshold && !step.excluded) report.all_excluded_beyond_threshold = false;
    report.steps.push_back(step);
  }
  return report;
}

MultivaluedSearch find_multivalued_label(const ImageCloud& cloud, int num_pairs, int scan_steps,
                                         std::uint64_t seed, double cluster_tol,
                                         std::optional<double> sep_tol) {
  MultivaluedSearch out;
  const std::size_t n = cloud.size();
  const double want_sep = sep_tol.value_or(std::max(10.0 * cloud.resolution(), 1e-9));

  for (int pair = 0; pair < num_pairs; ++pair) {
    Rng rng = split(seed, static_cast<std::uint64_t>(pair));
    const std::size_t ia = rng.u64() % n;
    const std::size_t ib = rng.u64() % n;
    const YVector za = cloud.value(ia);
    const YVector zb = cloud.value(ib);
    YVector diff = za;
    diff -= zb;
    const double sep = norm(diff);
    if (sep < 3.0 * want_sep) continue;

    // walk along the perpendicular bisector of [za, zb]: mid + t * w with w a
    // unit vector orthogonal to (za - zb); the projection representative
    // switches pieces somewhere, and bisecting the switch balances the two
    // piece distances to within the cluster tolerance
    YVector mid = za;
    mid += zb;
    mid *= 0.5;
    YVector axis = diff;
    axis *= 1.0 / sep;
    YVector w(za.n(), za.dy(), rng.normal_vec(static_cast<std::size_t>(za.size())));
    w.axpy(-inner(w, axis), axis);
    const double wn = norm(w);
    if (wn < 1e-12) continue;
    w *= 1.0 / wn;

    auto label_at = [&](double t) {
      YVector cand = mid;
      cand.axpy(t, w);
      return cand;
    };
    auto rep_gap = [&](const ProjectionResult& a, const ProjectionResult& b) {
      YVector d = a.clusters.front().point;
      d -= b.clusters.front().point;
      return norm(d);
    };

    std::vector<double> ts;
    for (int step = 0; step <= scan_steps; ++step) {
      ts.push_back(-sep + 2.0 * sep * static_cast<double>(step) / scan_steps);
    }
    std::vector<ProjectionResult> prs;
    for (double t : ts) {
      ProjectionResult pr = project(cloud, label_at(t), cluster_tol, sep_tol);
      if (pr.multivalued) {
        out.found = true;
        out.y_d = label_at(t);
        out.projection = std::move(pr);
        return out;
      }
      prs.push_back(std::move(pr));
    }
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
      if (rep_gap(prs[i], prs[i + 1]) < want_sep) continue;
      double lo = ts[i], hi = ts[i + 1];
      ProjectionResult pr_lo = prs[i];
      for (int iter = 0; iter < 60; ++iter) {
        const double tm = 0.5 * (lo + hi);
        ProjectionResult pm = project(cloud, label_at(tm), cluster_tol, sep_tol);
        if (pm.multivalued) {
          out.found = true;
          out.y_d = label_at(tm);
          out.projection = std::move(pm);
          return out;
        }
        if (rep_gap(pm, pr_lo) < want_sep) {
          lo = tm;
          pr_lo = std::move(pm);
        } else {
          hi = tm;
        }
      }
    }
  }
  return out;
}

int sublevel_component_count(const ImageCloud& cloud, const YVector& y_d, double level) {
  if (!cloud.has_grid()) throw std::invalid_argument("sublevel_component_count: grid clouds only");
  const GridSpec& g = *cloud.grid();
  const std::size_t axis = g.axis_points();
  std::vector<char> inside(axis * axis, 0);
  parallel_for(axis * axis, [&](std::size_t i) {
    const double d = cloud.dist_to(i, y_d);
    inside[i] = (d * d <= level) ? 1 : 0;
  });

  std::vector<char> seen(axis * axis, 0);
  int components = 0;
  std::deque<std::size_t> queue;
  for (std::size_t start = 0; start < axis * axis; ++start) {
    if (!inside[start] || seen[start]) continue;
    ++components;
    seen[start] = 1;
    queue.push_back(start);
    while (!queue.empty()) {
      const std::size_t cur = queue.front();
      queue.pop_front();
      const std::size_t r = cur / axis, c = cur % axis;
      const std::ptrdiff_t moves[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
      for (const auto& mv : moves) {
        const std::ptrdiff_t rr = static_cast<std::ptrdiff_t>(r) + mv[0];
        const std::ptrdiff_t cc = static_cast<std::ptrdiff_t>(c) + mv[1];
        if (rr < 0 || cc < 0 || rr >= static_cast<std::ptrdiff_t>(axis) || cc >= static_cast<std::ptrdiff_t>(axis)) continue;
        const std::size_t nxt = static_cast<std::size_t>(rr) * axis + static_cast<std::size_t>(cc);
        if (inside[nxt] && !seen[nxt]) {
          seen[nxt] = 1;
          queue.push_back(nxt);
        }
      }
    }
  }
  return components;
}

CsvExport export_cloud_csv(const ImageCloud& cloud, const std::string& path, std::size_t stride) {
  if (stride == 0) stride = 1;
  const std::string tmp = path + ".tmp";
  std::ofstream out(tmp, std::ios::binary);
  if (!out) throw std::runtime_error("export_cloud_csv: cannot open " + tmp);
  const int ydim = cloud.dataset().n * cloud.scheme().dy;
  const int m = cloud.scheme().param_count();
  for (int i = 0; i < ydim; ++i) out << "y" << (i + 1) << ",";
  for (int i = 0; i < m; ++i) out << "a" << (i + 1) << (i + 1 < m ? "," : "");
  out << "\r\n";

  char buf[32];
  CsvExport exp;
  exp.path = path;
  for (std::size_t i = 0; i < cloud.size(); i += stride) {
    const YVector y = cloud.value(i);
    const ParamVector a = cloud.params(i);
    for (int j = 0; j < ydim; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", y[j]);
      out << buf << ",";
    }
    for (int j = 0; j < m; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", a[static_cast<std::size_t>(j)]);
      out << buf << (j + 1 < m ? "," : "");
    }
    out << "\r\n";
    exp.rows++;
  }
  out.close();
  std::remove(path.c_str());
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw std::runtime_error("export_cloud_csv: rename failed");
  }
  return exp;
}

}  // namespace conelab
