#include "conelab/yspace.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace conelab {

YVector::YVector(int n, int dy, std::vector<double> flat) : n_(n), dy_(dy), data_(std::move(flat)) {
  if (static_cast<int>(data_.size()) != n * dy) {
    throw std::invalid_argument("YVector: flat size does not match n*dy");
  }
}

YVector& YVector::operator+=(const YVector& o) {
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

YVector& YVector::operator-=(const YVector& o) {
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

YVector& YVector::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

void YVector::axpy(double s, const YVector& o) {
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * o.data_[i];
}

double inner(const YVector& y, const YVector& z) {
  if (y.n() != z.n() || y.dy() != z.dy()) {
    throw std::invalid_argument("inner: dimension mismatch");
  }
  double acc = 0.0;
  const auto& a = y.flat();
  const auto& b = z.flat();
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc / (2.0 * y.n());
}

double norm(const YVector& y) { return std::sqrt(inner(y, y)); }

std::vector<double> SubspaceBasis::coefficients(const YVector& y) const {
  std::vector<double> c(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) c[i] = inner(y, vectors[i]);
  return c;
}

YVector SubspaceBasis::project(const YVector& y) const {
  YVector p(n, dy);
  for (const auto& b : vectors) p.axpy(inner(y, b), b);
  return p;
}

double SubspaceBasis::residual_norm(const YVector& y) const {
  YVector r = y;
  r -= project(y);
  return norm(r);
}

SubspaceBasis orthonormalize(const std::vector<YVector>& raw, double drop_tol) {
  if (raw.empty()) throw std::invalid_argument("orthonormalize: empty input");
  double max_norm = 0.0;
  for (const auto& v : raw) max_norm = std::max(max_norm, norm(v));
  if (max_norm == 0.0) throw std::invalid_argument("orthonormalize: all vectors degenerate");

  SubspaceBasis basis(raw[0].n(), raw[0].dy());
  const double cutoff = drop_tol * max_norm;
  for (const auto& v : raw) {
    YVector w = v;
    // two MGS sweeps keep the Gram matrix at identity to ~1e-15
    for (int sweep = 0; sweep < 2; ++sweep) {
      for (const auto& b : basis.vectors) w.axpy(-inner(w, b), b);
    }
    const double wn = norm(w);
    if (wn < cutoff) continue;
    w *= 1.0 / wn;
    basis.vectors.push_back(std::move(w));
  }
  if (basis.vectors.empty()) {
    throw std::invalid_argument("orthonormalize: all vectors degenerate");
  }
  return basis;
}

YVector complement_direction(const SubspaceBasis& basis, Rng& rng) {
  if (basis.dim() >= basis.ambient_dim()) {
    throw std::invalid_argument("complement_direction: basis spans Y");
  }
  for (int attempt = 0; attempt < 64; ++attempt) {
    YVector v(basis.n, basis.dy, rng.normal_vec(static_cast<std::size_t>(basis.ambient_dim())));
    const double vn = norm(v);
    if (vn < 1e-12) continue;
    for (int sweep = 0; sweep < 2; ++sweep) {
      for (const auto& b : basis.vectors) v.axpy(-inner(v, b), b);
    }
    const double rn = norm(v);
    if (rn > 1e-8 * vn) {
      v *= 1.0 / rn;
      return v;
    }
  }
  throw std::runtime_error("complement_direction: failed to find orthogonal direction");
}

ConeDecomposition decompose(const YVector& y, const SubspaceBasis& basis) {
  ConeDecomposition d;
  d.y1 = basis.project(y);
  d.y2 = y;
  d.y2 -= d.y1;
  d.ratio = norm(d.y2) / std::max(norm(d.y1), 1e-300);
  return d;
}

ConeTestResult cone_K_test(const YVector& y_d, const SubspaceBasis& basis, double theta) {
  if (!(theta >= 0.0 && theta < 1.0)) {
    throw std::invalid_argument("cone_K_test: theta must lie in [0,1)");
  }
  ConeTestResult res;
  res.decomposition = decompose(y_d, basis);
  const double n1 = norm(res.decomposition.y1);
  const double n2 = norm(res.decomposition.y2);
  res.threshold = std::sqrt(theta / (1.0 - theta)) * n1;
  if (n1 <= 1e-300) {
    res.member = n2 > 0.0;
  } else {
    res.member = n2 > res.threshold;
  }
  return res;
}

double jung_bound(int d, double r) { return std::sqrt((2.0 * d + 2.0) / d) * r; }

namespace {

double set_diameter(const std::vector<YVector>& pts) {
  double diam = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      YVector diff = pts[i];
      diff -= pts[j];
      diam = std::max(diam, norm(diff));
    }
  }
  return diam;
}

}  // namespace

JungReport jung_check(int d, double r, int trials, std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("jung_check: d must be >= 1");
  if (!(r > 0.0)) throw std::invalid_argument("jung_check: r must be positive");

  JungReport report;
  report.d = d;
  report.r = r;
  report.trials.resize(static_cast<std::size_t>(trials));
  report.worst_slack = std::numeric_limits<double>::infinity();

  const int n = std::max(d, 2);  // ambient Y with dim = n >= d
  const double bound = jung_bound(d, r);

  for (int t = 0; t < trials; ++t) {
    Rng rng = split(seed, static_cast<std::uint64_t>(t));
    // orthonormal basis of a random d-dimensional subspace
    std::vector<YVector> raw;
    for (int i = 0; i < d; ++i) raw.emplace_back(n, 1, rng.normal_vec(static_cast<std::size_t>(n)));
    SubspaceBasis sub = orthonormalize(raw, 1e-12);
    while (sub.dim() < d) {  // almost never; resample the missing directions
      raw.emplace_back(n, 1, rng.normal_vec(static_cast<std::size_t>(n)));
      sub = orthonormalize(raw, 1e-12);
    }
    YVector center(n, 1, rng.normal_vec(static_cast<std::size_t>(n)));

    // antipodal pairs z = center +- r * u force center into conv(E)
    const int pairs = (d == 1) ? 1 : 1 + static_cast<int>(rng.u64() % 4);
    std::vector<YVector> pts;
    for (int p = 0; p < pairs; ++p) {
      std::vector<double> u = rng.unit_sphere(static_cast<std::size_t>(d));
      YVector dir(n, 1);
      for (int i = 0; i < d; ++i) dir.axpy(u[static_cast<std::size_t>(i)], sub.vectors[static_cast<std::size_t>(i)]);
      // basis vectors are unit in Y-norm, so dir is too
      YVector zp = center;
      zp.axpy(r, dir);
      YVector zm = center;
      zm.axpy(-r, dir);
      pts.push_back(std::move(zp));
      pts.push_back(std::move(zm));
    }
    const double diam = set_diameter(pts);
    JungTrial trial{diam, bound, diam >= bound - 1e-9, static_cast<int>(pts.size())};
    report.all_pass = report.all_pass && trial.pass;
    report.worst_slack = std::min(report.worst_slack, diam - bound);
    report.trials[static_cast<std::size_t>(t)] = trial;
  }
  return report;
}

JungTrial jung_equilateral_d2(double r) {
  if (!(r > 0.0)) throw std::invalid_argument("jung_equilateral_d2: r must be positive");
  const int n = 3;
  // fixed orthonormal 2d frame in Y = R^3 with the 1/(2n) product
  std::vector<YVector> raw;
  raw.emplace_back(n, 1, std::vector<double>{1.0, 0.0, 0.0});
  raw.emplace_back(n, 1, std::vector<double>{0.0, 1.0, 0.0});
  SubspaceBasis sub = orthonormalize(raw, 1e-12);
  YVector center(n, 1);
  const double s3 = std::sqrt(3.0) / 2.0;
  const double us[3][2] = {{1.0, 0.0}, {-0.5, s3}, {-0.5, -s3}};
  std::vector<YVector> pts;
  for (auto& u : us) {
    YVector z = center;
    z.axpy(r * u[0], sub.vectors[0]);
    z.axpy(r * u[1], sub.vectors[1]);
    pts.push_back(std::move(z));
  }
  const double diam = set_diameter(pts);
  const double bound = jung_bound(2, r);
  return JungTrial{diam, bound, diam >= bound - 1e-9, 3};
}

}  // namespace conelab
