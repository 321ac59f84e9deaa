#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "conelab/rng.hpp"

namespace conelab {

// Element of Y = R^{d_y} x ... x R^{d_y} (n blocks) carrying the 1/(2n)-scaled
// inner product. Block k holds the value attached to the k-th sample.
class YVector {
 public:
  YVector() = default;
  YVector(int n, int dy) : n_(n), dy_(dy), data_(static_cast<std::size_t>(n) * dy, 0.0) {}
  YVector(int n, int dy, std::vector<double> flat);

  int n() const { return n_; }
  int dy() const { return dy_; }
  int size() const { return n_ * dy_; }

  double operator[](int i) const { return data_[static_cast<std::size_t>(i)]; }
  double& operator[](int i) { return data_[static_cast<std::size_t>(i)]; }

  std::span<const double> block(int k) const {
    return {data_.data() + static_cast<std::size_t>(k) * dy_, static_cast<std::size_t>(dy_)};
  }
  std::span<double> block(int k) {
    return {data_.data() + static_cast<std::size_t>(k) * dy_, static_cast<std::size_t>(dy_)};
  }

  const std::vector<double>& flat() const { return data_; }

  YVector& operator+=(const YVector& o);
  YVector& operator-=(const YVector& o);
  YVector& operator*=(double s);
  // this += s * o
  void axpy(double s, const YVector& o);

  friend YVector operator+(YVector a, const YVector& b) { return a += b; }
  friend YVector operator-(YVector a, const YVector& b) { return a -= b; }
  friend YVector operator*(double s, YVector a) { return a *= s; }

 private:
  int n_ = 0;
  int dy_ = 0;
  std::vector<double> data_;
};

// (y, z)_Y = 1/(2n) sum_k <block_k(y), block_k(z)>. Throws on shape mismatch.
double inner(const YVector& y, const YVector& z);
double norm(const YVector& y);

// Orthonormal (w.r.t. (.,.)_Y) family spanning a subspace of Y. The ambient
// shape is kept so that empty bases stay usable.
struct SubspaceBasis {
  int n = 0;
  int dy = 0;
  std::vector<YVector> vectors;

  SubspaceBasis() = default;
  SubspaceBasis(int n_, int dy_) : n(n_), dy(dy_) {}

  int dim() const { return static_cast<int>(vectors.size()); }
  int ambient_dim() const { return n * dy; }

  // Coefficients (y, b_i)_Y of the orthogonal projection onto the span.
  std::vector<double> coefficients(const YVector& y) const;
  YVector project(const YVector& y) const;
  // || y - project(y) ||_Y
  double residual_norm(const YVector& y) const;
};

// Modified Gram-Schmidt with one reorthogonalization pass. Vectors whose
// residual norm falls below drop_tol * (largest input norm) are dropped.
// Throws if raw is empty or every vector degenerates.
SubspaceBasis orthonormalize(const std::vector<YVector>& raw, double drop_tol = 1e-9);

// Unit vector orthogonal to every basis vector, |(v, b)_Y| <= 1e-10.
// Throws if the basis already spans Y.
YVector complement_direction(const SubspaceBasis& basis, Rng& rng);

struct ConeDecomposition {
  YVector y1;    // component in V
  YVector y2;    // component in the orthogonal complement
  double ratio;  // ||y2|| / max(||y1||, tiny)
};

ConeDecomposition decompose(const YVector& y, const SubspaceBasis& basis);

struct ConeTestResult {
  bool member;
  ConeDecomposition decomposition;
  double threshold;  // sqrt(theta/(1-theta)) * ||y1||
};

// Strict test ||y2|| > sqrt(theta/(1-theta)) * ||y1||. Requires theta in [0,1).
ConeTestResult cone_K_test(const YVector& y_d, const SubspaceBasis& basis, double theta);

struct JungTrial {
  double diameter;
  double bound;
  bool pass;
  int num_points;
};

struct JungReport {
  int d = 0;
  double r = 0.0;
  std::vector<JungTrial> trials;
  bool all_pass = true;
  double worst_slack = 0.0;  // min over trials of diameter - bound
};

// Randomized check of the diameter bound sqrt((2d+2)/d) * r for finite
// equidistant sets with the center in their convex hull. Point sets are built
// from antipodal pairs inside a random d-dimensional affine subspace of Y, so
// the hypothesis holds by construction. Requires d >= 1, r > 0.
JungReport jung_check(int d, double r, int trials, std::uint64_t seed);

// The d=2 extremal configuration: equilateral triangle at radius r. Returns
// {diameter, bound}.
JungTrial jung_equilateral_d2(double r);

double jung_bound(int d, double r);

}  // namespace conelab
