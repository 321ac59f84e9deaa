#include "conelab/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace conelab {

Scheme Scheme::linear() {
  Scheme s;
  s.kind = SchemeKind::Linear;
  return s;
}

Scheme Scheme::toy_lightning() {
  Scheme s;
  s.kind = SchemeKind::ToyLightning;
  return s;
}

Scheme Scheme::toy_lightning_conic() {
  Scheme s;
  s.kind = SchemeKind::ToyLightningConic;
  return s;
}

Scheme Scheme::free_knot_spline(int p) {
  if (p < 3) throw std::invalid_argument("free_knot_spline: need p >= 3");
  Scheme s;
  s.kind = SchemeKind::FreeKnotSpline;
  s.knots = p;
  return s;
}

Scheme Scheme::feedforward(int dx, int dy, std::vector<int> widths,
                           std::vector<Activation> activations) {
  if (widths.empty()) throw std::invalid_argument("feedforward: need at least one hidden layer");
  if (widths.size() != activations.size()) {
    throw std::invalid_argument("feedforward: one activation per hidden layer");
  }
  for (int w : widths) {
    if (w < 1) throw std::invalid_argument("feedforward: widths must be positive");
  }
  Scheme s;
  s.kind = SchemeKind::FeedForwardNN;
  s.dx = dx;
  s.dy = dy;
  s.widths = std::move(widths);
  s.activations = std::move(activations);
  return s;
}

Scheme Scheme::resnet(int dx, int dy, std::vector<int> widths,
                      std::vector<Activation> activations,
                      std::vector<std::vector<double>> skips) {
  Scheme s = feedforward(dx, dy, std::move(widths), std::move(activations));
  s.kind = SchemeKind::ResNet;
  if (skips.empty()) {
    skips.resize(s.widths.size());
    for (int i = 1; i <= s.depth(); ++i) {
      const int rows = s.width(i), cols = s.width(i - 1);
      skips[static_cast<std::size_t>(i) - 1].assign(static_cast<std::size_t>(rows) * cols, 0.0);
      for (int r = 0; r < std::min(rows, cols); ++r) {
        skips[static_cast<std::size_t>(i) - 1][static_cast<std::size_t>(r) * cols + r] = 1.0;
      }
    }
  } else {
    if (static_cast<int>(skips.size()) != s.depth()) {
      throw std::invalid_argument("resnet: one skip matrix per hidden layer");
    }
    for (int i = 1; i <= s.depth(); ++i) {
      const std::size_t want = static_cast<std::size_t>(s.width(i)) * s.width(i - 1);
      if (skips[static_cast<std::size_t>(i) - 1].size() != want) {
        throw std::invalid_argument("resnet: skip matrix has wrong shape");
      }
    }
  }
  s.skips = std::move(skips);
  return s;
}

int Scheme::width(int i) const {
  if (i == 0) return dx;
  if (i == depth() + 1) return dy;
  return widths[static_cast<std::size_t>(i) - 1];
}

int Scheme::param_count() const {
  switch (kind) {
    case SchemeKind::Linear:
    case SchemeKind::ToyLightning:
      return 2;
    case SchemeKind::ToyLightningConic:
      return 3;
    case SchemeKind::FreeKnotSpline:
      return 2 * knots;
    case SchemeKind::FeedForwardNN:
    case SchemeKind::ResNet: {
      int m = 0;
      for (int i = 1; i <= depth() + 1; ++i) m += width(i) * (width(i - 1) + 1);
      return m;
    }
  }
  return 0;
}

int Scheme::offset_A(int layer) const {
  int off = 0;
  for (int i = 1; i < layer; ++i) off += width(i) * (width(i - 1) + 1);
  return off;
}

int Scheme::offset_b(int layer) const { return offset_A(layer) + width(layer) * width(layer - 1); }

void Scheme::check_domain(const ParamVector& alpha) const {
  if (static_cast<int>(alpha.size()) != param_count()) {
    throw std::invalid_argument("parameters: wrong length for scheme");
  }
  if (kind == SchemeKind::FreeKnotSpline) {
    for (int j = 1; j < knots; ++j) {
      if (!(alpha[static_cast<std::size_t>(offset_gamma() + j - 1)] <
            alpha[static_cast<std::size_t>(offset_gamma() + j)])) {
        throw std::invalid_argument("spline: knots must be strictly increasing");
      }
    }
  }
}

bool Scheme::in_domain(const ParamVector& alpha) const {
  if (static_cast<int>(alpha.size()) != param_count()) return false;
  if (kind == SchemeKind::FreeKnotSpline) {
    for (int j = 1; j < knots; ++j) {
      if (!(alpha[static_cast<std::size_t>(offset_gamma() + j - 1)] <
            alpha[static_cast<std::size_t>(offset_gamma() + j)])) {
        return false;
      }
    }
  }
  return true;
}

ParamVector Scheme::scale_output(const ParamVector& alpha, double s) const {
  check_domain(alpha);
  ParamVector out = alpha;
  switch (kind) {
    case SchemeKind::FreeKnotSpline:
      for (int j = 0; j < knots; ++j) out[static_cast<std::size_t>(j)] *= s;
      return out;
    case SchemeKind::ToyLightningConic:
      out[2] *= s;
      return out;
    case SchemeKind::FeedForwardNN:
    case SchemeKind::ResNet: {
      const int L1 = depth() + 1;
      for (int i = offset_A(L1); i < param_count(); ++i) out[static_cast<std::size_t>(i)] *= s;
      return out;
    }
    default:
      throw std::logic_error("scale_output: scheme is not conic");
  }
}

std::string Scheme::kind_name() const {
  switch (kind) {
    case SchemeKind::Linear: return "linear";
    case SchemeKind::ToyLightning: return "toy_lightning";
    case SchemeKind::ToyLightningConic: return "toy_lightning_conic";
    case SchemeKind::FreeKnotSpline: return "free_knot_spline";
    case SchemeKind::FeedForwardNN: return "feedforward";
    case SchemeKind::ResNet: return "resnet";
  }
  return "?";
}

namespace {

// forward pass for networks; optionally records inputs and pre-activations
struct Forward {
  std::vector<std::vector<double>> inputs;  // z^0 .. z^L
  std::vector<std::vector<double>> pres;    // pre^1 .. pre^L
  std::vector<double> out;
};

Forward forward_net(const Scheme& s, const ParamVector& a, std::span<const double> x,
                    bool record) {
  Forward f;
  const int L = s.depth();
  std::vector<double> z(x.begin(), x.end());
  if (record) f.inputs.push_back(z);
  for (int i = 1; i <= L; ++i) {
    const int rows = s.width(i), cols = s.width(i - 1);
    const double* A = a.data() + s.offset_A(i);
    const double* b = a.data() + s.offset_b(i);
    std::vector<double> pre(static_cast<std::size_t>(rows));
    for (int r = 0; r < rows; ++r) {
      double acc = b[r];
      const double* row = A + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) acc += row[c] * z[static_cast<std::size_t>(c)];
      pre[static_cast<std::size_t>(r)] = acc;
    }
    std::vector<double> znext(static_cast<std::size_t>(rows));
    const Activation& act = s.activations[static_cast<std::size_t>(i) - 1];
    for (int r = 0; r < rows; ++r) znext[static_cast<std::size_t>(r)] = act(pre[static_cast<std::size_t>(r)]);
    if (s.kind == SchemeKind::ResNet) {
      const auto& E = s.skips[static_cast<std::size_t>(i) - 1];
      for (int r = 0; r < rows; ++r) {
        double acc = 0.0;
        const double* row = E.data() + static_cast<std::size_t>(r) * cols;
        for (int c = 0; c < cols; ++c) acc += row[c] * z[static_cast<std::size_t>(c)];
        znext[static_cast<std::size_t>(r)] += acc;
      }
    }
    if (record) {
      f.pres.push_back(std::move(pre));
      f.inputs.push_back(znext);
    }
    z = std::move(znext);
  }
  const int rows = s.dy, cols = s.width(L);
  const double* A = a.data() + s.offset_A(L + 1);
  const double* b = a.data() + s.offset_b(L + 1);
  f.out.assign(static_cast<std::size_t>(rows), 0.0);
  for (int r = 0; r < rows; ++r) {
    double acc = b[r];
    const double* row = A + static_cast<std::size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) acc += row[c] * z[static_cast<std::size_t>(c)];
    f.out[static_cast<std::size_t>(r)] = acc;
  }
  return f;
}

double toy_sigma(double s) {
  return std::min(0.0, std::abs(s + 1.0) - 1.0) + std::max(0.0, 1.0 - std::abs(s - 1.0));
}

// branch index j with gamma_j < x <= gamma_{j+1}; 0 for x <= gamma_1,
// p for x > gamma_p (constants). Matches the half-open eval convention.
int spline_branch(const Scheme& s, const ParamVector& a, double x) {
  const double* g = a.data() + s.offset_gamma();
  if (x <= g[0]) return 0;
  for (int j = 1; j < s.knots; ++j) {
    if (x <= g[j]) return j;
  }
  return s.knots;
}

double spline_eval(const Scheme& s, const ParamVector& a, double x) {
  const double* beta = a.data() + s.offset_beta();
  const double* g = a.data() + s.offset_gamma();
  const int j = spline_branch(s, a, x);
  if (j == 0) return beta[0];
  if (j == s.knots) return beta[s.knots - 1];
  const double denom = g[j] - g[j - 1];
  return ((g[j] - x) * beta[j - 1] + (x - g[j - 1]) * beta[j]) / denom;
}

}  // namespace

std::vector<double> eval(const Scheme& scheme, const ParamVector& alpha,
                         std::span<const double> x) {
  scheme.check_domain(alpha);
  switch (scheme.kind) {
    case SchemeKind::Linear:
      return {alpha[0] * x[0] + alpha[1]};
    case SchemeKind::ToyLightning:
      return {toy_sigma(alpha[0] * x[0] + alpha[1])};
    case SchemeKind::ToyLightningConic:
      return {alpha[2] * toy_sigma(alpha[0] * x[0] + alpha[1])};
    case SchemeKind::FreeKnotSpline:
      return {spline_eval(scheme, alpha, x[0])};
    case SchemeKind::FeedForwardNN:
    case SchemeKind::ResNet:
      return forward_net(scheme, alpha, x, false).out;
  }
  return {};
}

YVector eval_batch(const Scheme& scheme, const ParamVector& alpha, const Dataset& data) {
  if (data.dx != scheme.dx) throw std::invalid_argument("eval_batch: dataset dx mismatch");
  YVector y(data.n, scheme.dy);
  for (int k = 0; k < data.n; ++k) {
    const std::vector<double> v = eval(scheme, alpha, data.x(k));
    std::copy(v.begin(), v.end(), y.block(k).begin());
  }
  return y;
}

double loss(const Scheme& scheme, const ParamVector& alpha, const Dataset& data,
            const YVector& y_d) {
  YVector r = eval_batch(scheme, alpha, data);
  r -= y_d;
  return inner(r, r);
}

GradResult grad_loss(const Scheme& scheme, const ParamVector& alpha, const Dataset& data,
                     const YVector& y_d) {
  scheme.check_domain(alpha);
  GradResult res;
  res.grad.assign(static_cast<std::size_t>(scheme.param_count()), 0.0);
  const double w = 1.0 / data.n;  // d/dout of (1/2n) sum ||out - y||^2 is (1/n)(out - y)

  auto flag_kink = [&](int layer) {
    res.smooth = false;
    if (std::find(res.kink_layers.begin(), res.kink_layers.end(), layer) == res.kink_layers.end()) {
      res.kink_layers.push_back(layer);
    }
  };

  switch (scheme.kind) {
    case SchemeKind::Linear: {
      for (int k = 0; k < data.n; ++k) {
        const double x = data.x(k)[0];
        const double r = w * (alpha[0] * x + alpha[1] - y_d.block(k)[0]);
        res.grad[0] += r * x;
        res.grad[1] += r;
      }
      return res;
    }
    case SchemeKind::ToyLightning:
    case SchemeKind::ToyLightningConic: {
      const Activation toy = Activation::make(Act::ToyLightning);
      const bool conic = scheme.kind == SchemeKind::ToyLightningConic;
      for (int k = 0; k < data.n; ++k) {
        const double x = data.x(k)[0];
        const double t = alpha[0] * x + alpha[1];
        for (double kk : toy.kinks()) {
          if (std::abs(t - kk) <= kKinkTol) flag_kink(1);
        }
        const double sv = toy_sigma(t);
        const double scale = conic ? alpha[2] : 1.0;
        const double out = scale * sv;
        const double r = w * (out - y_d.block(k)[0]);
        const double ds = toy.deriv(t);
        res.grad[0] += r * scale * ds * x;
        res.grad[1] += r * scale * ds;
        if (conic) res.grad[2] += r * sv;
      }
      return res;
    }
    case SchemeKind::FreeKnotSpline: {
      const int p = scheme.knots;
      const double* beta = alpha.data() + scheme.offset_beta();
      const double* g = alpha.data() + scheme.offset_gamma();
      for (int k = 0; k < data.n; ++k) {
        const double x = data.x(k)[0];
        for (int j = 0; j < p; ++j) {
          if (std::abs(x - g[j]) <= kKinkTol) flag_kink(0);
        }
        const int j = spline_branch(scheme, alpha, x);
        const double r = w * (spline_eval(scheme, alpha, x) - y_d.block(k)[0]);
        if (j == 0) {
          res.grad[0] += r;
        } else if (j == p) {
          res.grad[static_cast<std::size_t>(p) - 1] += r;
        } else {
          const double denom = g[j] - g[j - 1];
          const double tl = (g[j] - x) / denom;      // weight of beta_{j-1}
          const double tr = (x - g[j - 1]) / denom;  // weight of beta_j
          res.grad[static_cast<std::size_t>(j) - 1] += r * tl;
          res.grad[static_cast<std::size_t>(j)] += r * tr;
          const double dbeta = beta[j - 1] - beta[j];
          res.grad[static_cast<std::size_t>(scheme.offset_gamma() + j - 1)] +=
              r * (g[j] - x) * dbeta / (denom * denom);
          res.grad[static_cast<std::size_t>(scheme.offset_gamma() + j)] +=
              r * (x - g[j - 1]) * dbeta / (denom * denom);
        }
      }
      return res;
    }
    case SchemeKind::FeedForwardNN:
    case SchemeKind::ResNet: {
      const int L = scheme.depth();
      for (int k = 0; k < data.n; ++k) {
        Forward f = forward_net(scheme, alpha, data.x(k), true);
        std::vector<double> delta(static_cast<std::size_t>(scheme.dy));
        for (int r = 0; r < scheme.dy; ++r) {
          delta[static_cast<std::size_t>(r)] = w * (f.out[static_cast<std::size_t>(r)] - y_d.block(k)[r]);
        }
        // top layer
        {
          const int rows = scheme.dy, cols = scheme.width(L);
          double* gA = res.grad.data() + scheme.offset_A(L + 1);
          double* gb = res.grad.data() + scheme.offset_b(L + 1);
          const auto& z = f.inputs[static_cast<std::size_t>(L)];
          for (int r = 0; r < rows; ++r) {
            gb[r] += delta[static_cast<std::size_t>(r)];
            for (int c = 0; c < cols; ++c) {
              gA[static_cast<std::size_t>(r) * cols + c] += delta[static_cast<std::size_t>(r)] * z[static_cast<std::size_t>(c)];
            }
          }
          // pull back through A_{L+1}
          const double* A = alpha.data() + scheme.offset_A(L + 1);
          std::vector<double> nd(static_cast<std::size_t>(cols), 0.0);
          for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
              nd[static_cast<std::size_t>(c)] += A[static_cast<std::size_t>(r) * cols + c] * delta[static_cast<std::size_t>(r)];
            }
          }
          delta = std::move(nd);
        }
        for (int i = L; i >= 1; --i) {
          const int rows = scheme.width(i), cols = scheme.width(i - 1);
          const Activation& act = scheme.activations[static_cast<std::size_t>(i) - 1];
          const auto& pre = f.pres[static_cast<std::size_t>(i) - 1];
          const auto& z = f.inputs[static_cast<std::size_t>(i) - 1];
          const auto ks = act.kinks();
          std::vector<double> dsig(static_cast<std::size_t>(rows));
          for (int r = 0; r < rows; ++r) {
            const double t = pre[static_cast<std::size_t>(r)];
            for (double kk : ks) {
              if (std::abs(t - kk) <= kKinkTol) flag_kink(i);
            }
            dsig[static_cast<std::size_t>(r)] = act.deriv(t);
          }
          double* gA = res.grad.data() + scheme.offset_A(i);
          double* gb = res.grad.data() + scheme.offset_b(i);
          for (int r = 0; r < rows; ++r) {
            const double dr = delta[static_cast<std::size_t>(r)] * dsig[static_cast<std::size_t>(r)];
            gb[r] += dr;
            for (int c = 0; c < cols; ++c) {
              gA[static_cast<std::size_t>(r) * cols + c] += dr * z[static_cast<std::size_t>(c)];
            }
          }
          std::vector<double> nd(static_cast<std::size_t>(cols), 0.0);
          const double* A = alpha.data() + scheme.offset_A(i);
          for (int r = 0; r < rows; ++r) {
            const double dr = delta[static_cast<std::size_t>(r)] * dsig[static_cast<std::size_t>(r)];
            for (int c = 0; c < cols; ++c) {
              nd[static_cast<std::size_t>(c)] += A[static_cast<std::size_t>(r) * cols + c] * dr;
            }
          }
          if (scheme.kind == SchemeKind::ResNet) {
            const auto& E = scheme.skips[static_cast<std::size_t>(i) - 1];
            for (int r = 0; r < rows; ++r) {
              for (int c = 0; c < cols; ++c) {
                nd[static_cast<std::size_t>(c)] += E[static_cast<std::size_t>(r) * cols + c] * delta[static_cast<std::size_t>(r)];
              }
            }
          }
          delta = std::move(nd);
        }
      }
      return res;
    }
  }
  return res;
}

std::vector<double> fd_grad(const Scheme& scheme, const ParamVector& alpha, const Dataset& data,
                            const YVector& y_d, double h) {
  scheme.check_domain(alpha);
  std::vector<double> g(alpha.size());
  ParamVector a = alpha;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    const double hi = h * (1.0 + std::abs(alpha[i]));
    a[i] = alpha[i] + hi;
    const double fp = loss(scheme, a, data, y_d);
    a[i] = alpha[i] - hi;
    const double fm = loss(scheme, a, data, y_d);
    a[i] = alpha[i];
    g[i] = (fp - fm) / (2.0 * hi);
  }
  return g;
}

YVector jvp(const Scheme& scheme, const ParamVector& alpha, const Dataset& data,
            const std::vector<double>& h) {
  scheme.check_domain(alpha);
  if (h.size() != alpha.size()) throw std::invalid_argument("jvp: direction size mismatch");
  YVector out(data.n, scheme.dy);
  switch (scheme.kind) {
    case SchemeKind::Linear: {
      for (int k = 0; k < data.n; ++k) out.block(k)[0] = h[0] * data.x(k)[0] + h[1];
      return out;
    }
    case SchemeKind::ToyLightning:
    case SchemeKind::ToyLightningConic: {
      const Activation toy = Activation::make(Act::ToyLightning);
      const bool conic = scheme.kind == SchemeKind::ToyLightningConic;
      for (int k = 0; k < data.n; ++k) {
        const double x = data.x(k)[0];
        const double t = alpha[0] * x + alpha[1];
        const double dt = h[0] * x + h[1];
        const double scale = conic ? alpha[2] : 1.0;
        double d = scale * toy.deriv(t) * dt;
        if (conic) d += h[2] * toy_sigma(t);
        out.block(k)[0] = d;
      }
      return out;
    }
    case SchemeKind::FreeKnotSpline: {
      // directional derivative via the analytic branch gradient
      const int p = scheme.knots;
      const double* beta = alpha.data() + scheme.offset_beta();
      const double* g = alpha.data() + scheme.offset_gamma();
      for (int k = 0; k < data.n; ++k) {
        const double x = data.x(k)[0];
        const int j = spline_branch(scheme, alpha, x);
        double d = 0.0;
        if (j == 0) {
          d = h[0];
        } else if (j == p) {
          d = h[static_cast<std::size_t>(p) - 1];
        } else {
          const double denom = g[j] - g[j - 1];
          const double dbeta = beta[j - 1] - beta[j];
          d = ((g[j] - x) / denom) * h[static_cast<std::size_t>(j) - 1] +
              ((x - g[j - 1]) / denom) * h[static_cast<std::size_t>(j)] +
              ((g[j] - x) * dbeta / (denom * denom)) * h[static_cast<std::size_t>(scheme.offset_gamma() + j - 1)] +
              ((x - g[j - 1]) * dbeta / (denom * denom)) * h[static_cast<std::size_t>(scheme.offset_gamma() + j)];
        }
        out.block(k)[0] = d;
      }
      return out;
    }
    case SchemeKind::FeedForwardNN:
    case SchemeKind::ResNet: {
      const int L = scheme.depth();
      for (int k = 0; k < data.n; ++k) {
        std::span<const double> x = data.x(k);
        std::vector<double> z(x.begin(), x.end());
        std::vector<double> dz(z.size(), 0.0);
        for (int i = 1; i <= L + 1; ++i) {
          const int rows = scheme.width(i), cols = scheme.width(i - 1);
          const double* A = alpha.data() + scheme.offset_A(i);
          const double* b = alpha.data() + scheme.offset_b(i);
          const double* dA = h.data() + scheme.offset_A(i);
          const double* db = h.data() + scheme.offset_b(i);
          std::vector<double> pre(static_cast<std::size_t>(rows)), dpre(static_cast<std::size_t>(rows));
          for (int r = 0; r < rows; ++r) {
            double acc = b[r], dacc = db[r];
            for (int c = 0; c < cols; ++c) {
              acc += A[static_cast<std::size_t>(r) * cols + c] * z[static_cast<std::size_t>(c)];
              dacc += dA[static_cast<std::size_t>(r) * cols + c] * z[static_cast<std::size_t>(c)] +
                      A[static_cast<std::size_t>(r) * cols + c] * dz[static_cast<std::size_t>(c)];
            }
            pre[static_cast<std::size_t>(r)] = acc;
            dpre[static_cast<std::size_t>(r)] = dacc;
          }
          if (i == L + 1) {
            z = std::move(pre);
            dz = std::move(dpre);
            break;
          }
          const Activation& act = scheme.activations[static_cast<std::size_t>(i) - 1];
          std::vector<double> zn(static_cast<std::size_t>(rows)), dzn(static_cast<std::size_t>(rows));
          for (int r = 0; r < rows; ++r) {
            zn[static_cast<std::size_t>(r)] = act(pre[static_cast<std::size_t>(r)]);
            dzn[static_cast<std::size_t>(r)] = act.deriv(pre[static_cast<std::size_t>(r)]) * dpre[static_cast<std::size_t>(r)];
          }
          if (scheme.kind == SchemeKind::ResNet) {
            const auto& E = scheme.skips[static_cast<std::size_t>(i) - 1];
            for (int r = 0; r < rows; ++r) {
              for (int c = 0; c < cols; ++c) {
                zn[static_cast<std::size_t>(r)] += E[static_cast<std::size_t>(r) * cols + c] * z[static_cast<std::size_t>(c)];
                dzn[static_cast<std::size_t>(r)] += E[static_cast<std::size_t>(r) * cols + c] * dz[static_cast<std::size_t>(c)];
              }
            }
          }
          z = std::move(zn);
          dz = std::move(dzn);
        }
        std::copy(dz.begin(), dz.end(), out.block(k).begin());
      }
      return out;
    }
  }
  return out;
}

}  // namespace conelab
