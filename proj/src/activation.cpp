#include "conelab/activation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace conelab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double stable_sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

// log(1 + e^s) without overflowing for large s
double stable_softplus(double s) {
  if (s > 0.0) return s + std::log1p(std::exp(-s));
  return std::log1p(std::exp(s));
}

double toy_lightning(double s) {
  return std::min(0.0, std::abs(s + 1.0) - 1.0) + std::max(0.0, 1.0 - std::abs(s - 1.0));
}

double toy_lightning_deriv(double s) {
  // slopes: 0 | -1 | +1 | -1 | 0 on (-inf,-2), (-2,-1), (-1,1), (1,2), (2,inf);
  // right derivative at the kinks
  if (s < -2.0) return 0.0;
  if (s < -1.0) return -1.0;
  if (s < 1.0) return 1.0;
  if (s < 2.0) return -1.0;
  return 0.0;
}
}  // namespace

Activation Activation::make(Act tag) {
  Activation a;
  a.tag = tag;
  switch (tag) {
    case Act::Heaviside: a.c = 1.0; break;
    case Act::LeakyReLU: a.c = 0.01; break;
    default: a.c = 1.0; break;
  }
  return a;
}

Activation Activation::make(Act tag, double c) {
  Activation a = make(tag);
  a.c = c;
  if (tag == Act::ISRU || tag == Act::ISRLU) {
    if (!(c > 0.0)) throw std::invalid_argument("activation: c must be > 0 for ISRU/ISRLU");
  }
  if (tag == Act::SoftClip && !(c > 0.0)) {
    throw std::invalid_argument("activation: c must be > 0 for SoftClip");
  }
  if (tag == Act::LeakyReLU && std::abs(std::abs(c) - 1.0) < 1e-15) {
    throw std::invalid_argument("activation: |c| must differ from 1 for LeakyReLU");
  }
  return a;
}

Activation Activation::parse(const std::string& name, std::optional<double> c) {
  static const std::pair<const char*, Act> table[] = {
      {"heaviside", Act::Heaviside}, {"sigmoid", Act::Sigmoid},
      {"tanh", Act::Tanh},           {"arctan", Act::Arctan},
      {"softsign", Act::SoftSign},   {"isru", Act::ISRU},
      {"softclip", Act::SoftClip},   {"sqnl", Act::SQNL},
      {"relu", Act::ReLU},           {"leaky_relu", Act::LeakyReLU},
      {"softplus", Act::SoftPlus},   {"bent_identity", Act::BentIdentity},
      {"silu", Act::SiLU},           {"isrlu", Act::ISRLU},
      {"elu", Act::ELU},             {"toy_lightning", Act::ToyLightning},
  };
  for (const auto& [n, t] : table) {
    if (name == n) return c ? make(t, *c) : make(t);
  }
  throw std::invalid_argument("activation: unknown tag '" + name + "'");
}

std::string Activation::name() const {
  switch (tag) {
    case Act::Heaviside: return "heaviside";
    case Act::Sigmoid: return "sigmoid";
    case Act::Tanh: return "tanh";
    case Act::Arctan: return "arctan";
    case Act::SoftSign: return "softsign";
    case Act::ISRU: return "isru";
    case Act::SoftClip: return "softclip";
    case Act::SQNL: return "sqnl";
    case Act::ReLU: return "relu";
    case Act::LeakyReLU: return "leaky_relu";
    case Act::SoftPlus: return "softplus";
    case Act::BentIdentity: return "bent_identity";
    case Act::SiLU: return "silu";
    case Act::ISRLU: return "isrlu";
    case Act::ELU: return "elu";
    case Act::ToyLightning: return "toy_lightning";
  }
  return "?";
}

double Activation::operator()(double s) const {
  switch (tag) {
    case Act::Heaviside: return s < 0.0 ? 0.0 : (s > 0.0 ? 1.0 : c);
    case Act::Sigmoid: return stable_sigmoid(s);
    case Act::Tanh: return std::tanh(s);
    case Act::Arctan: return std::atan(s);
    case Act::SoftSign: return s / (1.0 + std::abs(s));
    case Act::ISRU: return s / std::sqrt(1.0 + c * s * s);
    case Act::SoftClip: return (stable_softplus(c * s) - stable_softplus(c * (s - 1.0))) / c;
    case Act::SQNL:
      if (s <= -2.0) return -1.0;
      if (s <= 0.0) return s + s * s / 4.0;
      if (s <= 2.0) return s - s * s / 4.0;
      return 1.0;
    case Act::ReLU: return std::max(0.0, s);
    case Act::LeakyReLU: return std::max(0.0, s) + std::min(0.0, c * s);
    case Act::SoftPlus: return stable_softplus(s);
    case Act::BentIdentity: return 0.5 * std::sqrt(s * s + 1.0) - 0.5 + s;
    case Act::SiLU: return s * stable_sigmoid(s);
    case Act::ISRLU: return s < 0.0 ? s / std::sqrt(1.0 + c * s * s) : s;
    case Act::ELU: return s < 0.0 ? c * (std::exp(s) - 1.0) : s;
    case Act::ToyLightning: return toy_lightning(s);
  }
  return 0.0;
}

double Activation::deriv(double s) const {
  switch (tag) {
    case Act::Heaviside: return 0.0;
    case Act::Sigmoid: {
      const double v = stable_sigmoid(s);
      return v * (1.0 - v);
    }
    case Act::Tanh: {
      const double t = std::tanh(s);
      return 1.0 - t * t;
    }
    case Act::Arctan: return 1.0 / (1.0 + s * s);
    case Act::SoftSign: {
      const double d = 1.0 + std::abs(s);
      return 1.0 / (d * d);
    }
    case Act::ISRU: {
      const double d = 1.0 + c * s * s;
      return 1.0 / (d * std::sqrt(d));
    }
    case Act::SoftClip: return stable_sigmoid(c * s) - stable_sigmoid(c * (s - 1.0));
    case Act::SQNL:
      if (s <= -2.0) return 0.0;
      if (s <= 0.0) return 1.0 + s / 2.0;
      if (s <= 2.0) return 1.0 - s / 2.0;
      return 0.0;
    case Act::ReLU: return s >= 0.0 ? 1.0 : 0.0;
    case Act::LeakyReLU: return s >= 0.0 ? 1.0 : c;
    case Act::SoftPlus: return stable_sigmoid(s);
    case Act::BentIdentity: return 0.5 * s / std::sqrt(s * s + 1.0) + 1.0;
    case Act::SiLU: {
      const double v = stable_sigmoid(s);
      return v * (1.0 + s * (1.0 - v));
    }
    case Act::ISRLU: {
      if (s >= 0.0) return 1.0;
      const double d = 1.0 + c * s * s;
      return 1.0 / (d * std::sqrt(d));
    }
    case Act::ELU: return s >= 0.0 ? 1.0 : c * std::exp(s);
    case Act::ToyLightning: return toy_lightning_deriv(s);
  }
  return 0.0;
}

double Activation::deriv2(double s) const {
  switch (tag) {
    case Act::Sigmoid: {
      const double v = stable_sigmoid(s);
      return v * (1.0 - v) * (1.0 - 2.0 * v);
    }
    case Act::Tanh: {
      const double t = std::tanh(s);
      return -2.0 * t * (1.0 - t * t);
    }
    case Act::Arctan: {
      const double d = 1.0 + s * s;
      return -2.0 * s / (d * d);
    }
    case Act::SoftSign: {
      const double d = 1.0 + std::abs(s);
      return (s >= 0.0 ? -2.0 : 2.0) / (d * d * d);
    }
    case Act::ISRU: {
      const double d = 1.0 + c * s * s;
      return -3.0 * c * s / (d * d * std::sqrt(d));
    }
    case Act::SoftClip: {
      const double a = stable_sigmoid(c * s);
      const double b = stable_sigmoid(c * (s - 1.0));
      return c * (a * (1.0 - a) - b * (1.0 - b));
    }
    case Act::SoftPlus: {
      const double v = stable_sigmoid(s);
      return v * (1.0 - v);
    }
    case Act::BentIdentity: {
      const double d = s * s + 1.0;
      return 0.5 / (d * std::sqrt(d));
    }
    case Act::SiLU: {
      const double v = stable_sigmoid(s);
      const double dv = v * (1.0 - v);
      return 2.0 * dv + s * dv * (1.0 - 2.0 * v);
    }
    case Act::ISRLU: {
      if (s >= 0.0) return 0.0;
      const double d = 1.0 + c * s * s;
      return -3.0 * c * s / (d * d * std::sqrt(d));
    }
    default:
      throw std::logic_error("deriv2: activation '" + name() + "' is not twice differentiable");
  }
}

bool Activation::differentiable() const {
  switch (tag) {
    case Act::Heaviside:
    case Act::ReLU:
    case Act::LeakyReLU:
    case Act::ToyLightning:
      return false;
    case Act::ELU:
      return c == 1.0;
    default:
      return true;
  }
}

bool Activation::twice_differentiable() const {
  switch (tag) {
    case Act::Sigmoid:
    case Act::Tanh:
    case Act::Arctan:
    case Act::SoftSign:
    case Act::ISRU:
    case Act::SoftClip:
    case Act::SoftPlus:
    case Act::BentIdentity:
    case Act::SiLU:
    case Act::ISRLU:
      return true;
    default:
      return false;
  }
}

std::optional<Limits> Activation::saturation_limits() const {
  switch (tag) {
    case Act::Heaviside: return Limits{0.0, 1.0};
    case Act::Sigmoid: return Limits{0.0, 1.0};
    case Act::Tanh: return Limits{-1.0, 1.0};
    case Act::Arctan: return Limits{-std::acos(-1.0) / 2.0, std::acos(-1.0) / 2.0};
    case Act::SoftSign: return Limits{-1.0, 1.0};
    case Act::ISRU: return Limits{-1.0 / std::sqrt(c), 1.0 / std::sqrt(c)};
    case Act::SoftClip: return Limits{0.0, 1.0};
    case Act::SQNL: return Limits{-1.0, 1.0};
    default: return std::nullopt;
  }
}

std::optional<Limits> Activation::relu_type_limits() const {
  switch (tag) {
    case Act::ReLU: return Limits{0.0, 1.0};
    case Act::LeakyReLU: return Limits{c, 1.0};
    case Act::SoftPlus: return Limits{0.0, 1.0};
    case Act::BentIdentity: return Limits{0.5, 1.5};
    case Act::SiLU: return Limits{0.0, 1.0};
    case Act::ISRLU: return Limits{0.0, 1.0};
    case Act::ELU: return c != 0.0 ? std::optional<Limits>(Limits{0.0, 1.0}) : std::nullopt;
    default: return std::nullopt;
  }
}

std::optional<Limits> Activation::homogeneous_limits() const {
  switch (tag) {
    case Act::ReLU: return Limits{0.0, 1.0};
    case Act::LeakyReLU: return Limits{c, 1.0};
    case Act::SoftPlus: return Limits{0.0, 1.0};
    case Act::BentIdentity: return Limits{0.5, 1.5};
    case Act::SiLU: return Limits{0.0, 1.0};
    case Act::ISRLU: return Limits{0.0, 1.0};
    case Act::ELU: return Limits{0.0, 1.0};
    default: return std::nullopt;
  }
}

std::optional<AffineSegment> Activation::affine_segment() const {
  switch (tag) {
    case Act::ReLU: return AffineSegment{0.0, kInf, 1.0, 0.0};
    case Act::LeakyReLU: return AffineSegment{0.0, kInf, 1.0, 0.0};
    case Act::ISRLU: return AffineSegment{0.0, kInf, 1.0, 0.0};
    case Act::ELU: return AffineSegment{0.0, kInf, 1.0, 0.0};
    case Act::ToyLightning: return AffineSegment{-1.0, 1.0, 1.0, 0.0};
    default: return std::nullopt;
  }
}

std::optional<ConstSegment> Activation::constant_segment() const {
  switch (tag) {
    case Act::Heaviside: return ConstSegment{0.0, kInf, 1.0};
    case Act::ReLU: return ConstSegment{-kInf, 0.0, 0.0};
    case Act::SQNL: return ConstSegment{2.0, kInf, 1.0};
    case Act::ToyLightning: return ConstSegment{2.0, kInf, 0.0};
    default: return std::nullopt;
  }
}

std::vector<double> Activation::kinks() const {
  switch (tag) {
    case Act::Heaviside:
    case Act::ReLU:
    case Act::LeakyReLU:
      return {0.0};
    case Act::ELU:
      return c == 1.0 ? std::vector<double>{} : std::vector<double>{0.0};
    case Act::ToyLightning:
      return {-2.0, -1.0, 1.0, 2.0};
    default:
      return {};
  }
}

std::vector<double> Activation::monotone_breakpoints() const {
  // between consecutive breakpoints the activation is monotone
  switch (tag) {
    case Act::ToyLightning: return {-2.0, -1.0, 1.0, 2.0};
    case Act::SQNL: return {-2.0, 2.0};
    case Act::ReLU:
    case Act::LeakyReLU:
    case Act::Heaviside:
    case Act::ELU:
    case Act::ISRLU:
      return {0.0};
    default: return {};
  }
}

std::pair<double, double> Activation::range_on(double lo, double hi) const {
  double mn = std::min((*this)(lo), (*this)(hi));
  double mx = std::max((*this)(lo), (*this)(hi));
  for (double b : monotone_breakpoints()) {
    if (b > lo && b < hi) {
      const double v = (*this)(b);
      mn = std::min(mn, v);
      mx = std::max(mx, v);
    }
  }
  if (tag == Act::Heaviside && lo < 0.0 && hi >= 0.0) {
    // value at 0 is c, which may lie outside [sigma(lo), sigma(hi)]
    mn = std::min(mn, c);
    mx = std::max(mx, c);
  }
  return {mn, mx};
}

}  // namespace conelab
