#include "conelab/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace conelab {

json to_json(const YVector& y) {
  json blocks = json::array();
  for (int k = 0; k < y.n(); ++k) {
    json b = json::array();
    for (double v : y.block(k)) b.push_back(v);
    blocks.push_back(std::move(b));
  }
  return json{{"n", y.n()}, {"dy", y.dy()}, {"blocks", std::move(blocks)}};
}

YVector yvector_from_json(const json& j) {
  const int n = j.at("n").get<int>();
  const int dy = j.at("dy").get<int>();
  YVector y(n, dy);
  const auto& blocks = j.at("blocks");
  if (static_cast<int>(blocks.size()) != n) throw std::invalid_argument("yvector: block count");
  for (int k = 0; k < n; ++k) {
    const auto& b = blocks[static_cast<std::size_t>(k)];
    if (static_cast<int>(b.size()) != dy) throw std::invalid_argument("yvector: block size");
    for (int c = 0; c < dy; ++c) y.block(k)[c] = b[static_cast<std::size_t>(c)].get<double>();
  }
  return y;
}

json to_json(const Dataset& d) {
  json xs = json::array();
  for (int k = 0; k < d.n; ++k) {
    json row = json::array();
    for (double v : d.x(k)) row.push_back(v);
    xs.push_back(std::move(row));
  }
  json out{{"n", d.n}, {"dx", d.dx}, {"xs", std::move(xs)}};
  if (d.labels) out["labels"] = to_json(*d.labels);
  return out;
}

Dataset dataset_from_json(const json& j) {
  const int n = j.at("n").get<int>();
  const int dx = j.at("dx").get<int>();
  std::vector<double> xs;
  xs.reserve(static_cast<std::size_t>(n) * dx);
  for (const auto& row : j.at("xs")) {
    for (const auto& v : row) xs.push_back(v.get<double>());
  }
  std::optional<YVector> labels;
  if (j.contains("labels")) labels = yvector_from_json(j.at("labels"));
  return Dataset::create(n, dx, std::move(xs), std::move(labels));
}

json to_json(const Scheme& s) {
  json out{{"variant", s.kind_name()}, {"dx", s.dx}, {"dy", s.dy}};
  if (s.kind == SchemeKind::FreeKnotSpline) out["knots"] = s.knots;
  if (s.is_network()) {
    out["widths"] = s.widths;
    json acts = json::array();
    for (const auto& a : s.activations) acts.push_back(json{{"tag", a.name()}, {"c", a.c}});
    out["activations"] = std::move(acts);
    if (s.kind == SchemeKind::ResNet) out["skips"] = s.skips;
  }
  return out;
}

Scheme scheme_from_json(const json& j) {
  const std::string variant = j.at("variant").get<std::string>();
  if (variant == "linear") return Scheme::linear();
  if (variant == "toy_lightning") return Scheme::toy_lightning();
  if (variant == "toy_lightning_conic") return Scheme::toy_lightning_conic();
  if (variant == "free_knot_spline") return Scheme::free_knot_spline(j.at("knots").get<int>());
  if (variant == "feedforward" || variant == "resnet") {
    std::vector<int> widths = j.at("widths").get<std::vector<int>>();
    std::vector<Activation> acts;
    for (const auto& a : j.at("activations")) {
      if (a.is_string()) {
        acts.push_back(Activation::parse(a.get<std::string>()));
      } else {
        acts.push_back(Activation::parse(a.at("tag").get<std::string>(),
                                         a.contains("c") ? std::optional<double>(a.at("c").get<double>())
                                                         : std::nullopt));
      }
    }
    const int dx = j.at("dx").get<int>();
    const int dy = j.at("dy").get<int>();
    if (variant == "feedforward") return Scheme::feedforward(dx, dy, std::move(widths), std::move(acts));
    std::vector<std::vector<double>> skips;
    if (j.contains("skips")) skips = j.at("skips").get<std::vector<std::vector<double>>>();
    return Scheme::resnet(dx, dy, std::move(widths), std::move(acts), std::move(skips));
  }
  throw std::invalid_argument("scheme: unknown variant '" + variant + "'");
}

json params_to_json(const Scheme& s, const ParamVector& a) {
  s.check_domain(a);
  json out;
  switch (s.kind) {
    case SchemeKind::Linear:
    case SchemeKind::ToyLightning:
    case SchemeKind::ToyLightningConic:
      out["alpha"] = a;
      return out;
    case SchemeKind::FreeKnotSpline: {
      out["beta"] = std::vector<double>(a.begin(), a.begin() + s.knots);
      out["gamma"] = std::vector<double>(a.begin() + s.knots, a.end());
      return out;
    }
    case SchemeKind::FeedForwardNN:
    case SchemeKind::ResNet: {
      json layers = json::array();
      for (int i = 1; i <= s.depth() + 1; ++i) {
        const int rows = s.width(i), cols = s.width(i - 1);
        json A = json::array();
        for (int r = 0; r < rows; ++r) {
          json row = json::array();
          for (int c = 0; c < cols; ++c) row.push_back(a[static_cast<std::size_t>(s.offset_A(i) + r * cols + c)]);
          A.push_back(std::move(row));
        }
        json b = json::array();
        for (int r = 0; r < rows; ++r) b.push_back(a[static_cast<std::size_t>(s.offset_b(i) + r)]);
        layers.push_back(json{{"A", std::move(A)}, {"b", std::move(b)}});
      }
      out["layers"] = std::move(layers);
      return out;
    }
  }
  return out;
}

ParamVector params_from_json(const Scheme& s, const json& j) {
  ParamVector a(static_cast<std::size_t>(s.param_count()), 0.0);
  switch (s.kind) {
    case SchemeKind::Linear:
    case SchemeKind::ToyLightning:
    case SchemeKind::ToyLightningConic:
      a = j.at("alpha").get<std::vector<double>>();
      break;
    case SchemeKind::FreeKnotSpline: {
      const auto beta = j.at("beta").get<std::vector<double>>();
      const auto gamma = j.at("gamma").get<std::vector<double>>();
      std::copy(beta.begin(), beta.end(), a.begin());
      std::copy(gamma.begin(), gamma.end(), a.begin() + s.knots);
      break;
    }
    case SchemeKind::FeedForwardNN:
    case SchemeKind::ResNet: {
      const auto& layers = j.at("layers");
      for (int i = 1; i <= s.depth() + 1; ++i) {
        const auto& layer = layers[static_cast<std::size_t>(i) - 1];
        const int rows = s.width(i), cols = s.width(i - 1);
        for (int r = 0; r < rows; ++r) {
          for (int c = 0; c < cols; ++c) {
            a[static_cast<std::size_t>(s.offset_A(i) + r * cols + c)] =
                layer.at("A")[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
          }
          a[static_cast<std::size_t>(s.offset_b(i) + r)] = layer.at("b")[static_cast<std::size_t>(r)].get<double>();
        }
      }
      break;
    }
  }
  s.check_domain(a);
  return a;
}

namespace {

const char* kind_name(CertificateKind k) {
  switch (k) {
    case CertificateKind::SpuriousMin: return "spurious-min";
    case CertificateKind::SaddleOrSpuriousPair: return "saddle-or-spurious-pair";
    case CertificateKind::RegularizedSpurious: return "regularized-spurious";
  }
  return "?";
}

CertificateKind kind_from_name(const std::string& s) {
  if (s == "spurious-min") return CertificateKind::SpuriousMin;
  if (s == "saddle-or-spurious-pair") return CertificateKind::SaddleOrSpuriousPair;
  if (s == "regularized-spurious") return CertificateKind::RegularizedSpurious;
  throw std::invalid_argument("certificate: unknown kind '" + s + "'");
}

}  // namespace

json to_json(const GrowthReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    json row{{"h_norm", r.h_norm},
             {"lhs", r.lhs},
             {"rhs", r.rhs},
             {"inside_rho", r.inside_rho},
             {"inequality_pass", r.inequality_pass}};
    if (r.equality_pass) row["equality_pass"] = *r.equality_pass;
    rows.push_back(std::move(row));
  }
  return json{{"rows", std::move(rows)},
              {"radius_exceeds_rho", report.radius_exceeds_rho},
              {"all_pass", report.all_pass},
              {"slack", 1e-9}};
}

json to_json(const SpuriousCertificate& cert) {
  json out{{"kind", kind_name(cert.kind)},
           {"scheme", to_json(cert.scheme)},
           {"dataset", to_json(cert.dataset)},
           {"dataset_hash", dataset_hash(cert.dataset)},
           {"alpha_bar", params_to_json(cert.scheme, cert.alpha_bar)},
           {"y_d", to_json(cert.y_d)},
           {"witness", params_to_json(cert.scheme, cert.witness)},
           {"loss_at_bar", cert.loss_at_bar},
           {"witness_loss", cert.witness_loss},
           {"gap", cert.gap},
           {"s", cert.s},
           {"v", to_json(cert.v)},
           {"theta_used", cert.theta_used},
           {"rho", cert.rho},
           {"provenance", cert.provenance},
           {"seed", cert.seed},
           {"growth_report", to_json(cert.growth)},
           {"tolerances", json{{"growth_slack", 1e-9}, {"min_gap_rel", 1e-9}}}};
  if (cert.grad_norm) out["grad_norm"] = *cert.grad_norm;
  return out;
}

SpuriousCertificate certificate_from_json(const json& j) {
  SpuriousCertificate cert;
  cert.kind = kind_from_name(j.at("kind").get<std::string>());
  cert.scheme = scheme_from_json(j.at("scheme"));
  cert.dataset = dataset_from_json(j.at("dataset"));
  cert.alpha_bar = params_from_json(cert.scheme, j.at("alpha_bar"));
  cert.y_d = yvector_from_json(j.at("y_d"));
  cert.witness = params_from_json(cert.scheme, j.at("witness"));
  cert.loss_at_bar = j.at("loss_at_bar").get<double>();
  cert.witness_loss = j.at("witness_loss").get<double>();
  cert.gap = j.at("gap").get<double>();
  cert.s = j.at("s").get<double>();
  cert.v = yvector_from_json(j.at("v"));
  cert.theta_used = j.at("theta_used").get<double>();
  cert.rho = j.at("rho").get<double>();
  cert.provenance = j.at("provenance").get<std::string>();
  cert.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("grad_norm")) cert.grad_norm = j.at("grad_norm").get<double>();
  return cert;
}

json to_json(const ThetaEstimate& est) {
  json samples = json::array();
  for (const auto& s : est.samples) {
    json rec{{"best_loss", s.best_loss}, {"starts_used", s.starts_used}, {"y_d", to_json(s.y_d)}};
    if (std::isfinite(s.witness_loss)) rec["witness_loss"] = s.witness_loss;
    samples.push_back(std::move(rec));
  }
  return json{{"heuristic", est.heuristic},
              {"cap", est.cap},
              {"certified", "cap-only"},
              {"samples", std::move(samples)}};
}

json to_json(const JungReport& report) {
  json trials = json::array();
  for (const auto& t : report.trials) {
    trials.push_back(json{{"diameter", t.diameter}, {"bound", t.bound}, {"pass", t.pass},
                          {"points", t.num_points}});
  }
  return json{{"d", report.d},
              {"r", report.r},
              {"all_pass", report.all_pass},
              {"worst_slack", report.worst_slack},
              {"trials", std::move(trials)}};
}

json to_json(const RegSpuriousCertificate& cert, const Scheme& scheme, const Dataset& data) {
  return json{{"kind", "regularized-spurious"},
              {"scheme", to_json(scheme)},
              {"dataset", to_json(data)},
              {"dataset_hash", dataset_hash(data)},
              {"alpha_bar", params_to_json(scheme, cert.alpha_bar)},
              {"y_d", to_json(cert.y_d)},
              {"witness", params_to_json(scheme, cert.witness)},
              {"nu", cert.nu},
              {"p", cert.p},
              {"C", cert.C},
              {"loss_at_bar", cert.loss_at_bar},
              {"witness_reg_gap", cert.witness_reg_gap},
              {"s", cert.s},
              {"v", to_json(cert.v)},
              {"growth_radius", cert.growth_radius},
              {"seed", cert.seed}};
}

std::string dataset_hash(const Dataset& d) {
  const std::string payload = to_json(d).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : payload) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_json_atomic(const json& j, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("write_json_atomic: cannot open " + tmp);
    out << j.dump(2) << "\n";
  }
  std::remove(path.c_str());
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw std::runtime_error("write_json_atomic: rename failed for " + path);
  }
}

json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_json: cannot open " + path);
  json j;
  in >> j;
  return j;
}

}  // namespace conelab
