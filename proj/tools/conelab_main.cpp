// Batch front-end: experiment configs in, JSON/CSV reports out.
// Exit codes: 0 all assertions passed, 1 a numerical assertion failed,
// 2 configuration error.

#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>

#include "conelab/io.hpp"
#include "conelab/parallel.hpp"
#include "conelab/projection_lab.hpp"

namespace cl = conelab;
using cl::json;

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

cl::Dataset load_dataset(const json& spec) {
  require_keys(spec, {"xs", "labels", "random", "csv"}, "dataset");
  if (spec.contains("random")) {
    const json& r = spec.at("random");
    require_keys(r, {"n", "dx", "seed"}, "dataset.random");
    return cl::random_dataset(r.at("n").get<int>(), r.value("dx", 1),
                              r.at("seed").get<std::uint64_t>());
  }
  if (spec.contains("csv")) {
    const std::string path = spec.at("csv").get<std::string>();
    std::ifstream in(path);
    if (!in) throw ConfigError("dataset.csv: cannot open " + path);
    std::vector<double> xs;
    int dx = 0;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      int cols = 0;
      std::size_t pos = 0;
      while (pos <= line.size()) {
        std::size_t next = line.find(',', pos);
        if (next == std::string::npos) next = line.size();
        xs.push_back(std::stod(line.substr(pos, next - pos)));
        ++cols;
        pos = next + 1;
      }
      if (dx == 0) {
        dx = cols;
      } else if (cols != dx) {
        throw ConfigError("dataset.csv: ragged rows");
      }
    }
    if (dx == 0) throw ConfigError("dataset.csv: empty file");
    const int n = static_cast<int>(xs.size()) / dx;
    return cl::Dataset::create(n, dx, std::move(xs));
  }
  return cl::dataset_from_json(spec);
}

cl::Scheme load_scheme(const json& spec) {
  require_keys(spec, {"variant", "dx", "dy", "knots", "widths", "activations", "skips"}, "scheme");
  return cl::scheme_from_json(spec);
}

json load_config(const std::string& path) {
  try {
    return cl::read_json(path);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  int jobs = 0;
  std::string out_dir = "out";

  std::uint64_t seed(const json& cfg) const {
    if (seed_override) return *seed_override;
    return cfg.value("seed", 1ull);
  }
  std::string out_path(const std::string& name) const {
    std::filesystem::create_directories(out_dir);
    return (std::filesystem::path(out_dir) / name).string();
  }
};

int finish(const Common& common, const std::string& name, json report, bool pass) {
  report["pass"] = pass;
  const std::string path = common.out_path(name);
  cl::write_json_atomic(report, path);
  std::cout << (pass ? "PASS" : "FAIL") << "  report: " << path << "\n";
  return pass ? 0 : 1;
}

// ---------------------------------------------------------------------------

int run_witness(const Common& common) {
  const json cfg = load_config(common.config_path);
  require_keys(cfg, {"scheme", "dataset", "num_labels", "gamma", "tolerance", "seed", "output"},
               "witness");
  const cl::Scheme scheme = load_scheme(cfg.at("scheme"));
  const cl::Dataset data = load_dataset(cfg.at("dataset"));
  const int num_labels = cfg.value("num_labels", 200);
  const double gamma = cfg.value("gamma", 1e6);
  const double tol = cfg.value("tolerance", 1e-3);
  const std::uint64_t seed = common.seed(cfg);

  const double bound = 1.0 - 1.0 / data.n;
  double worst = 0.0;
  double worst_other_order = 0.0;
  bool all_strict = true;
  for (int i = 0; i < num_labels; ++i) {
    cl::Rng rng = cl::split(seed, static_cast<std::uint64_t>(i));
    const cl::YVector y = cl::random_unit_label(data.n, scheme.dy, rng);
    cl::WitnessOptions opts;
    opts.gamma = gamma;
    opts.seed = cl::mix_seed(seed, static_cast<std::uint64_t>(i));
    const cl::Witness w = cl::expressiveness_witness(scheme, data, y, opts);
    worst = std::max(worst, w.witness_loss);
    all_strict = all_strict && w.witness_loss < 1.0;
    if (w.route == "saturated") {
      opts.order = cl::SaturationOrder::TopDown;
      worst_other_order =
          std::max(worst_other_order, cl::expressiveness_witness(scheme, data, y, opts).witness_loss);
    }
  }
  const bool pass = all_strict && worst <= bound + tol;
  json report{{"command", "witness"},
              {"scheme", cl::to_json(scheme)},
              {"dataset_hash", cl::dataset_hash(data)},
              {"num_labels", num_labels},
              {"gamma", gamma},
              {"bound", bound},
              {"tolerance", tol},
              {"max_witness_loss", worst},
              {"max_witness_loss_top_down", worst_other_order},
              {"seed", seed}};
  return finish(common, cfg.value("output", std::string("witness_report.json")), std::move(report), pass);
}

int run_theta(const Common& common) {
  const json cfg = load_config(common.config_path);
  require_keys(cfg, {"scheme", "dataset", "num_labels", "num_starts", "max_iters", "gamma",
                     "seed", "output"},
               "theta");
  const cl::Scheme scheme = load_scheme(cfg.at("scheme"));
  const cl::Dataset data = load_dataset(cfg.at("dataset"));
  cl::ThetaOptions opts;
  opts.num_labels = cfg.value("num_labels", 16);
  opts.num_starts = cfg.value("num_starts", 8);
  opts.max_iters = cfg.value("max_iters", 2000);
  opts.witness_gamma = cfg.value("gamma", 1e6);
  opts.seed = common.seed(cfg);

  const cl::ThetaEstimate est = cl::theta_heuristic(scheme, data, opts);
  const bool pass = est.heuristic <= est.cap + 1e-3;
  json report = cl::to_json(est);
  report["command"] = "theta";
  report["scheme"] = cl::to_json(scheme);
  report["dataset_hash"] = cl::dataset_hash(data);
  report["seed"] = opts.seed;
  report["solver"] = json{{"num_starts", opts.num_starts}, {"max_iters", opts.max_iters},
                          {"grad_tol", 1e-8}};
  std::cout << "theta heuristic " << est.heuristic << "  cap " << est.cap << "\n";
  return finish(common, cfg.value("output", std::string("theta_report.json")), std::move(report), pass);
}

cl::EmbeddingResult build_embedding(const cl::Scheme& scheme, const cl::Dataset& data,
                                    const json& spec) {
  require_keys(spec, {"type", "A", "b", "a"}, "embed");
  const std::string type = spec.at("type").get<std::string>();
  if (type == "affine") {
    return cl::affine_embed(scheme, data, spec.at("A").get<std::vector<double>>(),
                            spec.at("b").get<std::vector<double>>());
  }
  if (type == "constant") {
    return cl::constant_embed(scheme, data, spec.at("b").get<std::vector<double>>());
  }
  if (type == "freeknot") {
    return cl::freeknot_affine_embed(scheme, data, spec.value("a", 0.0),
                                     spec.contains("b") ? spec.at("b").get<double>() : 0.0);
  }
  throw ConfigError("embed.type: expected affine | constant | freeknot");
}

int run_spurious(const Common& common) {
  const json cfg = load_config(common.config_path);
  require_keys(cfg, {"scheme", "dataset", "embed", "multiplier", "theta", "target_gap",
                     "growth_samples", "gamma", "seed", "output"},
               "spurious");
  const cl::Scheme scheme = load_scheme(cfg.at("scheme"));
  const cl::Dataset data = load_dataset(cfg.at("dataset"));
  const cl::EmbeddingResult emb = build_embedding(scheme, data, cfg.at("embed"));

  cl::SpuriousBuildOptions opts;
  opts.s_multiplier = cfg.value("multiplier", 2.0);
  opts.growth_samples = cfg.value("growth_samples", 200);
  opts.witness_gamma = cfg.value("gamma", 1e6);
  opts.seed = common.seed(cfg);
  if (cfg.contains("theta") && !cfg.at("theta").is_string()) opts.theta = cfg.at("theta").get<double>();
  if (cfg.contains("target_gap")) opts.target_gap = cfg.at("target_gap").get<double>();

  const cl::SpuriousCertificate cert = cl::build_spurious_certificate(scheme, data, emb, opts);
  const cl::SpuriousCheck chk = cl::check_spurious(cert);
  const bool pass = chk.pass && cert.growth.all_pass && cert.rho > 0.0 &&
                    (!opts.target_gap || cert.gap >= *opts.target_gap);

  json report = cl::to_json(cert);
  report["command"] = "spurious";
  report["check_spurious"] = json{{"pass", chk.pass}, {"margin", chk.margin}};
  std::cout << "gap " << cert.gap << "  rho " << cert.rho << "  growth "
            << (cert.growth.all_pass ? "ok" : "violated") << "\n";
  return finish(common, cfg.value("output", std::string("spurious_certificate.json")),
                std::move(report), pass);
}

int run_saddle_pair(const Common& common) {
  const json cfg = load_config(common.config_path);
  require_keys(cfg, {"scheme", "dataset", "s_multiplier", "grad_tol", "seed", "output"},
               "saddle-pair");
  const cl::Scheme scheme = load_scheme(cfg.at("scheme"));
  const cl::Dataset data = load_dataset(cfg.at("dataset"));
  const double mult = cfg.value("s_multiplier", 2.0);
  const double grad_tol = cfg.value("grad_tol", 1e-8);
  const std::uint64_t seed = common.seed(cfg);

  // zero first weight matrix, random remaining coordinates
  cl::Rng rng(seed);
  cl::ParamVector alpha_bar = rng.normal_vec(static_cast<std::size_t>(scheme.param_count()));
  for (int i = 0; i < scheme.width(1) * scheme.dx; ++i) {
    alpha_bar[static_cast<std::size_t>(scheme.offset_A(1) + i)] = 0.0;
  }
  const cl::SubspaceBasis v1 = cl::poly_space_basis(data, 1, scheme.dy);
  cl::Rng vrng = cl::split(seed, 11);
  const cl::YVector v = cl::complement_direction(v1, vrng);
  const cl::YVector base = cl::eval_batch(scheme, alpha_bar, data);
  const double cap = cl::theta_cap(scheme, data.n);
  const double s = std::max(mult * cl::s_threshold(cap, cl::norm(base)), mult);

  bool pass = true;
  json branches = json::array();
  for (int sign = 0; sign < 2; ++sign) {
    cl::YVector y = base;
    y.axpy(sign == 0 ? s : -s, v);
    const cl::StationarityResult st = cl::check_stationarity(scheme, alpha_bar, data, y, grad_tol);
    pass = pass && st.pass;
    branches.push_back(json{{"sign", sign == 0 ? "+" : "-"},
                            {"grad_norm", st.grad_norm},
                            {"stationary", st.pass}});
  }
  const cl::PairClassification pc =
      cl::classify_pair(scheme, alpha_bar, data, base, v, s, cl::mix_seed(seed, 23));
  pass = pass && pc.pair_ok;
  json report{{"command", "saddle-pair"},
              {"scheme", cl::to_json(scheme)},
              {"dataset_hash", cl::dataset_hash(data)},
              {"s", s},
              {"alpha_bar", cl::params_to_json(scheme, alpha_bar)},
              {"stationarity", std::move(branches)},
              {"plus", json{{"class", cl::classification_name(pc.plus.cls)},
                            {"witness_gap", pc.plus.witness_gap}}},
              {"minus", json{{"class", cl::classification_name(pc.minus.cls)},
                             {"witness_gap", pc.minus.witness_gap}}},
              {"pair_ok", pc.pair_ok},
              {"seed", seed}};
  std::cout << "+: " << cl::classification_name(pc.plus.cls)
            << "  -: " << cl::classification_name(pc.minus.cls) << "\n";
  return finish(common, cfg.value("output", std::string("saddle_pair_report.json")),
                std::move(report), pass);
}

int run_reg_spurious(const Common& common) {
  const json cfg = load_config(common.config_path);
  require_keys(cfg, {"scheme", "dataset", "p", "C", "samples", "seed", "output"}, "reg-spurious");
  const cl::Scheme scheme = load_scheme(cfg.at("scheme"));
  const cl::Dataset data = load_dataset(cfg.at("dataset"));
  const double p = cfg.value("p", 2.0);
  const double C = cfg.value("C", 1.0);
  const int samples = cfg.value("samples", 200);
  const std::uint64_t seed = common.seed(cfg);

  cl::Rng rng(seed);
  cl::ParamVector alpha_bar = rng.normal_vec(static_cast<std::size_t>(scheme.param_count()));
  for (int i = 0; i < scheme.width(1) * scheme.dx; ++i) {
    alpha_bar[static_cast<std::size_t>(scheme.offset_A(1) + i)] = 0.0;
  }
  const cl::RegSpuriousCertificate cert = cl::reg_spurious_construct(scheme, data, alpha_bar, p, C, seed);
  cl::RegProblem prob(scheme, data, cert.y_d, cert.nu, p, cert.alpha_bar);
  const cl::RegCertificateReport rep =
      cl::verify_reg_certificate(prob, cert, cert.growth_radius, samples, cl::mix_seed(seed, 31));

  const bool pass = rep.epsilon_positive && rep.gap_pass;
  json report = cl::to_json(cert, scheme, data);
  report["command"] = "reg-spurious";
  report["verify"] = json{{"fitted_epsilon", rep.fitted_epsilon},
                          {"epsilon_positive", rep.epsilon_positive},
                          {"gap", rep.gap},
                          {"gap_pass", rep.gap_pass},
                          {"samples", rep.samples}};
  std::cout << "nu " << cert.nu << "  gap " << rep.gap << "  epsilon " << rep.fitted_epsilon << "\n";
  return finish(common, cfg.value("output", std::string("reg_spurious_certificate.json")),
                std::move(report), pass);
}

int run_reg_kill(const Common& common) {
  const json cfg = load_config(common.config_path);
  require_keys(cfg, {"scheme", "dataset", "nu", "p", "s_grid", "starts", "seed", "output"},
               "reg-kill");
  const cl::Scheme scheme = load_scheme(cfg.at("scheme"));
  const cl::Dataset data = load_dataset(cfg.at("dataset"));
  const cl::KillProbeReport rep = cl::approx_kill_probe(
      scheme, data, cfg.value("nu", 1.0), cfg.value("p", 2.0),
      cfg.at("s_grid").get<std::vector<double>>(), cfg.value("starts", 12), common.seed(cfg));

  json steps = json::array();
  bool zero_at_zero = true;
  for (const auto& s : rep.steps) {
    steps.push_back(json{{"s", s.s},
                         {"best_found", s.best_found},
                         {"value_at_zero", s.value_at_zero},
                         {"zero_optimal", s.zero_optimal}});
    if (s.s == 0.0) zero_at_zero = s.zero_optimal;
  }
  json report{{"command", "reg-kill"},
              {"scheme", cl::to_json(scheme)},
              {"dataset_hash", cl::dataset_hash(data)},
              {"empirical_threshold", rep.empirical_threshold},
              {"predicted_threshold", rep.predicted_threshold},
              {"measured_r", rep.measured_r},
              {"certified", false},
              {"steps", std::move(steps)},
              {"seed", common.seed(cfg)}};
  std::cout << "empirical threshold " << rep.empirical_threshold << "  predicted "
            << rep.predicted_threshold << "\n";
  return finish(common, cfg.value("output", std::string("reg_kill_report.json")),
                std::move(report), zero_at_zero);
}

int run_instability(const Common& common) {
  const json cfg = load_config(common.config_path);
  require_keys(cfg, {"scheme", "dataset", "p", "seed", "output"}, "instability");
  const cl::Scheme scheme = load_scheme(cfg.at("scheme"));
  const cl::Dataset data = load_dataset(cfg.at("dataset"));
  const std::uint64_t seed = common.seed(cfg);

  cl::Rng rng(seed);
  cl::ParamVector alpha_bar = rng.normal_vec(static_cast<std::size_t>(scheme.param_count()));
  for (int i = 0; i < scheme.width(1) * scheme.dx; ++i) {
    alpha_bar[static_cast<std::size_t>(scheme.offset_A(1) + i)] = 0.0;
  }
  const cl::InstabilityDemo demo =
      cl::reg_instability_demo(scheme, data, alpha_bar, cfg.value("p", 2.0), seed);
  json trace = json::array();
  for (const auto& t : demo.trace) {
    trace.push_back(json{{"s", t.s}, {"F", t.F}, {"value_at_bar", t.value_at_bar}});
  }
  json report{{"command", "instability"},
              {"scheme", cl::to_json(scheme)},
              {"dataset_hash", cl::dataset_hash(data)},
              {"demo_found", demo.demo_found},
              {"nu", demo.nu},
              {"s0", demo.s0},
              {"F_trace", std::move(trace)},
              {"above_s", demo.above_s},
              {"above_distance", demo.above_distance},
              {"above_improvement", demo.above_improvement},
              {"family_values", demo.family_values},
              {"bar_value_at_s0", demo.bar_value_at_s0},
              {"seed", seed}};
  std::cout << (demo.demo_found ? "crossing s0 = " + std::to_string(demo.s0) : "no crossing bracketed")
            << "\n";
  return finish(common, cfg.value("output", std::string("instability_report.json")),
                std::move(report), demo.demo_found);
}

int run_figure1(const Common& common) {
  json cfg = json::object();
  if (!common.config_path.empty()) cfg = load_config(common.config_path);
  require_keys(cfg, {"x_d", "grid", "num_random", "csv_stride", "seed", "output"}, "figure1");
  std::vector<double> xd = cfg.value("x_d", std::vector<double>{-0.5, 0.5, 1.0});
  const cl::Dataset data = cl::Dataset::create(static_cast<int>(xd.size()), 1, xd);

  cl::CloudSpec spec;
  spec.grid = cl::GridSpec{};
  if (cfg.contains("grid")) {
    require_keys(cfg.at("grid"), {"lo", "hi", "step"}, "figure1.grid");
    spec.grid->lo = cfg.at("grid").value("lo", -20.0);
    spec.grid->hi = cfg.at("grid").value("hi", 20.0);
    spec.grid->step = cfg.at("grid").value("step", 2e-2);
  }
  spec.num_random = cfg.value("num_random", 1'000'000);
  spec.seed = common.seed(cfg);
  const std::size_t stride = cfg.value("csv_stride", 16);

  const cl::ImageCloud linear_cloud(cl::Scheme::linear(), data, spec);
  const cl::ImageCloud toy_cloud(cl::Scheme::toy_lightning(), data, spec);
  const cl::CsvExport lin = cl::export_cloud_csv(linear_cloud, common.out_path("figure1_linear.csv"), stride);
  const cl::CsvExport toy = cl::export_cloud_csv(toy_cloud, common.out_path("figure1_toy.csv"), stride);

  json report{{"command", "figure1"},
              {"x_d", xd},
              {"grid", json{{"lo", spec.grid->lo}, {"hi", spec.grid->hi}, {"step", spec.grid->step}}},
              {"num_random", spec.num_random},
              {"resolution", toy_cloud.resolution()},
              {"cloud_points", toy_cloud.size()},
              {"csv", json{{"linear", json{{"path", lin.path}, {"rows", lin.rows}}},
                           {"toy", json{{"path", toy.path}, {"rows", toy.rows}}}}},
              {"seed", spec.seed}};
  std::cout << "clouds: " << lin.rows << " + " << toy.rows << " csv rows\n";
  return finish(common, cfg.value("output", std::string("figure1_report.json")), std::move(report),
                true);
}

int run_jung(const Common& common) {
  json cfg = json::object();
  if (!common.config_path.empty()) cfg = load_config(common.config_path);
  require_keys(cfg, {"dims", "trials", "r", "seed", "output"}, "jung");
  const std::vector<int> dims = cfg.value("dims", std::vector<int>{1, 2, 3, 4, 5, 6});
  const int trials = cfg.value("trials", 1000);
  const double r = cfg.value("r", 1.0);
  const std::uint64_t seed = common.seed(cfg);

  bool pass = true;
  json per_d = json::array();
  for (int d : dims) {
    const cl::JungReport rep = cl::jung_check(d, r, trials, cl::mix_seed(seed, static_cast<std::uint64_t>(d)));
    pass = pass && rep.all_pass;
    per_d.push_back(json{{"d", d}, {"all_pass", rep.all_pass}, {"worst_slack", rep.worst_slack},
                         {"trials", trials}});
    std::cout << "d=" << d << "  worst slack " << rep.worst_slack << (rep.all_pass ? "  ok" : "  VIOLATION")
              << "\n";
  }
  const cl::JungTrial eq = cl::jung_equilateral_d2(r);
  pass = pass && std::abs(eq.diameter - eq.bound) <= 1e-12 * std::max(1.0, r);
  json report{{"command", "jung"},
              {"dims", dims},
              {"trials", trials},
              {"r", r},
              {"per_d", std::move(per_d)},
              {"equilateral_d2", json{{"diameter", eq.diameter}, {"bound", eq.bound}}},
              {"seed", seed}};
  return finish(common, cfg.value("output", std::string("jung_report.json")), std::move(report), pass);
}

int run_verify(const Common& common, const std::string& cert_path) {
  json j;
  try {
    j = cl::read_json(cert_path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  const cl::SpuriousCertificate cert = cl::certificate_from_json(j);

  const cl::SpuriousCheck chk = cl::check_spurious(cert);
  bool pass = chk.pass;
  // stored scalars must match the recomputation
  pass = pass && std::abs(chk.recomputed_loss_at_bar - cert.loss_at_bar) <=
                     1e-9 * (1.0 + std::abs(cert.loss_at_bar));
  pass = pass && std::abs(chk.recomputed_witness_loss - cert.witness_loss) <=
                     1e-9 * (1.0 + std::abs(cert.witness_loss));
  const cl::GrowthReport growth =
      cl::check_local_growth(cert.scheme, cert, cert.rho, 200, cl::mix_seed(cert.seed, 7));
  pass = pass && growth.all_pass;
  if (cert.grad_norm) {
    const cl::StationarityResult st =
        cl::check_stationarity(cert.scheme, cert.alpha_bar, cert.dataset, cert.y_d, 1e-8);
    pass = pass && st.grad_norm <= std::max(1e-8, 2.0 * *cert.grad_norm);
  }
  json report{{"command", "verify"},
              {"certificate", cert_path},
              {"spurious_pass", chk.pass},
              {"recomputed_loss_at_bar", chk.recomputed_loss_at_bar},
              {"recomputed_witness_loss", chk.recomputed_witness_loss},
              {"growth_all_pass", growth.all_pass}};
  std::cout << "verify " << cert_path << ": " << (pass ? "ok" : "FAILED") << "\n";
  return finish(common, "verify_report.json", std::move(report), pass);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conelab: constructions and numerical verification of squared-loss landscape pathologies"};
  app.require_subcommand(1);

  Common common;
  std::string cert_path;
  app.add_option("--seed", common.seed_override, "override the config seed");
  app.add_option("--jobs", common.jobs, "worker threads (results are identical for any value)");
  app.add_option("--out", common.out_dir, "output directory (default: out)");

  const std::vector<std::pair<std::string, int (*)(const Common&)>> commands = {
      {"witness", run_witness},   {"theta", run_theta},
      {"spurious", run_spurious}, {"saddle-pair", run_saddle_pair},
      {"reg-spurious", run_reg_spurious}, {"reg-kill", run_reg_kill},
      {"instability", run_instability}, {"figure1", run_figure1},
      {"jung", run_jung},
  };
  for (const auto& [name, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", common.config_path, "experiment config (JSON)");
    sub->fallthrough();
  }
  CLI::App* verify_cmd = app.add_subcommand("verify", "re-check a certificate file");
  verify_cmd->add_option("certificate", cert_path, "certificate JSON")->required();
  verify_cmd->fallthrough();

  CLI11_PARSE(app, argc, argv);
  if (common.jobs > 0) cl::set_jobs(common.jobs);

  try {
    for (const auto& [name, fn] : commands) {
      if (app.get_subcommand(name)->parsed()) {
        if (common.config_path.empty() && name != "figure1" && name != "jung") {
          throw ConfigError(name + ": --config is required");
        }
        return fn(common);
      }
    }
    if (verify_cmd->parsed()) return run_verify(common, cert_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
