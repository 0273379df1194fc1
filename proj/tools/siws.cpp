// siws: command-line front end.
//
//   siws [--config FILE] [--out DIR] [--seed N] [--threads N] <command> [flags]
//
// Commands: cov, sample, kernel, estimate, bench, mellin. Each command reads
// its parameters from the JSON config (top level, or the object under the
// command's name) and lets flags override them. The effective configuration
// is echoed into every output file.
//
// Exit codes: 0 success, 1 unexpected error, 2 validation error, 3 numerical
// failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "siws/siws.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace siws;

namespace {

struct Globals {
  std::string config_file;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  bool sidecar = false;
};

json load_config(const Globals& g, const std::string& command) {
  if (g.config_file.empty()) return json::object();
  json j = io::read_json(g.config_file);
  if (!j.is_object()) throw InvalidInput(g.config_file + ": config must be a JSON object");
  json cfg = json::object();
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "cov" && it.key() != "sample" && it.key() != "kernel" && it.key() != "estimate" &&
        it.key() != "bench" && it.key() != "mellin")
      cfg[it.key()] = it.value();
  if (j.contains(command)) cfg.merge_patch(j.at(command));
  return cfg;
}

std::uint64_t resolve_seed(const Globals& g, json& cfg) {
  std::uint64_t seed = 1;
  if (g.seed) {
    seed = *g.seed;
  } else if (cfg.contains("seed")) {
    seed = cfg.at("seed").get<std::uint64_t>();
  } else if (const char* env = std::getenv("SIWS_SEED")) {
    try {
      seed = std::stoull(env);
    } catch (const std::exception&) {
      throw InvalidArgument("SIWS_SEED must be an unsigned integer");
    }
  }
  cfg["seed"] = seed;
  return seed;
}

std::string out_path(const Globals& g, const std::string& name) {
  fs::create_directories(g.out_dir);
  return (fs::path(g.out_dir) / name).string();
}

void maybe_sidecar(const Globals& g, const std::string& csv, const std::string& kind, const std::string& role,
                   const io::Metadata& meta) {
  if (g.sidecar) io::write_json(csv + ".json", io::sidecar(kind, role, meta));
}

// Options shared by several commands; unset values leave the config alone.
struct ModelFlags {
  std::optional<double> H, c, a, b;
  std::string model_file;

  void add(CLI::App* app) {
    app->add_option("--H", H, "Hurst index of a single-component model");
    app->add_option("--c", c, "local covariance width (c >= 1)");
    app->add_option("--a", a, "chirp rate");
    app->add_option("--b", b, "chirp offset");
    app->add_option("--model", model_file, "model JSON file {\"components\":[{H,c,a,b}, ...]}");
  }

  void apply(json& cfg) const {
    if (!model_file.empty()) cfg["model"] = io::read_json(model_file);
    if (H || c || a || b) {
      json comp = cfg.contains("model") && cfg["model"].contains("components") && cfg["model"]["components"].size() == 1
                      ? cfg["model"]["components"][0]
                      : json{{"H", 0.5}, {"c", 1.1}};
      if (H) comp["H"] = *H;
      if (c) comp["c"] = *c;
      if (a) comp["a"] = *a;
      if (b) comp["b"] = *b;
      cfg["model"] = {{"components", json::array({comp})}};
    }
    if (!cfg.contains("model")) cfg["model"] = {{"components", json::array({{{"H", 0.5}, {"c", 1.1}}})}};
  }
};

struct RangeFlags {
  std::string key;
  std::string lo_name, hi_name;
  std::optional<double> lo, hi;
  std::optional<std::size_t> n;

  RangeFlags(std::string k, std::string lo_key, std::string hi_key) : key(std::move(k)), lo_name(std::move(lo_key)), hi_name(std::move(hi_key)) {}

  void add(CLI::App* app, const std::string& flag, const std::string& what) {
    app->add_option("--" + flag + "-min", lo, what + " lower end");
    app->add_option("--" + flag + "-max", hi, what + " upper end");
    app->add_option("--" + flag + "-n", n, what + " number of points");
  }

  void apply(json& cfg, double def_lo, double def_hi, std::size_t def_n) const {
    json& g = cfg[key];
    if (!g.is_object()) g = json::object();
    if ((lo || hi) && g.contains("log_t_min")) {
      const double l0 = g.at("log_t_min").get<double>();
      const auto count = g.at("n").get<std::size_t>();
      g = {{lo_name, std::exp(l0)}, {hi_name, std::exp(l0 + static_cast<double>(count - 1) * g.at("log_ratio").get<double>())}, {"n", count}};
    }
    if ((lo || hi) && g.contains("center")) {
      const FrequencyGrid f = frequency_grid_from_json(g);
      g = {{lo_name, f.front()}, {hi_name, f.back()}, {"n", f.size()}};
    }
    const bool has_explicit = g.contains(lo_name) || g.contains("log_t_min") || g.contains("center");
    if (!has_explicit) {
      g[lo_name] = def_lo;
      g[hi_name] = def_hi;
    }
    if (!g.contains("n")) g["n"] = def_n;
    if (lo) g[lo_name] = *lo;
    if (hi) g[hi_name] = *hi;
    if (n) g["n"] = *n;
  }
};

GeometricGrid time_grid_of(const json& cfg) { return geometric_grid_from_json(cfg.at("grid")); }

GeometricGrid tau_grid_of(const json& j) {
  if (j.contains("log_min"))
    return GeometricGrid::spanning(std::exp(j.at("log_min").get<double>()), std::exp(j.at("log_max").get<double>()),
                                   j.at("n").get<std::size_t>());
  return geometric_grid_from_json(j);
}

// --- cov --------------------------------------------------------------------

int run_cov(const Globals& g, json cfg) {
  const ModelSpec model = model_from_json(cfg.at("model"));
  const GeometricGrid grid = time_grid_of(cfg);
  const io::Metadata meta{cfg, std::nullopt};
  CovarianceMatrix r = covariance_matrix(model, grid);
  const std::string csv = out_path(g, "cov.csv");
  io::write_covariance(csv, r, meta);
  maybe_sidecar(g, csv, "covariance", "COVARIANCE", meta);
  json cert{{"config", cfg}, {"version", kVersion}};
  try {
    r = certify_psd(std::move(r), cfg.value("psd_tol", 1e-8));
    cert["psd"] = true;
    cert["min_eigenvalue"] = r.psd_certificate->min_eigenvalue;
    cert["max_eigenvalue"] = r.psd_certificate->max_eigenvalue;
    io::write_json(out_path(g, "cov_psd.json"), cert);
  } catch (const PsdViolation& e) {
    cert["psd"] = false;
    cert["min_eigenvalue"] = e.min_eigenvalue();
    cert["max_eigenvalue"] = e.max_eigenvalue();
    io::write_json(out_path(g, "cov_psd.json"), cert);
    throw;
  }
  std::cout << "cov: " << grid.size() << "x" << grid.size() << " PSD (min eig " << r.psd_certificate->min_eigenvalue
            << ", max " << r.psd_certificate->max_eigenvalue << ")\n";
  return 0;
}

// --- sample -----------------------------------------------------------------

int run_sample(const Globals& g, json cfg) {
  const std::uint64_t seed = resolve_seed(g, cfg);
  const ModelSpec model = model_from_json(cfg.at("model"));
  const GeometricGrid grid = time_grid_of(cfg);
  const long long trials = cfg.value("n_trials", 10LL);
  const Symmetry sym = symmetry_from_string(cfg.value("symmetry", std::string("circular")));
  if (trials <= 0) throw InvalidArgument("n_trials must be positive");
  const CovarianceMatrix r = certify_psd(covariance_matrix(model, grid));
  const CholeskyFactor l = cholesky_factor(r, cfg.value("jitter", 1e-10));
  const SampleBatch batch = sample_paths(l, trials, seed, sym);
  const io::Metadata meta{cfg, seed};
  const std::string csv = out_path(g, "samples.csv");
  io::write_samples(csv, batch, meta);
  maybe_sidecar(g, csv, "samples", "SAMPLES", meta);
  std::cout << "sample: " << trials << " paths of length " << grid.size() << " (seed " << seed << ")\n";

  if (cfg.value("validate", false)) {
    const double tol = cfg.value("validate_tol", 0.05);
    const CovarianceMatrix emp = empirical_covariance(batch);
    const double scale = r.entries.norm();
    const double cov_err = (emp.entries - r.entries).norm() / scale;
    double pseudo_err = 0.0;
    if (sym == Symmetry::circular) pseudo_err = empirical_pseudo_covariance(batch).norm() / scale;
    const bool ok = cov_err <= tol && pseudo_err <= tol;
    io::write_json(out_path(g, "samples_validation.json"),
                   {{"covariance_rel_frobenius", cov_err},
                    {"pseudo_covariance_rel_frobenius", pseudo_err},
                    {"tolerance", tol},
                    {"pass", ok},
                    {"config", cfg},
                    {"version", kVersion}});
    std::cout << "validate: covariance error " << cov_err << ", pseudo-covariance " << pseudo_err << " (tol " << tol
              << ") " << (ok ? "PASS" : "FAIL") << '\n';
    if (!ok) throw NumericalError("empirical covariance outside tolerance");
  }
  return 0;
}

// --- kernel -----------------------------------------------------------------

int run_kernel(const Globals& g, json cfg) {
  const ModelSpec model = model_from_json(cfg.at("model"));
  const std::string mode = cfg.value("mode", std::string("closed"));
  const Symmetry sym = symmetry_from_string(cfg.value("symmetry", std::string("circular")));
  const double delta = cfg.value("delta", 1e-6);
  std::optional<FrequencyGrid> theta_opt;
  std::optional<GeometricGrid> tau_opt;
  if (cfg.contains("grid")) {
    // Kernel for use with cohen_estimate on this time grid.
    const GeometricGrid grid = time_grid_of(cfg);
    const std::size_t lags = cfg.value("max_lag", (grid.size() - 1) / 2);
    if (2 * lags + 1 > grid.size()) throw InvalidArgument("max_lag must not exceed (n - 1) / 2");
    cfg.erase("theta_grid");
    cfg.erase("tau_grid");
    theta_opt = dual_frequency_grid(grid);
    tau_opt = lag_grid(grid, lags);
  } else {
    theta_opt = frequency_grid_from_json(cfg.at("theta_grid"));
    tau_opt = tau_grid_of(cfg.at("tau_grid"));
  }
  const FrequencyGrid theta = *theta_opt;
  const GeometricGrid tau = *tau_opt;
  const io::Metadata meta{cfg, std::nullopt};

  AmbiguityMatrix phi;
  json summary{{"mode", mode}, {"config", cfg}, {"version", kVersion}};
  if (mode == "closed") {
    if (sym != Symmetry::circular) throw InvalidArgument("closed kernels are for circular symmetry");
    phi = closed_kernel_matrix(model, theta, tau);
  } else if (mode == "numeric") {
    const GlobalKernelTerms terms = global_kernel_terms(model, sym, theta, tau);
    phi = kernel_from_terms(terms, delta);
    if (cfg.value("diff", false)) {
      if (sym != Symmetry::circular || !model.is_example_family())
        throw InvalidArgument("the closed-form diff needs the example family and circular symmetry");
      const auto support = support_set(terms, delta);
      const double amax = terms.a_ex.values.cwiseAbs().maxCoeff();
      double worst_rel = 0.0, worst_abs_floor = 0.0;
      long long on_u = 0, floored = 0;
      for (Eigen::Index i = 0; i < phi.values.rows(); ++i)
        for (Eigen::Index j = 0; j < phi.values.cols(); ++j) {
          if (!support(i, j)) continue;
          ++on_u;
          const Complex c = closed_kernel(model, theta.point(static_cast<std::size_t>(i)), tau.point(static_cast<std::size_t>(j)));
          const double err = std::abs(phi.values(i, j) - c);
          if (std::abs(terms.a_ex.values(i, j)) >= 1e-10 * amax) {
            worst_rel = std::max(worst_rel, err / std::abs(c));
          } else {
            ++floored;
            worst_abs_floor = std::max(worst_abs_floor, err);
          }
        }
      const double tol = cfg.value("diff_tol", 1e-3);
      summary["diff"] = {{"points_on_support", on_u},
                         {"max_relative_error", worst_rel},
                         {"points_below_precision_floor", floored},
                         {"max_absolute_error_below_floor", worst_abs_floor},
                         {"tolerance", tol},
                         {"pass", worst_rel <= tol && worst_abs_floor <= tol}};
      io::write_json(out_path(g, "kernel_diff.json"), summary["diff"]);
      std::cout << "kernel diff: max relative error " << worst_rel << " over " << on_u << " support points\n";
    }
  } else if (mode == "local") {
    const double t = cfg.at("t").get<double>();
    const double xi = cfg.at("xi").get<double>();
    const LocalKernelResult res = local_optimal_kernel(model, t, xi, theta, tau, cfg.value("svd_tol", 1e-8), sym);
    phi = res.kernel;
    summary["predicted_mse"] = res.predicted_mse;
    summary["predicted_gain"] = res.predicted_gain;
    io::write_json(out_path(g, "kernel_local.json"), summary);
  } else {
    throw InvalidArgument("kernel mode must be closed, numeric or local");
  }
  const std::string csv = out_path(g, "kernel.csv");
  io::write_ambiguity(csv, phi, meta);
  maybe_sidecar(g, csv, "ambiguity", "KERNEL", meta);
  std::cout << "kernel: " << mode << " " << theta.size() << "x" << tau.size() << '\n';
  return 0;
}

// --- estimate ---------------------------------------------------------------

int run_estimate(const Globals& g, json cfg) {
  if (!cfg.contains("path")) throw InvalidArgument("estimate needs --path (a samples CSV)");
  const SampleBatch batch = io::read_samples(cfg.at("path").get<std::string>());
  const auto trial = cfg.value("trial", 0LL);
  if (trial < 0 || trial >= batch.paths.rows()) throw InvalidArgument("trial index out of range");
  const ComplexVector x = batch.paths.row(trial).transpose();
  const FrequencyGrid xi = frequency_grid_from_json(cfg.at("xi_grid"));
  AmbiguityMatrix kernel;
  if (cfg.contains("kernel") && !cfg.at("kernel").get<std::string>().empty()) {
    kernel = io::read_ambiguity(cfg.at("kernel").get<std::string>());
  } else {
    const std::size_t lags = cfg.value("max_lag", (batch.grid.size() - 1) / 2);
    kernel = constant_kernel(batch.grid, lags);
  }
  const TFMatrix est = cohen_estimate(x, kernel, batch.grid, xi);
  const io::Metadata meta{cfg, batch.seed};
  const std::string csv = out_path(g, "estimate.csv");
  io::write_tf(csv, est, meta);
  maybe_sidecar(g, csv, "tf", "ESTIMATE", meta);
  std::cout << "estimate: " << est.values.rows() << "x" << est.values.cols() << '\n';
  return 0;
}

// --- bench ------------------------------------------------------------------

int run_bench(const Globals& g, json cfg) {
  const std::uint64_t seed = resolve_seed(g, cfg);
  BenchScenario s;
  s.model = model_from_json(cfg.at("model"));
  s.grid = time_grid_of(cfg);
  s.xi_grid = frequency_grid_from_json(cfg.at("xi_grid"));
  s.n_trials = cfg.value("n_trials", 500LL);
  s.seed = seed;
  s.symmetry = symmetry_from_string(cfg.value("symmetry", std::string("circular")));
  s.max_lag = cfg.value("max_lag", std::size_t{0});
  s.delta = cfg.value("delta", 1e-6);
  if (cfg.contains("estimators")) {
    s.estimators.clear();
    for (const auto& e : cfg.at("estimators")) {
      EstimatorSpec spec;
      if (e.is_string()) {
        spec.kind = estimator_kind_from_string(e.get<std::string>());
      } else {
        spec.kind = estimator_kind_from_string(e.at("kind").get<std::string>());
        spec.name = e.value("name", std::string());
        spec.kernel_ref = e.value("kernel", std::string());
      }
      if (spec.kind == EstimatorKind::custom_kernel) {
        if (spec.kernel_ref.empty()) throw InvalidArgument("custom_kernel estimator needs a \"kernel\" file");
        spec.kernel = io::read_ambiguity(spec.kernel_ref);
      }
      s.estimators.push_back(std::move(spec));
    }
  }
  if (cfg.contains("classical")) {
    const json& c = cfg.at("classical");
    s.classical.sigma_time = c.value("sigma_time", s.classical.sigma_time);
    s.classical.sigma_freq = c.value("sigma_freq", s.classical.sigma_freq);
    s.classical.n_time = c.value("n_time", s.classical.n_time);
    s.classical.n_freq = c.value("n_freq", s.classical.n_freq);
  }
  const BenchReport report = run_benchmark(s);
  const io::Metadata meta{cfg, seed};
  io::write_json(out_path(g, "bench_report.json"), to_json(report));
  io::write_tf(out_path(g, "bench_truth.csv"), report.truth, meta);
  for (const auto& r : report.results) {
    const std::string csv = out_path(g, "bench_mse_" + r.name + ".csv");
    io::write_tf(csv, r.surface, meta);
    maybe_sidecar(g, csv, "tf", to_string(r.surface.role), meta);
    if (r.failed)
      std::cout << "bench: " << r.name << " FAILED: " << r.error << '\n';
    else
      std::cout << "bench: " << r.name << " mean MSE " << r.mean_mse << " +/- " << r.standard_error << '\n';
  }
  std::cerr << "bench runtime " << report.runtime_seconds << " s\n";
  return 0;
}

// --- mellin -----------------------------------------------------------------

int run_mellin(const Globals& g, json cfg) {
  const ModelSpec model = model_from_json(cfg.at("model"));
  const FrequencyGrid theta = frequency_grid_from_json(cfg.at("theta_grid"));
  const std::string of = cfg.value("function", std::string("Q"));
  const Component& comp = model.components().front();
  GeometricGrid quad = (of == "C" ? default_lag_quadrature(model) : default_time_quadrature(model)).grid();
  if (cfg.contains("quadrature")) quad = geometric_grid_from_json(cfg.at("quadrature"));
  ComplexVector samples(static_cast<Eigen::Index>(quad.size()));
  for (std::size_t k = 0; k < quad.size(); ++k) {
    const double u = quad.log_point(k);
    if (of == "Q")
      samples(static_cast<Eigen::Index>(k)) = comp.q_log(u);
    else if (of == "C")
      samples(static_cast<Eigen::Index>(k)) = comp.c_log(u);
    else
      throw InvalidArgument("mellin function must be Q or C");
  }
  check_edge_decay(samples, "mellin");
  const MellinLine line = mellin_forward(samples, quad, theta);
  const io::Metadata meta{cfg, std::nullopt};
  const std::string csv = out_path(g, "mellin.csv");
  io::write_mellin(csv, line, meta);
  maybe_sidecar(g, csv, "mellin", "MELLIN", meta);
  std::cout << "mellin: " << of << " on " << theta.size() << " frequencies\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scale-invariant Wigner spectrum toolkit"};
  app.require_subcommand(1);
  Globals g;
  std::optional<std::uint64_t> seed_flag;
  app.add_option("--config", g.config_file, "JSON configuration file");
  app.add_option("--out", g.out_dir, "output directory");
  app.add_option("--seed", seed_flag, "random seed (falls back to SIWS_SEED)");
  app.add_option("--threads", g.threads, "worker thread cap (0 = all cores)");
  app.add_flag("--sidecar", g.sidecar, "also write a JSON metadata file next to each CSV");

  ModelFlags model_flags;
  RangeFlags time_flags("grid", "t_min", "t_max");
  RangeFlags xi_flags("xi_grid", "min", "max");
  RangeFlags theta_flags("theta_grid", "min", "max");
  RangeFlags tau_flags("tau_grid", "log_min", "log_max");

  auto* cov = app.add_subcommand("cov", "covariance matrix and PSD certificate");
  model_flags.add(cov);
  time_flags.add(cov, "t", "time grid");

  auto* sample = app.add_subcommand("sample", "Gaussian sample paths");
  model_flags.add(sample);
  time_flags.add(sample, "t", "time grid");
  std::optional<long long> trials;
  std::optional<std::string> symmetry;
  bool validate = false;
  sample->add_option("--trials", trials, "number of paths");
  sample->add_option("--symmetry", symmetry, "real or circular");
  sample->add_flag("--validate", validate, "compare empirical and model covariance (5% check)");

  auto* kernel = app.add_subcommand("kernel", "optimal ambiguity-domain kernel");
  model_flags.add(kernel);
  theta_flags.add(kernel, "theta", "theta grid");
  tau_flags.add(kernel, "log-tau", "ln(tau) grid");
  std::optional<std::string> mode;
  std::optional<double> delta, svd_tol, t_point, xi_point;
  bool diff = false;
  kernel->add_option("--mode", mode, "closed, numeric or local");
  kernel->add_option("--symmetry", symmetry, "real or circular");
  kernel->add_option("--delta", delta, "support threshold relative to max E|A|^2");
  kernel->add_option("--svd-tol", svd_tol, "pseudo-inverse threshold (local mode)");
  kernel->add_option("--t", t_point, "time point (local mode)");
  kernel->add_option("--xi", xi_point, "frequency point (local mode)");
  kernel->add_flag("--diff", diff, "compare the numeric kernel with the closed form");
  time_flags.add(kernel, "t", "time grid the kernel is meant for (sets theta and tau grids)");
  std::optional<std::size_t> max_lag;
  kernel->add_option("--max-lag", max_lag, "lag count for --t-* grids");

  auto* estimate = app.add_subcommand("estimate", "Cohen-class SIWS estimate of one path");
  std::optional<std::string> path_file, kernel_file;
  std::optional<long long> trial;
  estimate->add_option("--path", path_file, "samples CSV");
  estimate->add_option("--trial", trial, "row of the samples file");
  estimate->add_option("--kernel", kernel_file, "kernel CSV (default: phi = 1)");
  xi_flags.add(estimate, "xi", "xi grid");

  auto* bench = app.add_subcommand("bench", "Monte-Carlo estimator comparison");
  model_flags.add(bench);
  time_flags.add(bench, "t", "time grid");
  xi_flags.add(bench, "xi", "xi grid");
  bench->add_option("--trials", trials, "number of trials");
  bench->add_option("--symmetry", symmetry, "real or circular");

  auto* mellin = app.add_subcommand("mellin", "numeric Mellin transform of Q or C");
  model_flags.add(mellin);
  theta_flags.add(mellin, "theta", "theta grid");
  std::optional<std::string> function;
  mellin->add_option("--function", function, "Q or C");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    g.seed = seed_flag;
    if (g.threads != 0) parallel::set_max_threads(g.threads);
    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    json cfg = load_config(g, name);
    if (name != "estimate") model_flags.apply(cfg);
    if (symmetry) cfg["symmetry"] = *symmetry;

    if (name == "cov") {
      time_flags.apply(cfg, std::exp(-2.0), std::exp(2.0), 64);
      return run_cov(g, cfg);
    }
    if (name == "sample") {
      time_flags.apply(cfg, std::exp(-2.0), std::exp(2.0), 64);
      if (trials) cfg["n_trials"] = *trials;
      if (validate) cfg["validate"] = true;
      return run_sample(g, cfg);
    }
    if (name == "kernel") {
      if (cfg.contains("grid") || time_flags.lo || time_flags.hi || time_flags.n) {
        time_flags.apply(cfg, std::exp(-2.0), std::exp(2.0), 64);
        if (max_lag) cfg["max_lag"] = *max_lag;
      } else {
        theta_flags.apply(cfg, -1.0, 1.0, 41);
        tau_flags.apply(cfg, -4.0, 4.0, 33);
      }
      if (mode) cfg["mode"] = *mode;
      if (delta) cfg["delta"] = *delta;
      if (svd_tol) cfg["svd_tol"] = *svd_tol;
      if (t_point) cfg["t"] = *t_point;
      if (xi_point) cfg["xi"] = *xi_point;
      if (diff) cfg["diff"] = true;
      return run_kernel(g, cfg);
    }
    if (name == "estimate") {
      xi_flags.apply(cfg, -1.0, 1.0, 41);
      if (path_file) cfg["path"] = *path_file;
      if (trial) cfg["trial"] = *trial;
      if (kernel_file) cfg["kernel"] = *kernel_file;
      return run_estimate(g, cfg);
    }
    if (name == "bench") {
      if (!cfg.contains("grid")) cfg["grid"] = grid_json(GeometricGrid::from_log(-5.0, 0.125, 89));
      time_flags.apply(cfg, std::exp(-5.0), std::exp(6.0), 89);
      xi_flags.apply(cfg, -1.0, 1.0, 41);
      if (trials) cfg["n_trials"] = *trials;
      return run_bench(g, cfg);
    }
    if (name == "mellin") {
      theta_flags.apply(cfg, -2.0, 2.0, 81);
      if (function) cfg["function"] = *function;
      return run_mellin(g, cfg);
    }
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const json::exception& e) {
    std::cerr << "error: bad configuration: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
