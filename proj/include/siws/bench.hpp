#pragma once

// Monte-Carlo MSE evaluation of SIWS estimators against the analytic SIWS.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "siws/kernel.hpp"
#include "siws/parallel.hpp"
#include "siws/synth.hpp"
#include "siws/tfr.hpp"

namespace siws {

inline constexpr const char* kVersion = "0.1.0";

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

/// Pointwise mean of |estimate - truth|^2.
inline TFMatrix mse_surface(const std::vector<TFMatrix>& estimates, const TFMatrix& truth) {
  if (estimates.empty()) throw InvalidArgument("mse_surface: no estimates");
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(truth.values.rows(), truth.values.cols());
  for (const auto& e : estimates) {
    if (!e.time_grid.matches(truth.time_grid) || !e.xi_grid.matches(truth.xi_grid) ||
        e.values.rows() != truth.values.rows() || e.values.cols() != truth.values.cols())
      throw DimensionError("mse_surface: estimate grid does not match truth grid");
    acc += (e.values - truth.values).cwiseAbs2();
  }
  acc /= static_cast<double>(estimates.size());
  return {truth.time_grid, truth.xi_grid, acc.cast<Complex>(), TFRole::estimate_error};
}

enum class EstimatorKind { raw_siwd, optimal_siws, classical_wvs, custom_kernel };

inline std::string to_string(EstimatorKind k) {
  switch (k) {
  case EstimatorKind::raw_siwd: return "raw_siwd";
  case EstimatorKind::optimal_siws: return "optimal_siws";
  case EstimatorKind::classical_wvs: return "classical_wvs";
  case EstimatorKind::custom_kernel: return "custom_kernel";
  }
  return "?";
}

inline EstimatorKind estimator_kind_from_string(const std::string& s) {
  for (auto k : {EstimatorKind::raw_siwd, EstimatorKind::optimal_siws, EstimatorKind::classical_wvs,
                 EstimatorKind::custom_kernel})
    if (to_string(k) == s) return k;
  throw InvalidArgument("unknown estimator \"" + s + "\"");
}

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::raw_siwd;
  std::string name;                       ///< defaults to to_string(kind)
  std::optional<AmbiguityMatrix> kernel;  ///< custom_kernel only
  std::string kernel_ref;                 ///< file the custom kernel came from, for the config echo

  std::string label() const { return name.empty() ? to_string(kind) : name; }
};

/// Baseline smoothing candidates searched by the benchmark.
struct ClassicalSearch {
  std::vector<double> sigma_time{0.0, 1.0, 2.0, 4.0};
  std::vector<double> sigma_freq{0.0, 1.0, 2.0, 4.0};
  std::size_t n_time = 256;
  std::size_t n_freq = 256;
};

struct BenchScenario {
  ModelSpec model = ModelSpec::lssp(0.5, 1.1);
  GeometricGrid grid = GeometricGrid::from_log(-5.0, 0.125, 89);
  FrequencyGrid xi_grid = FrequencyGrid::spanning(-1.0, 1.0, 41);
  std::vector<EstimatorSpec> estimators{{EstimatorKind::raw_siwd, {}, {}, {}},
                                        {EstimatorKind::optimal_siws, {}, {}, {}},
                                        {EstimatorKind::classical_wvs, {}, {}, {}}};
  long long n_trials = 500;
  std::uint64_t seed = 1;
  Symmetry symmetry = Symmetry::circular;
  std::size_t max_lag = 0;  ///< 0: (n - 1) / 2
  double delta = 1e-6;
  ClassicalSearch classical;
  std::optional<TFMatrix> truth_override;

  std::size_t effective_max_lag() const { return max_lag == 0 ? (grid.size() - 1) / 2 : max_lag; }

  void validate() const {
    if (n_trials < 2) throw InvalidArgument("bench: n_trials must be at least 2");
    if (estimators.empty()) throw InvalidArgument("bench: estimator list is empty");
    if (grid.size() < 3) throw InvalidGrid("bench: grid needs at least three points");
    if (2 * effective_max_lag() + 1 > grid.size()) throw InvalidArgument("bench: max_lag too large");
    require_xi_within_nyquist(grid, xi_grid);
    for (const auto& e : estimators)
      if (e.kind == EstimatorKind::custom_kernel && !e.kernel)
        throw InvalidArgument("bench: custom_kernel estimator needs a kernel");
    if (classical.sigma_time.empty() || classical.sigma_freq.empty())
      throw InvalidArgument("bench: classical smoothing search is empty");
  }
};

inline nlohmann::json grid_json(const GeometricGrid& g) {
  return {{"log_t_min", g.log_t_min()}, {"log_ratio", g.log_ratio()}, {"n", g.size()}};
}

inline nlohmann::json grid_json(const FrequencyGrid& g) {
  return {{"center", g.center()}, {"step", g.step()}, {"n", g.size()}};
}

inline GeometricGrid geometric_grid_from_json(const nlohmann::json& j) {
  if (j.contains("log_t_min"))
    return GeometricGrid::from_log(j.at("log_t_min").get<double>(), j.at("log_ratio").get<double>(),
                                   j.at("n").get<std::size_t>());
  return GeometricGrid::spanning(j.at("t_min").get<double>(), j.at("t_max").get<double>(), j.at("n").get<std::size_t>());
}

inline FrequencyGrid frequency_grid_from_json(const nlohmann::json& j) {
  if (j.contains("center"))
    return FrequencyGrid(j.at("center").get<double>(), j.at("step").get<double>(), j.at("n").get<std::size_t>());
  return FrequencyGrid::spanning(j.at("min").get<double>(), j.at("max").get<double>(), j.at("n").get<std::size_t>());
}

inline nlohmann::json to_json(const BenchScenario& s) {
  nlohmann::json est = nlohmann::json::array();
  for (const auto& e : s.estimators) {
    nlohmann::json o{{"kind", to_string(e.kind)}, {"name", e.label()}};
    if (!e.kernel_ref.empty()) o["kernel"] = e.kernel_ref;
    est.push_back(o);
  }
  return {{"model", to_json(s.model)},
          {"grid", grid_json(s.grid)},
          {"xi_grid", grid_json(s.xi_grid)},
          {"estimators", est},
          {"n_trials", s.n_trials},
          {"seed", s.seed},
          {"symmetry", to_string(s.symmetry)},
          {"max_lag", s.effective_max_lag()},
          {"delta", s.delta},
          {"classical",
           {{"sigma_time", s.classical.sigma_time},
            {"sigma_freq", s.classical.sigma_freq},
            {"n_time", s.classical.n_time},
            {"n_freq", s.classical.n_freq}}},
          {"truth_override", s.truth_override.has_value()}};
}

struct EstimatorResult {
  std::string name;
  EstimatorKind kind = EstimatorKind::raw_siwd;
  bool failed = false;
  std::string error;
  TFMatrix surface;           ///< pointwise MSE
  double mean_mse = 0.0;      ///< grid mean of `surface`
  double standard_error = 0.0;
  nlohmann::json details = nlohmann::json::object();
};

struct BenchReport {
  std::vector<EstimatorResult> results;
  TFMatrix truth;
  std::uint64_t seed = 0;
  long long n_trials = 0;
  std::string config_hash;
  nlohmann::json config;
  double runtime_seconds = 0.0;  ///< informational; not serialised

  const EstimatorResult& result(const std::string& name) const {
    for (const auto& r : results)
      if (r.name == name) return r;
    throw InvalidArgument("bench report has no estimator \"" + name + "\"");
  }
};

inline nlohmann::json to_json(const BenchReport& r) {
  nlohmann::json est = nlohmann::json::array();
  for (const auto& e : r.results) {
    nlohmann::json o{{"name", e.name}, {"kind", to_string(e.kind)}, {"failed", e.failed}};
    if (e.failed) {
      o["error"] = e.error;
    } else {
      o["mean_mse"] = e.mean_mse;
      o["standard_error"] = e.standard_error;
    }
    if (!e.details.empty()) o["details"] = e.details;
    est.push_back(o);
  }
  return {{"estimators", est},  {"seed", r.seed},     {"n_trials", r.n_trials},
          {"config_hash", r.config_hash}, {"config", r.config}, {"version", kVersion}};
}

namespace detail {

/// Running sums over a block of trials.
struct ErrorAccumulator {
  Eigen::MatrixXd surface;       ///< sum of |e - t|^2
  double sum_j = 0.0;            ///< sum of per-trial grid means
  double sum_j2 = 0.0;

  ErrorAccumulator() = default;
  ErrorAccumulator(Eigen::Index r, Eigen::Index c) : surface(Eigen::MatrixXd::Zero(r, c)) {}

  void add(const ComplexMatrix& est, const ComplexMatrix& truth) {
    const Eigen::MatrixXd e = (est - truth).cwiseAbs2();
    surface += e;
    const double j = e.mean();
    sum_j += j;
    sum_j2 += j * j;
  }

  ErrorAccumulator operator+(const ErrorAccumulator& o) const {
    ErrorAccumulator out = *this;
    out.surface += o.surface;
    out.sum_j += o.sum_j;
    out.sum_j2 += o.sum_j2;
    return out;
  }
};

inline constexpr std::size_t kTrialBlock = 16;

} // namespace detail

/// Mean SIWD over Monte-Carlo trials with pointwise standard errors of the
/// real part (the SIWD is real up to rounding).
struct MonteCarloMean {
  TFMatrix mean;
  Eigen::MatrixXd standard_error;
  long long n_trials = 0;
};

inline MonteCarloMean monte_carlo_siwd(const CholeskyFactor& l, const FrequencyGrid& xi_grid, std::size_t max_lag,
                                       long long n_trials, std::uint64_t seed, Symmetry sym) {
  if (n_trials < 2) throw InvalidArgument("monte_carlo_siwd: n_trials must be at least 2");
  const auto nt = static_cast<Eigen::Index>(l.grid.size());
  const auto nx = static_cast<Eigen::Index>(xi_grid.size());
  const ComplexMatrix fwd_tau_t = mellin_forward_matrix(lag_grid(l.grid, max_lag), xi_grid).transpose();
  struct Sums {
    Eigen::MatrixXd s1, s2;
    Eigen::MatrixXd si;
    Sums operator+(const Sums& o) const { return {s1 + o.s1, s2 + o.s2, si + o.si}; }
  };
  const auto blocks = (static_cast<std::size_t>(n_trials) + detail::kTrialBlock - 1) / detail::kTrialBlock;
  std::vector<Sums> partial(blocks);
  parallel::for_each_index(blocks, [&](std::size_t b) {
    Sums s{Eigen::MatrixXd::Zero(nt, nx), Eigen::MatrixXd::Zero(nt, nx), Eigen::MatrixXd::Zero(nt, nx)};
    const auto end = std::min<std::size_t>((b + 1) * detail::kTrialBlock, static_cast<std::size_t>(n_trials));
    for (std::size_t i = b * detail::kTrialBlock; i < end; ++i) {
      const ComplexVector x = draw_path(l, seed, i, sym);
      const ComplexMatrix w = lag_products(x, max_lag) * fwd_tau_t;
      s.s1 += w.real();
      s.s2 += w.real().cwiseAbs2();
      s.si += w.imag();
    }
    partial[b] = std::move(s);
  });
  const Sums tot = parallel::pairwise_sum(partial);
  const double n = static_cast<double>(n_trials);
  const Eigen::MatrixXd mean = tot.s1 / n;
  const Eigen::MatrixXd var = ((tot.s2 / n) - mean.cwiseAbs2()) * (n / (n - 1.0));
  ComplexMatrix m(nt, nx);
  m.real() = mean;
  m.imag() = tot.si / n;
  return {{l.grid, xi_grid, std::move(m), TFRole::estimate}, (var.cwiseMax(0.0) / n).cwiseSqrt(), n_trials};
}

/// Runs every estimator on the same trials. Failures are isolated per
/// estimator. Deterministic for a given scenario and seed: trials are grouped
/// into fixed blocks whose sums are reduced pairwise in block order.
inline BenchReport run_benchmark(const BenchScenario& s) {
  const auto started = std::chrono::steady_clock::now();
  s.validate();
  BenchReport report;
  report.seed = s.seed;
  report.n_trials = s.n_trials;
  report.config = to_json(s);
  report.config_hash = hex64(fnv1a64(report.config.dump()));

  const std::size_t lags = s.effective_max_lag();
  report.truth = s.truth_override ? *s.truth_override : true_siws(s.model, s.grid, s.xi_grid);
  if (!report.truth.time_grid.matches(s.grid) || !report.truth.xi_grid.matches(s.xi_grid))
    throw DimensionError("bench: truth grid does not match scenario grid");
  const ComplexMatrix& truth = report.truth.values;

  const CholeskyFactor chol = cholesky_factor(certify_psd(covariance_matrix(s.model, s.grid)));

  // Per-estimator set-up; a failure here marks the estimator failed.
  struct Prepared {
    std::optional<CohenEstimator> cohen;
    bool classical = false;
    std::vector<ClassicalWvsConfig> candidates;
  };
  std::vector<Prepared> prepared(s.estimators.size());
  report.results.resize(s.estimators.size());
  for (std::size_t e = 0; e < s.estimators.size(); ++e) {
    const auto& spec = s.estimators[e];
    auto& res = report.results[e];
    res.name = spec.label();
    res.kind = spec.kind;
    try {
      switch (spec.kind) {
      case EstimatorKind::raw_siwd:
        prepared[e].cohen.emplace(s.grid, constant_kernel(s.grid, lags), s.xi_grid);
        break;
      case EstimatorKind::optimal_siws:
        prepared[e].cohen.emplace(
            s.grid, numeric_global_kernel(s.model, s.symmetry, dual_frequency_grid(s.grid), lag_grid(s.grid, lags), s.delta),
            s.xi_grid);
        break;
      case EstimatorKind::custom_kernel:
        prepared[e].cohen.emplace(s.grid, *spec.kernel, s.xi_grid);
        break;
      case EstimatorKind::classical_wvs:
        prepared[e].classical = true;
        for (double st : s.classical.sigma_time)
          for (double sf : s.classical.sigma_freq)
            prepared[e].candidates.push_back({s.classical.n_time, s.classical.n_freq, 0, st, sf});
        break;
      }
    } catch (const std::exception& ex) {
      res.failed = true;
      res.error = ex.what();
    }
  }

  // Accumulator slots: one per Cohen estimator, one per classical candidate.
  std::vector<std::size_t> slot_of(s.estimators.size(), 0);
  std::size_t slots = 0;
  for (std::size_t e = 0; e < s.estimators.size(); ++e) {
    slot_of[e] = slots;
    if (report.results[e].failed) continue;
    slots += prepared[e].classical ? prepared[e].candidates.size() : 1;
  }

  const auto rows = truth.rows(), cols = truth.cols();
  const auto n_blocks = (static_cast<std::size_t>(s.n_trials) + detail::kTrialBlock - 1) / detail::kTrialBlock;
  std::vector<std::vector<detail::ErrorAccumulator>> blocks(n_blocks);
  std::vector<std::string> block_error(n_blocks * s.estimators.size());

  parallel::for_each_index(n_blocks, [&](std::size_t b) {
    std::vector<detail::ErrorAccumulator> acc(slots, detail::ErrorAccumulator(rows, cols));
    const auto end = std::min<std::size_t>((b + 1) * detail::kTrialBlock, static_cast<std::size_t>(s.n_trials));
    for (std::size_t i = b * detail::kTrialBlock; i < end; ++i) {
      const ComplexVector x = draw_path(chol, s.seed, i, s.symmetry);
      for (std::size_t e = 0; e < s.estimators.size(); ++e) {
        if (report.results[e].failed || !block_error[b * s.estimators.size() + e].empty()) continue;
        try {
          if (prepared[e].cohen) {
            acc[slot_of[e]].add(prepared[e].cohen->apply(x), truth);
          } else {
            const UniformSignal u = resample_uniform(x, s.grid, s.classical.n_time);
            const std::size_t cl = std::min(s.classical.n_freq / 2 - 1, (s.classical.n_time - 1) / 2);
            const Eigen::MatrixXd w = pseudo_wigner(u, s.classical.n_freq, cl);
            for (std::size_t c = 0; c < prepared[e].candidates.size(); ++c) {
              const auto& cfg = prepared[e].candidates[c];
              const TFMatrix est =
                  map_classical_to_scale(smooth_gaussian(w, cfg.sigma_time, cfg.sigma_freq), u, s.grid, s.xi_grid);
              acc[slot_of[e] + c].add(est.values, truth);
            }
          }
        } catch (const std::exception& ex) {
          block_error[b * s.estimators.size() + e] = ex.what();
        }
      }
    }
    blocks[b] = std::move(acc);
  });

  for (std::size_t b = 0; b < n_blocks; ++b)
    for (std::size_t e = 0; e < s.estimators.size(); ++e)
      if (!block_error[b * s.estimators.size() + e].empty() && !report.results[e].failed) {
        report.results[e].failed = true;
        report.results[e].error = block_error[b * s.estimators.size() + e];
      }

  const double n = static_cast<double>(s.n_trials);
  auto finish = [&](std::size_t slot, EstimatorResult& res) {
    std::vector<detail::ErrorAccumulator> parts;
    parts.reserve(n_blocks);
    for (const auto& blk : blocks) parts.push_back(blk[slot]);
    const detail::ErrorAccumulator tot = parallel::pairwise_sum(parts);
    const Eigen::MatrixXd surf = tot.surface / n;
    res.surface = {s.grid, s.xi_grid, surf.cast<Complex>(), TFRole::estimate_error};
    res.mean_mse = surf.mean();
    const double mj = tot.sum_j / n;
    const double var = std::max(0.0, (tot.sum_j2 / n - mj * mj) * n / (n - 1.0));
    res.standard_error = std::sqrt(var / n);
  };

  for (std::size_t e = 0; e < s.estimators.size(); ++e) {
    auto& res = report.results[e];
    if (res.failed) {
      res.surface = {s.grid, s.xi_grid, ComplexMatrix::Zero(rows, cols), TFRole::estimate_error};
      continue;
    }
    if (!prepared[e].classical) {
      finish(slot_of[e], res);
      continue;
    }
    std::size_t best = 0;
    double best_mse = std::numeric_limits<double>::infinity();
    nlohmann::json search = nlohmann::json::array();
    for (std::size_t c = 0; c < prepared[e].candidates.size(); ++c) {
      EstimatorResult trial;
      finish(slot_of[e] + c, trial);
      search.push_back({{"sigma_time", prepared[e].candidates[c].sigma_time},
                        {"sigma_freq", prepared[e].candidates[c].sigma_freq},
                        {"mean_mse", trial.mean_mse}});
      if (trial.mean_mse < best_mse) {
        best_mse = trial.mean_mse;
        best = c;
      }
    }
    finish(slot_of[e] + best, res);
    res.details = {{"sigma_time", prepared[e].candidates[best].sigma_time},
                   {"sigma_freq", prepared[e].candidates[best].sigma_freq},
                   {"search", search}};
  }

  report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

} // namespace siws
