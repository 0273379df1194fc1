#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <sys/wait.h>

#include "oracles.hpp"
#include "siws/io.hpp"

using namespace siws;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("siws_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  /// Runs the CLI with output in `out` (relative to the test directory).
  int run(const std::string& args, const std::string& out = "out", const std::string& env = "") const {
    const std::string cmd = env + (env.empty() ? "" : " ") + "\"" + SIWS_CLI_PATH + "\" --out \"" + p(out) + "\" " + args +
                            " > \"" + p("stdout.txt") + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string p(const std::string& name) const { return (dir_ / name).string(); }

  std::string slurp(const std::string& name) const {
    std::ifstream is(p(name), std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
  }

  void write_text(const std::string& name, const std::string& text) const {
    std::ofstream os(p(name));
    os << text;
  }

  /// Data lines only (everything after the two metadata lines).
  std::string body(const std::string& name) const {
    const std::string s = slurp(name);
    auto pos = s.find('\n');
    pos = s.find('\n', pos + 1);
    return s.substr(pos + 1);
  }

  fs::path dir_;
};

const std::string kSmallBench = R"({"grid":{"log_t_min":-4,"log_ratio":0.25,"n":41},"xi_grid":{"min":-0.8,"max":0.8,"n":17},
  "n_trials":16,"classical":{"n_time":64,"n_freq":64,"sigma_time":[0,2],"sigma_freq":[0,2]}})";

} // namespace

TEST_F(Cli, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("nosuch"), 2);
  EXPECT_EQ(run("cov --bogus 1"), 2);
  EXPECT_EQ(run("cov --H 1.5"), 2);
  EXPECT_EQ(run("cov --c 0.5"), 2);
  EXPECT_EQ(run("sample --trials 0"), 2);
  EXPECT_EQ(run("sample --symmetry sideways"), 2);
  EXPECT_EQ(run("kernel --mode fancy"), 2);
  EXPECT_EQ(run("--config " + p("missing.json") + " cov"), 2);
  write_text("bad.json", "{\"grid\": ");
  EXPECT_EQ(run("--config " + p("bad.json") + " cov"), 2);
  write_text("wrongtype.json", R"({"grid":{"t_min":"x","t_max":2,"n":4}})");
  EXPECT_EQ(run("--config " + p("wrongtype.json") + " cov"), 2);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, CovWritesMatrixAndCertificate) {
  ASSERT_EQ(run("cov --t-n 32"), 0) << slurp("stdout.txt");
  const CovarianceMatrix r = io::read_covariance(p("out/cov.csv"));
  EXPECT_EQ(r.entries.rows(), 32);
  EXPECT_NEAR(r.grid.t_min(), std::exp(-2.0), 1e-14);
  const auto cert = io::read_json(p("out/cov_psd.json"));
  EXPECT_TRUE(cert["psd"].get<bool>());
  EXPECT_EQ(cert["config"]["grid"]["n"], 32);
}

TEST_F(Cli, MultiComponentCovarianceIsLinear) {
  write_text("ab.json", R"({"components":[{"H":0.5,"c":1.1},{"H":0.3,"c":30,"a":0.7,"b":0.1}]})");
  write_text("a.json", R"({"components":[{"H":0.5,"c":1.1}]})");
  write_text("b.json", R"({"components":[{"H":0.3,"c":30,"a":0.7,"b":0.1}]})");
  ASSERT_EQ(run("cov --t-n 16 --model " + p("ab.json"), "ab"), 0);
  ASSERT_EQ(run("cov --t-n 16 --model " + p("a.json"), "a"), 0);
  ASSERT_EQ(run("cov --t-n 16 --model " + p("b.json"), "b"), 0);
  const ComplexMatrix ab = io::read_covariance(p("ab/cov.csv")).entries;
  const ComplexMatrix sum = io::read_covariance(p("a/cov.csv")).entries + io::read_covariance(p("b/cov.csv")).entries;
  EXPECT_LT((ab - sum).cwiseAbs().maxCoeff(), 1e-15 * sum.cwiseAbs().maxCoeff());
}

TEST_F(Cli, SeedsAreRepeatableAndEnvironmentIsHonoured) {
  ASSERT_EQ(run("--seed 7 sample --trials 5", "a"), 0);
  ASSERT_EQ(run("--seed 7 sample --trials 5", "b"), 0);
  ASSERT_EQ(run("--seed 8 sample --trials 5", "c"), 0);
  ASSERT_EQ(run("sample --trials 5", "d", "SIWS_SEED=7"), 0);
  EXPECT_EQ(slurp("a/samples.csv"), slurp("b/samples.csv"));
  EXPECT_NE(body("a/samples.csv"), body("c/samples.csv"));
  EXPECT_EQ(slurp("a/samples.csv"), slurp("d/samples.csv"));
  ASSERT_EQ(run("--seed 9 sample --trials 5", "e", "SIWS_SEED=7"), 0);
  EXPECT_EQ(io::read_samples(p("e/samples.csv")).seed, 9u);
  EXPECT_EQ(run("sample --trials 5", "f", "SIWS_SEED=seven"), 2);
}

TEST_F(Cli, SampleValidation) {
  ASSERT_EQ(run("--seed 3 sample --trials 2000 --validate"), 0) << slurp("stdout.txt");
  const auto v = io::read_json(p("out/samples_validation.json"));
  EXPECT_TRUE(v["pass"].get<bool>());
  EXPECT_LE(v["covariance_rel_frobenius"].get<double>(), 0.05);
  // too few paths for the 5% check: numerical failure
  EXPECT_EQ(run("--seed 3 sample --trials 3 --validate", "few"), 3);
}

TEST_F(Cli, ClosedKernelCentralCell) {
  ASSERT_EQ(run("kernel --mode closed"), 0) << slurp("stdout.txt");
  const AmbiguityMatrix k = io::read_ambiguity(p("out/kernel.csv"));
  ASSERT_EQ(k.values.rows(), 41);
  ASSERT_EQ(k.values.cols(), 33);
  EXPECT_NEAR(k.theta_grid.point(20), 0.0, 1e-15);
  EXPECT_NEAR(k.tau_grid.log_point(16), 0.0, 1e-14);
  EXPECT_NEAR(k.values(20, 16).real(), 0.511911, 1e-6);
}

TEST_F(Cli, ZeroChirpGivesTheUnchirpedKernel) {
  ASSERT_EQ(run("kernel --mode closed", "plain"), 0);
  ASSERT_EQ(run("kernel --mode closed --a 0 --b 2", "zero"), 0);
  EXPECT_EQ(body("plain/kernel.csv"), body("zero/kernel.csv"));
}

TEST_F(Cli, NumericKernelDiff) {
  ASSERT_EQ(run("kernel --mode numeric --diff --theta-n 11 --log-tau-n 9"), 0) << slurp("stdout.txt");
  const auto d = io::read_json(p("out/kernel_diff.json"));
  EXPECT_TRUE(d["pass"].get<bool>());
  EXPECT_LT(d["max_relative_error"].get<double>(), 1e-6);
  EXPECT_EQ(run("kernel --mode numeric --diff --symmetry real --theta-n 5 --log-tau-n 5", "r"), 2);
}

TEST_F(Cli, LocalKernelReport) {
  ASSERT_EQ(run("kernel --mode local --t 2.7 --xi 0 --theta-min -0.4 --theta-max 0.4 --theta-n 5 --log-tau-min -1 --log-tau-max 1 --log-tau-n 5"), 0)
      << slurp("stdout.txt");
  const auto j = io::read_json(p("out/kernel_local.json"));
  EXPECT_GT(j["predicted_gain"].get<double>(), 0.0);
  EXPECT_EQ(run("kernel --mode local --t 2.7 --xi 0", "big"), 2);
}

TEST_F(Cli, UnitEstimateEqualsSiwd) {
  ASSERT_EQ(run("--seed 5 sample --trials 3 --t-n 33", "s"), 0);
  ASSERT_EQ(run("estimate --path " + p("s/samples.csv") + " --trial 2 --xi-n 9"), 0) << slurp("stdout.txt");
  const SampleBatch b = io::read_samples(p("s/samples.csv"));
  const TFMatrix est = io::read_tf(p("out/estimate.csv"));
  const TFMatrix w = siwd(b.paths.row(2).transpose(), b.grid, est.xi_grid, 16);
  EXPECT_LT((est.values - w.values).cwiseAbs().maxCoeff(), 1e-11 * w.values.cwiseAbs().maxCoeff());
  EXPECT_EQ(run("estimate --path " + p("s/samples.csv") + " --trial 3", "bad"), 2);
  EXPECT_EQ(run("estimate", "none"), 2);
}

TEST_F(Cli, ZeroPathEstimateIsZero) {
  const auto grid = GeometricGrid::from_log(-1.0, 0.1, 21);
  io::write_samples(p("zero.csv"), {grid, ComplexMatrix::Zero(1, 21), 0, Symmetry::circular}, {});
  ASSERT_EQ(run("estimate --path " + p("zero.csv")), 0) << slurp("stdout.txt");
  EXPECT_EQ(io::read_tf(p("out/estimate.csv")).values.cwiseAbs().maxCoeff(), 0.0);
}

TEST_F(Cli, KernelGridMismatchIsRejected) {
  ASSERT_EQ(run("--seed 5 sample --trials 1 --t-n 33", "s"), 0);
  ASSERT_EQ(run("kernel --mode numeric --t-n 40", "k"), 0) << slurp("stdout.txt");
  EXPECT_EQ(run("estimate --path " + p("s/samples.csv") + " --kernel " + p("k/kernel.csv")), 2);
  ASSERT_EQ(run("kernel --mode numeric --t-n 33 --max-lag 8", "k2"), 0) << slurp("stdout.txt");
  EXPECT_EQ(run("estimate --path " + p("s/samples.csv") + " --kernel " + p("k2/kernel.csv"), "ok"), 0) << slurp("stdout.txt");
}

TEST_F(Cli, BenchIsDeterministicAndIsolatesFailures) {
  write_text("bench.json", kSmallBench);
  ASSERT_EQ(run("--config " + p("bench.json") + " --seed 11 bench", "a"), 0) << slurp("stdout.txt");
  ASSERT_EQ(run("--config " + p("bench.json") + " --seed 11 --threads 1 bench", "b"), 0);
  EXPECT_EQ(slurp("a/bench_report.json"), slurp("b/bench_report.json"));
  EXPECT_EQ(slurp("a/bench_mse_optimal_siws.csv"), slurp("b/bench_mse_optimal_siws.csv"));

  ASSERT_EQ(run("kernel --mode numeric --t-n 40", "k"), 0);
  auto cfg = nlohmann::json::parse(kSmallBench);
  cfg["estimators"] = {"raw_siwd", {{"kind", "custom_kernel"}, {"name", "mine"}, {"kernel", p("k/kernel.csv")}}};
  write_text("fail.json", cfg.dump());
  ASSERT_EQ(run("--config " + p("fail.json") + " bench", "f"), 0) << slurp("stdout.txt");
  const auto rep = io::read_json(p("f/bench_report.json"));
  EXPECT_FALSE(rep["estimators"][0]["failed"].get<bool>());
  EXPECT_TRUE(rep["estimators"][1]["failed"].get<bool>());
}

TEST_F(Cli, MellinOfCMatchesClosedForm) {
  ASSERT_EQ(run("mellin --function C --c 2 --theta-n 9"), 0) << slurp("stdout.txt");
  const io::CsvTable t = io::read_csv(p("out/mellin.csv"));
  const FrequencyGrid th = io::parse_frequency(t.fields.at("rows"));
  const ComplexMatrix v = io::to_matrix(t);
  for (std::size_t j = 0; j < th.size(); ++j)
    EXPECT_NEAR(std::abs(v(static_cast<Eigen::Index>(j), 0) - oracle::mellin_c(2.0, th.point(j))), 0.0, 1e-10);
  EXPECT_EQ(run("mellin --function Z", "z"), 2);
}

TEST_F(Cli, SidecarsMirrorMetadata) {
  ASSERT_EQ(run("--sidecar --seed 4 sample --trials 2"), 0);
  const auto j = io::read_json(p("out/samples.csv.json"));
  EXPECT_EQ(j["seed"], 4);
  EXPECT_EQ(j["kind"], "samples");
}
