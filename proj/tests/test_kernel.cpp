#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "siws/kernel.hpp"

using namespace siws;

namespace {

const FrequencyGrid kTheta = FrequencyGrid::spanning(-0.5, 0.5, 11);
const GeometricGrid kTau = GeometricGrid::from_log(-2.0, 0.5, 9);

double max_abs(const ComplexMatrix& m) { return m.cwiseAbs().maxCoeff(); }

// Relative error where the reference is above floor * max, absolute below.
double floored_error(const ComplexMatrix& got, const ComplexMatrix& want, const ComplexMatrix& a_ex, double floor = 1e-10) {
  const double top = a_ex.cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < got.rows(); ++i)
    for (Eigen::Index j = 0; j < got.cols(); ++j) {
      const double diff = std::abs(got(i, j) - want(i, j));
      const double ref = std::abs(want(i, j));
      worst = std::max(worst, std::abs(a_ex(i, j)) >= floor * top && ref > 0 ? diff / ref : diff);
    }
  return worst;
}

// Optimal kernel of a multi-component unchirped model from its moment terms.
double phi_mlssp_oracle(const std::vector<LsspParams>& p, double theta, double tau) {
  oracle::cd amp = 0.0;
  double d1 = 0.0;
  for (const auto& a : p) {
    amp += oracle::C(a.c, tau) * oracle::mellin_q(a.H, theta);
    for (const auto& b : p) d1 += oracle::mellin_c(a.c + b.c, theta) * oracle::q_conv(a.H, b.H, tau);
  }
  return std::norm(amp) / (std::norm(amp) + d1);
}

ModelSpec two_component(double a1 = 0.0, double b1 = 0.0, double a2 = 0.0, double b2 = 0.0) {
  return ModelSpec({Component{{0.5, 1.1}, {a1, b1}, {}}, Component{{0.3, 30.0}, {a2, b2}, {}}});
}

} // namespace

TEST(ClosedKernel, LsspMatchesMomentOracle) {
  for (double H : {0.1, 0.5, 0.9})
    for (double c : {1.0, 1.1, 4.0, 30.0})
      for (double th : {-0.7, -0.1, 0.0, 0.25})
        for (double tau : {0.05, 0.8, 1.0, 3.0}) {
          const double want = oracle::phi_lssp_from_moments(H, c, th, tau);
          const Complex got = closed_kernel_lssp({H, c}, th, tau);
          EXPECT_NEAR(got.real(), want, 1e-12 * want + 1e-300);
          EXPECT_EQ(got.imag(), 0.0);
        }
}

TEST(ClosedKernel, Limits) {
  EXPECT_NEAR(closed_kernel_lssp({0.5, 1.1}, 0.0, 1.0).real(), 1.0 / (1.0 + 1.0 / std::sqrt(1.1)), 1e-15);
  EXPECT_NEAR(closed_kernel_lssp({0.5, 1.1}, 0.0, 1.0).real(), 0.511911, 1e-6);
  // c = 1: signal and fluctuation terms balance everywhere
  EXPECT_NEAR(closed_kernel_lssp({0.3, 1.0}, 0.4, 7.0).real(), 0.5, 1e-15);
  EXPECT_LT(closed_kernel_lssp({0.5, 4.0}, 2.0, 1.0).real(), 1e-20);
  EXPECT_LT(closed_kernel_lssp({0.5, 4.0}, 0.0, 1e-4).real(), 1e-20);
  EXPECT_THROW(closed_kernel_lssp({0.5, 1.1}, 0.0, 0.0), DomainError);
  EXPECT_THROW(closed_kernel_lssp({0.5, 1.1}, NAN, 1.0), DomainError);
  EXPECT_THROW(closed_kernel_lssp({1.5, 1.1}, 0.0, 1.0), InvalidModel);
}

TEST(ClosedKernel, AsPrintedAgreesOnlyAtZeroTheta) {
  const LsspParams p{0.5, 1.1};
  EXPECT_NEAR(std::abs(closed_kernel_lssp_as_printed(p, 0.0, 2.0) - closed_kernel_lssp(p, 0.0, 2.0)), 0.0, 1e-15);
  EXPECT_GT(std::abs(closed_kernel_lssp_as_printed(p, 0.1, 1.0) - closed_kernel_lssp(p, 0.1, 1.0)), 0.1);
}

TEST(ClosedKernel, ChirpShiftsTheta) {
  const LsspParams p{0.4, 2.0};
  const ChirpParams ch{1.3, 0.5};
  for (double tau : {0.3, 1.0, 2.5})
    for (double th : {-0.3, 0.0, 0.2}) {
      const double shifted = th - 1.3 * std::log(tau) / (2 * oracle::pi);
      EXPECT_NEAR(closed_kernel_lsscp(p, ch, th, tau).real(), oracle::phi_lssp_from_moments(0.4, 2.0, shifted, tau), 1e-12);
    }
}

TEST(ClosedKernel, MultiComponentCases) {
  const std::vector<LsspParams> one{{0.5, 1.1}};
  const std::vector<LsspParams> twice{{0.5, 1.1}, {0.5, 1.1}};
  const std::vector<LsspParams> mixed{{0.5, 1.1}, {0.3, 30.0}};
  for (double th : {-0.4, 0.0, 0.15})
    for (double tau : {0.4, 1.0, 2.0}) {
      const double single = closed_kernel_lssp(one[0], th, tau).real();
      EXPECT_NEAR(closed_kernel_mlssp(one, th, tau).real(), single, 1e-13);
      EXPECT_NEAR(closed_kernel_mlssp(twice, th, tau).real(), single, 1e-13);
      const double want = phi_mlssp_oracle(mixed, th, tau);
      EXPECT_NEAR(closed_kernel_mlssp(mixed, th, tau).real(), want, 1e-12 * want);
    }
  EXPECT_THROW(closed_kernel_mlssp(std::span<const LsspParams>{}, 0.0, 1.0), InvalidModel);
}

TEST(ClosedKernel, SharedChirpOnly) {
  const ModelSpec shared = two_component(0.8, 0.2, 0.8, 0.2);
  const std::vector<LsspParams> p{{0.5, 1.1}, {0.3, 30.0}};
  for (double tau : {0.5, 1.7}) {
    const double th = 0.1;
    EXPECT_NEAR(closed_kernel(shared, th, tau).real(), phi_mlssp_oracle(p, th - 0.8 * std::log(tau) / (2 * oracle::pi), tau), 1e-12);
  }
  EXPECT_THROW(closed_kernel(two_component(0.8, 0.2, -0.5, 0.0), 0.1, 1.0), InvalidModel);
  EXPECT_THROW(closed_kernel(two_component(0.8, 0.2, 0.8, 0.0), 0.1, 1.0), InvalidModel);
}

TEST(ClosedKernel, ModeSelection) {
  EXPECT_EQ(closed_mode_for(ModelSpec::lssp(0.5, 1.1)), KernelMode::closed_lssp);
  EXPECT_EQ(closed_mode_for(ModelSpec::lsscp(0.5, 1.1, 1.0, 0.0)), KernelMode::closed_lsscp);
  EXPECT_EQ(closed_mode_for(two_component()), KernelMode::closed_mlssp);
  EXPECT_EQ(closed_mode_for(two_component(1, 0, 1, 0)), KernelMode::closed_mlsscp);
  for (auto k : {KernelMode::closed_lssp, KernelMode::closed_mlsscp, KernelMode::numeric_global, KernelMode::local})
    EXPECT_EQ(kernel_mode_from_string(to_string(k)), k);
  EXPECT_THROW(kernel_mode_from_string("bogus"), InvalidArgument);
}

TEST(NumericKernel, MatchesClosedFormsForAllKinds) {
  const std::vector<ModelSpec> models{ModelSpec::lssp(0.5, 1.1), ModelSpec::lsscp(0.3, 2.0, 1.2, 0.4), two_component(),
                                      two_component(0.9, -0.3, 0.9, -0.3)};
  for (const auto& m : models) {
    const GlobalKernelTerms t = global_kernel_terms(m, Symmetry::circular, kTheta, kTau);
    const AmbiguityMatrix phi = kernel_from_terms(t, 0.0);
    const AmbiguityMatrix closed = closed_kernel_matrix(m, kTheta, kTau);
    EXPECT_LT(floored_error(phi.values, closed.values, t.a_ex.values), 1e-6) << to_string(m.kind());
  }
}

TEST(NumericKernel, CentralMomentTerms) {
  const double H = 0.5, c = 1.1;
  const auto t = global_kernel_terms(ModelSpec::lssp(H, c), Symmetry::real, FrequencyGrid(0.0, 0.1, 1), GeometricGrid(1.0, 2.0, 1));
  EXPECT_NEAR(t.a_ex.values(0, 0).real(), 4.13273, 1e-5);
  const double d1 = oracle::mellin_c_abs2(c, 0.0) * oracle::q_conv(H, H, 1.0);
  const double d2 = oracle::ambiguity_c_tau2(c, 0.0, 1.0) * oracle::q_energy(H);
  EXPECT_NEAR(t.d1(0, 0).real(), d1, 1e-8 * d1);
  EXPECT_NEAR(t.d2(0, 0).real(), d2, 1e-8 * d2);
  EXPECT_NEAR(t.e_abs2.values(0, 0).real(), std::pow(4.13273, 2) + d1 + d2, 1e-4);
}

TEST(NumericKernel, RealSymmetryMatchesOracleAndIsSmaller) {
  const ModelSpec m = ModelSpec::lssp(0.5, 1.1);
  const auto real = numeric_global_kernel(m, Symmetry::real, kTheta, kTau, 0.0);
  const auto circ = numeric_global_kernel(m, Symmetry::circular, kTheta, kTau, 0.0);
  for (std::size_t i = 0; i < kTheta.size(); ++i)
    for (std::size_t j = 0; j < kTau.size(); ++j) {
      const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
      const double want = oracle::phi_lssp_real_from_moments(0.5, 1.1, kTheta.point(i), kTau.point(j));
      EXPECT_NEAR(real.values(ii, jj).real(), want, 1e-7 * want + 1e-14);
      EXPECT_LE(real.values(ii, jj).real(), circ.values(ii, jj).real() + 1e-12);
    }
}

TEST(NumericKernel, BoundedByOne) {
  const auto phi = numeric_global_kernel(two_component(0.5, 0.0, -0.7, 0.3), Symmetry::circular, kTheta, kTau);
  EXPECT_LE(max_abs(phi.values), 1.0 + 1e-12);
  EXPECT_GE(phi.values.real().minCoeff(), 0.0);
}

TEST(NumericKernel, ThresholdControlsSupport) {
  const ModelSpec m = ModelSpec::lssp(0.5, 1.1);
  const auto t = global_kernel_terms(m, Symmetry::circular, FrequencyGrid::spanning(-1.5, 1.5, 13), kTau);
  EXPECT_EQ(max_abs(kernel_from_terms(t, 1.0).values), 0.0);
  EXPECT_EQ(max_abs(kernel_from_terms(t, 2.0).values), 0.0);
  const auto all = support_set(global_kernel_terms(m, Symmetry::circular, kTheta, kTau), 0.0);
  EXPECT_EQ(all.count(), all.size());
  const auto some = support_set(t, 1e-3);
  EXPECT_LT(some.count(), some.size());
  EXPECT_GT(some.count(), 0);
  const auto phi = kernel_from_terms(t, 1e-3);
  for (Eigen::Index i = 0; i < phi.values.rows(); ++i)
    for (Eigen::Index j = 0; j < phi.values.cols(); ++j)
      if (!some(i, j)) EXPECT_EQ(phi.values(i, j), Complex(0.0, 0.0));
  EXPECT_THROW(numeric_global_kernel(m, Symmetry::circular, kTheta, kTau, -1.0), InvalidArgument);
}

TEST(NumericKernel, RejectsRealSymmetryForChirpedModel) {
  EXPECT_THROW(global_kernel_terms(ModelSpec::lsscp(0.5, 1.1, 1.0, 0.0), Symmetry::real, kTheta, kTau), InvalidArgument);
}

TEST(NumericKernel, ZeroProcessIsRejected) {
  Component c;
  c.shape = ShapeFunctions{[](double) { return 0.0; }, [](double v) { return Complex(std::exp(-v * v), 0.0); }, "zero"};
  EXPECT_THROW(global_kernel_terms(ModelSpec({c}), Symmetry::circular, kTheta, kTau), InvalidModel);
  EXPECT_THROW(LocalGram(ModelSpec({c}), Symmetry::circular, FrequencyGrid(0, 0.1, 3), GeometricGrid(0.5, 2.0, 3)), InvalidModel);
}

TEST(TfKernel, IsLinear) {
  const auto time = GeometricGrid::from_log(-2.0, 0.125, 32);
  const auto theta = dual_frequency_grid(time);
  const auto tau = lag_grid(time, 5);
  const auto xi = FrequencyGrid::spanning(-1, 1, 9);
  std::mt19937 rng(4);
  std::normal_distribution<double> g;
  AmbiguityMatrix a{theta, tau, ComplexMatrix(32, 11), AmbiguityRole::kernel}, b = a, ab = a;
  for (auto& z : a.values.reshaped()) z = Complex(g(rng), g(rng));
  for (auto& z : b.values.reshaped()) z = Complex(g(rng), g(rng));
  ab.values = a.values + Complex(2, -1) * b.values;
  const ComplexMatrix lhs = tf_domain_kernel(ab, time, xi).values;
  const ComplexMatrix rhs = tf_domain_kernel(a, time, xi).values + Complex(2, -1) * tf_domain_kernel(b, time, xi).values;
  EXPECT_LT(max_abs(lhs - rhs), 1e-12 * max_abs(rhs));
}

TEST(TfKernel, TotalMassIsCentralValue) {
  // Summing over one full period in both u and xi keeps only phi(0, 1).
  const auto time = GeometricGrid::from_log(-2.0, 0.125, 32);
  const std::size_t lag = 6;
  const auto theta = dual_frequency_grid(time);
  const auto tau = lag_grid(time, lag);
  const auto xi = lag_dual_xi_grid(time, lag);
  std::mt19937 rng(5);
  std::normal_distribution<double> g;
  AmbiguityMatrix phi{theta, tau, ComplexMatrix(32, 13), AmbiguityRole::kernel};
  for (auto& z : phi.values.reshaped()) z = Complex(g(rng), g(rng));
  const TFMatrix big = tf_domain_kernel(phi, time, xi);
  const Complex mass = big.values.sum() * time.log_ratio() * xi.step();
  const Complex want = phi.values(16, static_cast<Eigen::Index>(lag));
  ASSERT_NEAR(theta.point(16), 0.0, 1e-15);
  EXPECT_LT(std::abs(mass - want), 1e-12);
}

TEST(TfKernel, RejectsInconsistentKernel) {
  AmbiguityMatrix bad{kTheta, kTau, ComplexMatrix::Zero(3, 3), AmbiguityRole::kernel};
  EXPECT_THROW(tf_domain_kernel(bad, GeometricGrid(1.0, 1.5, 4), FrequencyGrid(0, 0.1, 3)), DimensionError);
}

TEST(KernelSpecJson, RoundTripAndValidation) {
  KernelSpec k{KernelMode::closed_lsscp, ModelSpec::lsscp(0.4, 1.5, 0.7, 0.1), Symmetry::circular, 1e-5, 1e-9};
  const KernelSpec back = kernel_spec_from_json(nlohmann::json::parse(to_json(k).dump()));
  EXPECT_EQ(back.mode, k.mode);
  EXPECT_EQ(back.model.components()[0].chirp, k.model.components()[0].chirp);
  EXPECT_EQ(back.threshold_delta, 1e-5);
  EXPECT_EQ(back.svd_tol, 1e-9);

  KernelSpec wrong = k;
  wrong.mode = KernelMode::closed_lssp;
  EXPECT_THROW(wrong.validate(), InvalidModel);
  KernelSpec neg{};
  neg.threshold_delta = -1e-3;
  EXPECT_THROW(neg.validate(), InvalidArgument);
  KernelSpec big{};
  big.threshold_delta = 5.0;
  EXPECT_NO_THROW(big.validate());
  KernelSpec tol{};
  tol.svd_tol = 0.0;
  EXPECT_THROW(tol.validate(), InvalidArgument);
  EXPECT_THROW(kernel_spec_from_json(nlohmann::json::parse(R"({"mode":"local"})")), InvalidArgument);
}

TEST(LocalKernel, SinglePointCollapsesToScalarFormula) {
  const ModelSpec m = ModelSpec::lssp(0.5, 1.1);
  const FrequencyGrid th(0.0, 0.1, 1);
  const GeometricGrid tau(1.0, 2.0, 1);
  const LocalGram g(m, Symmetry::circular, th, tau);
  const auto t = global_kernel_terms(m, Symmetry::circular, th, tau);
  EXPECT_NEAR(g.gram()(0, 0).real(), t.e_abs2.values(0, 0).real(), 1e-8 * t.e_abs2.values(0, 0).real());
  const LocalKernelResult r = local_optimal_kernel(g, m, std::exp(1.0), 0.0);
  const double ratio = std::norm(g.mean()(0)) / g.gram()(0, 0).real();
  EXPECT_NEAR(r.predicted_mse, std::norm(r.target) * (1.0 - ratio), 1e-10 * std::norm(r.target));
  EXPECT_NEAR(r.predicted_gain, std::norm(r.target) * ratio, 1e-10 * std::norm(r.target));
}

TEST(LocalKernel, GramIsHermitianPsd) {
  const LocalGram g(two_component(0.6, 0.0, 0.6, 0.0), Symmetry::circular, FrequencyGrid::spanning(-0.3, 0.3, 5), GeometricGrid::from_log(-1.0, 0.5, 5));
  EXPECT_LT(max_abs(g.gram() - g.gram().adjoint()), 1e-10 * max_abs(g.gram()));
  EXPECT_GE(g.eigenvalues().minCoeff(), -1e-8 * g.eigenvalues().maxCoeff());
  EXPECT_THROW(LocalGram(ModelSpec::lssp(0.5, 1.1), Symmetry::circular, FrequencyGrid(0, 0.1, 33), GeometricGrid(0.5, 1.1, 33)), InvalidArgument);
}

TEST(LocalKernel, BeatsGlobalAndTrivialKernels) {
  const ModelSpec m = ModelSpec::lssp(0.5, 1.1);
  const auto th = FrequencyGrid::spanning(-0.4, 0.4, 7);
  const auto tau = GeometricGrid::from_log(-1.5, 0.5, 7);
  const LocalGram g(m, Symmetry::circular, th, tau);
  const auto global = numeric_global_kernel(m, Symmetry::circular, th, tau);
  for (double t : {1.0, std::exp(1.0), 5.0})
    for (double xi : {0.0, 0.2}) {
      for (double tol : {1e-8, 1e-12}) {
        const LocalKernelResult r = local_optimal_kernel(g, m, t, xi, tol);
        const double slack = 1e-9 * std::norm(r.target);
        EXPECT_LE(r.predicted_mse, g.mse(global.values, t, xi, r.target) + slack);
        EXPECT_LE(r.predicted_mse, g.mse(ComplexMatrix::Ones(7, 7), t, xi, r.target) + slack);
        EXPECT_LE(r.predicted_mse, std::norm(r.target) + slack);
        // phi -> weights round trip; the quadratic form cancels heavily at small svd_tol
        EXPECT_NEAR(g.mse(r.kernel.values, t, xi, r.target), r.predicted_mse, 1e-6 * std::norm(r.target));
      }
    }
}

TEST(LocalKernel, PerturbationsDoNotHelp) {
  const ModelSpec m = ModelSpec::lsscp(0.4, 2.0, 0.5, 0.0);
  const auto th = FrequencyGrid::spanning(-0.3, 0.3, 5);
  const auto tau = GeometricGrid::from_log(-1.0, 0.5, 5);
  const LocalGram g(m, Symmetry::circular, th, tau);
  const LocalKernelResult r = local_optimal_kernel(g, m, 2.0, 0.1, 1e-12);
  std::mt19937 rng(6);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 20; ++trial) {
    ComplexMatrix p = r.kernel.values;
    for (auto& z : p.reshaped()) z += 1e-2 * Complex(n(rng), n(rng));
    EXPECT_GE(g.mse(p, 2.0, 0.1, r.target), r.predicted_mse - 1e-9 * std::norm(r.target));
  }
}

TEST(LocalKernel, RejectsRealSymmetryForChirpAndBadTolerance) {
  EXPECT_THROW(LocalGram(ModelSpec::lsscp(0.5, 1.1, 1.0, 0.0), Symmetry::real, FrequencyGrid(0, 0.1, 3), GeometricGrid(0.5, 2.0, 3)), InvalidArgument);
  const LocalGram g(ModelSpec::lssp(0.5, 1.1), Symmetry::circular, FrequencyGrid(0, 0.1, 3), GeometricGrid(0.5, 2.0, 3));
  EXPECT_THROW(local_optimal_kernel(g, ModelSpec::lssp(0.5, 1.1), 1.0, 0.0, 0.0), InvalidArgument);
  EXPECT_THROW(g.weights(0.0, 0.0), DomainError);
}
