#pragma once

// MMSE-optimal ambiguity-domain kernels.
//
// Global kernel: phi = |A_EX|^2 / E|A_X|^2 on U = {E|A_X|^2 > delta max}, where
// for Gaussian processes
//   E|A_X|^2 = |A_EX|^2 + D1 (+ D2 for real processes)
//   D1(theta, tau) = int int R(u1 + v/2, u2 + v/2) conj R(u1 - v/2, u2 - v/2) e^{-i 2 pi theta (u1 - u2)}
//   D2(theta, tau) = int int R(u1 + v/2, u2 - v/2) R(u1 - v/2, u2 + v/2)      e^{-i 2 pi theta (u1 - u2)}
// with v = ln tau, evaluated in (m, d) = ((u1 + u2)/2, u1 - u2) coordinates.
//
// Closed forms hold for the example family (circular case). With w = 2 pi theta
// and v = ln tau, one component gives
//   phi = 1 / (1 + c^{-1/2} e^{(1 - 1/c) w^2} e^{((c - 1)/4) v^2}),
// which is real. The multicomponent form and its chirped version with a chirp
// shared by all components follow from the same moment algebra.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "siws/model.hpp"
#include "siws/parallel.hpp"
#include "siws/scalegrid.hpp"
#include "siws/synth.hpp"
#include "siws/tfr.hpp"

namespace siws {

// ---------------------------------------------------------------------------
// Closed forms

namespace detail {

inline void check_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("kernel: tau must be positive");
}

inline void check_theta(double theta) {
  if (!std::isfinite(theta)) throw DomainError("kernel: theta must be finite");
}

} // namespace detail

inline Complex closed_kernel_lssp(const LsspParams& p, double theta, double tau) {
  p.validate();
  detail::check_theta(theta);
  detail::check_tau(tau);
  const double w = kTwoPi * theta;
  const double v = std::log(tau);
  const double ratio = std::exp((1.0 - 1.0 / p.c) * w * w + 0.25 * (p.c - 1.0) * v * v) / std::sqrt(p.c);
  return {1.0 / (1.0 + ratio), 0.0};
}

/// Form carrying an extra factor e^{4 H i w} in the denominator. Kept for
/// comparison reports only; it is not the MMSE kernel off theta = 0.
inline Complex closed_kernel_lssp_as_printed(const LsspParams& p, double theta, double tau) {
  p.validate();
  detail::check_theta(theta);
  detail::check_tau(tau);
  const double w = kTwoPi * theta;
  const double v = std::log(tau);
  const double mag = std::exp((1.0 - 1.0 / p.c) * w * w + 0.25 * (p.c - 1.0) * v * v) / std::sqrt(p.c);
  return 1.0 / (1.0 + std::polar(mag, 4.0 * p.H * w));
}

/// phi_c(theta, tau) = phi(theta - (a / 2 pi) ln tau, tau).
inline Complex closed_kernel_lsscp(const LsspParams& p, const ChirpParams& ch, double theta, double tau) {
  detail::check_tau(tau);
  return closed_kernel_lssp(p, theta - ch.a * std::log(tau) / kTwoPi, tau);
}

inline Complex closed_kernel_mlssp(std::span<const LsspParams> params, double theta, double tau) {
  if (params.empty()) throw InvalidModel("closed_kernel_mlssp: empty component list");
  for (const auto& p : params) p.validate();
  detail::check_theta(theta);
  detail::check_tau(tau);
  const double w = kTwoPi * theta;
  const double v = std::log(tau);
  double cross = 0.0;
  Complex amp{0.0, 0.0};
  for (const auto& pj : params) {
    amp += std::exp(0.5 * std::pow(Complex(2.0 * pj.H, -w), 2) - 0.125 * pj.c * v * v);
    for (const auto& pk : params) {
      const double cs = pj.c + pk.c;
      cross += std::sqrt(2.0 / cs) *
               std::exp(-2.0 * w * w / cs + (pj.H + pk.H) * (pj.H + pk.H) + (pj.H - pk.H) * v - 0.25 * v * v);
    }
  }
  const double num = std::norm(amp);
  if (num == 0.0) return {0.0, 0.0};
  return {1.0 / (1.0 + cross / num), 0.0};
}

/// Multicomponent chirped form; requires one (a, b) shared by all components.
inline Complex closed_kernel_mlsscp(std::span<const Component> comps, double theta, double tau) {
  if (comps.empty()) throw InvalidModel("closed_kernel_mlsscp: empty component list");
  std::vector<LsspParams> params;
  for (const auto& c : comps) {
    if (c.shape) throw InvalidModel("closed kernels need the example family");
    if (!(c.chirp == comps.front().chirp))
      throw InvalidModel("closed_kernel_mlsscp: closed form needs a chirp shared by all components");
    params.push_back(c.lssp);
  }
  detail::check_tau(tau);
  return closed_kernel_mlssp(params, theta - comps.front().chirp.a * std::log(tau) / kTwoPi, tau);
}

/// Dispatches on the model kind.
inline Complex closed_kernel(const ModelSpec& m, double theta, double tau) {
  if (!m.is_example_family()) throw InvalidModel("closed kernels need the example family");
  const auto& c = m.components();
  switch (m.kind()) {
  case ModelKind::lssp: return closed_kernel_lssp(c[0].lssp, theta, tau);
  case ModelKind::lsscp: return closed_kernel_lsscp(c[0].lssp, c[0].chirp, theta, tau);
  case ModelKind::mlssp: {
    std::vector<LsspParams> p;
    for (const auto& x : c) p.push_back(x.lssp);
    return closed_kernel_mlssp(p, theta, tau);
  }
  case ModelKind::mlsscp: return closed_kernel_mlsscp(c, theta, tau);
  }
  return {};
}

inline AmbiguityMatrix closed_kernel_matrix(const ModelSpec& m, const FrequencyGrid& theta_grid,
                                            const GeometricGrid& tau_grid) {
  ComplexMatrix v(static_cast<Eigen::Index>(theta_grid.size()), static_cast<Eigen::Index>(tau_grid.size()));
  for (std::size_t i = 0; i < theta_grid.size(); ++i)
    for (std::size_t j = 0; j < tau_grid.size(); ++j)
      v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          closed_kernel(m, theta_grid.point(i), tau_grid.point(j));
  return {theta_grid, tau_grid, std::move(v), AmbiguityRole::kernel};
}

// ---------------------------------------------------------------------------
// KernelSpec

enum class KernelMode { closed_lssp, closed_lsscp, closed_mlssp, closed_mlsscp, numeric_global, local };

inline std::string to_string(KernelMode k) {
  switch (k) {
  case KernelMode::closed_lssp: return "closed_lssp";
  case KernelMode::closed_lsscp: return "closed_lsscp";
  case KernelMode::closed_mlssp: return "closed_mlssp";
  case KernelMode::closed_mlsscp: return "closed_mlsscp";
  case KernelMode::numeric_global: return "numeric_global";
  case KernelMode::local: return "local";
  }
  return "?";
}

inline KernelMode kernel_mode_from_string(const std::string& s) {
  for (auto k : {KernelMode::closed_lssp, KernelMode::closed_lsscp, KernelMode::closed_mlssp,
                 KernelMode::closed_mlsscp, KernelMode::numeric_global, KernelMode::local})
    if (to_string(k) == s) return k;
  throw InvalidArgument("unknown kernel mode \"" + s + "\"");
}

inline KernelMode closed_mode_for(const ModelSpec& m) {
  switch (m.kind()) {
  case ModelKind::lssp: return KernelMode::closed_lssp;
  case ModelKind::lsscp: return KernelMode::closed_lsscp;
  case ModelKind::mlssp: return KernelMode::closed_mlssp;
  case ModelKind::mlsscp: return KernelMode::closed_mlsscp;
  }
  return KernelMode::closed_lssp;
}

struct KernelSpec {
  KernelMode mode = KernelMode::numeric_global;
  ModelSpec model = ModelSpec::lssp(0.5, 1.1);
  Symmetry symmetry = Symmetry::circular;
  double threshold_delta = 1e-6;
  double svd_tol = 1e-8;

  void validate() const {
    const bool closed = mode != KernelMode::numeric_global && mode != KernelMode::local;
    if (closed) {
      if (!model.is_example_family()) throw InvalidModel("closed kernel modes need the example family");
      if (closed_mode_for(model) != mode)
        throw InvalidModel("kernel mode " + to_string(mode) + " does not match model kind " + to_string(model.kind()));
      if (symmetry != Symmetry::circular) throw InvalidArgument("closed kernels are for circular symmetry");
    }
    if (!(threshold_delta >= 0.0) || !std::isfinite(threshold_delta)) throw InvalidArgument("threshold_delta must be >= 0");
    if (!(svd_tol > 0.0) || !(svd_tol < 1.0)) throw InvalidArgument("svd_tol must lie in (0, 1)");
  }
};

inline nlohmann::json to_json(const KernelSpec& k) {
  return {{"mode", to_string(k.mode)},
          {"model", to_json(k.model)},
          {"symmetry", to_string(k.symmetry)},
          {"delta", k.threshold_delta},
          {"svd_tol", k.svd_tol}};
}

inline KernelSpec kernel_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("model")) throw InvalidArgument("kernel spec JSON needs a \"model\"");
  KernelSpec k{kernel_mode_from_string(j.value("mode", std::string("numeric_global"))), model_from_json(j.at("model")),
               symmetry_from_string(j.value("symmetry", std::string("circular"))), j.value("delta", 1e-6),
               j.value("svd_tol", 1e-8)};
  k.validate();
  return k;
}

// ---------------------------------------------------------------------------
// Numeric global kernel

struct GlobalKernelQuadrature {
  std::optional<LogQuadrature> time;  ///< ln t range for A_EX
  std::optional<LogQuadrature> mid;   ///< m = (u1 + u2) / 2 range for D1, D2
  std::optional<LogQuadrature> diff;  ///< d = u1 - u2 range (should be symmetric)
};

inline LogQuadrature default_mid_quadrature(const ModelSpec& m) {
  double lo = 1e300, hi = -1e300;
  bool custom = false;
  for (const auto& c : m.components()) {
    custom = custom || !c.is_example_family();
    const double centre = c.is_example_family() ? 2.0 * c.lssp.H : 0.0;
    lo = std::min(lo, centre);
    hi = std::max(hi, centre);
  }
  const double margin = custom ? 12.0 : 8.5;
  return {lo - margin, hi + margin, 0.1};
}

inline LogQuadrature default_diff_quadrature(const ModelSpec& m) {
  const LogQuadrature lag = default_lag_quadrature(m);
  return {lag.log_min, lag.log_max, 0.1};
}

/// Terms of E|A_X|^2 on a (theta, tau) grid.
struct GlobalKernelTerms {
  AmbiguityMatrix a_ex;    ///< ESIAF
  ComplexMatrix d1;
  ComplexMatrix d2;        ///< zero for circular symmetry
  AmbiguityMatrix e_abs2;  ///< |A_EX|^2 + D1 (+ D2)
};

namespace detail {

inline void require_nonzero_process(const ModelSpec& m, const GeometricGrid& mid) {
  for (std::size_t i = 0; i < mid.size(); ++i) {
    const double u = mid.log_point(i);
    if (std::abs(m.covariance_log(u, u)) > 0.0) return;
  }
  throw InvalidModel("process variance vanishes on the quadrature range (zero process)");
}

} // namespace detail

inline GlobalKernelTerms global_kernel_terms(const ModelSpec& m, Symmetry sym, const FrequencyGrid& theta_grid,
                                             const GeometricGrid& tau_grid, const GlobalKernelQuadrature& q = {}) {
  if (sym == Symmetry::real && !m.is_real())
    throw InvalidArgument("real symmetry needs an unchirped (real-valued) covariance");
  const GeometricGrid mid = q.mid.value_or(default_mid_quadrature(m)).grid();
  const GeometricGrid diff = q.diff.value_or(default_diff_quadrature(m)).grid();
  detail::require_nonzero_process(m, mid);

  AmbiguityMatrix a_ex = esiaf(m, theta_grid, tau_grid, q.time);
  const auto nth = static_cast<Eigen::Index>(theta_grid.size());
  const auto ntau = static_cast<Eigen::Index>(tau_grid.size());
  const auto nm = mid.size();
  const auto nd = diff.size();
  const double hm = mid.log_ratio();
  const ComplexMatrix fwd_d = mellin_forward_matrix(diff, theta_grid);

  ComplexMatrix d1(nth, ntau), d2 = ComplexMatrix::Zero(nth, ntau);
  std::vector<double> edge(static_cast<std::size_t>(ntau), 0.0);
  parallel::for_each_index(static_cast<std::size_t>(ntau), [&](std::size_t j) {
    const double v = tau_grid.log_point(j);
    ComplexVector g1 = ComplexVector::Zero(static_cast<Eigen::Index>(nd));
    ComplexVector g2 = ComplexVector::Zero(static_cast<Eigen::Index>(nd));
    double peak = 0.0, rim = 0.0;
    for (std::size_t k = 0; k < nd; ++k) {
      const double d = diff.log_point(k);
      Complex s1{0.0, 0.0}, s2{0.0, 0.0};
      for (std::size_t i = 0; i < nm; ++i) {
        const double mm = mid.log_point(i);
        const double u1 = mm + 0.5 * d, u2 = mm - 0.5 * d;
        const Complex f1 = m.covariance_log(u1 + 0.5 * v, u2 + 0.5 * v) * std::conj(m.covariance_log(u1 - 0.5 * v, u2 - 0.5 * v));
        s1 += f1;
        const double mag = std::abs(f1);
        peak = std::max(peak, mag);
        if (i == 0 || i + 1 == nm || k == 0 || k + 1 == nd) rim = std::max(rim, mag);
        if (sym == Symmetry::real)
          s2 += m.covariance_log(u1 + 0.5 * v, u2 - 0.5 * v) * m.covariance_log(u1 - 0.5 * v, u2 + 0.5 * v);
      }
      g1(static_cast<Eigen::Index>(k)) = s1 * hm;
      g2(static_cast<Eigen::Index>(k)) = s2 * hm;
    }
    edge[j] = peak > 0.0 ? rim / peak : 0.0;
    d1.col(static_cast<Eigen::Index>(j)) = fwd_d * g1;
    if (sym == Symmetry::real) d2.col(static_cast<Eigen::Index>(j)) = fwd_d * g2;
  });
  const double worst = *std::max_element(edge.begin(), edge.end());
  if (worst > 1e-12)
    warn("global kernel: fourth-moment integrand at quadrature edge is " + std::to_string(worst) +
         " of its peak; widen the mid/diff ranges");

  ComplexMatrix total = a_ex.values.cwiseAbs2().cast<Complex>() + d1 + d2;
  AmbiguityMatrix e_abs2{theta_grid, tau_grid, std::move(total), AmbiguityRole::e_abs2};
  return {std::move(a_ex), std::move(d1), std::move(d2), std::move(e_abs2)};
}

/// phi = |A_EX|^2 / E|A_X|^2 on U = {E|A_X|^2 > delta max}, else 0.
inline AmbiguityMatrix kernel_from_terms(const GlobalKernelTerms& t, double delta) {
  const Eigen::MatrixXd denom = t.e_abs2.values.real();
  const double cutoff = delta * denom.maxCoeff();
  ComplexMatrix phi = ComplexMatrix::Zero(denom.rows(), denom.cols());
  for (Eigen::Index i = 0; i < denom.rows(); ++i)
    for (Eigen::Index j = 0; j < denom.cols(); ++j)
      if (denom(i, j) > cutoff && denom(i, j) > 0.0) phi(i, j) = std::norm(t.a_ex.values(i, j)) / denom(i, j);
  return {t.a_ex.theta_grid, t.a_ex.tau_grid, std::move(phi), AmbiguityRole::kernel};
}

/// Support mask of U.
inline Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> support_set(const GlobalKernelTerms& t, double delta) {
  const Eigen::MatrixXd denom = t.e_abs2.values.real();
  const double cutoff = delta * denom.maxCoeff();
  return (denom.array() > cutoff && denom.array() > 0.0).matrix();
}

inline AmbiguityMatrix numeric_global_kernel(const ModelSpec& m, Symmetry sym, const FrequencyGrid& theta_grid,
                                             const GeometricGrid& tau_grid, double delta = 1e-6,
                                             const GlobalKernelQuadrature& q = {}) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw InvalidArgument("delta must be >= 0");
  return kernel_from_terms(global_kernel_terms(m, sym, theta_grid, tau_grid, q), delta);
}

/// Phi(t, xi) = M1^{-1} M2 phi.
inline TFMatrix tf_domain_kernel(const AmbiguityMatrix& phi, const GeometricGrid& time_grid,
                                 const FrequencyGrid& xi_grid) {
  if (static_cast<std::size_t>(phi.values.rows()) != phi.theta_grid.size() ||
      static_cast<std::size_t>(phi.values.cols()) != phi.tau_grid.size())
    throw DimensionError("tf_domain_kernel: kernel values do not match its grids");
  const ComplexMatrix over_t = partial_mellin(phi.values, Axis::first, time_grid, phi.theta_grid, Direction::inverse);
  return {time_grid, xi_grid, partial_mellin(over_t, Axis::second, phi.tau_grid, xi_grid), TFRole::tf_kernel};
}

// ---------------------------------------------------------------------------
// Local kernel
//
// The estimate at one point (t, xi) is P = sum_j y_j A_X(theta_j, tau_j) with
// y_j = w t^{i 2 pi theta_j} tau_j^{-i 2 pi xi} phi_j and w = dtheta * d ln tau.
// With G = E[A A^H], m = E[A] and target W = W_EX(t, xi),
//   J(y) = y^T G conj(y) - 2 Re(conj(W) y^T m) + |W|^2,
// minimised by y = W conj(G^+ m). G is Hermitian PSD, so its SVD is its
// eigendecomposition; the pseudo-inverse drops eigenvalues below svd_tol * max.

class LocalGram {
public:
  /// Assembles G by double log-time quadrature over `time_quad` (O(n_u^2) per
  /// lag pair, so keep the ambiguity grid small).
  LocalGram(const ModelSpec& m, Symmetry sym, const FrequencyGrid& theta_grid, const GeometricGrid& tau_grid,
            std::optional<LogQuadrature> time_quad = std::nullopt)
      : model_(m), theta_(theta_grid), tau_(tau_grid) {
    if (sym == Symmetry::real && !m.is_real())
      throw InvalidArgument("real symmetry needs an unchirped (real-valued) covariance");
    if (theta_grid.size() * tau_grid.size() > 32 * 32)
      throw InvalidArgument("local kernel grids are limited to 32 x 32 points");
    const GeometricGrid u = time_quad.value_or(default_local_quadrature(m)).grid();
    detail::require_nonzero_process(m, u);

    const auto nth = static_cast<Eigen::Index>(theta_grid.size());
    const auto ntau = static_cast<Eigen::Index>(tau_grid.size());
    const auto n = nth * ntau;
    mean_ = esiaf(m, theta_grid, tau_grid).values.reshaped();  // column-major: index = i + nth * j
    const ComplexMatrix e = mellin_forward_matrix(u, theta_grid);
    const auto nu = static_cast<Eigen::Index>(u.size());

    gram_ = ComplexMatrix(n, n);
    parallel::for_each_index(static_cast<std::size_t>(ntau * ntau), [&](std::size_t pair) {
      const auto ja = static_cast<Eigen::Index>(pair) / ntau;
      const auto jb = static_cast<Eigen::Index>(pair) % ntau;
      const double va = tau_grid.log_point(static_cast<std::size_t>(ja));
      const double vb = tau_grid.log_point(static_cast<std::size_t>(jb));
      ComplexMatrix f(nu, nu);
      for (Eigen::Index p = 0; p < nu; ++p) {
        const double u1 = u.log_point(static_cast<std::size_t>(p));
        for (Eigen::Index r = 0; r < nu; ++r) {
          const double u2 = u.log_point(static_cast<std::size_t>(r));
          Complex val = m.covariance_log(u1 + 0.5 * va, u2 + 0.5 * vb) * std::conj(m.covariance_log(u1 - 0.5 * va, u2 - 0.5 * vb));
          if (sym == Symmetry::real)
            val += m.covariance_log(u1 + 0.5 * va, u2 - 0.5 * vb) * m.covariance_log(u1 - 0.5 * va, u2 + 0.5 * vb);
          f(p, r) = val;
        }
      }
      const ComplexMatrix block = e * f * e.adjoint();
      for (Eigen::Index a = 0; a < nth; ++a)
        for (Eigen::Index b = 0; b < nth; ++b)
          gram_(a + nth * ja, b + nth * jb) = block(a, b) + mean_(a + nth * ja) * std::conj(mean_(b + nth * jb));
    });

    const double scale = gram_.cwiseAbs().maxCoeff();
    const double asym = (gram_ - gram_.adjoint()).cwiseAbs().maxCoeff();
    if (asym > 1e-8 * scale) throw ConditioningError("local Gram matrix is not Hermitian (relative residue " + std::to_string(asym / scale) + ")");
    const ComplexMatrix herm = 0.5 * (gram_ + gram_.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(herm);
    if (solver.info() != Eigen::Success) throw ConditioningError("local Gram eigendecomposition failed");
    eigenvalues_ = solver.eigenvalues();
    eigenvectors_ = solver.eigenvectors();
    const double hi = eigenvalues_.maxCoeff();
    if (eigenvalues_.minCoeff() < -1e-8 * hi) throw ConditioningError("local Gram matrix is not PSD");
  }

  static LogQuadrature default_local_quadrature(const ModelSpec& m) {
    const LogQuadrature mid = default_mid_quadrature(m);
    const double centre = 0.5 * (mid.log_min + mid.log_max);
    const double half = 0.5 * (mid.log_max - mid.log_min) + 6.5;
    return {centre - half, centre + half, 0.1};
  }

  const ComplexMatrix& gram() const noexcept { return gram_; }
  const ComplexVector& mean() const noexcept { return mean_; }
  const Eigen::VectorXd& eigenvalues() const noexcept { return eigenvalues_; }
  const FrequencyGrid& theta_grid() const noexcept { return theta_; }
  const GeometricGrid& tau_grid() const noexcept { return tau_; }

  /// a_j such that y_j = a_j phi_j at (t, xi).
  ComplexVector weights(double t, double xi) const {
    if (!(t > 0.0)) throw DomainError("local kernel: t must be positive");
    const double w = theta_.step() * (tau_.size() > 1 ? tau_.log_ratio() : 1.0);
    const auto nth = static_cast<Eigen::Index>(theta_.size());
    ComplexVector a(nth * static_cast<Eigen::Index>(tau_.size()));
    const double u = std::log(t);
    for (std::size_t j = 0; j < tau_.size(); ++j)
      for (std::size_t i = 0; i < theta_.size(); ++i)
        a(static_cast<Eigen::Index>(i) + nth * static_cast<Eigen::Index>(j)) =
            std::polar(w, kTwoPi * (theta_.point(i) * u - xi * tau_.log_point(j)));
    return a;
  }

  /// Predicted J for kernel values phi (theta x tau) at (t, xi) with target W.
  double mse(const ComplexMatrix& phi, double t, double xi, Complex target) const {
    const ComplexVector y = weights(t, xi).cwiseProduct(phi.reshaped());
    return mse_of_weights(y, target);
  }

  double mse_of_weights(const ComplexVector& y, Complex target) const {
    const Complex quad = (y.transpose() * gram_ * y.conjugate())(0, 0);
    const Complex lin = std::conj(target) * (y.transpose() * mean_)(0, 0);
    return quad.real() - 2.0 * lin.real() + std::norm(target);
  }

  /// Minimiser y = W conj(G^+ m), truncated at svd_tol * max eigenvalue.
  ComplexVector optimal_weights(Complex target, double svd_tol) const {
    const double cut = svd_tol * eigenvalues_.maxCoeff();
    const ComplexVector proj = eigenvectors_.adjoint() * mean_;
    ComplexVector scaled = ComplexVector::Zero(proj.size());
    for (Eigen::Index k = 0; k < proj.size(); ++k)
      if (eigenvalues_(k) > cut) scaled(k) = proj(k) / eigenvalues_(k);
    return target * (eigenvectors_ * scaled).conjugate();
  }

private:
  ModelSpec model_;
  FrequencyGrid theta_;
  GeometricGrid tau_;
  ComplexVector mean_;
  ComplexMatrix gram_;
  Eigen::VectorXd eigenvalues_;
  ComplexMatrix eigenvectors_;
};

struct LocalKernelResult {
  AmbiguityMatrix kernel;
  double predicted_mse = 0.0;   ///< J(phi_local)
  double predicted_gain = 0.0;  ///< J(0) - J(phi_local) = |W|^2 - J(phi_local)
  Complex target{0.0, 0.0};     ///< W_EX(t, xi)
};

inline Complex true_siws_at(const ModelSpec& m, double t, double xi) {
  if (!(t > 0.0)) throw DomainError("true_siws_at: t must be positive");
  const TFMatrix w = true_siws(m, GeometricGrid(t, 2.0, 1), FrequencyGrid(xi, 1.0, 1));
  return w.values(0, 0);
}

inline LocalKernelResult local_optimal_kernel(const LocalGram& gram, const ModelSpec& m, double t, double xi,
                                              double svd_tol = 1e-8) {
  if (!(svd_tol > 0.0) || !(svd_tol < 1.0)) throw InvalidArgument("svd_tol must lie in (0, 1)");
  const Complex target = true_siws_at(m, t, xi);
  const ComplexVector y = gram.optimal_weights(target, svd_tol);
  const ComplexVector a = gram.weights(t, xi);
  const ComplexVector phi = y.cwiseQuotient(a);
  const auto nth = static_cast<Eigen::Index>(gram.theta_grid().size());
  const auto ntau = static_cast<Eigen::Index>(gram.tau_grid().size());
  const double j = gram.mse_of_weights(y, target);
  return {{gram.theta_grid(), gram.tau_grid(), phi.reshaped(nth, ntau), AmbiguityRole::kernel},
          j,
          std::norm(target) - j,
          target};
}

inline LocalKernelResult local_optimal_kernel(const ModelSpec& m, double t, double xi, const FrequencyGrid& theta_grid,
                                              const GeometricGrid& tau_grid, double svd_tol = 1e-8,
                                              Symmetry sym = Symmetry::circular) {
  return local_optimal_kernel(LocalGram(m, sym, theta_grid, tau_grid), m, t, xi, svd_tol);
}

} // namespace siws
