#pragma once

// Scale-invariant time-frequency representations on geometric grids.
//
// Discretisation: with t_k = t_0 r^k the multiplicative lag is tau_m = r^{2m},
// so that t_k sqrt(tau_m) = t_{k+m} and t_k / sqrt(tau_m) = t_{k-m} fall on the
// grid. The bilinear kernel is the lag-product matrix
//   K(k, m) = x[k+m] conj(x[k-m])        (zero where k +/- m leaves the grid)
// and every representation is a partial Mellin transform of K:
//   SIWD  W = M_tau K     (tau -> xi)
//   SIAF  A = M_t K       (t -> theta)
//   Cohen P = M_tau M_t^{-1} (A . phi)

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "siws/model.hpp"
#include "siws/scalegrid.hpp"

namespace siws {

enum class TFRole { siwd, siws_true, estimate, tf_kernel, wvs_classical, estimate_error };
enum class AmbiguityRole { siaf, esiaf, e_abs2, kernel };

inline std::string to_string(TFRole r) {
  switch (r) {
  case TFRole::siwd: return "SIWD";
  case TFRole::siws_true: return "SIWS_true";
  case TFRole::estimate: return "ESTIMATE";
  case TFRole::tf_kernel: return "TF_KERNEL";
  case TFRole::wvs_classical: return "WVS_classical";
  case TFRole::estimate_error: return "ESTIMATE_error";
  }
  return "?";
}

inline std::string to_string(AmbiguityRole r) {
  switch (r) {
  case AmbiguityRole::siaf: return "SIAF";
  case AmbiguityRole::esiaf: return "ESIAF";
  case AmbiguityRole::e_abs2: return "E_ABS2";
  case AmbiguityRole::kernel: return "KERNEL";
  }
  return "?";
}

/// values(k, j) at (t_k, xi_j).
struct TFMatrix {
  GeometricGrid time_grid{1.0, 2.0, 1};
  FrequencyGrid xi_grid{0.0, 1.0, 1};
  ComplexMatrix values;
  TFRole role = TFRole::estimate;
};

/// values(i, m) at (theta_i, tau_m).
struct AmbiguityMatrix {
  FrequencyGrid theta_grid{0.0, 1.0, 1};
  GeometricGrid tau_grid{1.0, 2.0, 1};
  ComplexMatrix values;
  AmbiguityRole role = AmbiguityRole::kernel;
};

/// Log-domain quadrature grid for continuous integrals.
struct LogQuadrature {
  double log_min = -10.0;
  double log_max = 10.0;
  double step = 0.05;

  GeometricGrid grid() const {
    if (!(log_max > log_min) || !(step > 0.0)) throw InvalidGrid("quadrature needs log_max > log_min and step > 0");
    const auto n = static_cast<std::size_t>(std::ceil((log_max - log_min) / step)) + 1;
    return GeometricGrid::from_log(log_min, step, n);
  }
};

/// Integration range in ln(tau) covering the local covariances C_j.
inline LogQuadrature default_lag_quadrature(const ModelSpec& m) {
  double c_min = 1e300;
  for (const auto& comp : m.components()) c_min = std::min(c_min, comp.is_example_family() ? comp.lssp.c : 1.0);
  const double half = std::sqrt(8.0 * 40.0 / c_min);
  return {-half, half, 0.05};
}

/// Integration range in ln(t) covering the time envelopes Q_j.
inline LogQuadrature default_time_quadrature(const ModelSpec& m) {
  double lo = 1e300, hi = -1e300;
  for (const auto& comp : m.components()) {
    const double centre = comp.is_example_family() ? 2.0 * comp.lssp.H : 0.0;
    lo = std::min(lo, centre);
    hi = std::max(hi, centre);
  }
  return {lo - 9.5, hi + 9.5, 0.05};
}

/// K(k, M + m) = x[k+m] conj(x[k-m]) for |m| <= max_lag.
inline ComplexMatrix lag_products(const Eigen::Ref<const ComplexVector>& path, std::size_t max_lag) {
  const auto n = static_cast<long long>(path.size());
  const auto lags = static_cast<long long>(max_lag);
  ComplexMatrix k = ComplexMatrix::Zero(n, 2 * lags + 1);
  for (long long i = 0; i < n; ++i) {
    const long long reach = std::min({lags, i, n - 1 - i});
    for (long long m = -reach; m <= reach; ++m) k(i, lags + m) = path(i + m) * std::conj(path(i - m));
  }
  return k;
}

namespace detail {

inline void check_path(const Eigen::Ref<const ComplexVector>& path, const GeometricGrid& grid, std::size_t max_lag) {
  if (static_cast<std::size_t>(path.size()) != grid.size())
    throw DimensionError("path length does not match its grid");
  if (grid.size() < 2) throw InvalidGrid("time grid needs at least two points");
  if (2 * max_lag + 1 > grid.size()) throw InvalidArgument("max_lag must not exceed (n - 1) / 2");
  if (!path.allFinite()) throw InvalidInput("path contains non-finite values");
}

inline std::size_t max_lag_of(const GeometricGrid& tau_grid) {
  if (tau_grid.size() % 2 == 0) throw DimensionError("lag grid must have an odd number of points");
  return (tau_grid.size() - 1) / 2;
}

} // namespace detail

/// Precomputed transforms for repeated SIWD / SIAF evaluation on one grid.
class BilinearPlan {
public:
  BilinearPlan(const GeometricGrid& time_grid, std::size_t max_lag)
      : time_(time_grid), max_lag_(max_lag), lag_(lag_grid(time_grid, max_lag)) {
    if (2 * max_lag + 1 > time_grid.size()) throw InvalidArgument("max_lag must not exceed (n - 1) / 2");
  }

  const GeometricGrid& time_grid() const noexcept { return time_; }
  const GeometricGrid& tau_grid() const noexcept { return lag_; }
  std::size_t max_lag() const noexcept { return max_lag_; }

  ComplexMatrix products(const Eigen::Ref<const ComplexVector>& path) const {
    detail::check_path(path, time_, max_lag_);
    return lag_products(path, max_lag_);
  }

private:
  GeometricGrid time_;
  std::size_t max_lag_;
  GeometricGrid lag_;
};

/// Discrete scale-invariant Wigner distribution
///   W(t_k, xi) = sum_m x[k+m] conj(x[k-m]) tau_m^{-i 2 pi xi} (2 ln r).
/// Lags outside the grid are treated as zero (rectangular lag window).
inline TFMatrix siwd(const Eigen::Ref<const ComplexVector>& path, const GeometricGrid& grid,
                     const FrequencyGrid& xi_grid, std::size_t max_lag) {
  detail::check_path(path, grid, max_lag);
  const GeometricGrid tau = lag_grid(grid, max_lag);
  const ComplexMatrix k = lag_products(path, max_lag);
  return {grid, xi_grid, partial_mellin(k, Axis::second, tau, xi_grid), TFRole::siwd};
}

/// Scale-invariant ambiguity function on (theta_grid x lag grid).
inline AmbiguityMatrix siaf(const Eigen::Ref<const ComplexVector>& path, const GeometricGrid& grid,
                            const FrequencyGrid& theta_grid, std::size_t max_lag) {
  detail::check_path(path, grid, max_lag);
  const ComplexMatrix k = lag_products(path, max_lag);
  return {theta_grid, lag_grid(grid, max_lag), partial_mellin(k, Axis::first, grid, theta_grid),
          AmbiguityRole::siaf};
}

/// W_{E,X}(t, xi) = int R(t sqrt(tau), t / sqrt(tau)) tau^{-i 2 pi xi - 1} dtau.
/// A single unchirped component uses the factorisation Q(t) (M C)(i 2 pi xi).
inline TFMatrix true_siws(const ModelSpec& m, const GeometricGrid& time_grid, const FrequencyGrid& xi_grid,
                          std::optional<LogQuadrature> lag_quad = std::nullopt) {
  const GeometricGrid quad = lag_quad.value_or(default_lag_quadrature(m)).grid();
  const auto nt = static_cast<Eigen::Index>(time_grid.size());
  const auto nq = static_cast<Eigen::Index>(quad.size());
  ComplexMatrix w(nt, static_cast<Eigen::Index>(xi_grid.size()));
  const ComplexMatrix fwd = mellin_forward_matrix(quad, xi_grid);

  if (m.kind() == ModelKind::lssp) {
    const auto& comp = m.components().front();
    ComplexVector c(nq);
    for (Eigen::Index i = 0; i < nq; ++i) c(i) = comp.c_log(quad.log_point(static_cast<std::size_t>(i)));
    check_edge_decay(c, "true_siws: local covariance");
    const ComplexVector mc = fwd * c;
    for (Eigen::Index k = 0; k < nt; ++k)
      w.row(k) = comp.q_log(time_grid.log_point(static_cast<std::size_t>(k))) * mc.transpose();
    return {time_grid, xi_grid, std::move(w), TFRole::siws_true};
  }

  ComplexMatrix slices(nq, nt);
  for (Eigen::Index k = 0; k < nt; ++k) {
    const double u = time_grid.log_point(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < nq; ++i) {
      const double v = quad.log_point(static_cast<std::size_t>(i));
      slices(i, k) = m.covariance_log(u + 0.5 * v, u - 0.5 * v);
    }
  }
  w = (fwd * slices).transpose();
  return {time_grid, xi_grid, std::move(w), TFRole::siws_true};
}

/// Expected ambiguity function
///   A_{E,X}(theta, tau) = sum_j C_j(tau) tau^{-i a_j b_j} (M Q_j)(i 2 pi (theta - a_j ln(tau) / 2 pi)),
/// which is C(tau) (M Q)(i 2 pi theta) for a single unchirped component.
inline AmbiguityMatrix esiaf(const ModelSpec& m, const FrequencyGrid& theta_grid, const GeometricGrid& tau_grid,
                             std::optional<LogQuadrature> time_quad = std::nullopt) {
  const GeometricGrid quad = time_quad.value_or(default_time_quadrature(m)).grid();
  const auto nq = static_cast<Eigen::Index>(quad.size());
  const auto nth = static_cast<Eigen::Index>(theta_grid.size());
  const auto ntau = static_cast<Eigen::Index>(tau_grid.size());
  ComplexMatrix a = ComplexMatrix::Zero(nth, ntau);

  for (const auto& comp : m.components()) {
    ComplexVector q(nq);
    for (Eigen::Index i = 0; i < nq; ++i) q(i) = comp.q_log(quad.log_point(static_cast<std::size_t>(i)));
    check_edge_decay(q, "esiaf: time envelope");
    if (comp.chirp.is_trivial()) {
      const ComplexVector mq = mellin_forward_matrix(quad, theta_grid) * q;
      for (Eigen::Index j = 0; j < ntau; ++j)
        a.col(j) += comp.c_log(tau_grid.log_point(static_cast<std::size_t>(j))) * mq;
      continue;
    }
    std::vector<double> shifted(static_cast<std::size_t>(nth));
    for (Eigen::Index j = 0; j < ntau; ++j) {
      const double v = tau_grid.log_point(static_cast<std::size_t>(j));
      for (Eigen::Index i = 0; i < nth; ++i)
        shifted[static_cast<std::size_t>(i)] = theta_grid.point(static_cast<std::size_t>(i)) - comp.chirp.a * v / kTwoPi;
      const Complex scale = comp.c_log(v) * std::polar(1.0, -comp.chirp.a * comp.chirp.b * v);
      a.col(j) += scale * (mellin_forward_matrix(quad, shifted) * q);
    }
  }
  return {theta_grid, tau_grid, std::move(a), AmbiguityRole::esiaf};
}

/// Cohen's-class counterpart estimator P = M_tau M_t^{-1} (A_x . phi) with the
/// transforms precomputed for repeated use on one grid.
class CohenEstimator {
public:
  CohenEstimator(const GeometricGrid& time_grid, AmbiguityMatrix kernel, const FrequencyGrid& xi_grid)
      : time_(time_grid), xi_(xi_grid), kernel_(std::move(kernel)), max_lag_(detail::max_lag_of(kernel_.tau_grid)) {
    if (!kernel_.tau_grid.matches(lag_grid(time_grid, max_lag_)))
      throw DimensionError("kernel lag grid does not match the time grid (need tau_m = r^{2m})");
    if (static_cast<std::size_t>(kernel_.values.rows()) != kernel_.theta_grid.size() ||
        static_cast<std::size_t>(kernel_.values.cols()) != kernel_.tau_grid.size())
      throw DimensionError("kernel values do not match its grids");
    if (2 * max_lag_ + 1 > time_grid.size()) throw DimensionError("kernel lag grid is wider than the time grid");
    if (!kernel_.values.allFinite()) throw InvalidInput("kernel contains non-finite values");
    forward_t_ = mellin_forward_matrix(time_, kernel_.theta_grid);
    inverse_t_ = mellin_inverse_matrix(kernel_.theta_grid, time_);
    forward_tau_t_ = mellin_forward_matrix(kernel_.tau_grid, xi_).transpose();
  }

  const AmbiguityMatrix& kernel() const noexcept { return kernel_; }

  ComplexMatrix apply(const Eigen::Ref<const ComplexVector>& path) const {
    detail::check_path(path, time_, max_lag_);
    const ComplexMatrix ambiguity = forward_t_ * lag_products(path, max_lag_);
    const ComplexMatrix smoothed = ambiguity.cwiseProduct(kernel_.values);
    return (inverse_t_ * smoothed) * forward_tau_t_;
  }

  TFMatrix estimate(const Eigen::Ref<const ComplexVector>& path) const {
    return {time_, xi_, apply(path), TFRole::estimate};
  }

private:
  GeometricGrid time_;
  FrequencyGrid xi_;
  AmbiguityMatrix kernel_;
  std::size_t max_lag_;
  ComplexMatrix forward_t_;
  ComplexMatrix inverse_t_;
  ComplexMatrix forward_tau_t_;
};

inline TFMatrix cohen_estimate(const Eigen::Ref<const ComplexVector>& path, const AmbiguityMatrix& kernel,
                               const GeometricGrid& time_grid, const FrequencyGrid& xi_grid) {
  return CohenEstimator(time_grid, kernel, xi_grid).estimate(path);
}

/// Kernel identically equal to `value` on the theta grid dual to `time_grid`
/// and the full lag grid.
inline AmbiguityMatrix constant_kernel(const GeometricGrid& time_grid, std::size_t max_lag, Complex value = 1.0) {
  const FrequencyGrid theta = dual_frequency_grid(time_grid);
  const GeometricGrid tau = lag_grid(time_grid, max_lag);
  return {theta, tau,
          ComplexMatrix::Constant(static_cast<Eigen::Index>(theta.size()), static_cast<Eigen::Index>(tau.size()), value),
          AmbiguityRole::kernel};
}

// ---------------------------------------------------------------------------
// Classical baseline: pseudo Wigner-Ville on a uniform time grid with
// separable Gaussian smoothing, mapped back to (t, xi) via f = xi / t and the
// density relation W_scale(t, xi) = W_classical(t, xi / t) / t.

struct ClassicalWvsConfig {
  std::size_t n_time = 256;   ///< uniform samples over [t_min, t_max]
  std::size_t n_freq = 256;
  std::size_t max_lag = 0;    ///< 0: n_freq / 2 - 1 (capped by n_time)
  double sigma_time = 0.0;    ///< smoothing width in uniform samples
  double sigma_freq = 0.0;    ///< smoothing width in frequency bins
};

/// Uniformly resampled path: linear interpolation in ln t.
struct UniformSignal {
  double t0 = 0.0;
  double dt = 1.0;
  ComplexVector values;

  double time(std::size_t n) const { return t0 + static_cast<double>(n) * dt; }
};

inline UniformSignal resample_uniform(const Eigen::Ref<const ComplexVector>& path, const GeometricGrid& grid,
                                      std::size_t n_time) {
  if (static_cast<std::size_t>(path.size()) != grid.size()) throw DimensionError("path length does not match grid");
  if (n_time < 2 || grid.size() < 2) throw InvalidArgument("resampling needs at least two points");
  const double t0 = grid.t_min();
  const double t1 = std::exp(grid.log_t_max());
  UniformSignal out{t0, (t1 - t0) / static_cast<double>(n_time - 1), ComplexVector(static_cast<Eigen::Index>(n_time))};
  const double last = static_cast<double>(grid.size() - 1);
  for (std::size_t n = 0; n < n_time; ++n) {
    const double t = n + 1 == n_time ? t1 : out.time(n);
    double pos = (std::log(t) - grid.log_t_min()) / grid.log_ratio();
    if (pos < -1e-9 || pos > last + 1e-9) throw InvalidArgument("resample_uniform: time outside the path grid");
    pos = std::clamp(pos, 0.0, last);
    const auto i = std::min(static_cast<std::size_t>(pos), grid.size() - 2);
    const double frac = pos - static_cast<double>(i);
    out.values(static_cast<Eigen::Index>(n)) =
        (1.0 - frac) * path(static_cast<Eigen::Index>(i)) + frac * path(static_cast<Eigen::Index>(i + 1));
  }
  return out;
}

/// Frequency of bin j: (j - n_freq/2) / (2 dt n_freq).
inline double classical_frequency(std::size_t j, std::size_t n_freq, double dt) {
  return (static_cast<double>(j) - static_cast<double>(n_freq / 2)) / (2.0 * dt * static_cast<double>(n_freq));
}

/// Discrete pseudo Wigner-Ville distribution
///   W[n, j] = sum_{|m| <= L} x[n+m] conj(x[n-m]) e^{-i 2 pi f_j 2 m dt} 2 dt
/// returned as a real (n_time x n_freq) matrix.
inline Eigen::MatrixXd pseudo_wigner(const UniformSignal& x, std::size_t n_freq, std::size_t max_lag) {
  if (n_freq < 2) throw InvalidArgument("pseudo_wigner: n_freq must be at least 2");
  const auto n = static_cast<long long>(x.values.size());
  const long long lags = static_cast<long long>(max_lag == 0 ? n_freq / 2 - 1 : max_lag);
  if (2 * lags + 1 > static_cast<long long>(n_freq)) throw InvalidArgument("pseudo_wigner: max_lag too large for n_freq");
  Eigen::MatrixXd w(n, static_cast<Eigen::Index>(n_freq));
  std::vector<Complex> buf(n_freq), spec(n_freq);
  Eigen::FFT<double> fft;
  const auto nf = static_cast<long long>(n_freq);
  for (long long i = 0; i < n; ++i) {
    std::fill(buf.begin(), buf.end(), Complex{});
    const long long reach = std::min({lags, i, n - 1 - i});
    for (long long m = -reach; m <= reach; ++m) {
      const Complex r = x.values(i + m) * std::conj(x.values(i - m));
      buf[static_cast<std::size_t>(((m % nf) + nf) % nf)] = (m % 2 == 0) ? r : -r;
    }
    fft.fwd(spec, buf);
    for (long long j = 0; j < nf; ++j) w(i, j) = 2.0 * x.dt * spec[static_cast<std::size_t>(j)].real();
  }
  return w;
}

/// Separable Gaussian smoothing: zero-extended in time, periodic in frequency.
inline Eigen::MatrixXd smooth_gaussian(const Eigen::MatrixXd& w, double sigma_time, double sigma_freq) {
  auto taps = [](double sigma) {
    if (sigma <= 0.0) return std::vector<double>{1.0};
    const auto radius = static_cast<long long>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (long long i = -radius; i <= radius; ++i) {
      const double v = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
      k[static_cast<std::size_t>(i + radius)] = v;
      sum += v;
    }
    for (auto& v : k) v /= sum;
    return k;
  };
  const auto kt = taps(sigma_time);
  const auto kf = taps(sigma_freq);
  const auto rt = static_cast<long long>(kt.size() / 2);
  const auto rf = static_cast<long long>(kf.size() / 2);
  const auto rows = static_cast<long long>(w.rows());
  const auto cols = static_cast<long long>(w.cols());

  Eigen::MatrixXd tmp = Eigen::MatrixXd::Zero(rows, cols);
  for (long long i = 0; i < rows; ++i)
    for (long long d = -rt; d <= rt; ++d) {
      const long long src = i + d;
      if (src < 0 || src >= rows) continue;
      tmp.row(i) += kt[static_cast<std::size_t>(d + rt)] * w.row(src);
    }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, cols);
  for (long long j = 0; j < cols; ++j)
    for (long long d = -rf; d <= rf; ++d) {
      const long long src = ((j + d) % cols + cols) % cols;
      out.col(j) += kf[static_cast<std::size_t>(d + rf)] * tmp.col(src);
    }
  return out;
}

/// est(t_k, xi) = W(t_k, xi / t_k) / t_k with bilinear interpolation on the
/// uniform (t, f) grid; frequencies outside the band map to zero.
inline TFMatrix map_classical_to_scale(const Eigen::MatrixXd& w, const UniformSignal& x, const GeometricGrid& time_grid,
                                       const FrequencyGrid& xi_grid) {
  const auto nt = static_cast<std::size_t>(w.rows());
  const auto nf = static_cast<std::size_t>(w.cols());
  const double df = 1.0 / (2.0 * x.dt * static_cast<double>(nf));
  const double f0 = classical_frequency(0, nf, x.dt);
  ComplexMatrix out(static_cast<Eigen::Index>(time_grid.size()), static_cast<Eigen::Index>(xi_grid.size()));
  for (std::size_t k = 0; k < time_grid.size(); ++k) {
    const double t = time_grid.point(k);
    const double pt = std::clamp((t - x.t0) / x.dt, 0.0, static_cast<double>(nt - 1));
    const auto i0 = std::min(static_cast<std::size_t>(pt), nt - 2);
    const double ft = pt - static_cast<double>(i0);
    for (std::size_t j = 0; j < xi_grid.size(); ++j) {
      const double f = xi_grid.point(j) / t;
      const double pf = (f - f0) / df;
      double value = 0.0;
      if (pf >= 0.0 && pf <= static_cast<double>(nf - 1)) {
        const auto j0 = std::min(static_cast<std::size_t>(pf), nf - 2);
        const double ff = pf - static_cast<double>(j0);
        const auto r0 = static_cast<Eigen::Index>(i0), r1 = r0 + 1;
        const auto c0 = static_cast<Eigen::Index>(j0), c1 = c0 + 1;
        value = (1 - ft) * ((1 - ff) * w(r0, c0) + ff * w(r0, c1)) + ft * ((1 - ff) * w(r1, c0) + ff * w(r1, c1));
      }
      out(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = Complex(value / t, 0.0);
    }
  }
  return {time_grid, xi_grid, std::move(out), TFRole::wvs_classical};
}

inline TFMatrix classical_wvs_estimate(const Eigen::Ref<const ComplexVector>& path, const GeometricGrid& grid,
                                       const FrequencyGrid& xi_grid, const ClassicalWvsConfig& cfg = {}) {
  const UniformSignal x = resample_uniform(path, grid, cfg.n_time);
  const std::size_t lags = cfg.max_lag == 0 ? std::min(cfg.n_freq / 2 - 1, (cfg.n_time - 1) / 2) : cfg.max_lag;
  const Eigen::MatrixXd w = smooth_gaussian(pseudo_wigner(x, cfg.n_freq, lags), cfg.sigma_time, cfg.sigma_freq);
  return map_classical_to_scale(w, x, grid, xi_grid);
}

} // namespace siws
