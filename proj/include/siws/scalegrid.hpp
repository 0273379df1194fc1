#pragma once

// Geometric time grids, uniform Mellin-frequency grids and Mellin transforms
// along the imaginary line s = i2*pi*theta.
//
// With u = ln t the Mellin transform becomes a Fourier integral:
//   (M g)(i2*pi*theta) = \int g(e^u) e^{-i 2 pi theta u} du
// and every transform here is a uniform-weight quadrature in u (or theta).
// For integrands that vanish at the grid ends this is the trapezoid rule; for
// band-limited periodic integrands sampled over one period it is exact, which
// is what makes discrete forward/inverse pairs on dual grids identities.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <iostream>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "siws/error.hpp"

namespace siws {

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Sink for non-fatal numerical warnings (under-resolved quadrature and the
/// like). Defaults to stderr; tests and the CLI may replace it.
inline std::function<void(std::string_view)>& warning_handler() {
  static std::function<void(std::string_view)> handler = [](std::string_view msg) {
    std::cerr << "siws warning: " << msg << '\n';
  };
  return handler;
}

inline void warn(std::string_view msg) {
  if (auto& h = warning_handler()) h(msg);
}

/// t_k = t_min * ratio^k, k = 0..n-1. Stored in log form so that the
/// log-spacing is exact.
class GeometricGrid {
public:
  GeometricGrid(double t_min, double ratio, std::size_t n) {
    if (!(t_min > 0.0) || !std::isfinite(t_min))
      throw InvalidGrid("geometric grid needs t_min > 0");
    if (!(ratio > 1.0) || !std::isfinite(ratio))
      throw InvalidGrid("geometric grid needs ratio > 1");
    if (n == 0) throw InvalidGrid("geometric grid needs at least one point");
    log_t_min_ = std::log(t_min);
    log_ratio_ = std::log(ratio);
    n_ = n;
  }

  static GeometricGrid from_log(double log_t_min, double log_ratio, std::size_t n) {
    if (!std::isfinite(log_t_min)) throw InvalidGrid("geometric grid needs finite log t_min");
    if (!(log_ratio > 0.0) || !std::isfinite(log_ratio))
      throw InvalidGrid("geometric grid needs log ratio > 0");
    if (n == 0) throw InvalidGrid("geometric grid needs at least one point");
    GeometricGrid g;
    g.log_t_min_ = log_t_min;
    g.log_ratio_ = log_ratio;
    g.n_ = n;
    return g;
  }

  /// n points from t_min to t_max inclusive.
  static GeometricGrid spanning(double t_min, double t_max, std::size_t n) {
    if (!(t_min > 0.0) || !(t_max > t_min)) throw InvalidGrid("need 0 < t_min < t_max");
    if (n < 2) throw InvalidGrid("spanning grid needs at least two points");
    const double lo = std::log(t_min);
    return from_log(lo, (std::log(t_max) - lo) / static_cast<double>(n - 1), n);
  }

  std::size_t size() const noexcept { return n_; }
  double log_t_min() const noexcept { return log_t_min_; }
  double log_ratio() const noexcept { return log_ratio_; }
  double t_min() const noexcept { return std::exp(log_t_min_); }
  double ratio() const noexcept { return std::exp(log_ratio_); }
  double log_point(std::size_t k) const noexcept {
    return log_t_min_ + static_cast<double>(k) * log_ratio_;
  }
  double point(std::size_t k) const noexcept { return std::exp(log_point(k)); }
  double log_t_max() const noexcept { return log_point(n_ - 1); }

  bool operator==(const GeometricGrid&) const = default;

  /// Same grid up to relative rounding in the stored logs.
  bool matches(const GeometricGrid& o, double rel = 1e-12) const noexcept {
    auto close = [rel](double a, double b) {
      return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
    };
    return n_ == o.n_ && close(log_t_min_, o.log_t_min_) && close(log_ratio_, o.log_ratio_);
  }

private:
  GeometricGrid() = default;
  double log_t_min_ = 0.0;
  double log_ratio_ = 1.0;
  std::size_t n_ = 1;
};

/// Uniform grid point(j) = center + (j - n/2) * step (integer n/2), so a grid
/// centred on zero contains zero.
class FrequencyGrid {
public:
  FrequencyGrid(double center, double step, std::size_t n) : center_(center), step_(step), n_(n) {
    if (!(step > 0.0) || !std::isfinite(step)) throw InvalidGrid("frequency grid needs step > 0");
    if (!std::isfinite(center)) throw InvalidGrid("frequency grid needs a finite center");
    if (n == 0) throw InvalidGrid("frequency grid needs at least one point");
  }

  /// n points from lo to hi inclusive (n >= 2); the centre is adjusted so that
  /// point(0) == lo.
  static FrequencyGrid spanning(double lo, double hi, std::size_t n) {
    if (n < 2 || !(hi > lo)) throw InvalidGrid("frequency span needs n >= 2 and hi > lo");
    const double step = (hi - lo) / static_cast<double>(n - 1);
    return FrequencyGrid(lo + static_cast<double>(n / 2) * step, step, n);
  }

  std::size_t size() const noexcept { return n_; }
  double center() const noexcept { return center_; }
  double step() const noexcept { return step_; }
  double point(std::size_t j) const noexcept {
    return center_ + (static_cast<double>(j) - static_cast<double>(n_ / 2)) * step_;
  }
  double front() const noexcept { return point(0); }
  double back() const noexcept { return point(n_ - 1); }

  bool operator==(const FrequencyGrid&) const = default;

  bool matches(const FrequencyGrid& o, double rel = 1e-12) const noexcept {
    auto close = [rel](double a, double b) {
      return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
    };
    return n_ == o.n_ && close(center_, o.center_) && close(step_, o.step_);
  }

private:
  double center_;
  double step_;
  std::size_t n_;
};

/// Mellin transform samples (M g)(line_offset + i2*pi*theta) on a grid.
struct MellinLine {
  FrequencyGrid grid;
  ComplexVector values;
  double line_offset = 0.0;
};

/// Frequency grid dual to `g`: same number of points, spanning exactly one
/// period 1/ln(r) of t^{-i2 pi theta} over the grid. Forward then inverse on
/// this pair is the identity.
inline FrequencyGrid dual_frequency_grid(const GeometricGrid& g) {
  const auto n = g.size();
  return FrequencyGrid(0.0, 1.0 / (static_cast<double>(n) * g.log_ratio()), n);
}

/// Multiplicative lag grid tau_m = r^{2m}, m = -max_lag..max_lag. With it
/// t_k * sqrt(tau_m) = t_{k+m} and t_k / sqrt(tau_m) = t_{k-m}.
inline GeometricGrid lag_grid(const GeometricGrid& g, std::size_t max_lag) {
  const double step = 2.0 * g.log_ratio();
  return GeometricGrid::from_log(-static_cast<double>(max_lag) * step, step, 2 * max_lag + 1);
}

/// One full alias period of the SIWD in xi, [-1/(4 ln r), 1/(4 ln r)), with
/// enough points (2 max_lag + 2) for the lag sum to be recoverable exactly.
inline FrequencyGrid lag_dual_xi_grid(const GeometricGrid& g, std::size_t max_lag) {
  const auto n = 2 * max_lag + 2;
  return FrequencyGrid(0.0, 1.0 / (2.0 * g.log_ratio() * static_cast<double>(n)), n);
}

/// Largest |xi| free of aliasing for lag step 2 ln r.
inline double xi_nyquist(const GeometricGrid& g) { return 1.0 / (4.0 * g.log_ratio()); }

inline void require_xi_within_nyquist(const GeometricGrid& g, const FrequencyGrid& xi) {
  const double lim = xi_nyquist(g) * (1.0 + 1e-12);
  if (std::abs(xi.front()) > lim || std::abs(xi.back()) > lim)
    throw InvalidGrid("xi grid exceeds the alias-free band |xi| <= 1/(4 ln r)");
}

/// Ratio of the largest end value to the largest value of |samples|.
inline double edge_decay_ratio(const Eigen::Ref<const ComplexVector>& samples) {
  if (samples.size() == 0) return 0.0;
  const double peak = samples.cwiseAbs().maxCoeff();
  if (peak == 0.0) return 0.0;
  const double edge = std::max(std::abs(samples(0)), std::abs(samples(samples.size() - 1)));
  return edge / peak;
}

/// Warns when the integrand has not decayed below `threshold` (relative to its
/// peak) at the grid ends. Returns true when the check passes.
inline bool check_edge_decay(const Eigen::Ref<const ComplexVector>& samples,
                             std::string_view context, double threshold = 1e-12) {
  const double ratio = edge_decay_ratio(samples);
  if (ratio > threshold) {
    warn(std::string(context) + ": integrand at grid edge is " + std::to_string(ratio) +
         " of its peak; widen the grid");
    return false;
  }
  return true;
}

namespace detail {

inline void require_finite(const Eigen::Ref<const ComplexMatrix>& m, const char* what) {
  if (!m.allFinite()) throw InvalidInput(std::string(what) + ": non-finite input");
}

} // namespace detail

/// Matrix E with E(j,k) = exp(-i 2 pi theta_j u_k) * du, so that
/// E * g is the forward transform of g sampled on `grid`.
inline ComplexMatrix mellin_forward_matrix(const GeometricGrid& grid, std::span<const double> thetas) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  const auto m = static_cast<Eigen::Index>(thetas.size());
  const double du = grid.log_ratio();
  ComplexMatrix e(m, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double u = grid.log_point(static_cast<std::size_t>(k));
    for (Eigen::Index j = 0; j < m; ++j) e(j, k) = std::polar(du, -kTwoPi * thetas[j] * u);
  }
  return e;
}

inline ComplexMatrix mellin_forward_matrix(const GeometricGrid& grid, const FrequencyGrid& out) {
  std::vector<double> thetas(out.size());
  for (std::size_t j = 0; j < out.size(); ++j) thetas[j] = out.point(j);
  return mellin_forward_matrix(grid, thetas);
}

/// Matrix F with F(k,j) = exp(+i 2 pi theta_j u_k) * dtheta.
inline ComplexMatrix mellin_inverse_matrix(const FrequencyGrid& in, const GeometricGrid& out) {
  const auto n = static_cast<Eigen::Index>(out.size());
  const auto m = static_cast<Eigen::Index>(in.size());
  const double dtheta = in.step();
  ComplexMatrix f(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double theta = in.point(static_cast<std::size_t>(j));
    for (Eigen::Index k = 0; k < n; ++k)
      f(k, j) = std::polar(dtheta, kTwoPi * theta * out.log_point(static_cast<std::size_t>(k)));
  }
  return f;
}

/// (M g)(i 2 pi theta) at arbitrary theta values.
inline ComplexVector mellin_at(const Eigen::Ref<const ComplexVector>& samples,
                               const GeometricGrid& grid, std::span<const double> thetas) {
  if (static_cast<std::size_t>(samples.size()) != grid.size())
    throw DimensionError("mellin: sample count does not match grid");
  if (grid.size() < 2) throw InvalidGrid("mellin: grid needs at least two points");
  detail::require_finite(samples, "mellin_forward");
  return mellin_forward_matrix(grid, thetas) * samples;
}

/// Forward Mellin transform of g sampled on `grid`, evaluated on `out`.
inline MellinLine mellin_forward(const Eigen::Ref<const ComplexVector>& samples,
                                 const GeometricGrid& grid, const FrequencyGrid& out) {
  if (static_cast<std::size_t>(samples.size()) != grid.size())
    throw DimensionError("mellin_forward: sample count does not match grid");
  if (grid.size() < 2) throw InvalidGrid("mellin_forward: grid needs at least two points");
  detail::require_finite(samples, "mellin_forward");
  return MellinLine{out, mellin_forward_matrix(grid, out) * samples, 0.0};
}

/// g(t) = \int (M g)(i 2 pi theta) t^{i 2 pi theta} dtheta on `out`.
inline ComplexVector mellin_inverse(const MellinLine& line, const GeometricGrid& out) {
  if (static_cast<std::size_t>(line.values.size()) != line.grid.size())
    throw DimensionError("mellin_inverse: line length does not match its grid");
  if (line.line_offset != 0.0)
    throw InvalidArgument("mellin_inverse: only the imaginary line (offset 0) is supported");
  detail::require_finite(line.values, "mellin_inverse");
  return mellin_inverse_matrix(line.grid, out) * line.values;
}

enum class Axis { first = 1, second = 2 };
enum class Direction { forward, inverse };

/// Applies the 1-D transform along one axis of a matrix. Forward maps a
/// geometric axis onto `freq`; inverse maps a frequency axis onto `geo`.
inline ComplexMatrix partial_mellin(const Eigen::Ref<const ComplexMatrix>& matrix, Axis axis,
                                    const GeometricGrid& geo, const FrequencyGrid& freq,
                                    Direction dir = Direction::forward) {
  const auto len = static_cast<std::size_t>(axis == Axis::first ? matrix.rows() : matrix.cols());
  const auto expected = dir == Direction::forward ? geo.size() : freq.size();
  if (len != expected) throw DimensionError("partial_mellin: axis length does not match grid");
  if (dir == Direction::forward && geo.size() < 2)
    throw InvalidGrid("partial_mellin: grid needs at least two points");
  detail::require_finite(matrix, "partial_mellin");
  const ComplexMatrix op =
      dir == Direction::forward ? mellin_forward_matrix(geo, freq) : mellin_inverse_matrix(freq, geo);
  if (axis == Axis::first) return op * matrix;
  return matrix * op.transpose();
}

} // namespace siws
