#pragma once

// Covariance matrices on geometric grids, PSD certification, Cholesky
// factorisation and Gaussian sample paths X = L u.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "siws/model.hpp"
#include "siws/parallel.hpp"
#include "siws/scalegrid.hpp"

namespace siws {

struct PsdCertificate {
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  double jitter_applied = 0.0;
};

struct CovarianceMatrix {
  GeometricGrid grid;
  ComplexMatrix entries;
  std::optional<PsdCertificate> psd_certificate;
};

enum class Symmetry { real, circular };

inline std::string to_string(Symmetry s) { return s == Symmetry::real ? "real" : "circular"; }

inline Symmetry symmetry_from_string(const std::string& s) {
  if (s == "real") return Symmetry::real;
  if (s == "circular") return Symmetry::circular;
  throw InvalidArgument("symmetry must be \"real\" or \"circular\", got \"" + s + "\"");
}

/// entries(j,k) = R(t_j, t_k); upper triangle computed, lower mirrored.
inline CovarianceMatrix covariance_matrix(const ModelSpec& m, const GeometricGrid& grid) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  ComplexMatrix r(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double x = grid.log_point(static_cast<std::size_t>(j));
    for (Eigen::Index k = j; k < n; ++k) {
      const Complex v = m.covariance_log(x, grid.log_point(static_cast<std::size_t>(k)));
      r(j, k) = v;
      r(k, j) = std::conj(v);
    }
    r(j, j) = Complex(r(j, j).real(), 0.0);
  }
  return {grid, std::move(r), std::nullopt};
}

inline bool is_exactly_hermitian(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) return false;
  for (Eigen::Index j = 0; j < m.rows(); ++j)
    for (Eigen::Index k = j; k < m.cols(); ++k)
      if (m(j, k) != std::conj(m(k, j))) return false;
  return true;
}

/// Attaches the eigenvalue range; throws PsdViolation when
/// min eigenvalue < -tol_rel * max eigenvalue.
inline CovarianceMatrix certify_psd(CovarianceMatrix r, double tol_rel = 1e-8) {
  if (!is_exactly_hermitian(r.entries)) throw InvalidInput("certify_psd: matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(r.entries, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("certify_psd: eigenvalue solve failed");
  const double lo = solver.eigenvalues().minCoeff();
  const double hi = solver.eigenvalues().maxCoeff();
  if (lo < -tol_rel * std::max(hi, 0.0) || !(hi >= 0.0)) throw PsdViolation(lo, hi);
  r.psd_certificate = PsdCertificate{lo, hi, 0.0};
  return r;
}

struct CholeskyFactor {
  GeometricGrid grid;
  ComplexMatrix lower;
  double jitter = 0.0;
};

/// L L^* = R + eps I with eps = jitter_rel * trace(R) / n.
inline CholeskyFactor cholesky_factor(const CovarianceMatrix& r, double jitter_rel = 1e-10) {
  if (!r.psd_certificate) throw InvalidArgument("cholesky_factor: matrix has not been certified PSD");
  const auto n = r.entries.rows();
  const double eps = jitter_rel * r.entries.trace().real() / static_cast<double>(n);
  ComplexMatrix shifted = r.entries;
  shifted.diagonal().array() += eps;
  Eigen::LLT<ComplexMatrix> llt(shifted);
  if (llt.info() != Eigen::Success) throw NotPsd("cholesky_factor: factorisation failed after jitter");
  ComplexMatrix lower = llt.matrixL();
  return {r.grid, std::move(lower), eps};
}

/// Seedable normal generator: mt19937_64 driving a Box-Muller transform.
/// Both pieces are fully specified, so streams are identical across
/// platforms (std::normal_distribution is not).
class NormalStream {
public:
  static constexpr const char* kName = "mt19937_64+box_muller";

  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = kTwoPi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// splitmix64 finaliser; gives every trial its own well-separated seed.
inline std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (trial + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// White noise u for one trial: iid N(0,1) (real) or (g1 + i g2)/sqrt(2)
/// (circular, E[u u^*] = I, E[u u^T] = 0).
inline ComplexVector white_noise(std::size_t n, std::uint64_t seed, std::uint64_t trial, Symmetry sym) {
  NormalStream rng(trial_seed(seed, trial));
  ComplexVector u(static_cast<Eigen::Index>(n));
  if (sym == Symmetry::real) {
    for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = Complex(rng.next(), 0.0);
  } else {
    const double s = 1.0 / std::sqrt(2.0);
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      const double re = rng.next();
      const double im = rng.next();
      u(i) = Complex(s * re, s * im);
    }
  }
  return u;
}

/// One sample path L u for the given trial index.
inline ComplexVector draw_path(const CholeskyFactor& l, std::uint64_t seed, std::uint64_t trial, Symmetry sym) {
  const ComplexVector u = white_noise(l.grid.size(), seed, trial, sym);
  return l.lower.triangularView<Eigen::Lower>() * u;
}

struct SampleBatch {
  GeometricGrid grid;
  ComplexMatrix paths;  ///< n_trials x n
  std::uint64_t seed = 0;
  Symmetry symmetry = Symmetry::circular;
};

inline SampleBatch sample_paths(const CholeskyFactor& l, long long n_trials, std::uint64_t seed, Symmetry sym) {
  if (n_trials <= 0) throw InvalidArgument("sample_paths: n_trials must be positive");
  const auto n = static_cast<Eigen::Index>(l.grid.size());
  ComplexMatrix paths(n_trials, n);
  parallel::for_each_index(static_cast<std::size_t>(n_trials), [&](std::size_t i) {
    paths.row(static_cast<Eigen::Index>(i)) = draw_path(l, seed, i, sym).transpose();
  });
  return {l.grid, std::move(paths), seed, sym};
}

/// (1/N) sum_i x_i x_i^*, mirrored to be exactly Hermitian.
inline CovarianceMatrix empirical_covariance(const SampleBatch& batch) {
  if (batch.paths.rows() < 2) throw InvalidArgument("empirical_covariance: need at least two paths");
  const double inv = 1.0 / static_cast<double>(batch.paths.rows());
  ComplexMatrix c = (batch.paths.transpose() * batch.paths.conjugate()) * inv;
  for (Eigen::Index j = 0; j < c.rows(); ++j) {
    c(j, j) = Complex(c(j, j).real(), 0.0);
    for (Eigen::Index k = j + 1; k < c.cols(); ++k) c(k, j) = std::conj(c(j, k));
  }
  return {batch.grid, std::move(c), std::nullopt};
}

/// (1/N) sum_i x_i x_i^T.
inline ComplexMatrix empirical_pseudo_covariance(const SampleBatch& batch) {
  if (batch.paths.rows() < 2) throw InvalidArgument("empirical_pseudo_covariance: need at least two paths");
  return (batch.paths.transpose() * batch.paths) / static_cast<double>(batch.paths.rows());
}

} // namespace siws
