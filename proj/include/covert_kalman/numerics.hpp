#ifndef COVERT_KALMAN_NUMERICS_HPP
#define COVERT_KALMAN_NUMERICS_HPP

// Small dense linear-algebra helpers shared by every other header:
// spectral radius, discrete Lyapunov solve/iteration, zero-order-hold
// discretization and covariance hygiene.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "covert_kalman/errors.hpp"

namespace covert_kalman {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

struct Tolerances {
  double convergence_eps = 1e-10;  ///< relative Frobenius threshold
  double divergence_cap = 1e8;     ///< trace blow-up multiplier
  std::size_t max_iters = 1'000'000;
  double rank_eps = 1e-10;  ///< singular-value cutoff factor

  void validate() const {
    if (!(convergence_eps > 0) || !(divergence_cap > 0) || !(rank_eps > 0) || max_iters < 1) {
      throw InvalidArgument("Tolerances: all fields must be strictly positive");
    }
  }
};

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

/// Smallest eigenvalue of the symmetric part of `m`.
inline double min_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalFailure("min_eigenvalue: eigensolver failed");
  return es.eigenvalues()(0);
}

/// Slack used for every PSD / Loewner-order comparison: 1e-8 * (1 + |trace|).
inline double psd_slack(const Matrix& reference) {
  return 1e-8 * (1.0 + std::abs(reference.trace()));
}

inline bool is_psd(const Matrix& m) { return min_eigenvalue(m) >= -psd_slack(m); }

/// True when lhs <= rhs in the Loewner order, up to psd_slack(rhs).
inline bool loewner_leq(const Matrix& lhs, const Matrix& rhs) {
  return min_eigenvalue(rhs - lhs) >= -psd_slack(rhs);
}

inline bool is_symmetric(const Matrix& m, double rel = 1e-10) {
  return m.rows() == m.cols() && (m - m.transpose()).norm() <= rel * (1.0 + m.norm());
}

/// Throws InvalidArgument unless `m` is a finite symmetric PSD matrix.
inline void require_covariance(const Matrix& m, const std::string& what) {
  if (m.rows() != m.cols()) throw InvalidArgument(what + " must be square");
  if (!all_finite(m)) throw InvalidArgument(what + " has non-finite entries");
  if (!is_symmetric(m)) throw InvalidArgument(what + " is not symmetric");
  if (!is_psd(m)) throw InvalidArgument(what + " is not positive semi-definite");
}

inline ComplexVector eigenvalues(const Matrix& m) {
  Eigen::EigenSolver<Matrix> es(m, false);
  if (es.info() != Eigen::Success) throw NumericalFailure("eigenvalues: eigensolver failed");
  return es.eigenvalues();
}

inline double spectral_radius(const Matrix& m) {
  if (m.rows() != m.cols() || m.size() == 0) throw InvalidArgument("spectral_radius: matrix must be square and non-empty");
  if (!all_finite(m)) throw NumericalFailure("spectral_radius: non-finite entries");
  return eigenvalues(m).cwiseAbs().maxCoeff();
}

inline Matrix matrix_power(const Matrix& m, int k) {
  Matrix result = Matrix::Identity(m.rows(), m.cols());
  Matrix base = m;
  for (; k > 0; k >>= 1) {
    if (k & 1) result = result * base;
    base = base * base;
  }
  return result;
}

/// Numerical rank: singular values above rank_eps * sigma_max * max(rows, cols).
template <typename Derived>
int rank_tol(const Eigen::MatrixBase<Derived>& m, double rank_eps = Tolerances{}.rank_eps) {
  using Plain = typename Derived::PlainObject;
  if (m.size() == 0) return 0;
  if (!m.allFinite()) throw NumericalFailure("rank_tol: non-finite entries");
  Eigen::JacobiSVD<Plain> svd(m.eval());
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double cutoff = rank_eps * sv(0) * static_cast<double>(std::max(m.rows(), m.cols()));
  return static_cast<int>((sv.array() > cutoff).count());
}

/// Solves X = A X A^T + M for Schur-stable A by the doubling iteration
///   X <- X + A_j X A_j^T,  A_{j+1} = A_j^2,
/// which sums the series sum_i A^i M (A^T)^i in O(log) steps.
inline Matrix solve_dlyap(const Matrix& A, const Matrix& M, const Tolerances& tol = {}) {
  if (A.rows() != A.cols() || M.rows() != A.rows() || M.cols() != A.cols()) {
    throw InvalidArgument("solve_dlyap: dimension mismatch");
  }
  const double rho = spectral_radius(A);
  if (rho >= 1.0) throw UnstableOperator("solve_dlyap: spectral radius " + std::to_string(rho) + " >= 1");

  Matrix X = symmetrize(M);
  Matrix Aj = A;
  const std::size_t budget = std::min<std::size_t>(tol.max_iters, 200);
  bool done = false;
  for (std::size_t it = 0; it < budget; ++it) {
    const Matrix increment = Aj * X * Aj.transpose();
    X = symmetrize(X + increment);
    Aj = Aj * Aj;
    if (!all_finite(X)) throw NumericalFailure("solve_dlyap: non-finite iterate");
    if (increment.norm() <= 1e-3 * tol.convergence_eps * (1.0 + X.norm()) && Aj.norm() <= 1.0) {
      done = true;
      break;
    }
  }
  const double residual = (X - A * X * A.transpose() - M).norm();
  if (!done || residual > tol.convergence_eps * (1.0 + X.norm())) {
    throw NumericalFailure("solve_dlyap: no convergence (residual " + std::to_string(residual) + ")");
  }
  return X;
}

struct LyapunovIterates {
  std::vector<Matrix> iterates;  ///< X_1 .. X_steps (fewer when diverged)
  bool diverged = false;         ///< an entry overflowed; iterates ends at the last finite one
};

/// X_{k+1} = A X_k A^T + M. No PSD clamping: an indefinite M may leave the cone.
inline LyapunovIterates iterate_lyap(const Matrix& A, const Matrix& M, const Matrix& X0, std::size_t steps) {
  if (A.rows() != A.cols() || M.rows() != A.rows() || M.cols() != A.cols() || X0.rows() != A.rows() ||
      X0.cols() != A.cols()) {
    throw InvalidArgument("iterate_lyap: dimension mismatch");
  }
  LyapunovIterates out;
  out.iterates.reserve(steps);
  Matrix X = X0;
  for (std::size_t k = 0; k < steps; ++k) {
    Matrix next = symmetrize(A * X * A.transpose() + M);
    if (!all_finite(next)) {
      out.diverged = true;
      break;
    }
    out.iterates.push_back(next);
    X = std::move(next);
  }
  return out;
}

struct DiscreteSystem {
  Matrix A;
  Matrix B;
};

/// Zero-order hold: one matrix exponential of [[Ac, Bc], [0, 0]] * dt gives
/// A = exp(Ac dt) in the top-left block and (int_0^dt exp(Ac s) ds) Bc in the
/// top-right block.
inline DiscreteSystem zoh_discretize(const Matrix& Ac, const Matrix& Bc, double dt) {
  if (!(dt > 0)) throw InvalidArgument("zoh_discretize: dt must be positive");
  if (Ac.rows() != Ac.cols() || Bc.rows() != Ac.rows()) throw InvalidArgument("zoh_discretize: dimension mismatch");
  const Eigen::Index n = Ac.rows();
  const Eigen::Index p = Bc.cols();
  Matrix aug = Matrix::Zero(n + p, n + p);
  aug.topLeftCorner(n, n) = Ac * dt;
  aug.topRightCorner(n, p) = Bc * dt;
  const Matrix e = aug.exp();
  if (!all_finite(e)) throw NumericalFailure("zoh_discretize: non-finite matrix exponential");
  return {e.topLeftCorner(n, n), e.topRightCorner(n, p)};
}

}  // namespace covert_kalman

#endif  // COVERT_KALMAN_NUMERICS_HPP
