#ifndef COVERT_KALMAN_MODEL_HPP
#define COVERT_KALMAN_MODEL_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "covert_kalman/numerics.hpp"

namespace covert_kalman {

/// x_k = A x_{k-1} + B w_{k-1},  z_k = C x_k + v_k,
/// w ~ N(0, Q), v ~ N(0, R), x_0 ~ N(x0_mean, P0).
struct SystemModel {
  Matrix A;
  Matrix B;
  Matrix C;
  Matrix Q;
  Matrix R;
  Vector x0_mean;
  Matrix P0;

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index m() const { return C.rows(); }
  Eigen::Index p() const { return B.cols(); }
  Matrix process_noise() const { return symmetrize(B * Q * B.transpose()); }
};

namespace detail {

inline bool near_unstable(std::complex<double> lambda) { return std::abs(lambda) >= 1.0 - 1e-9; }

}  // namespace detail

/// PBH: rank [lambda I - A, B] = n for every eigenvalue with |lambda| >= 1.
inline bool is_stabilizable(const Matrix& A, const Matrix& B, double rank_eps = Tolerances{}.rank_eps) {
  const Eigen::Index n = A.rows();
  const ComplexVector eig = eigenvalues(A);
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    if (!detail::near_unstable(eig(i))) continue;
    ComplexMatrix pbh(n, n + B.cols());
    pbh.leftCols(n) = eig(i) * ComplexMatrix::Identity(n, n) - A.cast<std::complex<double>>();
    pbh.rightCols(B.cols()) = B.cast<std::complex<double>>();
    if (rank_tol(pbh, rank_eps) < n) return false;
  }
  return true;
}

/// PBH on the dual pair: (C, A) is detectable iff (A^T, C^T) is stabilizable.
inline bool is_detectable(const Matrix& C, const Matrix& A, double rank_eps = Tolerances{}.rank_eps) {
  return is_stabilizable(A.transpose(), C.transpose(), rank_eps);
}

/// Returns a copy of `model` after checking every SystemModel invariant.
/// Throws InvalidModel naming each violated one.
inline SystemModel validate_model(const SystemModel& model, const Tolerances& tol = {}) {
  const Eigen::Index n = model.A.rows();
  const Eigen::Index m = model.C.rows();
  const Eigen::Index p = model.B.cols();
  if (n < 1 || model.A.cols() != n || model.B.rows() != n || model.C.cols() != n || model.Q.rows() != p ||
      model.Q.cols() != p || model.R.rows() != m || model.R.cols() != m || model.x0_mean.size() != n ||
      model.P0.rows() != n || model.P0.cols() != n || m < 1 || p < 1) {
    throw InvalidModel({"dimension mismatch"}, "A n x n, B n x p, C m x n, Q p x p, R m x m, x0_mean n, P0 n x n");
  }
  if (!all_finite(model.A) || !all_finite(model.B) || !all_finite(model.C) || !all_finite(model.Q) ||
      !all_finite(model.R) || !model.x0_mean.allFinite() || !all_finite(model.P0)) {
    throw InvalidModel({"non-finite entry"}, "model matrices must be finite");
  }

  std::vector<std::string> violations;
  std::string detail;
  if (!is_symmetric(model.Q) || min_eigenvalue(model.Q) <= 0.0) {
    violations.emplace_back("indefinite Q");
    detail += " Q must be symmetric positive definite;";
  }
  if (!is_symmetric(model.R) || min_eigenvalue(model.R) <= 0.0) {
    violations.emplace_back("indefinite R");
    detail += " R must be symmetric positive definite;";
  }
  if (!is_symmetric(model.P0) || !is_psd(model.P0)) {
    violations.emplace_back("indefinite P0");
    detail += " P0 must be symmetric positive semi-definite;";
  }
  if (rank_tol(model.C, tol.rank_eps) != m) {
    violations.emplace_back("rank-deficient C");
    detail += " C must have full row rank;";
  }
  if (!is_stabilizable(model.A, model.B, tol.rank_eps)) {
    violations.emplace_back("unstabilizable");
    detail += " (A, B) fails the PBH rank test;";
  }
  if (!is_detectable(model.C, model.A, tol.rank_eps)) {
    violations.emplace_back("undetectable");
    detail += " (C, A) fails the PBH rank test;";
  }
  if (!violations.empty()) throw InvalidModel(std::move(violations), detail);
  return model;
}

/// Sensor-side Kalman filter state at time k. Before the first update k = 0
/// and the prediction fields mirror the prior.
struct SensorFilterState {
  std::size_t k = 0;
  Vector x_pred;  ///< x^s_{k|k-1}
  Matrix P_pred;  ///< P^s_{k|k-1}
  Vector x_filt;  ///< x^s_{k|k}
  Matrix P_filt;  ///< P^s_{k|k}
  Matrix K;       ///< K^s_k
};

inline SensorFilterState initial_filter_state(const SystemModel& model) {
  return {0, model.x0_mean, model.P0, model.x0_mean, model.P0, Matrix::Zero(model.n(), model.m())};
}

/// K = P C^T (C P C^T + R)^{-1}, via a Cholesky factorization of the
/// innovation covariance.
inline Matrix kalman_gain(const Matrix& P_pred, const Matrix& C, const Matrix& R) {
  const Matrix innovation_cov = symmetrize(C * P_pred * C.transpose() + R);
  Eigen::LLT<Matrix> llt(innovation_cov);
  if (llt.info() != Eigen::Success) throw NumericalFailure("kalman_gain: innovation covariance is not SPD");
  return llt.solve(C * P_pred).transpose();
}

struct CovarianceStep {
  Matrix P_pred;
  Matrix K;
  Matrix P_filt;
};

/// Covariance half of one predict+update cycle.
inline CovarianceStep riccati_step(const Matrix& P_filt_prev, const SystemModel& model) {
  CovarianceStep out;
  out.P_pred = symmetrize(model.A * P_filt_prev * model.A.transpose() + model.process_noise());
  out.K = kalman_gain(out.P_pred, model.C, model.R);
  out.P_filt = symmetrize((Matrix::Identity(model.n(), model.n()) - out.K * model.C) * out.P_pred);
  return out;
}

/// Time update to k+1. Covariances and gain are complete (they do not depend
/// on z); x_filt mirrors x_pred until the measurement update runs.
inline SensorFilterState predict(const SensorFilterState& state, const SystemModel& model) {
  const CovarianceStep cov = riccati_step(state.P_filt, model);
  SensorFilterState next;
  next.k = state.k + 1;
  next.x_pred = model.A * state.x_filt;
  next.P_pred = cov.P_pred;
  next.K = cov.K;
  next.x_filt = next.x_pred;
  next.P_filt = cov.P_filt;
  return next;
}

/// epsilon_k = z_k - C x^s_{k|k-1}; `state` is the output of `predict`.
inline Vector innovation(const SensorFilterState& state, const Vector& z, const SystemModel& model) {
  if (z.size() != model.m()) throw InvalidArgument("innovation: measurement has wrong dimension");
  return z - model.C * state.x_pred;
}

/// Measurement update from an already-formed innovation. The user side calls
/// this with the decrypted innovation.
inline SensorFilterState update_with_innovation(const SensorFilterState& predicted, const Vector& eps) {
  SensorFilterState out = predicted;
  out.x_filt = predicted.x_pred + predicted.K * eps;
  return out;
}

inline SensorFilterState kalman_step(const SensorFilterState& state, const Vector& z, const SystemModel& model) {
  const SensorFilterState predicted = predict(state, model);
  return update_with_innovation(predicted, innovation(predicted, z, model));
}

/// The measurement-independent part of the sensor filter for k = 0..T.
/// Index 0 holds the prior (P_pred[0] = P_filt[0] = P0, K[0] = 0).
struct SensorCovariances {
  std::vector<Matrix> P_pred;
  std::vector<Matrix> P_filt;
  std::vector<Matrix> K;

  std::size_t horizon() const { return P_filt.empty() ? 0 : P_filt.size() - 1; }
};

inline SensorCovariances sensor_covariances(const SystemModel& model, std::size_t horizon) {
  SensorCovariances out;
  out.P_pred.reserve(horizon + 1);
  out.P_filt.reserve(horizon + 1);
  out.K.reserve(horizon + 1);
  out.P_pred.push_back(model.P0);
  out.P_filt.push_back(model.P0);
  out.K.push_back(Matrix::Zero(model.n(), model.m()));
  for (std::size_t k = 1; k <= horizon; ++k) {
    CovarianceStep step = riccati_step(out.P_filt.back(), model);
    out.P_pred.push_back(std::move(step.P_pred));
    out.K.push_back(std::move(step.K));
    out.P_filt.push_back(std::move(step.P_filt));
  }
  return out;
}

struct SteadyState {
  Matrix P_minus;  ///< lim P^s_{k|k-1}
  Matrix P_plus;   ///< lim P^s_{k|k}
  Matrix K_inf;    ///< lim K^s_k
  std::size_t N = 0;  ///< first k with P^s_{k|k} within convergence_eps of P_plus
  std::size_t iterations = 0;
};

/// Runs the Riccati recursion from P0 to numerical convergence.
///
/// Convergence is first detected by the step-to-step change
/// ||P_k - P_{k-1}||_F <= eps (1 + ||P_k||_F); iteration then continues to a
/// tighter floor so that the returned limit is accurate well below eps. N is
/// then the first index whose filtered covariance lies within eps of that
/// limit (N = 0 when P0 already is the steady state).
inline SteadyState steady_state(const SystemModel& model, const Tolerances& tol = {}) {
  const double eps = tol.convergence_eps;
  Matrix P = model.P0;
  bool detected = false;
  double best_diff = std::numeric_limits<double>::infinity();
  std::size_t stagnant = 0;
  std::size_t it = 0;
  CovarianceStep last;
  for (; it < tol.max_iters; ++it) {
    last = riccati_step(P, model);
    if (!all_finite(last.P_filt)) throw NumericalFailure("steady_state: non-finite Riccati iterate");
    const double diff = (last.P_filt - P).norm();
    const double scale = 1.0 + last.P_filt.norm();
    P = last.P_filt;
    if (diff <= eps * scale) detected = true;
    if (detected) {
      if (diff <= 1e-3 * eps * scale) break;
      if (diff < best_diff) {
        best_diff = diff;
        stagnant = 0;
      } else if (++stagnant > 100) {
        break;
      }
    }
  }
  if (!detected) throw NumericalFailure("steady_state: Riccati recursion did not converge within max_iters");

  SteadyState ss;
  ss.P_minus = last.P_pred;
  ss.K_inf = last.K;
  ss.P_plus = last.P_filt;
  ss.iterations = it + 1;

  const double limit_scale = eps * (1.0 + ss.P_plus.norm());
  Matrix Pk = model.P0;
  std::size_t k = 0;
  while ((Pk - ss.P_plus).norm() > limit_scale && k <= ss.iterations) {
    Pk = riccati_step(Pk, model).P_filt;
    ++k;
  }
  ss.N = k;
  return ss;
}

/// || P_plus - (I - K C)(A P_plus A^T + B Q B^T) ||_F, the filtered-form DARE residual.
inline double riccati_residual(const SteadyState& ss, const SystemModel& model) {
  return (riccati_step(ss.P_plus, model).P_filt - ss.P_plus).norm();
}

}  // namespace covert_kalman

#endif  // COVERT_KALMAN_MODEL_HPP
