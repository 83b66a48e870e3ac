#ifndef COVERT_KALMAN_EAVESDROPPER_HPP
#define COVERT_KALMAN_EAVESDROPPER_HPP

// The eavesdropper's MMSE filter. It knows the model, S~, the encryption
// flags and the sensor's (measurement-independent) covariance recursion, and
// observes y_k = eps_k or S eps_k. Because the innovations are orthogonal,
// the update is a Kalman update whose gain is built from the sensor's
// predicted covariance P^s_{k|k-1}, not from the eavesdropper's own.

#include <cstddef>
#include <vector>

#include "covert_kalman/crypto.hpp"
#include "covert_kalman/model.hpp"
#include "covert_kalman/schedule.hpp"

namespace covert_kalman {

/// C_S = S C and R_S = S R S^T. For the S = 0 sentinel both are empty.
struct ReducedInnovationModel {
  Matrix C_S;
  Matrix R_S;
  bool empty() const { return C_S.rows() == 0; }
};

inline ReducedInnovationModel reduce(const Matrix& S, const Matrix& C, const Matrix& R) {
  if (S.rows() == 0) return {Matrix(0, C.cols()), Matrix(0, 0)};
  if (S.cols() != C.rows()) throw InvalidArgument("reduce: S must have m columns");
  return {S * C, symmetrize(S * R * S.transpose())};
}

namespace detail {

/// Returns (gain, reduction) = (P C_S^T G^{-1}, P C_S^T G^{-1} C_S P) with
/// G = C_S P C_S^T + R_S.
inline std::pair<Matrix, Matrix> reduced_update(const ReducedInnovationModel& red, const Matrix& P_pred) {
  const Eigen::Index n = P_pred.rows();
  if (red.empty()) return {Matrix(n, 0), Matrix::Zero(n, n)};
  const Matrix G = symmetrize(red.C_S * P_pred * red.C_S.transpose() + red.R_S);
  Eigen::LLT<Matrix> llt(G);
  if (llt.info() != Eigen::Success) throw NumericalFailure("reduced innovation covariance is not SPD");
  const Matrix cross = P_pred * red.C_S.transpose();  // Cov(x_k, S eps_k)
  Matrix gain = llt.solve(cross.transpose()).transpose();
  Matrix reduction = symmetrize(gain * cross.transpose());
  return {std::move(gain), std::move(reduction)};
}

}  // namespace detail

/// Delta(S, k) = P C_S^T (C_S P C_S^T + R_S)^{-1} C_S P, zero for S = 0.
/// Pass S = I for the full-measurement term Delta(I, k).
inline Matrix delta(const Matrix& S, const Matrix& P_pred, const Matrix& C, const Matrix& R) {
  return detail::reduced_update(reduce(S, C, R), P_pred).second;
}

inline Matrix delta_full(const Matrix& P_pred, const Matrix& C, const Matrix& R) {
  return delta(Matrix::Identity(C.rows(), C.rows()), P_pred, C, R);
}

struct EavesdropperState {
  std::size_t k = 0;
  Vector x;  ///< x_{k|k}
  Matrix P;  ///< P_{k|k}
};

inline EavesdropperState initial_eavesdropper_state(const SystemModel& model) {
  return {0, model.x0_mean, model.P0};
}

/// One step of the eavesdropper's filter given its view (varsigma_k, y_k)
/// and the sensor's predicted covariance P^s_{k|k-1}.
inline EavesdropperState eav_step(const EavesdropperState& state, bool varsigma, const Vector& y,
                                  const Matrix& sensor_P_pred, const SystemModel& model,
                                  const EncryptionPartition& part) {
  if (part.m() != model.m()) throw InvalidArgument("eav_step: partition and model disagree on m");
  const Eigen::Index expected = varsigma ? part.m() - part.m_bar() : model.m();
  if (y.size() != expected) {
    throw InvalidArgument("eav_step: observation has " + std::to_string(y.size()) + " entries, expected " +
                          std::to_string(expected));
  }
  EavesdropperState next;
  next.k = state.k + 1;
  const Vector x_pred = model.A * state.x;
  const Matrix P_pred = symmetrize(model.A * state.P * model.A.transpose() + model.process_noise());

  const ReducedInnovationModel red =
      varsigma ? reduce(part.S(), model.C, model.R) : ReducedInnovationModel{model.C, model.R};
  if (red.empty()) {
    next.x = x_pred;
    next.P = P_pred;
    return next;
  }
  auto [gain, reduction] = detail::reduced_update(red, sensor_P_pred);
  next.x = x_pred + gain * y;
  next.P = symmetrize(P_pred - reduction);
  return next;
}

/// Measurement-free covariance recursion
///   P_k = A P_{k-1} A^T + B Q B^T - (1 - s_k) Delta(I, k) - s_k Delta(S, k)
/// from P_{0|0} = P0. Element 0 is P0; element k is P_{k|k}.
inline std::vector<Matrix> cov_trajectory(const ScheduleTrace& schedule, const EncryptionPartition& part,
                                          const SystemModel& model, const SensorCovariances& sensor) {
  if (sensor.horizon() < schedule.horizon()) throw InvalidArgument("cov_trajectory: sensor horizon too short");
  const ReducedInnovationModel red_S = reduce(part.S(), model.C, model.R);
  const ReducedInnovationModel red_I{model.C, model.R};
  const Matrix BQB = model.process_noise();
  std::vector<Matrix> out;
  out.reserve(schedule.horizon() + 1);
  out.push_back(model.P0);
  for (std::size_t k = 1; k <= schedule.horizon(); ++k) {
    const auto& red = schedule.at(k) ? red_S : red_I;
    const Matrix reduction = detail::reduced_update(red, sensor.P_pred[k]).second;
    out.push_back(symmetrize(model.A * out.back() * model.A.transpose() + BQB - reduction));
  }
  return out;
}

inline std::vector<Matrix> cov_trajectory(const ScheduleTrace& schedule, const EncryptionPartition& part,
                                          const SystemModel& model) {
  return cov_trajectory(schedule, part, model, sensor_covariances(model, schedule.horizon()));
}

}  // namespace covert_kalman

#endif  // COVERT_KALMAN_EAVESDROPPER_HPP
