#ifndef COVERT_KALMAN_TESTS_ORACLES_HPP
#define COVERT_KALMAN_TESTS_ORACLES_HPP

// Independent reference computations used only by the tests. They trade speed
// for directness: truncated series, Kronecker solves, explicit inverses,
// exhaustive enumeration.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// exp(M) by scaling, a 30-term Taylor series, and squaring.
inline Matrix taylor_exp(const Matrix& M) {
  const double norm = M.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  double scale = 1.0;
  while (norm * scale > 0.5) {
    scale *= 0.5;
    ++squarings;
  }
  const Matrix X = M * scale;
  Matrix term = Matrix::Identity(M.rows(), M.cols());
  Matrix sum = term;
  for (int k = 1; k <= 30; ++k) {
    term = term * X / static_cast<double>(k);
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

/// X = A X A^T + M via vec(X) = (I - A (x) A)^{-1} vec(M).
inline Matrix kron_dlyap(const Matrix& A, const Matrix& M) {
  const Eigen::Index n = A.rows();
  Matrix K(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) K.block(i * n, j * n, n, n) = A(i, j) * A;
  }
  const Matrix lhs = Matrix::Identity(n * n, n * n) - K;
  const Vector vecM = Eigen::Map<const Vector>(M.data(), n * n);
  const Vector vecX = lhs.fullPivLu().solve(vecM);
  return Eigen::Map<const Matrix>(vecX.data(), n, n);
}

/// sum_{i=0}^{terms-1} A^i M (A^i)^T.
inline Matrix lyap_partial_sum(const Matrix& A, const Matrix& M, int terms) {
  Matrix sum = Matrix::Zero(A.rows(), A.cols());
  Matrix Ai = Matrix::Identity(A.rows(), A.cols());
  for (int i = 0; i < terms; ++i) {
    sum += Ai * M * Ai.transpose();
    Ai = A * Ai;
  }
  return sum;
}

/// Delta(S) = P C^T S^T (S C P C^T S^T + S R S^T)^{-1} S C P with an explicit inverse.
inline Matrix delta(const Matrix& S, const Matrix& P, const Matrix& C, const Matrix& R) {
  if (S.rows() == 0) return Matrix::Zero(P.rows(), P.cols());
  const Matrix CS = S * C;
  const Matrix G = CS * P * CS.transpose() + S * R * S.transpose();
  return P * CS.transpose() * G.inverse() * CS * P;
}

/// Filtered Kalman covariance sequence written out from the textbook
/// equations with explicit inverses. Element 0 is P0.
inline std::vector<Matrix> kalman_filtered(const Matrix& A, const Matrix& BQB, const Matrix& C, const Matrix& R,
                                           const Matrix& P0, int steps, std::vector<Matrix>* predicted = nullptr) {
  std::vector<Matrix> out{P0};
  if (predicted) predicted->assign(1, P0);
  for (int k = 1; k <= steps; ++k) {
    const Matrix Pp = A * out.back() * A.transpose() + BQB;
    const Matrix K = Pp * C.transpose() * (C * Pp * C.transpose() + R).inverse();
    out.push_back(Pp - K * C * Pp);
    if (predicted) predicted->push_back(Pp);
  }
  return out;
}

/// Exact E[P_{k|k}] for k = 0..steps by enumerating all 2^steps schedules of
/// independent Bernoulli(varsigma) encryption flags.
inline std::vector<Matrix> enumerate_expected(const Matrix& A, const Matrix& BQB, const Matrix& C, const Matrix& R,
                                              const Matrix& P0, const Matrix& S, double varsigma, int steps) {
  std::vector<Matrix> sensor_pred;
  kalman_filtered(A, BQB, C, R, P0, steps, &sensor_pred);
  const Eigen::Index m = C.rows();
  const Matrix I = Matrix::Identity(m, m);
  std::vector<Matrix> expected(steps + 1, Matrix::Zero(A.rows(), A.cols()));
  expected[0] = P0;
  const std::uint64_t total = 1ULL << steps;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    Matrix P = P0;
    double weight = 1.0;
    for (int k = 1; k <= steps; ++k) {
      const bool flag = (mask >> (k - 1)) & 1ULL;
      weight *= flag ? varsigma : 1.0 - varsigma;
      P = A * P * A.transpose() + BQB - delta(flag ? S : I, sensor_pred[k], C, R);
      // each length-k prefix is visited once: by the mask with no higher bits
      if ((mask >> k) == 0) expected[k] += weight * P;
    }
  }
  return expected;
}

/// Random matrix with N(0, 1) entries.
inline Matrix gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> nd;
  Matrix M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) M(i, j) = nd(rng);
  }
  return M;
}

/// Random rows x m matrix with orthonormal rows. Delta(S) only depends on the
/// row space of S, so this covers every plaintext choice.
inline Matrix orthonormal_rows(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index m) {
  const Matrix G = gaussian(rng, m, m);
  Eigen::HouseholderQR<Matrix> qr(G);
  const Matrix Q = qr.householderQ() * Matrix::Identity(m, m);
  return Q.leftCols(rows).transpose();
}

/// Random SPD matrix G G^T + floor * I.
inline Matrix random_spd(std::mt19937_64& rng, Eigen::Index n, double floor = 0.1) {
  const Matrix G = gaussian(rng, n, n);
  return G * G.transpose() + floor * Matrix::Identity(n, n);
}

/// Random matrix rescaled to spectral radius `rho`.
inline Matrix random_with_radius(std::mt19937_64& rng, Eigen::Index n, double rho) {
  const Matrix M = gaussian(rng, n, n);
  const double r = M.eigenvalues().cwiseAbs().maxCoeff();
  return M * (rho / r);
}

}  // namespace oracle

#endif  // COVERT_KALMAN_TESTS_ORACLES_HPP
