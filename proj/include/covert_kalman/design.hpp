#ifndef COVERT_KALMAN_DESIGN_HPP
#define COVERT_KALMAN_DESIGN_HPP

// Closed-form analysis and synthesis of encryption parameters:
//  * expected / periodic steady states of the eavesdropper covariance,
//  * numerical divergence certification of X <- A X A^T + BQB^T - Delta(S),
//  * optimal (m_bar, frequency, S) for stable plants,
//  * the unstable-plant encryption matrix built from a left eigenvector,
//  * single-shot encryption verdicts (PBH route, with an LMI certificate),
//  * propagation of rounding errors in the user's inverse of S~.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "covert_kalman/crypto.hpp"
#include "covert_kalman/eavesdropper.hpp"
#include "covert_kalman/model.hpp"
#include "covert_kalman/schedule.hpp"

namespace covert_kalman {

/// Steady-state Delta(I) and Delta(S), evaluated at P^s_-.
struct SteadyDeltas {
  Matrix full;     ///< Delta(I)
  Matrix reduced;  ///< Delta(S)
};

inline SteadyDeltas steady_deltas(const SteadyState& ss, const Matrix& S, const SystemModel& model) {
  return {delta_full(ss.P_minus, model.C, model.R), delta(S, ss.P_minus, model.C, model.R)};
}

// ---------------------------------------------------------------------------
// Stochastic strategy: E[P_{k|k}] = (1 - s) P^s_{k|k} + s Pfrak_{k|k}, where
// Pfrak_k = A Pfrak_{k-1} A^T + BQB^T - Delta(S, k) starts at P0. With S = 0,
// Pfrak is Cov(x_k).

struct StochasticExpectation {
  std::vector<Matrix> expected;  ///< E[P_{k|k}], k = 0..T
  std::vector<Matrix> reduced;   ///< Pfrak_{k|k}, k = 0..T
  std::optional<Matrix> limit;   ///< (1 - s) P^s_+ + s Pbar_S, when rho(A) < 1
};

inline StochasticExpectation expected_cov_stochastic(double varsigma, const EncryptionPartition& part,
                                                     const SystemModel& model, std::size_t horizon,
                                                     const Tolerances& tol = {}) {
  if (!(varsigma > 0.0 && varsigma <= 1.0)) {
    throw InvalidArgument("expected_cov_stochastic: varsigma must lie in (0, 1]; use the sensor filter for 0");
  }
  const SensorCovariances sensor = sensor_covariances(model, horizon);
  const ReducedInnovationModel red = reduce(part.S(), model.C, model.R);
  const Matrix BQB = model.process_noise();

  StochasticExpectation out;
  out.reduced.reserve(horizon + 1);
  out.expected.reserve(horizon + 1);
  out.reduced.push_back(model.P0);
  out.expected.push_back(model.P0);
  for (std::size_t k = 1; k <= horizon; ++k) {
    const Matrix reduction = detail::reduced_update(red, sensor.P_pred[k]).second;
    out.reduced.push_back(symmetrize(model.A * out.reduced.back() * model.A.transpose() + BQB - reduction));
    out.expected.push_back((1.0 - varsigma) * sensor.P_filt[k] + varsigma * out.reduced.back());
  }
  if (spectral_radius(model.A) < 1.0) {
    const SteadyState ss = steady_state(model, tol);
    const Matrix delta_S = delta(part.S(), ss.P_minus, model.C, model.R);
    const Matrix P_bar = solve_dlyap(model.A, BQB - delta_S, tol);
    out.limit = symmetrize((1.0 - varsigma) * ss.P_plus + varsigma * P_bar);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Deterministic strategy.

namespace detail {

/// f(k) for 1-based k, extended with period L.
inline double decision(const std::vector<std::uint8_t>& f_bits, std::size_t k) {
  return f_bits[(k - 1) % f_bits.size()];
}

}  // namespace detail

/// lim_{i -> inf} P_{iL+j | iL+j} = P^s_+ + X_j, where
///   X_j = A^L X_j (A^L)^T + sum_{i=1..L} f(i+j) A^{L-i} (Delta(I) - Delta(S)) (A^{L-i})^T.
inline Matrix periodic_limit(const EncryptionPartition& part, const std::vector<std::uint8_t>& f_bits,
                             std::size_t phase, const SystemModel& model, const Tolerances& tol = {}) {
  validate_strategy(Deterministic{f_bits});
  const std::size_t L = f_bits.size();
  if (phase < 1 || phase > L) throw InvalidArgument("periodic_limit: phase must lie in 1..L");
  if (Deterministic{f_bits}.ones() == 0) throw InvalidArgument("periodic_limit: decision function has |f| = 0");
  const double rho = spectral_radius(model.A);
  if (rho >= 1.0) throw UnstableOperator("periodic_limit: rho(A) = " + std::to_string(rho) + " >= 1");

  const SteadyState ss = steady_state(model, tol);
  const SteadyDeltas d = steady_deltas(ss, part.S(), model);
  const Matrix gap = d.full - d.reduced;
  const Eigen::Index n = model.n();

  Matrix forcing = Matrix::Zero(n, n);
  Matrix power = Matrix::Identity(n, n);  // A^{L-i}, walking i from L down to 1
  for (std::size_t i = L; i >= 1; --i) {
    if (detail::decision(f_bits, i + phase) != 0.0) forcing += power * gap * power.transpose();
    power = model.A * power;
  }
  const Matrix AL = matrix_power(model.A, static_cast<int>(L));
  return symmetrize(ss.P_plus + solve_dlyap(AL, symmetrize(forcing), tol));
}

// ---------------------------------------------------------------------------
// Boundedness of X_{k+1} = A X_k A^T + BQB^T - Delta(S), X_0 = P^s_+.

enum class Verdict { Converged, Diverged, Inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Converged: return "converged";
    case Verdict::Diverged: return "diverged";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct BoundednessVerdict {
  Verdict verdict = Verdict::Inconclusive;
  Matrix witness;              ///< last iterate (the limit when converged)
  double witness_trace = 0.0;
  double baseline_trace = 0.0;  ///< trace(P^s_+)
  std::size_t iterations = 0;
};

inline BoundednessVerdict boundedness_check(const EncryptionPartition& part, const SystemModel& model,
                                            const Tolerances& tol = {}) {
  const SteadyState ss = steady_state(model, tol);
  const Matrix forcing = model.process_noise() - delta(part.S(), ss.P_minus, model.C, model.R);
  BoundednessVerdict out;
  out.baseline_trace = ss.P_plus.trace();
  const double cap = tol.divergence_cap * std::max(out.baseline_trace, std::numeric_limits<double>::min());
  Matrix X = ss.P_plus;
  for (std::size_t it = 1; it <= tol.max_iters; ++it) {
    Matrix next = symmetrize(model.A * X * model.A.transpose() + forcing);
    out.iterations = it;
    if (!all_finite(next) || next.trace() > cap) {
      out.verdict = Verdict::Diverged;
      out.witness = all_finite(next) ? next : X;
      out.witness_trace = out.witness.trace();
      return out;
    }
    const double residual = (next - X).norm();
    X = std::move(next);
    if (residual <= tol.convergence_eps * (1.0 + X.norm())) {
      out.verdict = Verdict::Converged;
      out.witness = X;
      out.witness_trace = X.trace();
      return out;
    }
  }
  out.verdict = Verdict::Inconclusive;
  out.witness = X;
  out.witness_trace = X.trace();
  return out;
}

// ---------------------------------------------------------------------------
// Optimal stable-case design.
//
// With W = sum_i (A^i)^T A^i, the steady-state objective for a given a = m_bar
// is trace(P^s_+) + freq(a) * trace(W (Delta(I) - Delta(S))). The best S of
// rank m - a keeps in the clear the directions carrying least weighted
// information: the generalized eigenvectors of
//   C P^s_- W P^s_- C^T phi = lambda (C P^s_- C^T + R) phi
// with the m - a smallest eigenvalues.

struct DesignBudget {
  double mu_total = 0.0;  ///< bound on frequency * m_bar
  int mu_inst = 1;        ///< largest admissible m_bar

  void validate(Eigen::Index m) const {
    if (!(mu_total > 0.0 && mu_total <= static_cast<double>(m))) {
      throw InvalidArgument("DesignBudget: mu_total must lie in (0, m]");
    }
    if (mu_inst < 1 || mu_inst > m) throw InvalidArgument("DesignBudget: mu_inst must lie in 1..m");
  }
};

struct DesignCandidate {
  int m_bar = 0;
  double frequency = 0.0;
  double objective = 0.0;
};

struct OptimalParams {
  int m_bar = 0;
  double frequency = 0.0;
  Matrix S_opt;                        ///< (m - m_bar) x m, rows = phi_1..phi_{m-m_bar}
  Matrix W;                            ///< observability weight sum_i (A^i)^T A^i
  double objective = 0.0;              ///< steady-state trace of the optimum
  Vector generalized_eigenvalues;      ///< ascending
  Matrix generalized_eigenvectors;     ///< columns phi_i, phi^T (C P C^T + R) phi = 1
  std::vector<DesignCandidate> candidates;  ///< one per a = 1..mu_inst

  EncryptionPartition partition() const;
};

struct GeneralizedEigen {
  Vector values;   ///< ascending
  Matrix vectors;  ///< columns
};

/// Solves L phi = lambda M phi for symmetric L and SPD M by Cholesky
/// whitening. Each eigenvector is scaled to phi^T M phi = 1 and signed so its
/// first non-negligible entry is positive.
inline GeneralizedEigen generalized_symmetric_eigen(const Matrix& L, const Matrix& M) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(symmetrize(L), symmetrize(M),
                                                       Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (ges.info() != Eigen::Success) throw NumericalFailure("generalized eigensolver failed (is the right matrix SPD?)");
  GeneralizedEigen out{ges.eigenvalues(), ges.eigenvectors()};
  for (Eigen::Index c = 0; c < out.vectors.cols(); ++c) {
    auto col = out.vectors.col(c);
    const double cutoff = 1e-12 * col.cwiseAbs().maxCoeff();
    for (Eigen::Index r = 0; r < col.size(); ++r) {
      if (std::abs(col(r)) > cutoff) {
        if (col(r) < 0) col *= -1.0;
        break;
      }
    }
  }
  return out;
}

/// W = A^T W A + I.
inline Matrix observability_weight(const Matrix& A, const Tolerances& tol = {}) {
  return solve_dlyap(A.transpose(), Matrix::Identity(A.rows(), A.cols()), tol);
}

/// trace(W (Delta(I) - Delta(S))): the steady-state trace gained per unit of
/// encryption frequency.
inline double weighted_information_gap(const Matrix& W, const Matrix& S, const SteadyState& ss,
                                       const SystemModel& model) {
  const SteadyDeltas d = steady_deltas(ss, S, model);
  return (W * (d.full - d.reduced)).trace();
}

namespace detail {

inline OptimalParams design_stable(const DesignBudget& budget, const SystemModel& model, const Tolerances& tol) {
  budget.validate(model.m());
  const double rho = spectral_radius(model.A);
  if (rho >= 1.0) throw UnstableOperator("stable-case design needs rho(A) < 1, got " + std::to_string(rho));

  const SteadyState ss = steady_state(model, tol);
  const Eigen::Index m = model.m();
  OptimalParams out;
  out.W = observability_weight(model.A, tol);
  const Matrix PCt = ss.P_minus * model.C.transpose();
  const Matrix left = PCt.transpose() * out.W * PCt;
  const Matrix right = model.C * PCt + model.R;
  const GeneralizedEigen ge = generalized_symmetric_eigen(left, right);
  out.generalized_eigenvalues = ge.values;
  out.generalized_eigenvectors = ge.vectors;

  const double base = ss.P_plus.trace();
  int best = 0;
  for (int a = 1; a <= budget.mu_inst; ++a) {
    const double freq = std::min(budget.mu_total / a, 1.0);
    const Matrix S = ge.vectors.leftCols(m - a).transpose();
    const double objective = base + freq * weighted_information_gap(out.W, S, ss, model);
    out.candidates.push_back({a, freq, objective});
    if (best == 0 || objective > out.candidates[best - 1].objective) best = a;
  }
  const DesignCandidate& winner = out.candidates[best - 1];
  out.m_bar = winner.m_bar;
  out.frequency = winner.frequency;
  out.objective = winner.objective;
  out.S_opt = ge.vectors.leftCols(m - best).transpose();
  return out;
}

/// Best rational approximation p/q of x in [0, 1] with q <= max_den, from the
/// continued-fraction convergents and semiconvergents.
inline std::pair<std::uint64_t, std::uint64_t> rational_approximation(double x, std::uint64_t max_den) {
  if (x <= 0.0) return {0, 1};
  if (x >= 1.0) return {1, 1};
  std::uint64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double r = x;
  for (int guard = 0; guard < 64; ++guard) {
    const double a_real = std::floor(r);
    const auto a = static_cast<std::uint64_t>(a_real);
    const std::uint64_t q2 = a * q1 + q0;
    if (q2 > max_den) {
      // largest semiconvergent that still fits
      const std::uint64_t t = (max_den - q0) / q1;
      const std::uint64_t ps = t * p1 + p0, qs = t * q1 + q0;
      const double err_semi = std::abs(x - static_cast<double>(ps) / static_cast<double>(qs));
      const double err_conv = std::abs(x - static_cast<double>(p1) / static_cast<double>(q1));
      return err_semi < err_conv ? std::pair{ps, qs} : std::pair{p1, q1};
    }
    const std::uint64_t p2 = a * p1 + p0;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    const double frac = r - a_real;
    if (std::abs(x - static_cast<double>(p1) / static_cast<double>(q1)) <= 1e-15 || frac < 1e-15) break;
    r = 1.0 / frac;
  }
  const std::uint64_t g = std::gcd(p1, q1);
  return {p1 / g, q1 / g};
}

}  // namespace detail

inline EncryptionPartition OptimalParams::partition() const {
  // S_bar spans the directions that are encrypted: the a largest eigenvectors.
  const Matrix S_bar = generalized_eigenvectors.rightCols(m_bar).transpose();
  return make_partition(S_bar, S_opt);
}

inline OptimalParams design_stable_stochastic(const DesignBudget& budget, const SystemModel& model,
                                              const Tolerances& tol = {}) {
  return detail::design_stable(budget, model, tol);
}

struct DeterministicDesign {
  OptimalParams params;
  std::vector<std::uint8_t> f_bits;  ///< one period, evenly spread ones
  std::uint64_t ones = 0;            ///< |f|
  std::uint64_t period = 0;          ///< L

  double realized_frequency() const { return static_cast<double>(ones) / static_cast<double>(period); }
};

/// Periodic decision function with |f| = ones and period L, the ones placed at
/// slots floor(i L / |f|), i = 0..|f|-1.
inline std::vector<std::uint8_t> spread_decision_bits(std::uint64_t ones, std::uint64_t period) {
  if (period < 1 || ones > period) throw InvalidArgument("spread_decision_bits: need 0 <= |f| <= L, L >= 1");
  std::vector<std::uint8_t> bits(period, 0);
  for (std::uint64_t i = 0; i < ones; ++i) bits[(i * period) / ones] = 1;
  return bits;
}

inline DeterministicDesign design_stable_deterministic(const DesignBudget& budget, const SystemModel& model,
                                                       const Tolerances& tol = {}) {
  DeterministicDesign out;
  out.params = detail::design_stable(budget, model, tol);
  const auto [p, q] = detail::rational_approximation(out.params.frequency, 1'000'000);
  out.ones = p;
  out.period = q;
  out.f_bits = spread_decision_bits(p, q);
  return out;
}

// ---------------------------------------------------------------------------
// Unstable-case encryption matrix.

struct UnstableDesign {
  ComplexVector w;               ///< eigenvector of A^T, normalized, largest entry real positive
  std::complex<double> lambda;   ///< its eigenvalue, |lambda| >= 1
  Vector v;                      ///< Re(w^H K^s), or Im(...) when the real part vanishes
  bool used_imaginary = false;
  Matrix S_bar;                  ///< 1 x m, v / |v|
  Matrix S;                      ///< (m - 1) x m orthonormal complement of v

  EncryptionPartition partition() const { return make_partition(S_bar, S); }
};

/// Builds S~ = [S_bar; S] from a left eigenvector w and steady-state gain K:
/// S_bar spans Re(w^H K) (Im when the real part is zero) and S spans its
/// orthogonal complement.
inline UnstableDesign unstable_design_from(const ComplexVector& w, std::complex<double> lambda, const Matrix& K) {
  if (w.size() != K.rows()) throw InvalidArgument("unstable_design_from: w must have n entries");
  const Eigen::Index m = K.cols();
  const Eigen::RowVectorXcd wK = w.adjoint() * K.cast<std::complex<double>>();
  const double scale = wK.norm();
  if (!(scale > 1e-12 * std::max(1.0, w.norm() * K.norm()))) {
    throw ModelInconsistency("w^H K^s vanishes; (A, B) cannot be stabilizable");
  }
  UnstableDesign out;
  out.w = w;
  out.lambda = lambda;
  Vector re = wK.real().transpose();
  Vector im = wK.imag().transpose();
  if (re.norm() > 1e-10 * scale) {
    out.v = re;
  } else {
    out.v = im;
    out.used_imaginary = true;
  }
  const Vector unit = out.v / out.v.norm();
  out.S_bar = unit.transpose();
  // Householder QR of the column v: Q's first column is +-unit, the rest span
  // its orthogonal complement.
  Eigen::HouseholderQR<Matrix> qr(unit);
  const Matrix Q = qr.householderQ() * Matrix::Identity(m, m);
  out.S = Q.rightCols(m - 1).transpose();
  return out;
}

inline UnstableDesign design_unstable(const SystemModel& model, const Tolerances& tol = {}) {
  Eigen::EigenSolver<Matrix> es(model.A.transpose());
  if (es.info() != Eigen::Success) throw NumericalFailure("design_unstable: eigensolver failed");
  const ComplexVector eig = es.eigenvalues();
  Eigen::Index pick = 0;
  for (Eigen::Index i = 1; i < eig.size(); ++i) {
    if (std::abs(eig(i)) > std::abs(eig(pick)) + 1e-12) pick = i;
  }
  if (std::abs(eig(pick)) < 1.0) {
    throw NotApplicable("design_unstable: rho(A) = " + std::to_string(std::abs(eig(pick))) + " < 1");
  }
  ComplexVector w = es.eigenvectors().col(pick);
  Eigen::Index big = 0;
  w.cwiseAbs().maxCoeff(&big);
  w *= std::abs(w(big)) / w(big);
  w.normalize();
  const SteadyState ss = steady_state(model, tol);
  return unstable_design_from(w, eig(pick), ss.K_inf);
}

// ---------------------------------------------------------------------------
// Single strategy: encrypt only step delta with S = 0. Then
//   P_{k|k} = P^s_{k|k} + A^{k-delta} Delta(I, delta) (A^{k-delta})^T,  k >= delta,
// which is unbounded when some unstable eigenvector u of A^T has
// C P^s_{delta|delta-1} u != 0. The PBH detectability of
// (C P^s_{delta|delta-1}, A^T) certifies that for every unstable mode.

enum class SpectralCase { Stable, Rho1, Unstable };
enum class Unboundedness { No, Yes, Inconclusive };

inline const char* to_string(SpectralCase c) {
  switch (c) {
    case SpectralCase::Stable: return "stable";
    case SpectralCase::Rho1: return "rho1";
    case SpectralCase::Unstable: return "unstable";
  }
  return "?";
}

inline const char* to_string(Unboundedness u) {
  switch (u) {
    case Unboundedness::No: return "no";
    case Unboundedness::Yes: return "yes";
    case Unboundedness::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct SingleStrategyVerdict {
  SpectralCase spectral_case = SpectralCase::Stable;
  Unboundedness unbounded = Unboundedness::Inconclusive;
  double rho = 0.0;
  std::vector<std::complex<double>> failing_modes;  ///< unstable eigenvalues failing the PBH test
};

inline constexpr double kUnitCircleBand = 1e-7;

/// P^s_{delta|delta-1} of the sensor filter started at P0.
inline Matrix sensor_prediction_at(std::size_t delta_step, const SystemModel& model) {
  if (delta_step < 1) throw InvalidArgument("delta must be >= 1");
  return sensor_covariances(model, delta_step).P_pred[delta_step];
}

inline SingleStrategyVerdict single_strategy_check(std::size_t delta_step, const SystemModel& model,
                                                   const Tolerances& tol = {}) {
  SingleStrategyVerdict out;
  const ComplexVector eig = eigenvalues(model.A);
  out.rho = eig.cwiseAbs().maxCoeff();
  const Eigen::Index n = model.n();

  if (out.rho < 1.0 - kUnitCircleBand) {
    out.spectral_case = SpectralCase::Stable;
    out.unbounded = Unboundedness::No;
    return out;
  }
  if (out.rho <= 1.0 + kUnitCircleBand) {
    // Bounded when every unit-circle eigenvalue is semisimple; otherwise the
    // available result is only a necessary condition.
    out.spectral_case = SpectralCase::Rho1;
    out.unbounded = Unboundedness::No;
    for (Eigen::Index i = 0; i < eig.size(); ++i) {
      if (std::abs(std::abs(eig(i)) - 1.0) > kUnitCircleBand) continue;
      int algebraic = 0;
      for (Eigen::Index j = 0; j < eig.size(); ++j) {
        if (std::abs(eig(j) - eig(i)) <= 1e-6) ++algebraic;
      }
      const ComplexMatrix shifted = eig(i) * ComplexMatrix::Identity(n, n) - model.A.cast<std::complex<double>>();
      const int geometric = static_cast<int>(n) - rank_tol(shifted, 1e-8);
      if (geometric < algebraic) {
        out.unbounded = Unboundedness::Inconclusive;
        break;
      }
    }
    return out;
  }

  out.spectral_case = SpectralCase::Unstable;
  const Matrix H = model.C * sensor_prediction_at(delta_step, model);
  const Matrix At = model.A.transpose();
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    if (std::abs(eig(i)) <= 1.0 + kUnitCircleBand) continue;
    ComplexMatrix pbh(n + H.rows(), n);
    pbh.topRows(n) = eig(i) * ComplexMatrix::Identity(n, n) - At.cast<std::complex<double>>();
    pbh.bottomRows(H.rows()) = H.cast<std::complex<double>>();
    if (rank_tol(pbh, tol.rank_eps) < n) out.failing_modes.push_back(eig(i));
  }
  out.unbounded = out.failing_modes.empty() ? Unboundedness::Yes : Unboundedness::Inconclusive;
  return out;
}

/// A feasible point (Y > 0, Z) of
///   [ Y                 Y A^T - Z C P    Y ]
///   [ (Y A^T - Z C P)^T Y                0 ]  >= 0,   P = P^s_{delta|delta-1},
///   [ Y                 0                I ]
/// built from an observer gain for the pair (C P, A^T).
struct LmiCertificate {
  Matrix Y;
  Matrix Z;
  Matrix lmi;                  ///< the assembled 3n x 3n matrix
  double min_eigenvalue = 0.0;
};

inline Matrix single_strategy_lmi(const Matrix& Y, const Matrix& Z, const Matrix& A, const Matrix& H) {
  const Eigen::Index n = A.rows();
  Matrix lmi = Matrix::Zero(3 * n, 3 * n);
  const Matrix off = Y * A.transpose() - Z * H;
  lmi.block(0, 0, n, n) = Y;
  lmi.block(0, n, n, n) = off;
  lmi.block(0, 2 * n, n, n) = Y;
  lmi.block(n, 0, n, n) = off.transpose();
  lmi.block(n, n, n, n) = Y;
  lmi.block(2 * n, 0, n, n) = Y;
  lmi.block(2 * n, 2 * n, n, n) = Matrix::Identity(n, n);
  return lmi;
}

/// Returns a certificate when (C P^s_{delta|delta-1}, A^T) is detectable.
inline std::optional<LmiCertificate> single_strategy_certificate(std::size_t delta_step, const SystemModel& model,
                                                                 const Tolerances& tol = {}) {
  const Matrix H = model.C * sensor_prediction_at(delta_step, model);
  const Matrix F = model.A.transpose();
  const Eigen::Index n = model.n();
  if (!is_detectable(H, F, tol.rank_eps)) return std::nullopt;

  // Predictor gain of the dual filtering problem makes F - K H Schur stable.
  SystemModel dual{F, Matrix::Identity(n, n), H, Matrix::Identity(n, n),
                   Matrix::Identity(H.rows(), H.rows()), Vector::Zero(n), Matrix::Zero(n, n)};
  const SteadyState ss = steady_state(dual, tol);
  const Matrix K = F * ss.K_inf;
  const Matrix closed = F - K * H;
  const Matrix X = solve_dlyap(closed, 2.0 * Matrix::Identity(n, n), tol);

  LmiCertificate cert;
  cert.Y = symmetrize(X.inverse());
  cert.Z = cert.Y * K;
  cert.lmi = symmetrize(single_strategy_lmi(cert.Y, cert.Z, model.A, H));
  cert.min_eigenvalue = min_eigenvalue(cert.lmi);
  return cert;
}

// ---------------------------------------------------------------------------
// Rounding error: the user applies (I + Theta) eps_k, so its estimate drifts
// by e_k = A e_{k-1} + K^s_k Theta eps_k.

struct RoundingModel {
  Matrix Theta;
  std::vector<Matrix> e_cov;        ///< Cov(e_k), k = 0..T
  std::vector<double> e_cov_trace;  ///< trace of each
  std::optional<Matrix> limit;      ///< when rho(A) < 1
};

inline RoundingModel rounding_cov(const Matrix& Theta, const SystemModel& model, std::size_t horizon,
                                  const Tolerances& tol = {}) {
  if (Theta.rows() != model.m() || Theta.cols() != model.m()) throw InvalidArgument("rounding_cov: Theta must be m x m");
  const SensorCovariances sensor = sensor_covariances(model, horizon);
  RoundingModel out;
  out.Theta = Theta;
  out.e_cov.reserve(horizon + 1);
  out.e_cov.push_back(Matrix::Zero(model.n(), model.n()));
  out.e_cov_trace.push_back(0.0);
  for (std::size_t k = 1; k <= horizon; ++k) {
    const Matrix innovation_cov = model.C * sensor.P_pred[k] * model.C.transpose() + model.R;
    const Matrix KT = sensor.K[k] * Theta;
    out.e_cov.push_back(
        symmetrize(model.A * out.e_cov.back() * model.A.transpose() + KT * innovation_cov * KT.transpose()));
    out.e_cov_trace.push_back(out.e_cov.back().trace());
  }
  if (spectral_radius(model.A) < 1.0) {
    const SteadyState ss = steady_state(model, tol);
    const Matrix KT = ss.K_inf * Theta;
    const Matrix forcing = KT * (model.C * ss.P_minus * model.C.transpose() + model.R) * KT.transpose();
    out.limit = solve_dlyap(model.A, symmetrize(forcing), tol);
  }
  return out;
}

}  // namespace covert_kalman

#endif  // COVERT_KALMAN_DESIGN_HPP
