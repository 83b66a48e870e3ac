#ifndef COVERT_KALMAN_RANDOM_HPP
#define COVERT_KALMAN_RANDOM_HPP

// Seeding and sampling helpers. Streams are std::mt19937_64; seeds for
// independent streams are derived with SplitMix64 so that (base, index)
// pairs never collide in practice.

#include <cstdint>
#include <initializer_list>
#include <random>

#include "covert_kalman/numerics.hpp"

namespace covert_kalman {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Mixes a base seed with any number of stream labels.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> labels) {
  std::uint64_t h = splitmix64(base);
  for (std::uint64_t label : labels) h = splitmix64(h ^ splitmix64(label + 0x632be59bd9b4e019ULL));
  return h;
}

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Standard normal via Box-Muller on uniform01 draws (no cached second value,
/// so a stream's output depends only on how many draws were taken).
inline double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925 * u2);
}

inline Vector standard_normal_vector(Rng& rng, Eigen::Index size) {
  Vector v(size);
  for (Eigen::Index i = 0; i < size; ++i) v(i) = standard_normal(rng);
  return v;
}

/// A matrix F with F F^T = cov, valid for PSD (possibly singular) cov.
inline Matrix covariance_factor(const Matrix& cov) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(cov));
  if (es.info() != Eigen::Success) throw NumericalFailure("covariance_factor: eigensolver failed");
  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal();
}

}  // namespace covert_kalman

#endif  // COVERT_KALMAN_RANDOM_HPP
