#ifndef COVERT_KALMAN_CRYPTO_HPP
#define COVERT_KALMAN_CRYPTO_HPP

// Linear encryption of the innovation: the sensor multiplies epsilon_k by a
// non-singular S~ = [S_bar; S], encrypts the S_bar block with a keyed cipher
// and sends the S block in the clear. When S_bar has all m rows the plaintext
// block is the empty "S = 0" sentinel.
//
// The cipher itself is a stand-in: it adds a pseudorandom mask drawn from a
// generator seeded by (kappa, k). It is invertible with the key and keeps the
// ciphertext dimension equal to the plaintext dimension, which is all the
// estimation side depends on. It offers no real secrecy.

#include <cstdint>
#include <optional>
#include <utility>

#include "json.hpp"

#include "covert_kalman/numerics.hpp"
#include "covert_kalman/random.hpp"

namespace covert_kalman {

class EncryptionPartition {
 public:
  /// Validates [S_bar; S] and precomputes its inverse. `S` with zero rows is
  /// the S = 0 sentinel; an all-zero S alongside a square S_bar is read the
  /// same way.
  static EncryptionPartition make(const Matrix& S_bar, const Matrix& S, double rank_eps = Tolerances{}.rank_eps) {
    const Eigen::Index m = S_bar.cols();
    if (m < 1 || S_bar.rows() < 1) throw InvalidPartition("S_bar must have at least one row and one column");
    if (S_bar.rows() > m) throw InvalidPartition("S_bar has more rows than columns");
    const bool sentinel = S.rows() == 0 || (S_bar.rows() == m && S.size() > 0 && S.isZero(0.0));
    if (!sentinel && S.cols() != m) throw InvalidPartition("S_bar and S must have the same number of columns");
    const Eigen::Index plain_rows = sentinel ? 0 : S.rows();
    if (S_bar.rows() + plain_rows != m) {
      throw InvalidPartition("row counts of S_bar and S must sum to m = " + std::to_string(m));
    }
    if (!all_finite(S_bar) || (!sentinel && !all_finite(S))) throw InvalidPartition("non-finite entries");

    EncryptionPartition part;
    part.S_bar_ = S_bar;
    part.S_ = sentinel ? Matrix(0, m) : S;
    part.S_tilde_.resize(m, m);
    part.S_tilde_.topRows(S_bar.rows()) = S_bar;
    if (plain_rows > 0) part.S_tilde_.bottomRows(plain_rows) = part.S_;
    if (rank_tol(part.S_tilde_, rank_eps) != m) throw InvalidPartition("stacked matrix [S_bar; S] is singular");

    Eigen::JacobiSVD<Matrix> svd(part.S_tilde_);
    const auto& sv = svd.singularValues();
    part.condition_ = sv(0) / sv(sv.size() - 1);
    part.S_tilde_inv_ = part.S_tilde_.partialPivLu().inverse();
    return part;
  }

  /// S_bar = I_m, S = 0: the whole innovation is encrypted.
  static EncryptionPartition full(Eigen::Index m) { return make(Matrix::Identity(m, m), Matrix(0, m)); }

  const Matrix& S_bar() const { return S_bar_; }
  /// Plaintext block; zero rows for the S = 0 sentinel.
  const Matrix& S() const { return S_; }
  const Matrix& S_tilde() const { return S_tilde_; }
  const Matrix& S_tilde_inverse() const { return S_tilde_inv_; }
  Eigen::Index m() const { return S_bar_.cols(); }
  Eigen::Index m_bar() const { return S_bar_.rows(); }
  bool full_encryption() const { return S_.rows() == 0; }
  double condition_number() const { return condition_; }
  /// Large condition numbers make the user's inversion of S~ lossy.
  bool ill_conditioned() const { return condition_ > 1e8; }

 private:
  EncryptionPartition() = default;

  Matrix S_bar_;
  Matrix S_;
  Matrix S_tilde_;
  Matrix S_tilde_inv_;
  double condition_ = 1.0;
};

inline EncryptionPartition make_partition(const Matrix& S_bar, const Matrix& S,
                                          double rank_eps = Tolerances{}.rank_eps) {
  return EncryptionPartition::make(S_bar, S, rank_eps);
}

struct CipherKey {
  std::uint64_t kappa = 0;
};

/// Keyed mask for time step k; reproducible for the same (key, k, dim).
inline Vector cipher_mask(const CipherKey& key, std::uint64_t k, Eigen::Index dim) {
  Rng rng(derive_seed(key.kappa, {k, static_cast<std::uint64_t>(dim)}));
  return 4.0 * standard_normal_vector(rng, dim);
}

struct EncryptedInnovation {
  Vector xi;          ///< ciphertext, m_bar entries
  Vector plain_part;  ///< S * eps, m - m_bar entries (empty when S = 0)
};

inline EncryptedInnovation encrypt(const Vector& eps, const EncryptionPartition& part, const CipherKey& key,
                                   std::uint64_t k) {
  if (eps.size() != part.m()) throw InvalidArgument("encrypt: innovation has wrong dimension");
  return {part.S_bar() * eps + cipher_mask(key, k, part.m_bar()), part.S() * eps};
}

/// What goes on the channel at step k. With varsigma = 0 only plain_full is
/// set; with varsigma = 1 only ciphertext and plain_part are.
struct ChannelMessage {
  std::uint64_t k = 0;
  bool varsigma = false;
  std::optional<Vector> ciphertext;
  std::optional<Vector> plain_part;
  std::optional<Vector> plain_full;
};

inline ChannelMessage make_message(const Vector& eps, bool varsigma, const EncryptionPartition& part,
                                   const CipherKey& key, std::uint64_t k) {
  ChannelMessage msg;
  msg.k = k;
  msg.varsigma = varsigma;
  if (varsigma) {
    EncryptedInnovation enc = encrypt(eps, part, key, k);
    msg.ciphertext = std::move(enc.xi);
    msg.plain_part = std::move(enc.plain_part);
  } else {
    if (eps.size() != part.m()) throw InvalidArgument("make_message: innovation has wrong dimension");
    msg.plain_full = eps;
  }
  return msg;
}

/// Recovers epsilon_k: strips the mask from xi, stacks [S_bar eps; S eps] and
/// applies the stored inverse of S~.
inline Vector decrypt(const ChannelMessage& msg, const EncryptionPartition& part, const CipherKey& key) {
  if (!msg.varsigma) {
    if (!msg.plain_full || msg.ciphertext || msg.plain_part) {
      throw MalformedMessage("unencrypted message must carry exactly the full innovation");
    }
    if (msg.plain_full->size() != part.m()) throw MalformedMessage("plain innovation has wrong dimension");
    return *msg.plain_full;
  }
  if (!msg.ciphertext || msg.plain_full) throw MalformedMessage("encrypted message must carry a ciphertext only");
  if (msg.ciphertext->size() != part.m_bar()) throw MalformedMessage("ciphertext has wrong dimension");
  const Eigen::Index plain_rows = part.m() - part.m_bar();
  const Eigen::Index got = msg.plain_part ? msg.plain_part->size() : 0;
  if (got != plain_rows) throw MalformedMessage("plaintext part has wrong dimension");

  Vector stacked(part.m());
  stacked.head(part.m_bar()) = *msg.ciphertext - cipher_mask(key, msg.k, part.m_bar());
  if (plain_rows > 0) stacked.tail(plain_rows) = *msg.plain_part;
  return part.S_tilde_inverse() * stacked;
}

/// The eavesdropper's information at step k: the flag and y_k, which is
/// eps_k when unencrypted, S eps_k when encrypted, and empty when S = 0.
struct EavesdropperView {
  bool varsigma = false;
  Vector y;
};

inline EavesdropperView eavesdropper_view(const ChannelMessage& msg, const EncryptionPartition& part) {
  if (!msg.varsigma) {
    if (!msg.plain_full) throw MalformedMessage("unencrypted message without innovation");
    return {false, *msg.plain_full};
  }
  if (part.full_encryption() || !msg.plain_part) return {true, Vector(0)};
  return {true, *msg.plain_part};
}

namespace detail {

inline nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Vector vector_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw MalformedMessage("expected a numeric array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw MalformedMessage("expected a numeric array");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

}  // namespace detail

/// {k, varsigma, y:[...], xi:[...]}; y is the clear-text innovation (full or
/// S eps), absent fields are omitted.
inline nlohmann::json message_to_json(const ChannelMessage& msg) {
  nlohmann::json j;
  j["k"] = msg.k;
  j["varsigma"] = msg.varsigma ? 1 : 0;
  const std::optional<Vector>& y = msg.varsigma ? msg.plain_part : msg.plain_full;
  if (y && y->size() > 0) j["y"] = detail::vector_to_json(*y);
  if (msg.ciphertext) j["xi"] = detail::vector_to_json(*msg.ciphertext);
  return j;
}

inline ChannelMessage message_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("k") || !j.contains("varsigma")) {
    throw MalformedMessage("message needs fields k and varsigma");
  }
  ChannelMessage msg;
  msg.k = j.at("k").get<std::uint64_t>();
  msg.varsigma = j.at("varsigma").get<int>() != 0;
  if (msg.varsigma) {
    msg.plain_part = j.contains("y") ? detail::vector_from_json(j.at("y")) : Vector(0);
    if (j.contains("xi")) msg.ciphertext = detail::vector_from_json(j.at("xi"));
  } else {
    if (j.contains("y")) msg.plain_full = detail::vector_from_json(j.at("y"));
    if (j.contains("xi")) msg.ciphertext = detail::vector_from_json(j.at("xi"));
  }
  return msg;
}

}  // namespace covert_kalman

#endif  // COVERT_KALMAN_CRYPTO_HPP
