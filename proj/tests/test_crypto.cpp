#include <gtest/gtest.h>

#include <random>

#include "covert_kalman/crypto.hpp"
#include "oracles.hpp"

using namespace covert_kalman;

namespace {

Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
  Matrix M(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : r) {
    Eigen::Index j = 0;
    for (double v : row) M(i, j++) = v;
    ++i;
  }
  return M;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST(MakePartition, IdentitySplit) {
  const EncryptionPartition p = make_partition(rows({{1, 0}}), rows({{0, 1}}));
  EXPECT_EQ(p.m(), 2);
  EXPECT_EQ(p.m_bar(), 1);
  EXPECT_FALSE(p.full_encryption());
  EXPECT_DOUBLE_EQ(p.condition_number(), 1.0);
}

TEST(MakePartition, DuplicatedRowIsSingular) {
  EXPECT_THROW(make_partition(rows({{1, 0}}), rows({{1, 0}})), InvalidPartition);
}

TEST(MakePartition, RowCountsMustSumToM) {
  EXPECT_THROW(make_partition(rows({{1, 0, 0}}), rows({{0, 1, 0}})), InvalidPartition);
}

TEST(MakePartition, ZeroSentinel) {
  const EncryptionPartition a = make_partition(Matrix::Identity(2, 2), Matrix(0, 2));
  EXPECT_TRUE(a.full_encryption());
  EXPECT_EQ(a.m_bar(), 2);
  const EncryptionPartition b = make_partition(Matrix::Identity(2, 2), Matrix::Zero(1, 2));
  EXPECT_TRUE(b.full_encryption());
  EXPECT_EQ(b.S().rows(), 0);
  EXPECT_TRUE(EncryptionPartition::full(3).full_encryption());
}

TEST(MakePartition, IllConditionedFlag) {
  const EncryptionPartition p = make_partition(rows({{1, 0}}), rows({{1, 1e-9}}));
  EXPECT_TRUE(p.ill_conditioned());
}

TEST(Encrypt, CiphertextDimensionMatchesMBar) {
  std::mt19937_64 rng(31);
  const Eigen::Index m = 4;
  for (Eigen::Index mbar = 1; mbar <= m; ++mbar) {
    const Matrix St = oracle::gaussian(rng, m, m);
    const EncryptionPartition p = make_partition(St.topRows(mbar), St.bottomRows(m - mbar));
    const EncryptedInnovation e = encrypt(oracle::gaussian(rng, m, 1).col(0), p, CipherKey{5}, 3);
    EXPECT_EQ(e.xi.size(), mbar);
    EXPECT_EQ(e.plain_part.size(), m - mbar);
  }
}

TEST(Encrypt, RoundTripOnRandomPartitionsAndInnovations) {
  std::mt19937_64 rng(32);
  for (int part_trial = 0; part_trial < 10; ++part_trial) {
    const Eigen::Index m = 2 + part_trial % 3;
    const Eigen::Index mbar = 1 + part_trial % m;
    const Matrix St = oracle::gaussian(rng, m, m);
    const EncryptionPartition p = make_partition(St.topRows(mbar), St.bottomRows(m - mbar));
    const CipherKey key{rng()};
    for (int i = 0; i < 100; ++i) {
      const Vector eps = oracle::gaussian(rng, m, 1).col(0);
      const ChannelMessage msg = make_message(eps, true, p, key, static_cast<std::uint64_t>(i + 1));
      EXPECT_LE((decrypt(msg, p, key) - eps).norm(), 1e-10 * (1.0 + eps.norm()));
    }
  }
}

TEST(Encrypt, SameKeySameCiphertext) {
  const EncryptionPartition p = make_partition(rows({{1, 2}}), rows({{0, 1}}));
  const Vector eps = vec({0.3, -1.2});
  EXPECT_EQ(encrypt(eps, p, CipherKey{77}, 9).xi, encrypt(eps, p, CipherKey{77}, 9).xi);
  EXPECT_NE(encrypt(eps, p, CipherKey{77}, 9).xi, encrypt(eps, p, CipherKey{77}, 10).xi);
}

TEST(Decrypt, WrongKeyFails) {
  std::mt19937_64 rng(33);
  const EncryptionPartition p = make_partition(rows({{1, 0}}), rows({{0, 1}}));
  const CipherKey key{1234};
  for (int i = 0; i < 100; ++i) {
    const Vector eps = oracle::gaussian(rng, 2, 1).col(0);
    CipherKey other{rng()};
    if (other.kappa == key.kappa) ++other.kappa;
    const ChannelMessage msg = make_message(eps, true, p, key, 1);
    EXPECT_GT((decrypt(msg, p, other) - eps).norm(), 0.0);
  }
}

TEST(Decrypt, PassThroughAndFullEncryption) {
  const Vector eps = vec({1.5, -0.5});
  const EncryptionPartition split = make_partition(rows({{1, 0}}), rows({{0, 1}}));
  EXPECT_EQ(decrypt(make_message(eps, false, split, CipherKey{1}, 1), split, CipherKey{1}), eps);
  EXPECT_LE((decrypt(make_message(eps, true, split, CipherKey{1}, 1), split, CipherKey{1}) - eps).norm(), 1e-12);

  const EncryptionPartition full = EncryptionPartition::full(2);
  const ChannelMessage msg = make_message(eps, true, full, CipherKey{1}, 1);
  EXPECT_EQ(msg.plain_part->size(), 0);
  EXPECT_LE((decrypt(msg, full, CipherKey{1}) - eps).norm(), 1e-12);
}

TEST(Decrypt, MalformedMessages) {
  const EncryptionPartition p = make_partition(rows({{1, 0}}), rows({{0, 1}}));
  ChannelMessage msg;
  msg.varsigma = false;
  EXPECT_THROW(decrypt(msg, p, CipherKey{}), MalformedMessage);
  msg.varsigma = true;
  EXPECT_THROW(decrypt(msg, p, CipherKey{}), MalformedMessage);
  msg.ciphertext = vec({1.0, 2.0});
  msg.plain_part = vec({1.0});
  EXPECT_THROW(decrypt(msg, p, CipherKey{}), MalformedMessage);
  msg.ciphertext = vec({1.0});
  msg.plain_part.reset();
  EXPECT_THROW(decrypt(msg, p, CipherKey{}), MalformedMessage);
}

TEST(EavesdropperView, ThreeCases) {
  const Vector eps = vec({1.5, -0.5});
  const EncryptionPartition split = make_partition(rows({{1, 0}}), rows({{0, 1}}));
  const EavesdropperView clear = eavesdropper_view(make_message(eps, false, split, CipherKey{1}, 1), split);
  EXPECT_FALSE(clear.varsigma);
  EXPECT_EQ(clear.y, eps);
  const EavesdropperView part = eavesdropper_view(make_message(eps, true, split, CipherKey{1}, 1), split);
  ASSERT_EQ(part.y.size(), 1);
  EXPECT_DOUBLE_EQ(part.y(0), -0.5);
  const EncryptionPartition full = EncryptionPartition::full(2);
  EXPECT_EQ(eavesdropper_view(make_message(eps, true, full, CipherKey{1}, 1), full).y.size(), 0);
}

TEST(EavesdropperView, IndependentOfKey) {
  std::mt19937_64 rng(34);
  const Matrix St = oracle::gaussian(rng, 3, 3);
  const EncryptionPartition p = make_partition(St.topRows(1), St.bottomRows(2));
  for (int i = 0; i < 20; ++i) {
    const Vector eps = oracle::gaussian(rng, 3, 1).col(0);
    for (bool flag : {false, true}) {
      const auto a = eavesdropper_view(make_message(eps, flag, p, CipherKey{1}, 4), p);
      const auto b = eavesdropper_view(make_message(eps, flag, p, CipherKey{2}, 4), p);
      EXPECT_EQ(a.y, b.y);
    }
  }
}

TEST(MessageJson, RoundTripAndOmittedFields) {
  const EncryptionPartition p = make_partition(rows({{1, 0}}), rows({{0, 1}}));
  const ChannelMessage enc = make_message(vec({0.25, -3.0}), true, p, CipherKey{8}, 12);
  const nlohmann::json j = message_to_json(enc);
  EXPECT_EQ(j.at("k"), 12);
  EXPECT_EQ(j.at("varsigma"), 1);
  EXPECT_TRUE(j.contains("xi"));
  const ChannelMessage back = message_from_json(j);
  EXPECT_EQ(*back.ciphertext, *enc.ciphertext);
  EXPECT_EQ(*back.plain_part, *enc.plain_part);

  const EncryptionPartition full = EncryptionPartition::full(2);
  const nlohmann::json jf = message_to_json(make_message(vec({1.0, 2.0}), true, full, CipherKey{8}, 1));
  EXPECT_FALSE(jf.contains("y"));
  const nlohmann::json jc = message_to_json(make_message(vec({1.0, 2.0}), false, full, CipherKey{8}, 1));
  EXPECT_FALSE(jc.contains("xi"));
  EXPECT_EQ(decrypt(message_from_json(jc), full, CipherKey{8}), vec({1.0, 2.0}));
  EXPECT_THROW(message_from_json(nlohmann::json::object()), MalformedMessage);
}
