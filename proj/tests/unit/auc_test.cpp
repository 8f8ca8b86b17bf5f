#include <gtest/gtest.h>

#include "trojanscan/auc.hpp"
#include "trojanscan/errors.hpp"
#include "trojanscan/rng.hpp"

namespace trojanscan {
namespace {

double pair_count_auc(const std::vector<double>& pos, const std::vector<double>& neg) {
  double wins = 0.0;
  for (double p : pos) {
    for (double n : neg) wins += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
  }
  return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

TEST(Auc, KnownValues) {
  EXPECT_EQ(compute_auc(std::vector<double>{2, 3}, std::vector<double>{0, 1}), 1.0);
  EXPECT_EQ(compute_auc(std::vector<double>{1, 2}, std::vector<double>{1, 3}), 0.375);
  EXPECT_EQ(compute_auc(std::vector<double>{4, 1, 1}, std::vector<double>{1, 4, 1}), 0.5);
  EXPECT_EQ(compute_auc(std::vector<double>{0}, std::vector<double>{5}), 0.0);
}

TEST(Auc, EmptyInputsRejected) {
  EXPECT_THROW((void)compute_auc(std::vector<double>{}, std::vector<double>{1}), InputError);
  EXPECT_THROW((void)compute_auc(std::vector<double>{1}, std::vector<double>{}), InputError);
}

TEST(Auc, MatchesPairCountingWithTies) {
  Rng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> pos(static_cast<std::size_t>(rng.uniform_int(1, 12)));
    std::vector<double> neg(static_cast<std::size_t>(rng.uniform_int(1, 12)));
    for (auto& v : pos) v = static_cast<double>(rng.uniform_int(0, 5));
    for (auto& v : neg) v = static_cast<double>(rng.uniform_int(0, 5));
    EXPECT_EQ(compute_auc(pos, neg), pair_count_auc(pos, neg));
  }
}

TEST(Auc, SwappingClassesComplements) {
  Rng rng(18);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(7), b(5);
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = std::round(rng.normal() * 2.0) / 2.0;
    EXPECT_DOUBLE_EQ(compute_auc(a, b) + compute_auc(b, a), 1.0);
  }
}

TEST(Auc, InvariantUnderIncreasingTransform) {
  Rng rng(19);
  std::vector<double> a(9), b(11);
  for (auto& v : a) v = rng.normal();
  for (auto& v : b) v = rng.normal();
  auto ta = a, tb = b;
  for (auto& v : ta) v = std::exp(3.0 * v) + 1.0;
  for (auto& v : tb) v = std::exp(3.0 * v) + 1.0;
  EXPECT_EQ(compute_auc(a, b), compute_auc(ta, tb));
}

TEST(DetectionReport, FromRowsSplitsByLabel) {
  const auto r = DetectionReport::from_rows({{"a", 0, 0.1}, {"b", 1, 0.7}, {"c", 1, -0.2}, {"d", 0, 0.3}}, 0.0);
  EXPECT_EQ(r.scores_benign, (std::vector<double>{0.1, 0.3}));
  EXPECT_EQ(r.scores_trojan, (std::vector<double>{0.7, -0.2}));
  EXPECT_EQ(r.auc, compute_auc(r.scores_trojan, r.scores_benign));
  EXPECT_EQ(r.rows.size(), 4u);
}

}  // namespace
}  // namespace trojanscan
