#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "trojanscan/errors.hpp"
#include "trojanscan/loss.hpp"

namespace trojanscan {
namespace {

using fixtures::central_difference;
using fixtures::random_batch;
using fixtures::relative_error;

TEST(Softmax, MatchesHighPrecisionReference) {
  const Tensor p = softmax_probs(Tensor::matrix(2, 3, {1.0, 2.0, 3.0, -1000.0, 0.0, 1000.0}));
  EXPECT_NEAR(p.at(0, 0), 0.090030573170380457998, 1e-15);
  EXPECT_NEAR(p.at(0, 1), 0.24472847105479765247, 1e-15);
  EXPECT_NEAR(p.at(0, 2), 0.66524095577482188953, 1e-15);
  EXPECT_EQ(p.at(1, 0), 0.0);
  EXPECT_EQ(p.at(1, 2), 1.0);
  EXPECT_TRUE(p.all_finite());
}

TEST(Softmax, RowsSumToOne) {
  const Tensor p = softmax_probs(random_batch(3, 50, 7, -20.0, 20.0));
  for (std::size_t r = 0; r < 50; ++r) {
    double s = 0.0;
    for (double v : p.row(r)) s += v;
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Softmax, BackwardMatchesFiniteDifferences) {
  Tensor z = random_batch(5, 2, 4, -2.0, 2.0);
  const Tensor w = random_batch(6, 2, 4, -1.0, 1.0);
  const auto f = [&] {
    const Tensor p = softmax_probs(z);
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += w.data[i] * p.data[i];
    return s;
  };
  const Tensor g = softmax_backward(softmax_probs(z), w);
  for (std::size_t i = 0; i < z.size(); ++i) {
    EXPECT_LT(relative_error(central_difference(f, z.data[i], 1e-5), g.data[i]), 1e-6);
  }
}

TEST(CrossEntropy, ValueAndGradient) {
  Tensor z = random_batch(9, 3, 4, -3.0, 3.0);
  const std::vector<int> labels = {0, 3, 2};
  const LossAndGrad lg = cross_entropy_loss(z, labels);
  const Tensor p = softmax_probs(z);
  double want = 0.0;
  for (std::size_t r = 0; r < 3; ++r) want -= std::log(p.at(r, labels[r]));
  EXPECT_NEAR(lg.value, want / 3.0, 1e-12);
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double fd = central_difference([&] { return cross_entropy_loss(z, labels).value; }, z.data[i], 1e-5);
    EXPECT_LT(relative_error(fd, lg.grad.data[i]), 1e-6);
  }
}

TEST(CrossEntropy, RejectsOutOfRangeLabels) {
  const Tensor z({2, 3});
  EXPECT_THROW((void)cross_entropy_loss(z, std::vector<int>{0, 3}), InputError);
  EXPECT_THROW((void)cross_entropy_loss(z, std::vector<int>{-1, 0}), InputError);
  EXPECT_THROW((void)cross_entropy_loss(z, std::vector<int>{0}), ShapeError);
}

TEST(BinaryCrossEntropy, StableForLargeScoresAndCorrectGradient) {
  std::vector<double> s = {-800.0, 800.0, 0.3, -1.2};
  const std::vector<int> t = {1, 0, 1, 0};
  const LossAndGrad lg = binary_cross_entropy_with_logits(s, t);
  EXPECT_TRUE(std::isfinite(lg.value));
  EXPECT_NEAR(lg.value, (800.0 + 800.0 + std::log1p(std::exp(-0.3)) + std::log1p(std::exp(-1.2))) / 4.0, 1e-9);
  for (std::size_t i = 2; i < s.size(); ++i) {
    const double fd =
        central_difference([&] { return binary_cross_entropy_with_logits(s, t).value; }, s[i], 1e-5);
    EXPECT_LT(relative_error(fd, lg.grad.data[i]), 1e-6);
  }
}

TEST(Argmax, FirstMaximumWins) {
  EXPECT_EQ(argmax_rows(Tensor::matrix(2, 3, {1, 5, 5, 0, -1, -2})), (std::vector<int>{1, 0}));
}

}  // namespace
}  // namespace trojanscan
