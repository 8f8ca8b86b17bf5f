#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "trojanscan/errors.hpp"
#include "trojanscan/oneclass.hpp"

namespace trojanscan {
namespace {

TEST(NuQuantile, ConstantScoresGiveThatConstant) {
  EXPECT_EQ(nu_quantile(std::vector<double>(10, 0.42), 0.1), 0.42);
  EXPECT_EQ(nu_quantile(std::vector<double>(3, -1.0), 0.9), -1.0);
}

TEST(NuQuantile, PicksCeilNuMSmallest) {
  const std::vector<double> s = {5, 1, 4, 2, 3, 9, 8, 7, 6, 10};
  EXPECT_EQ(nu_quantile(s, 0.1), 1.0);
  EXPECT_EQ(nu_quantile(s, 0.25), 3.0);
  EXPECT_EQ(nu_quantile(s, 0.5), 5.0);
  EXPECT_THROW((void)nu_quantile(s, 0.0), InputError);
  EXPECT_THROW((void)nu_quantile(std::vector<double>{}, 0.5), InputError);
}

TEST(OneClassObjective, HingeVanishesWhenAllScoresClearRho) {
  Rng rng(2);
  const MetaClassifier m = MetaClassifier::initialized(6, 3, rng);
  double l2 = 0.0;
  for (const auto& p : m.net.params()) {
    for (double v : p.data) l2 += v * v;
  }
  const std::vector<double> scores = {0.5, 0.9, 1.2};
  EXPECT_DOUBLE_EQ(oneclass_objective(m, 0.5, 0.1, scores), 0.5 * l2 - 0.5);
  EXPECT_DOUBLE_EQ(oneclass_objective(m, 1.0, 0.5, scores), 0.5 * l2 + 0.6 / (0.5 * 3.0) - 1.0);
}

TEST(OneClassTraining, ObjectiveDecreasesOnBenignZoo) {
  const auto zoo = fixtures::toy_zoo(16, 0);
  OneClassConfig cfg;
  cfg.meta.epochs = 20;
  cfg.meta.batch_size = 8;
  cfg.meta.seed = 2;
  const auto r = meta_train_oneclass(zoo, cfg);
  ASSERT_EQ(r.trace.size(), 20u);
  EXPECT_LT(r.trace.back(), r.initial_objective);
  EXPECT_EQ(r.state.nu, 0.1);
}

TEST(OneClassTraining, DetectionScoreIsRhoMinusMeta) {
  const auto zoo = fixtures::toy_zoo(4, 0);
  OneClassConfig cfg;
  cfg.meta.epochs = 3;
  const auto r = meta_train_oneclass(zoo, cfg);
  const MetaState state = to_meta_state(r, 3);
  ASSERT_TRUE(state.rho.has_value());
  const double s = detect(NetworkOracle(zoo[0].model), state);
  EXPECT_EQ(s, r.state.rho - meta_score(r.state.meta, extract_features(zoo[0].model, r.queries)));
}

TEST(OneClassTraining, RejectsBadInputs) {
  OneClassConfig cfg;
  EXPECT_THROW((void)meta_train_oneclass({}, cfg), InputError);
  cfg.nu = 1.0;
  const auto zoo = fixtures::toy_zoo(2, 0);
  EXPECT_THROW((void)meta_train_oneclass(zoo, cfg), InputError);
}

}  // namespace
}  // namespace trojanscan
