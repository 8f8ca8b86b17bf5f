#include <gtest/gtest.h>

#include "trojanscan/adam.hpp"
#include "trojanscan/errors.hpp"

namespace trojanscan {
namespace {

TEST(Adam, ScalarQuadraticTraceMatchesReference) {
  // Minimizing (x - 3)^2 from x = 0 with lr 0.1; reference values computed at 40 digits.
  const double expected[] = {0.099999999833333333611, 0.1998972925852117066, 0.29961847654925339188,
                             0.39908646894421574357, 0.49822054377271428603};
  Tensor x({1}, {0.0});
  AdamState state;
  AdamConfig cfg;
  cfg.learning_rate = 0.1;
  for (double want : expected) {
    x.grad = std::vector<double>{2.0 * (x.data[0] - 3.0)};
    adam_step(std::span<Tensor>(&x, 1), state, cfg);
    EXPECT_NEAR(x.data[0], want, 1e-14);
  }
  EXPECT_EQ(state.step, 5u);
}

TEST(Adam, FirstStepMovesByLearningRateAgainstGradientSign) {
  Tensor a({2}, {1.0, -1.0});
  a.grad = std::vector<double>{0.3, -7.0};
  AdamState state;
  AdamConfig cfg;
  cfg.learning_rate = 0.01;
  adam_step(std::span<Tensor>(&a, 1), state, cfg);
  EXPECT_NEAR(a.data[0], 1.0 - 0.01, 1e-9);
  EXPECT_NEAR(a.data[1], -1.0 + 0.01, 1e-9);
}

TEST(Adam, TensorsWithoutGradientsAreLeftAlone) {
  Tensor a({1}, {1.0});
  Tensor b({1}, {2.0});
  b.grad = std::vector<double>{1.0};
  Tensor* both[] = {&a, &b};
  AdamState state;
  adam_step(std::span<Tensor* const>(both), state, AdamConfig{});
  EXPECT_EQ(a.data[0], 1.0);
  EXPECT_LT(b.data[0], 2.0);
}

TEST(Adam, ConfigValidation) {
  AdamConfig cfg;
  cfg.learning_rate = 0.0;
  EXPECT_THROW(cfg.validate(), InputError);
  cfg = AdamConfig{};
  cfg.beta1 = 1.0;
  EXPECT_THROW(cfg.validate(), InputError);
  EXPECT_NO_THROW(AdamConfig{}.validate());
}

}  // namespace
}  // namespace trojanscan
