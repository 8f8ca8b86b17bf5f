#include <gtest/gtest.h>

#include <set>

#include "fixtures.hpp"
#include "trojanscan/errors.hpp"
#include "trojanscan/zoo.hpp"

namespace trojanscan {
namespace {

TEST(Zoo, CountsLabelsAndSettings) {
  const auto zoo = fixtures::toy_zoo(3, 2);
  ASSERT_EQ(zoo.size(), 5u);
  for (std::size_t i = 0; i < zoo.size(); ++i) {
    const auto& r = zoo[i];
    EXPECT_EQ(r.trojaned, i >= 3);
    EXPECT_EQ(r.setting.has_value(), r.trojaned);
    EXPECT_EQ(r.asr.has_value(), r.trojaned);
    EXPECT_EQ(r.model.input_width(), 36u);
    EXPECT_EQ(r.model.output_width(), 3u);
    EXPECT_GE(r.test_accuracy, 0.0);
    EXPECT_LE(r.test_accuracy, 1.0);
  }
}

TEST(Zoo, IndependentOfWorkerCount) {
  SyntheticTask task(3, 36, 3, 0.1);
  const Dataset data = task.sample(4, 64);
  ZooSpec spec;
  spec.count_benign = 2;
  spec.count_trojan = 2;
  spec.base_seed = 9;
  spec.train.epochs = 3;
  spec.hidden = 6;
  spec.holdout_size = 32;
  const auto serial = generate_zoo(task, data, spec);
  spec.jobs = 3;
  const auto parallel = generate_zoo(task, data, spec);
  for (std::size_t i = 0; i < serial.size(); ++i) {
    for (std::size_t p = 0; p < serial[i].model.params().size(); ++p) {
      EXPECT_EQ(serial[i].model.params()[p].data, parallel[i].model.params()[p].data);
    }
    EXPECT_EQ(serial[i].setting, parallel[i].setting);
    EXPECT_EQ(serial[i].seed, parallel[i].seed);
  }
}

TEST(Zoo, SmallerZooIsAPrefixOfALargerOne) {
  SyntheticTask task(3, 36, 3, 0.1);
  const Dataset data = task.sample(4, 64);
  ZooSpec spec;
  spec.count_benign = 1;
  spec.count_trojan = 1;
  spec.base_seed = 5;
  spec.train.epochs = 2;
  spec.hidden = 4;
  spec.holdout_size = 16;
  const auto small = generate_zoo(task, data, spec);
  spec.count_benign = 2;
  spec.count_trojan = 3;
  const auto big = generate_zoo(task, data, spec);
  EXPECT_EQ(small[0].model.params()[0].data, big[0].model.params()[0].data);
  EXPECT_EQ(small[1].model.params()[0].data, big[2].model.params()[0].data);
  EXPECT_EQ(small[1].setting, big[2].setting);
}

TEST(Zoo, RecordSeedsAreDistinct) {
  ZooSpec spec;
  spec.count_benign = 10;
  spec.count_trojan = 10;
  std::set<std::uint64_t> seeds;
  for (std::size_t i = 0; i < 20; ++i) seeds.insert(zoo_record_seed(spec, i));
  EXPECT_EQ(seeds.size(), 20u);
}

TEST(Zoo, AttackerRoleUsesRequestedAttack) {
  SyntheticTask task(3, 36, 3, 0.1);
  const Dataset data = task.sample(4, 64);
  ZooSpec spec;
  spec.count_trojan = 3;
  spec.role = ZooRole::attacker;
  spec.attack = AttackKind::blending;
  spec.train.epochs = 1;
  spec.hidden = 4;
  spec.holdout_size = 16;
  for (const auto& r : generate_zoo(task, data, spec)) EXPECT_EQ(r.setting->mask_popcount(), 36u);
}

TEST(Zoo, RoleNamesRoundTrip) {
  EXPECT_EQ(parse_zoo_role(to_string(ZooRole::attacker)), ZooRole::attacker);
  EXPECT_EQ(parse_zoo_role(to_string(ZooRole::defender)), ZooRole::defender);
  EXPECT_THROW((void)parse_zoo_role("spy"), InputError);
}

}  // namespace
}  // namespace trojanscan
