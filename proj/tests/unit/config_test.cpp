#include <gtest/gtest.h>

#include <filesystem>

#include "trojanscan/errors.hpp"
#include "trojanscan/experiment.hpp"
#include "trojanscan/serialize.hpp"

namespace trojanscan {
namespace {

TEST(Config, DefaultsMatchDeskScale) {
  const ExperimentConfig c = load_config(std::nullopt, {}, nullptr);
  EXPECT_EQ(c.zoo.count_benign, 64u);
  EXPECT_EQ(c.zoo.count_trojan, 64u);
  EXPECT_EQ(c.zoo.val_benign, 16u);
  EXPECT_EQ(c.meta.k, 10u);
  EXPECT_EQ(c.meta.hidden, 64u);
  EXPECT_EQ(c.meta.learning_rate, 1e-3);
  EXPECT_EQ(c.arms_race.lambda, 1.0);
  EXPECT_EQ(c.targets.count_trojan, 32u);
}

TEST(Config, DottedOverridesAndEnvironmentSeed) {
  const ExperimentConfig c =
      load_config(std::nullopt, {"meta.k=12", "--meta.mode=oneclass", "arms_race.attacker_seed=5"}, "42");
  EXPECT_EQ(c.meta.k, 12u);
  EXPECT_EQ(c.meta.mode, MetaMode::oneclass);
  EXPECT_EQ(c.arms_race.attacker_seed, 5u);
  EXPECT_EQ(c.master_seed, 42u);
}

TEST(Config, FileMergesOverDefaults) {
  const auto path = std::filesystem::temp_directory_path() / "trojanscan_config_test.json";
  write_text_file(path, R"({"meta": {"nu": 0.2}, "io": {"output_dir": "elsewhere"}})");
  const ExperimentConfig c = load_config(path, {"meta.nu=0.3"}, nullptr);
  EXPECT_EQ(c.meta.nu, 0.3);
  EXPECT_EQ(c.meta.k, 10u);
  EXPECT_EQ(c.output_dir, "elsewhere");
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW((void)load_config(std::nullopt, {"meta.kk=3"}, nullptr), InputError);
  EXPECT_THROW((void)load_config(std::nullopt, {"meta=3"}, nullptr), InputError);
  EXPECT_THROW((void)load_config(std::nullopt, {"meta.k"}, nullptr), InputError);
  EXPECT_THROW((void)load_config(std::nullopt, {"meta.nu=1.5"}, nullptr), InputError);
  EXPECT_THROW((void)load_config(std::nullopt, {"meta.mode=twoclass"}, nullptr), InputError);
  EXPECT_THROW((void)load_config(std::nullopt, {"task.d_x=60"}, nullptr), InputError);
  EXPECT_THROW((void)load_config(std::nullopt, {"meta.k=\"ten\""}, nullptr), InputError);
  EXPECT_THROW((void)load_config(std::nullopt, {}, "not-a-number"), InputError);
  EXPECT_THROW(
      (void)load_config(std::nullopt, {"arms_race.attacker_seed=3", "arms_race.defender_seed=3"}, nullptr),
      InputError);
}

TEST(Config, SerializedConfigReloads) {
  ExperimentConfig c = load_config(std::nullopt, {"zoo.count_benign=3", "meta.tune_queries=false"}, nullptr);
  const auto path = std::filesystem::temp_directory_path() / "trojanscan_config_roundtrip.json";
  write_text_file(path, config_to_json(c));
  const ExperimentConfig back = load_config(path, {}, nullptr);
  EXPECT_EQ(config_to_json(back), config_to_json(c));
}

TEST(Eval, CsvSchema) {
  EvalTable t{9, {{"jumbo-tuned", "modification", 0.75}}};
  EXPECT_EQ(eval_csv(t), "detector,attack,auc,master_seed\njumbo-tuned,modification,0.75,9\n");
}

}  // namespace
}  // namespace trojanscan
