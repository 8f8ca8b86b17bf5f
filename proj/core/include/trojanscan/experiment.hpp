#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "trojanscan/arms_race.hpp"
#include "trojanscan/auc.hpp"
#include "trojanscan/dataset.hpp"
#include "trojanscan/meta.hpp"
#include "trojanscan/oneclass.hpp"
#include "trojanscan/train.hpp"
#include "trojanscan/zoo.hpp"

namespace trojanscan {

struct TaskConfig {
  std::size_t d_x = 64;
  std::size_t classes = 4;
  std::size_t n_attacker = 2048;
  std::size_t n_defender = 256;
  double noise_sigma = 0.1;
};

struct ZooConfig {
  std::size_t count_benign = 64;
  std::size_t count_trojan = 64;
  std::size_t val_benign = 16;
  std::size_t val_trojan = 16;
  ZooRole role = ZooRole::defender;
  AttackKind attack = AttackKind::modification;  // attacker-role zoos only
  std::size_t hidden = 32;
};

struct TargetsConfig {
  std::size_t count_benign = 32;
  std::size_t count_trojan = 32;
  std::size_t epochs = 30;  // attacker models see 8x more data than shadow models
};

struct MetaConfig {
  std::size_t k = 10;
  MetaMode mode = MetaMode::jumbo;
  bool tune_queries = true;
  double nu = 0.1;
  std::size_t hidden = 64;
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
};

struct ArmsRaceSettings {
  double lambda = 1.0;
  MalObjective objective = MalObjective::score;
  std::optional<std::uint64_t> defender_seed;  // derived from master_seed when unset
  std::optional<std::uint64_t> attacker_seed;
  double theta_scale = 1.0;
  std::size_t robust_epochs = 200;  // query tuning budget for the frozen random meta-classifier
  double robust_learning_rate = 1e-2;
  std::size_t shadow_benign = 32;
  std::size_t shadow_trojan = 32;
};

struct ExperimentConfig {
  std::uint64_t master_seed = 20260101;
  std::size_t jobs = 1;
  TaskConfig task;
  TrainConfig training{150, 32, {}, 0};
  ZooConfig zoo;
  TargetsConfig targets;
  MetaConfig meta;
  ArmsRaceSettings arms_race;
  std::filesystem::path output_dir = "trojanscan-out";

  void validate() const;
};

/// Builds a config from defaults, an optional JSON file, dotted overrides ("meta.k=12") and
/// the TROJANSCAN_SEED value (if non-null). Throws InputError on unknown keys or bad values.
[[nodiscard]] ExperimentConfig load_config(const std::optional<std::filesystem::path>& file,
                                           const std::vector<std::string>& overrides, const char* env_seed);
[[nodiscard]] std::string config_to_json(const ExperimentConfig& cfg);

/// Task prototypes plus the defender's small and the attacker's large clean datasets.
struct TaskData {
  SyntheticTask task;
  Dataset defender;
  Dataset attacker;
};
[[nodiscard]] TaskData make_task_data(const ExperimentConfig& cfg);

[[nodiscard]] ZooSpec defender_zoo_spec(const ExperimentConfig& cfg, std::size_t count_benign,
                                        std::size_t count_trojan, std::string_view stream);
[[nodiscard]] std::vector<ShadowRecord> build_shadow_zoo(const ExperimentConfig& cfg, const TaskData& data);
[[nodiscard]] std::vector<ShadowRecord> build_validation_zoo(const ExperimentConfig& cfg, const TaskData& data);

/// Attacker-trained target models, never seen by the defender during meta-training.
[[nodiscard]] std::vector<ShadowRecord> build_benign_targets(const ExperimentConfig& cfg, const TaskData& data);
[[nodiscard]] std::vector<ShadowRecord> build_trojan_targets(const ExperimentConfig& cfg, const TaskData& data,
                                                             AttackKind kind);

[[nodiscard]] MetaTrainConfig meta_train_config(const ExperimentConfig& cfg, bool tune_queries);
[[nodiscard]] MetaState train_jumbo_state(const ExperimentConfig& cfg, std::span<const ShadowRecord> zoo,
                                          bool tune_queries);
/// Uses only the benign records of `zoo`.
[[nodiscard]] MetaState train_oneclass_state(const ExperimentConfig& cfg, std::span<const ShadowRecord> zoo);

[[nodiscard]] DetectionReport score_records(const MetaState& state, std::span<const ShadowRecord> benign,
                                            std::span<const ShadowRecord> trojan);

[[nodiscard]] ArmsRaceConfig arms_race_config(const ExperimentConfig& cfg);

struct EvalRow {
  std::string detector;
  std::string attack;
  double auc = 0.0;
};

struct EvalTable {
  std::uint64_t master_seed = 0;
  std::vector<EvalRow> rows;
};

/// End-to-end: shadow zoo, attacker targets for every attack kind, jumbo (tuned/untuned) and
/// one-class detectors, then the arms race. `log` receives one line per finished stage.
[[nodiscard]] EvalTable run_eval(const ExperimentConfig& cfg, const std::function<void(const std::string&)>& log = {});
[[nodiscard]] std::string eval_csv(const EvalTable& table);

}  // namespace trojanscan
