#include "trojanscan/zoo.hpp"

#include <string>

#include "trojanscan/errors.hpp"
#include "trojanscan/parallel.hpp"
#include "trojanscan/rng.hpp"

namespace trojanscan {
namespace {

ShadowRecord build_record(const SyntheticTask& task, const Dataset& clean, const Dataset& holdout,
                          const ZooSpec& spec, std::size_t index, std::uint64_t seed) {
  const bool trojaned = index >= spec.count_benign;
  const Architecture arch = mlp_architecture(task.dim(), spec.hidden, task.classes());
  TrainConfig cfg = spec.train;
  cfg.seed = seed;

  ShadowRecord rec;
  rec.trojaned = trojaned;
  rec.seed = seed;
  if (!trojaned) {
    auto trained = train_task_model(clean, arch, cfg);
    rec.model = std::move(trained.net);
    rec.train_accuracy = trained.train_accuracy;
  } else {
    const std::size_t j = index - spec.count_benign;
    const std::string_view stream = spec.role == ZooRole::attacker ? "attacker-setting" : "defender-setting";
    Rng setting_rng = Rng::stream(spec.base_seed, stream, j);
    TrojanSetting setting = spec.role == ZooRole::attacker
                                ? sample_attacker_setting(setting_rng, spec.attack, task.grid_side(), task.classes())
                                : sample_defender_setting(setting_rng, task.grid_side(), task.classes());
    Rng poison_rng = Rng::stream(seed, "poison");
    const Dataset poisoned = poison_dataset(clean, setting, poison_rng);
    auto trained = train_task_model(poisoned, arch, cfg);
    rec.model = std::move(trained.net);
    rec.train_accuracy = trained.train_accuracy;
    rec.asr = attack_success_rate(rec.model, holdout, setting);
    rec.setting = std::move(setting);
  }
  rec.test_accuracy = accuracy(rec.model, holdout);
  return rec;
}

}  // namespace

std::string_view to_string(ZooRole role) noexcept { return role == ZooRole::attacker ? "attacker" : "defender"; }

ZooRole parse_zoo_role(std::string_view s) {
  if (s == "attacker") return ZooRole::attacker;
  if (s == "defender") return ZooRole::defender;
  throw InputError("unknown zoo role '" + std::string(s) + "'");
}

std::uint64_t zoo_record_seed(const ZooSpec& spec, std::size_t index) noexcept {
  if (index < spec.count_benign) return derive_seed(spec.base_seed, "benign-model", index);
  return derive_seed(spec.base_seed, "trojan-model", index - spec.count_benign);
}

Dataset zoo_holdout(const SyntheticTask& task, const ZooSpec& spec) {
  return task.sample(derive_seed(spec.base_seed, "holdout"), spec.holdout_size);
}

std::vector<ShadowRecord> generate_zoo(const SyntheticTask& task, const Dataset& clean_data, const ZooSpec& spec) {
  clean_data.validate();
  if (clean_data.dim() != task.dim() || clean_data.classes != task.classes()) {
    throw ShapeError("clean data does not belong to the task");
  }
  const Dataset holdout = zoo_holdout(task, spec);
  const std::size_t total = spec.count_benign + spec.count_trojan;
  return parallel_map(total, spec.jobs, [&](std::size_t i) {
    const std::uint64_t seed = zoo_record_seed(spec, i);
    try {
      return build_record(task, clean_data, holdout, spec, i, seed);
    } catch (const DivergenceError&) {
      try {
        return build_record(task, clean_data, holdout, spec, i, derive_seed(seed, "retry"));
      } catch (const DivergenceError& e) {
        throw DivergenceError("zoo record " + std::to_string(i) + " failed twice: " + e.what());
      }
    }
  });
}

}  // namespace trojanscan
