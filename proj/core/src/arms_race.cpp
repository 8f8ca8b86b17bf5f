#include "trojanscan/arms_race.hpp"

#include <cmath>
#include <string>

#include "trojanscan/errors.hpp"
#include "trojanscan/loss.hpp"
#include "trojanscan/parallel.hpp"
#include "trojanscan/rng.hpp"

namespace trojanscan {
namespace {

double known_score(const Network& net, const KnownDetector& det) {
  return meta_score(*det.meta, extract_features(net, *det.queries));
}

AdaptiveResult adaptive_once(const Dataset& poisoned, const TrojanSetting& setting, const Dataset& eval_clean,
                             std::span<const KnownDetector> known, const AdaptiveConfig& cfg) {
  const double lambda = cfg.lambda;
  BatchObjective mal = [&](Network& net) {
    double total = 0.0;
    for (const auto& det : known) {
      const FeaturePass pass(net, *det.queries);
      const auto f = pass.features();
      const Tensor feats({1, f.size()}, std::vector<double>(f.begin(), f.end()));
      const Tape meta_tape = det.meta->net.forward_recorded(feats);
      const double score = meta_tape.logits().data[0];
      double value = score;
      double slope = 1.0;
      if (cfg.objective == MalObjective::softplus) {
        value = std::max(score, 0.0) + std::log1p(std::exp(-std::abs(score)));
        slope = 1.0 / (1.0 + std::exp(-score));
      }
      const auto dfeat = meta_tape.backward(Tensor({1, 1}, {slope}), false);
      net.accumulate_grad(pass.backward(dfeat.input.data, true), lambda);
      total += lambda * value;
    }
    return total;
  };
  const auto arch = mlp_architecture(poisoned.dim(), cfg.hidden, poisoned.classes);
  auto trained = train_task_model(poisoned, arch, cfg.train, known.empty() ? BatchObjective{} : mal);

  AdaptiveResult r;
  r.net = std::move(trained.net);
  r.accuracy = accuracy(r.net, eval_clean);
  r.asr = attack_success_rate(r.net, eval_clean, setting);
  for (const auto& det : known) r.l_mal += known_score(r.net, det);
  return r;
}

DetectionReport score_targets(const MetaState& state, const std::vector<Network>& benign,
                              const std::vector<const Network*>& trojans, std::string_view tag) {
  std::vector<DetectionRow> rows;
  for (std::size_t i = 0; i < benign.size(); ++i) {
    rows.push_back({"benign-" + std::to_string(i), 0, detect(NetworkOracle(benign[i]), state)});
  }
  for (std::size_t i = 0; i < trojans.size(); ++i) {
    rows.push_back({std::string(tag) + "-" + std::to_string(i), 1, detect(NetworkOracle(*trojans[i]), state)});
  }
  return DetectionReport::from_rows(std::move(rows), detection_threshold(state.mode));
}

}  // namespace

void AdaptiveConfig::validate() const {
  if (!(lambda >= 0.0)) throw InputError("lambda must be non-negative");
  train.validate();
}

AdaptiveResult adaptive_train(const Dataset& poisoned, const TrojanSetting& setting, const Dataset& eval_clean,
                              std::span<const KnownDetector> known, const AdaptiveConfig& cfg) {
  cfg.validate();
  for (const auto& det : known) {
    if (det.meta == nullptr || det.queries == nullptr) throw InputError("known detector is incomplete");
    if (det.queries->dim() != poisoned.dim()) throw ShapeError("known queries do not match the input width");
  }
  try {
    return adaptive_once(poisoned, setting, eval_clean, known, cfg);
  } catch (const DivergenceError&) {
    AdaptiveConfig retry = cfg;
    retry.train.seed = derive_seed(cfg.train.seed, "retry");
    return adaptive_once(poisoned, setting, eval_clean, known, retry);
  }
}

MetaState RobustMetaState::as_meta_state(std::size_t classes) const {
  return MetaState{MetaMode::jumbo, frozen_meta, tuned_queries, classes, std::nullopt};
}

RobustMetaState train_robust(std::span<const ShadowRecord> zoo, std::uint64_t seed, const RobustConfig& cfg) {
  if (zoo.empty()) throw InputError("robust training needs a zoo");
  MetaTrainConfig mc = cfg.meta;
  mc.tune_queries = true;
  mc.seed = seed;
  const std::size_t d = zoo.front().model.input_width();
  const std::size_t c = zoo.front().model.output_width();

  Rng theta_rng = Rng::stream(seed, "robust-theta");
  Rng query_rng = Rng::stream(seed, "robust-queries");
  auto frozen = MetaClassifier::standard_normal(c * mc.k, mc.hidden, theta_rng, cfg.theta_scale);
  const std::uint64_t before = frozen.hash();
  auto trained = meta_train_from(zoo, std::move(frozen), QuerySet::gaussian(mc.k, d, query_rng), mc, false);
  if (trained.meta.hash() != before) throw StateError("frozen meta-classifier changed during query tuning");
  return RobustMetaState{std::move(trained.meta), std::move(trained.queries), before};
}

AttackerOutput build_adaptive_targets(const AttackerKnowledge& knowledge, const ArmsRaceConfig& cfg) {
  if (knowledge.task == nullptr || knowledge.attacker_data == nullptr || knowledge.plain_state == nullptr) {
    throw InputError("attacker knowledge is incomplete");
  }
  const SyntheticTask& task = *knowledge.task;
  const Dataset& data = *knowledge.attacker_data;
  const std::uint64_t seed = knowledge.attacker_seed;

  // Surrogate robust detector, built with the published procedure and the attacker's own randomness.
  ZooSpec shadow_spec = cfg.attacker_shadow_zoo;
  shadow_spec.base_seed = derive_seed(seed, "attacker-shadow-zoo");
  shadow_spec.role = ZooRole::defender;
  shadow_spec.jobs = cfg.jobs;
  const Dataset shadow_data = task.sample(derive_seed(seed, "attacker-shadow-data"), cfg.attacker_shadow_data);
  const auto shadow_zoo = generate_zoo(task, shadow_data, shadow_spec);
  const RobustMetaState surrogate = train_robust(shadow_zoo, derive_seed(seed, "attacker-robust"), cfg.robust);

  const std::vector<KnownDetector> plain_known = {{&knowledge.plain_state->meta, &knowledge.plain_state->queries}};
  const std::vector<KnownDetector> surrogate_known = {{&surrogate.frozen_meta, &surrogate.tuned_queries}};
  const Dataset eval_clean = task.sample(derive_seed(seed, "attacker-eval"), 512);

  AttackerOutput out;
  out.trojans = parallel_map(cfg.count_trojan, cfg.jobs, [&](std::size_t i) {
    Rng setting_rng = Rng::stream(seed, "attacker-setting", i);
    AdaptiveTarget t;
    t.setting = sample_attacker_setting(setting_rng, cfg.attack, task.grid_side(), task.classes());
    Rng poison_rng = Rng::stream(derive_seed(seed, "target", i), "poison");
    const Dataset poisoned = poison_dataset(data, t.setting, poison_rng);

    AdaptiveConfig base = cfg.adaptive;
    base.train.seed = derive_seed(seed, "target", i);
    AdaptiveConfig none = base;
    none.lambda = 0.0;
    t.plain = adaptive_train(poisoned, t.setting, eval_clean, plain_known, none);
    t.evade_plain = adaptive_train(poisoned, t.setting, eval_clean, plain_known, base);
    t.evade_robust = adaptive_train(poisoned, t.setting, eval_clean, surrogate_known, base);
    return t;
  });
  out.benign = parallel_map(cfg.count_benign, cfg.jobs, [&](std::size_t i) {
    TrainConfig tc = cfg.adaptive.train;
    tc.seed = derive_seed(seed, "benign-target", i);
    return train_task_model(data, mlp_architecture(task.dim(), cfg.adaptive.hidden, task.classes()), tc).net;
  });
  return out;
}

ArmsRaceReport evaluate_arms_race(const SyntheticTask& task, const Dataset& attacker_data,
                                  std::span<const ShadowRecord> defender_zoo, const MetaState& plain_state,
                                  const ArmsRaceConfig& cfg) {
  if (cfg.defender_seed == cfg.attacker_seed) throw InputError("attacker and defender seeds must differ");

  const RobustMetaState defender = train_robust(defender_zoo, cfg.defender_seed, cfg.robust);
  const MetaState robust_state = defender.as_meta_state(task.classes());

  ArmsRaceReport report;
  report.defender_hash = defender.frozen_hash;
  report.targets = build_adaptive_targets(AttackerKnowledge{&task, &attacker_data, &plain_state, cfg.attacker_seed}, cfg);

  std::vector<const Network*> none;
  std::vector<const Network*> evade_plain;
  std::vector<const Network*> evade_robust;
  for (const auto& t : report.targets.trojans) {
    none.push_back(&t.plain.net);
    evade_plain.push_back(&t.evade_plain.net);
    evade_robust.push_back(&t.evade_robust.net);
  }
  const auto& benign = report.targets.benign;
  report.plain_none = score_targets(plain_state, benign, none, "trojan");
  report.plain_adaptive = score_targets(plain_state, benign, evade_plain, "adaptive");
  report.robust_none = score_targets(robust_state, benign, none, "trojan");
  report.robust_adaptive = score_targets(robust_state, benign, evade_robust, "adaptive");
  return report;
}

}  // namespace trojanscan
