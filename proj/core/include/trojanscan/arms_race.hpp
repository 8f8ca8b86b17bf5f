#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "trojanscan/auc.hpp"
#include "trojanscan/meta.hpp"
#include "trojanscan/train.hpp"
#include "trojanscan/trigger.hpp"
#include "trojanscan/zoo.hpp"

namespace trojanscan {

/// How a known detector's score enters the attacker's objective.
enum class MalObjective {
  score,    // L_mal = META(F(f))
  softplus  // L_mal = log(1 + exp(META(F(f)))), the BCE of being labelled benign
};

struct AdaptiveConfig {
  double lambda = 1.0;
  MalObjective objective = MalObjective::score;
  TrainConfig train;
  std::size_t hidden = 32;

  void validate() const;
};

/// A detector the adaptive attacker can differentiate through.
struct KnownDetector {
  const MetaClassifier* meta = nullptr;
  const QuerySet* queries = nullptr;
};

struct AdaptiveResult {
  Network net;
  double accuracy = 0.0;  // clean accuracy on the evaluation set
  double asr = 0.0;       // attack success rate on the evaluation set
  double l_mal = 0.0;     // sum of known detectors' scores for the final model
};

/// Trains on `poisoned` minimizing CE + lambda * sum_j META_j(F_j(f)), backpropagating the
/// detector term through feature extraction into the model. With lambda = 0 the result is
/// parameter-identical to train_task_model on the same data and seed.
[[nodiscard]] AdaptiveResult adaptive_train(const Dataset& poisoned, const TrojanSetting& setting,
                                            const Dataset& eval_clean, std::span<const KnownDetector> known,
                                            const AdaptiveConfig& cfg);

/// Randomly sampled meta-classifier that is never trained, plus queries tuned against it.
struct RobustMetaState {
  MetaClassifier frozen_meta;
  QuerySet tuned_queries;
  std::uint64_t frozen_hash = 0;

  [[nodiscard]] MetaState as_meta_state(std::size_t classes) const;
};

struct RobustConfig {
  MetaTrainConfig meta;  // tune_queries is forced on
  double theta_scale = 1.0;
};

/// Draws theta ~ N(0, theta_scale^2) from `seed` and tunes only the queries on `zoo`.
/// Throws StateError if theta changed during training.
[[nodiscard]] RobustMetaState train_robust(std::span<const ShadowRecord> zoo, std::uint64_t seed,
                                           const RobustConfig& cfg);

struct ArmsRaceConfig {
  std::uint64_t defender_seed = 1;
  std::uint64_t attacker_seed = 2;
  AttackKind attack = AttackKind::modification;
  std::size_t count_benign = 32;
  std::size_t count_trojan = 32;
  AdaptiveConfig adaptive;
  RobustConfig robust;
  /// Procedure the attacker replicates to build a surrogate shadow zoo for his own robust detector.
  ZooSpec attacker_shadow_zoo;
  std::size_t attacker_shadow_data = 256;
  std::size_t jobs = 1;
};

/// What the attacker gets: the task, the procedure, his own seed, and the full plain (non-robust)
/// MNTD system. The defender's robust parameters are deliberately not part of this type.
struct AttackerKnowledge {
  const SyntheticTask* task = nullptr;
  const Dataset* attacker_data = nullptr;
  const MetaState* plain_state = nullptr;
  std::uint64_t attacker_seed = 0;
};

/// One Trojan setting trained three ways on the same poisoned data and seed.
struct AdaptiveTarget {
  TrojanSetting setting;
  AdaptiveResult plain;         // lambda = 0
  AdaptiveResult evade_plain;   // against the fully known plain system
  AdaptiveResult evade_robust;  // against the attacker's own robust surrogate
};

struct AttackerOutput {
  std::vector<AdaptiveTarget> trojans;
  std::vector<Network> benign;
};

/// The attacker side: builds his own robust surrogate and trains, per setting, a non-adaptive
/// target plus one adaptive target against each detector he can differentiate through.
[[nodiscard]] AttackerOutput build_adaptive_targets(const AttackerKnowledge& knowledge, const ArmsRaceConfig& cfg);

struct ArmsRaceReport {
  DetectionReport plain_none;
  DetectionReport plain_adaptive;   // plain detector vs targets that evade it
  DetectionReport robust_none;
  DetectionReport robust_adaptive;  // defender's robust detector vs targets evading the surrogate
  AttackerOutput targets;
  std::uint64_t defender_hash = 0;
};

/// Full protocol: the defender trains a robust detector from defender_seed; the attacker builds
/// adaptive targets from attacker_seed; both detectors score benign + (non-)adaptive targets.
[[nodiscard]] ArmsRaceReport evaluate_arms_race(const SyntheticTask& task, const Dataset& attacker_data,
                                                std::span<const ShadowRecord> defender_zoo,
                                                const MetaState& plain_state, const ArmsRaceConfig& cfg);

}  // namespace trojanscan
