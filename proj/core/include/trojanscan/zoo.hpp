#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "trojanscan/dataset.hpp"
#include "trojanscan/network.hpp"
#include "trojanscan/train.hpp"
#include "trojanscan/trigger.hpp"

namespace trojanscan {

enum class ZooRole { attacker, defender };

[[nodiscard]] std::string_view to_string(ZooRole role) noexcept;
[[nodiscard]] ZooRole parse_zoo_role(std::string_view s);

/// A trained model together with its Trojan label.
struct ShadowRecord {
  Network model;
  bool trojaned = false;
  std::optional<TrojanSetting> setting;  // present iff trojaned
  double train_accuracy = 0.0;           // on the (possibly poisoned) training set
  double test_accuracy = 0.0;            // clean accuracy on the held-out slice
  std::optional<double> asr;             // on the held-out slice, trojaned only
  std::uint64_t seed = 0;
};

struct ZooSpec {
  std::size_t count_benign = 0;
  std::size_t count_trojan = 0;
  ZooRole role = ZooRole::defender;
  AttackKind attack = AttackKind::modification;  // attacker role only
  std::uint64_t base_seed = 0;
  TrainConfig train;  // train.seed is replaced per record
  std::size_t hidden = 32;
  std::size_t holdout_size = 512;
  std::size_t jobs = 1;
};

/// Held-out clean slice used to measure accuracy and ASR of a zoo's records.
[[nodiscard]] Dataset zoo_holdout(const SyntheticTask& task, const ZooSpec& spec);

/// Trains count_benign clean models followed by count_trojan poisoned ones, each with its own
/// derived seed. Trojan settings come from the attacker or defender sampler per spec.role,
/// drawn from disjoint seed streams. A record whose training diverges is retried once with a
/// perturbed seed. Output order is record index, independent of spec.jobs.
[[nodiscard]] std::vector<ShadowRecord> generate_zoo(const SyntheticTask& task, const Dataset& clean_data,
                                                     const ZooSpec& spec);

/// Seed used for record `index` (benign records first).
[[nodiscard]] std::uint64_t zoo_record_seed(const ZooSpec& spec, std::size_t index) noexcept;

}  // namespace trojanscan
