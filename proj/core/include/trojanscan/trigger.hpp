#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "trojanscan/dataset.hpp"
#include "trojanscan/network.hpp"

namespace trojanscan {

class Rng;

enum class AttackGoal { single_target, all_to_all };

/// Attacker-side families of Trojan settings.
enum class AttackKind { modification, blending, all_to_all };

[[nodiscard]] std::string_view to_string(AttackGoal goal) noexcept;
[[nodiscard]] std::string_view to_string(AttackKind kind) noexcept;
[[nodiscard]] AttackGoal parse_attack_goal(std::string_view s);
[[nodiscard]] AttackKind parse_attack_kind(std::string_view s);

/// Trigger x' = (1-m)*x + m*((1-alpha)*t + alpha*x) plus the malicious labelling rule.
struct TrojanSetting {
  std::vector<std::uint8_t> mask;  // m, entries in {0,1}
  std::vector<double> pattern;     // t, entries in [0,1]
  double alpha = 0.0;
  int target_label = 0;  // y_t; ignored for all-to-all
  double poison_ratio = 0.1;
  AttackGoal goal = AttackGoal::single_target;

  /// Full invariant check, including a non-empty mask and 0 < p <= 0.5.
  void validate(std::size_t d_x, std::size_t classes) const;

  [[nodiscard]] std::size_t mask_popcount() const noexcept;
  /// Label a triggered instance of class `y` should receive.
  [[nodiscard]] int malicious_label(int y, std::size_t classes) const noexcept;

  friend bool operator==(const TrojanSetting&, const TrojanSetting&) = default;
};

/// Writes the triggered input into `out` and returns the malicious label.
int apply_trigger(std::span<const double> x, int y, const TrojanSetting& setting, std::size_t classes,
                  std::span<double> out);

struct TriggeredSample {
  std::vector<double> x;
  int y = 0;
};
[[nodiscard]] TriggeredSample apply_trigger(std::span<const double> x, int y, const TrojanSetting& setting,
                                            std::size_t classes);

/// Attacker distribution: square s x s masks (s in 2..5) at a uniform grid position with
/// alpha = 0, or a full mask with alpha ~ U[0.8, 0.95] for blending. p ~ U[0.05, 0.5].
[[nodiscard]] TrojanSetting sample_attacker_setting(Rng& rng, AttackKind kind, std::size_t grid_side,
                                                    std::size_t classes);

/// Jumbo distribution used for shadow models: 20% full masks with alpha ~ U[0.8, 0.95];
/// otherwise a square mask with alpha = 0 (prob. 0.25) or alpha ~ U[0.5, 0.8].
[[nodiscard]] TrojanSetting sample_defender_setting(Rng& rng, std::size_t grid_side, std::size_t classes);

/// Appends triggered copies of floor(n*p) distinct rows (chosen without replacement).
/// The first n rows of the result are the original dataset, unchanged and in order.
[[nodiscard]] Dataset poison_dataset(const Dataset& data, const TrojanSetting& setting, Rng& rng);

/// Fraction of triggered test inputs classified as the malicious label. For single-target
/// settings, instances whose true label already equals y_t are excluded.
[[nodiscard]] double attack_success_rate(const Network& model, const Dataset& clean_test,
                                         const TrojanSetting& setting);

}  // namespace trojanscan
