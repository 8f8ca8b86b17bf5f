#include "trojanscan/trigger.hpp"

#include <cmath>
#include <string>

#include "trojanscan/errors.hpp"
#include "trojanscan/loss.hpp"
#include "trojanscan/rng.hpp"

namespace trojanscan {
namespace {

constexpr std::size_t kMinSquare = 2;
constexpr std::size_t kMaxSquare = 5;

std::vector<std::uint8_t> square_mask(Rng& rng, std::size_t grid_side) {
  if (grid_side < kMaxSquare) {
    throw InputError("grid side " + std::to_string(grid_side) + " is smaller than the largest trigger square");
  }
  const auto side = static_cast<std::size_t>(rng.uniform_int(kMinSquare, kMaxSquare));
  const auto row = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(grid_side - side)));
  const auto col = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(grid_side - side)));
  std::vector<std::uint8_t> mask(grid_side * grid_side, 0);
  for (std::size_t r = row; r < row + side; ++r) {
    for (std::size_t c = col; c < col + side; ++c) mask[r * grid_side + c] = 1;
  }
  return mask;
}

void fill_common(Rng& rng, TrojanSetting& s, std::size_t d_x, std::size_t classes) {
  s.pattern.resize(d_x);
  for (auto& v : s.pattern) v = rng.uniform(0.0, 1.0);
  s.target_label = static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(classes) - 1));
  s.poison_ratio = rng.uniform(0.05, 0.5);
}

}  // namespace

std::string_view to_string(AttackGoal goal) noexcept {
  return goal == AttackGoal::all_to_all ? "all_to_all" : "single_target";
}

std::string_view to_string(AttackKind kind) noexcept {
  switch (kind) {
    case AttackKind::modification: return "modification";
    case AttackKind::blending: return "blending";
    case AttackKind::all_to_all: return "all_to_all";
  }
  return "unknown";
}

AttackGoal parse_attack_goal(std::string_view s) {
  if (s == "single_target") return AttackGoal::single_target;
  if (s == "all_to_all") return AttackGoal::all_to_all;
  throw InputError("unknown attack goal '" + std::string(s) + "'");
}

AttackKind parse_attack_kind(std::string_view s) {
  if (s == "modification") return AttackKind::modification;
  if (s == "blending") return AttackKind::blending;
  if (s == "all_to_all") return AttackKind::all_to_all;
  throw InputError("unknown attack kind '" + std::string(s) + "'");
}

void TrojanSetting::validate(std::size_t d_x, std::size_t classes) const {
  if (mask.size() != d_x || pattern.size() != d_x) throw ShapeError("trigger mask/pattern length != d_x");
  for (auto m : mask) {
    if (m > 1) throw InputError("trigger mask entries must be 0 or 1");
  }
  if (mask_popcount() == 0) throw InputError("trigger mask is empty");
  for (double t : pattern) {
    if (!(t >= 0.0 && t <= 1.0)) throw InputError("trigger pattern outside [0,1]");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InputError("alpha outside [0,1]");
  if (!(poison_ratio > 0.0 && poison_ratio <= 0.5)) throw InputError("poison ratio outside (0, 0.5]");
  if (target_label < 0 || static_cast<std::size_t>(target_label) >= classes) {
    throw InputError("target label outside class range");
  }
}

std::size_t TrojanSetting::mask_popcount() const noexcept {
  std::size_t n = 0;
  for (auto m : mask) n += m;
  return n;
}

int TrojanSetting::malicious_label(int y, std::size_t classes) const noexcept {
  if (goal == AttackGoal::all_to_all) return static_cast<int>((static_cast<std::size_t>(y) + 1) % classes);
  return target_label;
}

int apply_trigger(std::span<const double> x, int y, const TrojanSetting& setting, std::size_t classes,
                  std::span<double> out) {
  const std::size_t d = x.size();
  if (setting.mask.size() != d || setting.pattern.size() != d || out.size() != d) {
    throw ShapeError("apply_trigger: input, mask, pattern and output lengths must agree");
  }
  const double a = setting.alpha;
  for (std::size_t j = 0; j < d; ++j) {
    if (setting.mask[j] == 0) {
      out[j] = x[j];
    } else {
      out[j] = (1.0 - a) * setting.pattern[j] + a * x[j];
    }
  }
  return setting.malicious_label(y, classes);
}

TriggeredSample apply_trigger(std::span<const double> x, int y, const TrojanSetting& setting, std::size_t classes) {
  TriggeredSample s{std::vector<double>(x.size()), 0};
  s.y = apply_trigger(x, y, setting, classes, s.x);
  return s;
}

TrojanSetting sample_attacker_setting(Rng& rng, AttackKind kind, std::size_t grid_side, std::size_t classes) {
  TrojanSetting s;
  const std::size_t d_x = grid_side * grid_side;
  switch (kind) {
    case AttackKind::modification:
    case AttackKind::all_to_all:
      s.mask = square_mask(rng, grid_side);
      s.alpha = 0.0;
      break;
    case AttackKind::blending:
      if (grid_side < kMaxSquare) throw InputError("grid too small");
      s.mask.assign(d_x, 1);
      s.alpha = rng.uniform(0.8, 0.95);
      break;
  }
  s.goal = kind == AttackKind::all_to_all ? AttackGoal::all_to_all : AttackGoal::single_target;
  fill_common(rng, s, d_x, classes);
  return s;
}

TrojanSetting sample_defender_setting(Rng& rng, std::size_t grid_side, std::size_t classes) {
  TrojanSetting s;
  const std::size_t d_x = grid_side * grid_side;
  if (rng.bernoulli(0.2)) {
    if (grid_side < kMaxSquare) throw InputError("grid too small");
    s.mask.assign(d_x, 1);
    s.alpha = rng.uniform(0.8, 0.95);
  } else {
    s.mask = square_mask(rng, grid_side);
    s.alpha = rng.bernoulli(0.25) ? 0.0 : rng.uniform(0.5, 0.8);
  }
  s.goal = AttackGoal::single_target;
  fill_common(rng, s, d_x, classes);
  return s;
}

Dataset poison_dataset(const Dataset& data, const TrojanSetting& setting, Rng& rng) {
  const std::size_t n = data.size();
  const std::size_t d = data.dim();
  setting.validate(d, data.classes);
  const auto count = static_cast<std::size_t>(std::floor(static_cast<double>(n) * setting.poison_ratio));
  if (count == 0) throw InputError("poison ratio selects no samples (floor(n*p) == 0)");

  const auto chosen = rng.choose(n, count);
  Dataset out;
  out.classes = data.classes;
  out.inputs = Tensor({n + count, d});
  std::copy(data.inputs.data.begin(), data.inputs.data.end(), out.inputs.data.begin());
  out.labels = data.labels;
  out.labels.reserve(n + count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t src = chosen[i];
    out.labels.push_back(apply_trigger(data.inputs.row(src), data.labels[src], setting, data.classes,
                                       out.inputs.row(n + i)));
  }
  return out;
}

double attack_success_rate(const Network& model, const Dataset& clean_test, const TrojanSetting& setting) {
  const std::size_t d = clean_test.dim();
  std::vector<double> triggered;
  std::vector<int> wanted;
  for (std::size_t i = 0; i < clean_test.size(); ++i) {
    const int y = clean_test.labels[i];
    if (setting.goal == AttackGoal::single_target && y == setting.target_label) continue;
    const std::size_t off = triggered.size();
    triggered.resize(off + d);
    wanted.push_back(apply_trigger(clean_test.inputs.row(i), y, setting, clean_test.classes,
                                   std::span<double>(triggered.data() + off, d)));
  }
  if (wanted.empty()) throw InputError("no eligible instances for attack success rate");
  const auto pred = argmax_rows(model.forward(Tensor::matrix(wanted.size(), d, std::move(triggered))));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == wanted[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

}  // namespace trojanscan
