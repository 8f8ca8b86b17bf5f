#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trojanscan/arms_race.hpp"
#include "trojanscan/auc.hpp"
#include "trojanscan/meta.hpp"
#include "trojanscan/network.hpp"
#include "trojanscan/trigger.hpp"

namespace trojanscan {

inline constexpr int kFormatVersion = 1;

/// Doubles are written with 17 significant digits so every file round-trips bit-exactly.
[[nodiscard]] std::string format_double(double v);

// Model file: {"version":1,"master_seed":S,"arch":[["affine",in,out],["relu"],...],
//              "params":{"<layer>.weight":{"shape":[..],"data":[..]},...}}
[[nodiscard]] std::string model_to_json(const Network& net, std::optional<std::uint64_t> master_seed = {});
[[nodiscard]] Network model_from_json(std::string_view text);
void write_model_file(const std::filesystem::path& path, const Network& net,
                      std::optional<std::uint64_t> master_seed = {});
[[nodiscard]] Network read_model_file(const std::filesystem::path& path);

// Trojan settings serialize the mask as a base-2 string and the pattern as a float array.
[[nodiscard]] std::string setting_to_json(const TrojanSetting& s);
[[nodiscard]] TrojanSetting setting_from_json(std::string_view text);

/// One line of a zoo manifest (JSON Lines).
struct ManifestEntry {
  std::string path;
  int label = 0;
  std::optional<TrojanSetting> setting;
  double train_acc = 0.0;
  double test_acc = 0.0;
  std::optional<double> asr;
  std::uint64_t seed = 0;
};

[[nodiscard]] std::string manifest_line(const ManifestEntry& e, std::uint64_t master_seed);
/// Parses a manifest; errors name the offending line as "<path>:<line>: ...".
[[nodiscard]] std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

// MetaState file: {"version":1,"master_seed":S,"mode":"jumbo"|"oneclass","k":k,"c":c,"d_x":d,
//                  "hidden":H,"queries":[[...],...],"theta":{...},"rho":r|null}
[[nodiscard]] std::string meta_state_to_json(const MetaState& state, std::uint64_t master_seed);
[[nodiscard]] MetaState meta_state_from_json(std::string_view text);
void write_meta_state_file(const std::filesystem::path& path, const MetaState& state, std::uint64_t master_seed);
[[nodiscard]] MetaState read_meta_state_file(const std::filesystem::path& path);

/// CSV with header model_path,label,score.
[[nodiscard]] std::string detection_csv(const std::vector<DetectionRow>& rows);
/// CSV with header defense,attack,auc.
[[nodiscard]] std::string arms_race_csv(const ArmsRaceReport& report);

[[nodiscard]] std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace trojanscan
