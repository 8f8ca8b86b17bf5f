#include <gtest/gtest.h>

#include <filesystem>

#include "fixtures.hpp"
#include "trojanscan/errors.hpp"
#include "trojanscan/serialize.hpp"

namespace trojanscan {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("trojanscan_serialize_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(Serialize, DoublesRoundTripBitExactly) {
  for (double v : {0.1, -1e-300, 1.0 / 3.0, 6.02214076e23, 0.0}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

TEST(Serialize, ModelRoundTrip) {
  const Network net = fixtures::random_net(3, 7, 5, 3);
  const Network back = model_from_json(model_to_json(net, 99));
  EXPECT_EQ(back.architecture(), net.architecture());
  for (std::size_t p = 0; p < net.params().size(); ++p) EXPECT_EQ(back.params()[p].data, net.params()[p].data);
  EXPECT_EQ(model_to_json(back, 99), model_to_json(net, 99));
}

TEST(Serialize, ModelFileErrorsNameThePath) {
  const fs::path dir = scratch_dir("model");
  write_text_file(dir / "bad.json", "{\"version\":1,\"arch\":[[\"conv\",1,2]],\"params\":{}}");
  try {
    (void)read_model_file(dir / "bad.json");
    FAIL() << "expected an error";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.json"), std::string::npos);
  }
  EXPECT_THROW((void)read_model_file(dir / "missing.json"), IoError);
}

TEST(Serialize, SettingRoundTrip) {
  Rng rng(4);
  for (auto kind : {AttackKind::modification, AttackKind::blending, AttackKind::all_to_all}) {
    const auto s = sample_attacker_setting(rng, kind, 8, 4);
    EXPECT_EQ(setting_from_json(setting_to_json(s)), s);
  }
}

TEST(Serialize, ManifestRoundTripAndLineErrors) {
  const fs::path dir = scratch_dir("manifest");
  Rng rng(5);
  ManifestEntry benign{"models/a.json", 0, std::nullopt, 0.9, 0.8, std::nullopt, 12};
  ManifestEntry trojan{"models/b.json", 1, sample_defender_setting(rng, 8, 4), 0.95, 0.85, 0.99, 13};
  write_text_file(dir / "manifest.jsonl", manifest_line(benign, 1) + "\n" + manifest_line(trojan, 1) + "\n");
  const auto entries = read_manifest(dir / "manifest.jsonl");
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_EQ(entries[1].setting, trojan.setting);
  EXPECT_EQ(entries[1].asr, 0.99);
  EXPECT_EQ(entries[0].seed, 12u);

  write_text_file(dir / "broken.jsonl", manifest_line(benign, 1) + "\n{not json\n");
  try {
    (void)read_manifest(dir / "broken.jsonl");
    FAIL() << "expected an error";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("broken.jsonl:2:"), std::string::npos) << e.what();
  }

  ManifestEntry inconsistent = benign;
  inconsistent.label = 1;
  write_text_file(dir / "inconsistent.jsonl", manifest_line(inconsistent, 1) + "\n");
  EXPECT_THROW((void)read_manifest(dir / "inconsistent.jsonl"), IoError);
}

TEST(Serialize, MetaStateRoundTrip) {
  Rng rng(6);
  MetaState s{MetaMode::oneclass, MetaClassifier::initialized(12, 5, rng), QuerySet::gaussian(4, 9, rng), 3, 0.25};
  const MetaState back = meta_state_from_json(meta_state_to_json(s, 7));
  EXPECT_EQ(back.mode, s.mode);
  EXPECT_EQ(back.classes, 3u);
  EXPECT_EQ(back.rho, s.rho);
  EXPECT_EQ(back.queries.queries.data, s.queries.queries.data);
  EXPECT_EQ(back.meta.hash(), s.meta.hash());
  EXPECT_EQ(meta_state_to_json(back, 7), meta_state_to_json(s, 7));
  EXPECT_NE(meta_state_to_json(s, 7).find("\"master_seed\":7"), std::string::npos);
}

TEST(Serialize, CsvHeaders) {
  EXPECT_EQ(detection_csv({}), "model_path,label,score\n");
  EXPECT_EQ(detection_csv({{"m.json", 1, 0.5}}), "model_path,label,score\nm.json,1,0.5\n");
  const ArmsRaceReport empty;
  EXPECT_EQ(arms_race_csv(empty).substr(0, 19), "defense,attack,auc\n");
}

}  // namespace
}  // namespace trojanscan
