#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "trojanscan/experiment.hpp"
#include "trojanscan/rng.hpp"
#include "trojanscan/serialize.hpp"
#include "trojanscan_cli/cli.hpp"

namespace trojanscan {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args, const char* env_seed = nullptr) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err, env_seed);
  return {code, out.str(), err.str()};
}

// A model whose input width does not match the 36-wide test task.
Network fixtures_free_net() {
  Rng rng(1);
  return Network::initialized(mlp_architecture(16, 4, 4), rng);
}

std::size_t line_count(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("trojanscan_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  std::string path(const std::string& rel) const { return (dir_ / rel).string(); }

  Result gen(const std::string& out, std::size_t benign, std::size_t trojan, std::vector<std::string> extra = {}) {
    std::vector<std::string> args = {"gen-zoo", "--out", path(out), "--zoo.count_benign=" + std::to_string(benign),
                                     "--zoo.count_trojan=" + std::to_string(trojan), "--training.epochs=3",
                                     "--task.d_x=36", "--task.n_defender=64", "--zoo.hidden=6"};
    args.insert(args.end(), extra.begin(), extra.end());
    return run(args);
  }

  fs::path dir_;
};

TEST_F(CliTest, GenZooWritesModelsAndManifest) {
  const Result r = gen("zoo", 2, 2);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto entries = read_manifest(path("zoo/manifest.jsonl"));
  ASSERT_EQ(entries.size(), 4u);
  int trojans = 0;
  for (const auto& e : entries) {
    EXPECT_TRUE(fs::exists(dir_ / "zoo" / e.path));
    trojans += e.label;
  }
  EXPECT_EQ(trojans, 2);
  EXPECT_EQ(std::distance(fs::directory_iterator(dir_ / "zoo/models"), fs::directory_iterator{}), 4);
}

TEST_F(CliTest, GenZooIsByteIdenticalOnRerunAndAcrossJobCounts) {
  ASSERT_EQ(gen("a", 2, 2).code, 0);
  ASSERT_EQ(gen("b", 2, 2, {"--jobs", "3"}).code, 0);
  ASSERT_EQ(gen("a", 2, 2).code, 0);
  EXPECT_EQ(read_text_file(path("a/manifest.jsonl")), read_text_file(path("b/manifest.jsonl")));
  EXPECT_EQ(read_text_file(path("a/models/model_0003.json")), read_text_file(path("b/models/model_0003.json")));
}

TEST_F(CliTest, EnvironmentSeedChangesTheZoo) {
  ASSERT_EQ(gen("a", 1, 1).code, 0);
  const auto args = std::vector<std::string>{"gen-zoo",          "--out",           path("b"), "--zoo.count_benign=1",
                                             "--zoo.count_trojan=1", "--training.epochs=3", "--task.d_x=36",
                                             "--task.n_defender=64", "--zoo.hidden=6"};
  ASSERT_EQ(run(args, "777").code, 0);
  const auto manifest = read_text_file(path("b/manifest.jsonl"));
  EXPECT_NE(manifest.find("\"master_seed\":777"), std::string::npos);
  EXPECT_NE(manifest, read_text_file(path("a/manifest.jsonl")));
}

TEST_F(CliTest, TrainMetaWritesStateAndOneTraceRowPerEpoch) {
  ASSERT_EQ(gen("zoo", 2, 2).code, 0);
  const Result r = run({"train-meta", "--zoo", path("zoo"), "--out", path("meta"), "--meta.epochs=4"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(line_count(read_text_file(path("meta/trace.csv"))), 1u + 4u);
  const MetaState s = read_meta_state_file(path("meta/meta_state.json"));
  EXPECT_EQ(s.k(), 10u);
  EXPECT_EQ(s.classes, 4u);
}

TEST_F(CliTest, JumboOnSingleLabelZooIsAUsageError) {
  ASSERT_EQ(gen("zoo", 2, 0).code, 0);
  const Result r = run({"train-meta", "--zoo", path("zoo"), "--out", path("meta")});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(line_count(r.err), 1u);
  EXPECT_FALSE(fs::exists(dir_ / "meta/meta_state.json"));
}

TEST_F(CliTest, OneClassOnBenignOnlyZooSucceeds) {
  ASSERT_EQ(gen("zoo", 3, 0).code, 0);
  const Result r =
      run({"train-meta", "--zoo", path("zoo"), "--out", path("meta"), "--meta.mode=oneclass", "--meta.epochs=2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_meta_state_file(path("meta/meta_state.json")).mode, MetaMode::oneclass);
}

TEST_F(CliTest, MalformedManifestNamesTheLine) {
  ASSERT_EQ(gen("zoo", 1, 1).code, 0);
  const auto good = read_text_file(path("zoo/manifest.jsonl"));
  write_text_file(path("zoo/manifest.jsonl"), good + "{\"version\":1\n");
  const Result r = run({"train-meta", "--zoo", path("zoo"), "--out", path("meta")});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("manifest.jsonl:3:"), std::string::npos) << r.err;
}

TEST_F(CliTest, ScanReproducesInMemoryScoresAndFlagsBadTargets) {
  ASSERT_EQ(gen("zoo", 2, 2).code, 0);
  ASSERT_EQ(run({"train-meta", "--zoo", path("zoo"), "--out", path("meta"), "--meta.epochs=2"}).code, 0);
  const MetaState state = read_meta_state_file(path("meta/meta_state.json"));
  const std::string model = path("zoo/models/model_0002.json");
  const Network net = read_model_file(model);

  Result r = run({"scan", "--meta", path("meta/meta_state.json"), model});
  ASSERT_EQ(r.code, 0) << r.err;
  const double expected = detect(NetworkOracle(net), state);
  EXPECT_NE(r.out.find(model + "," + std::to_string(expected > 0 ? 1 : 0) + "," + format_double(expected)),
            std::string::npos)
      << r.out;

  write_model_file(path("wide.json"), fixtures_free_net());
  r = run({"scan", "--meta", path("meta/meta_state.json"), "--out", path("scan.csv"), model, path("wide.json"),
           path("missing.json")});
  EXPECT_EQ(r.code, 1);
  const auto csv = read_text_file(path("scan.csv"));
  EXPECT_EQ(line_count(csv), 4u);
  EXPECT_NE(csv.find(path("wide.json") + ",ERROR,"), std::string::npos);
  EXPECT_NE(csv.find(path("missing.json") + ",ERROR,"), std::string::npos);
}

TEST_F(CliTest, ScanWithNoTargetsPrintsHeaderOnly) {
  ASSERT_EQ(gen("zoo", 1, 1).code, 0);
  ASSERT_EQ(run({"train-meta", "--zoo", path("zoo"), "--out", path("meta"), "--meta.epochs=1"}).code, 0);
  const Result r = run({"scan", "--meta", path("meta/meta_state.json")});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "model_path,label,score\n");
}

TEST_F(CliTest, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"gen-zoo", "--meta.bogus=1"}).code, 2);
  EXPECT_EQ(run({"gen-zoo", "--no-such-flag"}).code, 2);
  EXPECT_EQ(run({"gen-zoo", "--config", path("absent.json")}).code, 2);
  EXPECT_EQ(run({"scan"}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}

}  // namespace
}  // namespace trojanscan
