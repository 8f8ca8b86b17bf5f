#include "trojanscan_cli/cli.hpp"

#include <fmt/format.h>

#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <optional>
#include <ostream>
#include <set>

#include "trojanscan/errors.hpp"
#include "trojanscan/experiment.hpp"
#include "trojanscan/serialize.hpp"

namespace trojanscan::cli {
namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config_file;
  std::optional<std::size_t> jobs;
  std::vector<std::string> overrides;
};

ExperimentConfig resolve_config(const Options& opts, const char* env_seed) {
  std::optional<fs::path> file;
  if (!opts.config_file.empty()) file = opts.config_file;
  std::vector<std::string> overrides = opts.overrides;
  if (opts.jobs) overrides.push_back(fmt::format("jobs={}", *opts.jobs));
  return load_config(file, overrides, env_seed);
}

std::string model_file_name(std::size_t index) { return fmt::format("models/model_{:04d}.json", index); }

fs::path manifest_path_of(const fs::path& zoo) {
  return fs::is_directory(zoo) ? zoo / "manifest.jsonl" : zoo;
}

std::vector<ShadowRecord> load_zoo(const fs::path& zoo) {
  const fs::path manifest = manifest_path_of(zoo);
  const fs::path root = manifest.parent_path();
  std::vector<ShadowRecord> records;
  for (const auto& e : read_manifest(manifest)) {
    ShadowRecord r;
    const fs::path p = fs::path(e.path).is_absolute() ? fs::path(e.path) : root / e.path;
    r.model = read_model_file(p);
    r.trojaned = e.label == 1;
    r.setting = e.setting;
    r.train_accuracy = e.train_acc;
    r.test_accuracy = e.test_acc;
    r.asr = e.asr;
    r.seed = e.seed;
    records.push_back(std::move(r));
  }
  return records;
}

int gen_zoo(const ExperimentConfig& cfg, const std::string& out_dir, std::ostream& err) {
  const fs::path dir = out_dir.empty() ? cfg.output_dir / "zoo" : fs::path(out_dir);
  const TaskData data = make_task_data(cfg);
  std::vector<ShadowRecord> zoo;
  if (cfg.zoo.role == ZooRole::defender) {
    zoo = build_shadow_zoo(cfg, data);
  } else {
    ZooSpec spec = defender_zoo_spec(cfg, cfg.zoo.count_benign, cfg.zoo.count_trojan, "attacker-zoo");
    spec.role = ZooRole::attacker;
    spec.attack = cfg.zoo.attack;
    zoo = generate_zoo(data.task, data.attacker, spec);
  }
  std::string manifest;
  for (std::size_t i = 0; i < zoo.size(); ++i) {
    const auto& r = zoo[i];
    const std::string rel = model_file_name(i);
    write_model_file(dir / rel, r.model, cfg.master_seed);
    ManifestEntry e{rel, r.trojaned ? 1 : 0, r.setting, r.train_accuracy, r.test_accuracy, r.asr, r.seed};
    manifest += manifest_line(e, cfg.master_seed);
    manifest += '\n';
  }
  write_text_file(dir / "manifest.jsonl", manifest);
  err << fmt::format("wrote {} models to {}\n", zoo.size(), dir.string());
  return kSuccess;
}

int train_meta(const ExperimentConfig& cfg, const std::string& zoo_path, const std::string& out_dir,
               std::ostream& err) {
  if (zoo_path.empty()) throw UsageError("train-meta needs --zoo");
  const fs::path dir = out_dir.empty() ? cfg.output_dir / "meta" : fs::path(out_dir);
  const auto zoo = load_zoo(zoo_path);
  if (zoo.empty()) throw InputError("zoo '" + zoo_path + "' has no models");
  const std::size_t classes = zoo.front().model.output_width();

  MetaState state;
  std::vector<double> trace;
  if (cfg.meta.mode == MetaMode::jumbo) {
    std::set<bool> labels;
    for (const auto& r : zoo) labels.insert(r.trojaned);
    if (labels.size() < 2) throw InputError("jumbo meta-training needs both benign and trojaned models in the zoo");
    auto r = meta_train_jumbo(zoo, meta_train_config(cfg, cfg.meta.tune_queries));
    trace = r.trace;
    state = MetaState{MetaMode::jumbo, std::move(r.meta), std::move(r.queries), classes, std::nullopt};
  } else {
    std::vector<ShadowRecord> benign;
    for (const auto& r : zoo) {
      if (!r.trojaned) benign.push_back(r);
    }
    if (benign.empty()) throw InputError("one-class meta-training needs benign models in the zoo");
    auto r = meta_train_oneclass(benign, OneClassConfig{meta_train_config(cfg, cfg.meta.tune_queries), cfg.meta.nu});
    trace = r.trace;
    state = to_meta_state(r, classes);
  }

  write_meta_state_file(dir / "meta_state.json", state, cfg.master_seed);
  std::string csv = "epoch,loss\n";
  for (std::size_t e = 0; e < trace.size(); ++e) csv += fmt::format("{},{}\n", e + 1, format_double(trace[e]));
  write_text_file(dir / "trace.csv", csv);
  err << fmt::format("wrote {} and {}\n", (dir / "meta_state.json").string(), (dir / "trace.csv").string());
  return kSuccess;
}

int scan(const std::string& meta_path, const std::vector<std::string>& targets, const std::string& out_file,
         std::ostream& out, std::ostream& err) {
  if (meta_path.empty()) throw UsageError("scan needs --meta");
  const MetaState state = read_meta_state_file(meta_path);
  const double threshold = detection_threshold(state.mode);

  std::string csv = "model_path,label,score\n";
  std::size_t failures = 0;
  for (const auto& path : targets) {
    try {
      const Network model = read_model_file(path);
      const double score = detect(NetworkOracle(model), state);
      csv += fmt::format("{},{},{}\n", path, score > threshold ? 1 : 0, format_double(score));
    } catch (const std::exception& e) {
      ++failures;
      csv += fmt::format("{},ERROR,\n", path);
      err << e.what() << "\n";
    }
  }
  if (out_file.empty()) {
    out << csv;
  } else {
    write_text_file(out_file, csv);
  }
  return failures == 0 ? kSuccess : kItemFailures;
}

int eval(const ExperimentConfig& cfg, const std::string& out_file, std::ostream& err) {
  const fs::path path = out_file.empty() ? cfg.output_dir / "eval.csv" : fs::path(out_file);
  const auto start = std::chrono::steady_clock::now();
  const auto log = [&](const std::string& line) {
    const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    err << fmt::format("[{:7.1f}s] {}\n", t, line);
  };
  const EvalTable table = run_eval(cfg, log);
  write_text_file(path, eval_csv(table));
  err << fmt::format("wrote {}\n", path.string());
  return kSuccess;
}

int arms_race(const ExperimentConfig& cfg, const std::string& out_file, std::ostream& err) {
  const fs::path path = out_file.empty() ? cfg.output_dir / "arms_race.csv" : fs::path(out_file);
  const TaskData data = make_task_data(cfg);
  const auto zoo = build_shadow_zoo(cfg, data);
  const MetaState plain = train_jumbo_state(cfg, zoo, true);
  const ArmsRaceConfig ac = arms_race_config(cfg);
  const ArmsRaceReport report = evaluate_arms_race(data.task, data.attacker, zoo, plain, ac);
  write_text_file(path, arms_race_csv(report));
  err << fmt::format("wrote {} (defender seed {}, attacker seed {})\n", path.string(), ac.defender_seed,
                     ac.attacker_seed);
  return kSuccess;
}

// Anything CLI11 did not recognise must be a dotted override such as --meta.k=10.
std::vector<std::string> collect_overrides(const std::vector<std::string>& extras) {
  std::vector<std::string> overrides;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& a = extras[i];
    if (a.rfind("--", 0) != 0 || a.find('.') == std::string::npos) {
      throw UsageError("unrecognised argument '" + a + "'");
    }
    if (a.find('=') != std::string::npos) {
      overrides.push_back(a.substr(2));
    } else if (i + 1 < extras.size()) {
      overrides.push_back(a.substr(2) + "=" + extras[++i]);
    } else {
      throw UsageError("override '" + a + "' has no value");
    }
  }
  return overrides;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const char* env_seed) {
  CLI::App app{"Trojan detection for neural networks via meta neural analysis", "trojanscan"};
  app.require_subcommand(1);
  app.allow_extras();

  Options opts;
  std::size_t jobs = 0;
  app.add_option("--config", opts.config_file, "JSON config file")->check(CLI::ExistingFile);
  auto* jobs_opt = app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  std::string out_path;
  std::string zoo_path;
  std::string meta_path;
  std::vector<std::string> targets;

  auto* gen = app.add_subcommand("gen-zoo", "Generate a shadow model zoo")->fallthrough()->allow_extras();
  gen->add_option("--out", out_path, "Output directory (default <output_dir>/zoo)");
  auto* train = app.add_subcommand("train-meta", "Train a meta-classifier on a zoo")->fallthrough()->allow_extras();
  train->add_option("--zoo", zoo_path, "Zoo directory or manifest.jsonl");
  train->add_option("--out", out_path, "Output directory (default <output_dir>/meta)");
  auto* scan_cmd = app.add_subcommand("scan", "Score target models")->fallthrough()->allow_extras();
  scan_cmd->add_option("--meta", meta_path, "meta_state.json");
  scan_cmd->add_option("--out", out_path, "CSV output file (default stdout)");
  scan_cmd->add_option("targets", targets, "Target model files");
  auto* eval_cmd = app.add_subcommand("eval", "End-to-end AUC table")->fallthrough()->allow_extras();
  eval_cmd->add_option("--out", out_path, "CSV output file (default <output_dir>/eval.csv)");
  auto* arms = app.add_subcommand("arms-race", "Adaptive attack vs MNTD-robust")->fallthrough()->allow_extras();
  arms->add_option("--out", out_path, "CSV output file (default <output_dir>/arms_race.csv)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  }

  try {
    if (jobs_opt->count() > 0) opts.jobs = jobs;
    opts.overrides = collect_overrides(app.remaining(true));
    if (scan_cmd->parsed()) {
      if (!opts.overrides.empty() || !opts.config_file.empty()) {
        // scan is driven entirely by the meta state file; validate flags anyway.
        (void)resolve_config(opts, env_seed);
      }
      return scan(meta_path, targets, out_path, out, err);
    }
    const ExperimentConfig cfg = resolve_config(opts, env_seed);
    if (gen->parsed()) return gen_zoo(cfg, out_path, err);
    if (train->parsed()) return train_meta(cfg, zoo_path, out_path, err);
    if (eval_cmd->parsed()) return eval(cfg, out_path, err);
    return arms_race(cfg, out_path, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kItemFailures;
  }
}

}  // namespace trojanscan::cli
