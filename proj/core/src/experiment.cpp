#include "trojanscan/experiment.hpp"

#include <fmt/format.h>

#include <cmath>
#include <json.hpp>

#include "trojanscan/errors.hpp"
#include "trojanscan/rng.hpp"
#include "trojanscan/serialize.hpp"

namespace trojanscan {
namespace {

using nlohmann::json;

std::string_view to_string(MalObjective o) noexcept { return o == MalObjective::softplus ? "softplus" : "score"; }

MalObjective parse_objective(std::string_view s) {
  if (s == "score") return MalObjective::score;
  if (s == "softplus") return MalObjective::softplus;
  throw InputError("unknown adaptive objective '" + std::string(s) + "'");
}

json optional_seed(const std::optional<std::uint64_t>& s) { return s ? json(*s) : json(nullptr); }

json to_json(const ExperimentConfig& c) {
  return json{
      {"master_seed", c.master_seed},
      {"jobs", c.jobs},
      {"task",
       {{"d_x", c.task.d_x},
        {"c", c.task.classes},
        {"n_attacker", c.task.n_attacker},
        {"n_defender", c.task.n_defender},
        {"noise_sigma", c.task.noise_sigma}}},
      {"training",
       {{"epochs", c.training.epochs},
        {"batch_size", c.training.batch_size},
        {"lr", c.training.adam.learning_rate},
        {"beta1", c.training.adam.beta1},
        {"beta2", c.training.adam.beta2},
        {"eps", c.training.adam.eps}}},
      {"zoo",
       {{"count_benign", c.zoo.count_benign},
        {"count_trojan", c.zoo.count_trojan},
        {"val_benign", c.zoo.val_benign},
        {"val_trojan", c.zoo.val_trojan},
        {"role", std::string(to_string(c.zoo.role))},
        {"attack", std::string(to_string(c.zoo.attack))},
        {"hidden", c.zoo.hidden}}},
      {"targets",
       {{"count_benign", c.targets.count_benign},
        {"count_trojan", c.targets.count_trojan},
        {"epochs", c.targets.epochs}}},
      {"meta",
       {{"k", c.meta.k},
        {"mode", std::string(to_string(c.meta.mode))},
        {"tune_queries", c.meta.tune_queries},
        {"nu", c.meta.nu},
        {"hidden", c.meta.hidden},
        {"epochs", c.meta.epochs},
        {"batch_size", c.meta.batch_size},
        {"lr", c.meta.learning_rate}}},
      {"arms_race",
       {{"lambda", c.arms_race.lambda},
        {"objective", std::string(to_string(c.arms_race.objective))},
        {"defender_seed", optional_seed(c.arms_race.defender_seed)},
        {"attacker_seed", optional_seed(c.arms_race.attacker_seed)},
        {"theta_scale", c.arms_race.theta_scale},
        {"robust_epochs", c.arms_race.robust_epochs},
        {"robust_lr", c.arms_race.robust_learning_rate},
        {"shadow_benign", c.arms_race.shadow_benign},
        {"shadow_trojan", c.arms_race.shadow_trojan}}},
      {"io", {{"output_dir", c.output_dir.string()}}},
  };
}

std::optional<std::uint64_t> seed_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<std::uint64_t>();
}

ExperimentConfig from_json(const json& j) {
  ExperimentConfig c;
  c.master_seed = j.at("master_seed").get<std::uint64_t>();
  c.jobs = j.at("jobs").get<std::size_t>();
  const auto& t = j.at("task");
  c.task = {t.at("d_x").get<std::size_t>(), t.at("c").get<std::size_t>(), t.at("n_attacker").get<std::size_t>(),
            t.at("n_defender").get<std::size_t>(), t.at("noise_sigma").get<double>()};
  const auto& tr = j.at("training");
  c.training.epochs = tr.at("epochs").get<std::size_t>();
  c.training.batch_size = tr.at("batch_size").get<std::size_t>();
  c.training.adam = {tr.at("lr").get<double>(), tr.at("beta1").get<double>(), tr.at("beta2").get<double>(),
                     tr.at("eps").get<double>()};
  const auto& z = j.at("zoo");
  c.zoo = {z.at("count_benign").get<std::size_t>(),
           z.at("count_trojan").get<std::size_t>(),
           z.at("val_benign").get<std::size_t>(),
           z.at("val_trojan").get<std::size_t>(),
           parse_zoo_role(z.at("role").get<std::string>()),
           parse_attack_kind(z.at("attack").get<std::string>()),
           z.at("hidden").get<std::size_t>()};
  const auto& tg = j.at("targets");
  c.targets = {tg.at("count_benign").get<std::size_t>(), tg.at("count_trojan").get<std::size_t>(),
               tg.at("epochs").get<std::size_t>()};
  const auto& m = j.at("meta");
  c.meta = {m.at("k").get<std::size_t>(),          parse_meta_mode(m.at("mode").get<std::string>()),
            m.at("tune_queries").get<bool>(),      m.at("nu").get<double>(),
            m.at("hidden").get<std::size_t>(),     m.at("epochs").get<std::size_t>(),
            m.at("batch_size").get<std::size_t>(), m.at("lr").get<double>()};
  const auto& a = j.at("arms_race");
  c.arms_race = {a.at("lambda").get<double>(),
                 parse_objective(a.at("objective").get<std::string>()),
                 seed_from(a.at("defender_seed")),
                 seed_from(a.at("attacker_seed")),
                 a.at("theta_scale").get<double>(),
                 a.at("robust_epochs").get<std::size_t>(),
                 a.at("robust_lr").get<double>(),
                 a.at("shadow_benign").get<std::size_t>(),
                 a.at("shadow_trojan").get<std::size_t>()};
  c.output_dir = j.at("io").at("output_dir").get<std::string>();
  return c;
}

// Every key in `user` must already exist in `base`.
void check_known_keys(const json& base, const json& user, const std::string& prefix) {
  for (const auto& [key, value] : user.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key)) throw InputError("unknown config key '" + path + "'");
    if (value.is_object()) {
      if (!base.at(key).is_object()) throw InputError("config key '" + path + "' is not a section");
      check_known_keys(base.at(key), value, path);
    }
  }
}

// Recursive overwrite; unlike RFC 7386 merge patches, null is kept as a value.
void merge_into(json& base, const json& user) {
  for (const auto& [key, value] : user.items()) {
    if (value.is_object() && base[key].is_object()) {
      merge_into(base[key], value);
    } else {
      base[key] = value;
    }
  }
}

void apply_override(json& cfg, const std::string& assignment) {
  std::string text = assignment;
  if (text.rfind("--", 0) == 0) text.erase(0, 2);
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw InputError("override '" + assignment + "' must look like key.path=value");
  const std::string path = text.substr(0, eq);
  const std::string raw = text.substr(eq + 1);

  json* node = &cfg;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(key)) throw InputError("unknown config key '" + path + "'");
    node = &(*node)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (node->is_object()) throw InputError("cannot override section '" + path + "' with a scalar");
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  *node = std::move(value);
}

std::string kind_stream(AttackKind kind) { return "targets-" + std::string(to_string(kind)); }

template <typename F>
auto stage(const std::string& name, const std::function<void(const std::string&)>& log, F&& f) {
  try {
    auto r = f();
    if (log) log("stage " + name + " done");
    return r;
  } catch (const std::exception& e) {
    throw std::runtime_error("stage '" + name + "' failed: " + e.what());
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (task.n_attacker == 0 || task.n_defender == 0) throw InputError("task dataset sizes must be positive");
  if (jobs == 0) throw InputError("jobs must be at least 1");
  training.validate();
  if (targets.epochs == 0 && training.epochs == 0) throw InputError("epochs must be positive");
  if (meta.k == 0) throw InputError("meta.k must be positive");
  if (!(meta.nu > 0.0 && meta.nu < 1.0)) throw InputError("meta.nu must lie in (0, 1)");
  if (!(arms_race.lambda >= 0.0)) throw InputError("arms_race.lambda must be non-negative");
  if (!(arms_race.theta_scale > 0.0)) throw InputError("arms_race.theta_scale must be positive");
  if (arms_race.robust_epochs == 0 || !(arms_race.robust_learning_rate > 0.0)) {
    throw InputError("arms_race robust query tuning needs positive epochs and learning rate");
  }
  if (arms_race.defender_seed && arms_race.attacker_seed && *arms_race.defender_seed == *arms_race.attacker_seed) {
    throw InputError("arms_race seeds must differ");
  }
  // Constructing the task checks d_x and c.
  (void)SyntheticTask(0, task.d_x, task.classes, task.noise_sigma);
  if (static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(task.d_x)))) < 5) {
    throw InputError("task.d_x must be at least 25 so 5x5 triggers fit on the grid");
  }
}

ExperimentConfig load_config(const std::optional<std::filesystem::path>& file, const std::vector<std::string>& overrides,
                             const char* env_seed) {
  json cfg = to_json(ExperimentConfig{});
  try {
    if (file) {
      json user = json::parse(read_text_file(*file));
      if (!user.is_object()) throw InputError("config file must contain a JSON object");
      check_known_keys(cfg, user, "");
      merge_into(cfg, user);
    }
    for (const auto& o : overrides) apply_override(cfg, o);
    if (env_seed != nullptr && *env_seed != '\0') {
      cfg["master_seed"] = std::stoull(env_seed);
    }
    ExperimentConfig out = from_json(cfg);
    out.validate();
    return out;
  } catch (const json::exception& e) {
    throw InputError(std::string("invalid config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("invalid config: ") + e.what());
  } catch (const std::out_of_range& e) {
    throw InputError(std::string("invalid config: ") + e.what());
  }
}

std::string config_to_json(const ExperimentConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

TaskData make_task_data(const ExperimentConfig& cfg) {
  SyntheticTask task(derive_seed(cfg.master_seed, "task"), cfg.task.d_x, cfg.task.classes, cfg.task.noise_sigma);
  Dataset defender = task.sample(derive_seed(cfg.master_seed, "defender-data"), cfg.task.n_defender);
  Dataset attacker = task.sample(derive_seed(cfg.master_seed, "attacker-data"), cfg.task.n_attacker);
  return {std::move(task), std::move(defender), std::move(attacker)};
}

ZooSpec defender_zoo_spec(const ExperimentConfig& cfg, std::size_t count_benign, std::size_t count_trojan,
                          std::string_view stream) {
  ZooSpec spec;
  spec.count_benign = count_benign;
  spec.count_trojan = count_trojan;
  spec.role = ZooRole::defender;
  spec.base_seed = derive_seed(cfg.master_seed, stream);
  spec.train = cfg.training;
  spec.hidden = cfg.zoo.hidden;
  spec.jobs = cfg.jobs;
  return spec;
}

std::vector<ShadowRecord> build_shadow_zoo(const ExperimentConfig& cfg, const TaskData& data) {
  return generate_zoo(data.task, data.defender,
                      defender_zoo_spec(cfg, cfg.zoo.count_benign, cfg.zoo.count_trojan, "shadow-zoo"));
}

std::vector<ShadowRecord> build_validation_zoo(const ExperimentConfig& cfg, const TaskData& data) {
  return generate_zoo(data.task, data.defender,
                      defender_zoo_spec(cfg, cfg.zoo.val_benign, cfg.zoo.val_trojan, "validation-zoo"));
}

namespace {

ZooSpec target_spec(const ExperimentConfig& cfg, std::size_t benign, std::size_t trojan, std::string_view stream) {
  ZooSpec spec;
  spec.count_benign = benign;
  spec.count_trojan = trojan;
  spec.role = ZooRole::attacker;
  spec.base_seed = derive_seed(cfg.master_seed, stream);
  spec.train = cfg.training;
  spec.train.epochs = cfg.targets.epochs;
  spec.hidden = cfg.zoo.hidden;
  spec.jobs = cfg.jobs;
  return spec;
}

}  // namespace

std::vector<ShadowRecord> build_benign_targets(const ExperimentConfig& cfg, const TaskData& data) {
  return generate_zoo(data.task, data.attacker, target_spec(cfg, cfg.targets.count_benign, 0, "targets-benign"));
}

std::vector<ShadowRecord> build_trojan_targets(const ExperimentConfig& cfg, const TaskData& data, AttackKind kind) {
  ZooSpec spec = target_spec(cfg, 0, cfg.targets.count_trojan, kind_stream(kind));
  spec.attack = kind;
  return generate_zoo(data.task, data.attacker, spec);
}

MetaTrainConfig meta_train_config(const ExperimentConfig& cfg, bool tune_queries) {
  MetaTrainConfig mc;
  mc.k = cfg.meta.k;
  mc.hidden = cfg.meta.hidden;
  mc.epochs = cfg.meta.epochs;
  mc.batch_size = cfg.meta.batch_size;
  mc.adam = cfg.training.adam;
  mc.adam.learning_rate = cfg.meta.learning_rate;
  mc.tune_queries = tune_queries;
  mc.seed = derive_seed(cfg.master_seed, "meta");
  return mc;
}

MetaState train_jumbo_state(const ExperimentConfig& cfg, std::span<const ShadowRecord> zoo, bool tune_queries) {
  auto r = meta_train_jumbo(zoo, meta_train_config(cfg, tune_queries));
  return MetaState{MetaMode::jumbo, std::move(r.meta), std::move(r.queries), zoo.front().model.output_width(),
                   std::nullopt};
}

MetaState train_oneclass_state(const ExperimentConfig& cfg, std::span<const ShadowRecord> zoo) {
  std::vector<ShadowRecord> benign;
  for (const auto& r : zoo) {
    if (!r.trojaned) benign.push_back(r);
  }
  if (benign.empty()) throw InputError("one-class training needs benign shadow models");
  OneClassConfig oc{meta_train_config(cfg, cfg.meta.tune_queries), cfg.meta.nu};
  return to_meta_state(meta_train_oneclass(benign, oc), benign.front().model.output_width());
}

DetectionReport score_records(const MetaState& state, std::span<const ShadowRecord> benign,
                              std::span<const ShadowRecord> trojan) {
  std::vector<DetectionRow> rows;
  for (std::size_t i = 0; i < benign.size(); ++i) {
    rows.push_back({fmt::format("benign-{}", i), 0, detect(NetworkOracle(benign[i].model), state)});
  }
  for (std::size_t i = 0; i < trojan.size(); ++i) {
    rows.push_back({fmt::format("trojan-{}", i), 1, detect(NetworkOracle(trojan[i].model), state)});
  }
  return DetectionReport::from_rows(std::move(rows), detection_threshold(state.mode));
}

ArmsRaceConfig arms_race_config(const ExperimentConfig& cfg) {
  ArmsRaceConfig ac;
  ac.defender_seed = cfg.arms_race.defender_seed.value_or(derive_seed(cfg.master_seed, "arms-defender"));
  ac.attacker_seed = cfg.arms_race.attacker_seed.value_or(derive_seed(cfg.master_seed, "arms-attacker"));
  ac.attack = AttackKind::modification;
  ac.count_benign = cfg.targets.count_benign;
  ac.count_trojan = cfg.targets.count_trojan;
  ac.adaptive.lambda = cfg.arms_race.lambda;
  ac.adaptive.objective = cfg.arms_race.objective;
  ac.adaptive.train = cfg.training;
  ac.adaptive.train.epochs = cfg.targets.epochs;
  ac.adaptive.hidden = cfg.zoo.hidden;
  ac.robust.meta = meta_train_config(cfg, true);
  ac.robust.theta_scale = cfg.arms_race.theta_scale;
  ac.robust.meta.epochs = cfg.arms_race.robust_epochs;
  ac.robust.meta.adam.learning_rate = cfg.arms_race.robust_learning_rate;
  ac.attacker_shadow_zoo = defender_zoo_spec(cfg, cfg.arms_race.shadow_benign, cfg.arms_race.shadow_trojan, "unused");
  ac.attacker_shadow_data = cfg.task.n_defender;
  ac.jobs = cfg.jobs;
  return ac;
}

EvalTable run_eval(const ExperimentConfig& cfg, const std::function<void(const std::string&)>& log) {
  EvalTable table;
  table.master_seed = cfg.master_seed;
  const TaskData data = stage("task", log, [&] { return make_task_data(cfg); });
  const auto zoo = stage("shadow-zoo", log, [&] { return build_shadow_zoo(cfg, data); });
  const auto benign = stage("benign-targets", log, [&] { return build_benign_targets(cfg, data); });

  const MetaState tuned = stage("meta-jumbo-tuned", log, [&] { return train_jumbo_state(cfg, zoo, true); });
  const MetaState untuned = stage("meta-jumbo-untuned", log, [&] { return train_jumbo_state(cfg, zoo, false); });
  const MetaState oneclass = stage("meta-oneclass", log, [&] { return train_oneclass_state(cfg, zoo); });

  for (AttackKind kind : {AttackKind::modification, AttackKind::blending, AttackKind::all_to_all}) {
    const std::string name(to_string(kind));
    const auto trojans = stage("targets-" + name, log, [&] { return build_trojan_targets(cfg, data, kind); });
    table.rows.push_back({"jumbo-tuned", name, score_records(tuned, benign, trojans).auc});
    table.rows.push_back({"jumbo-untuned", name, score_records(untuned, benign, trojans).auc});
    table.rows.push_back({"oneclass", name, score_records(oneclass, benign, trojans).auc});
  }

  const auto arms = stage("arms-race", log, [&] {
    return evaluate_arms_race(data.task, data.attacker, zoo, tuned, arms_race_config(cfg));
  });
  table.rows.push_back({"plain", "none", arms.plain_none.auc});
  table.rows.push_back({"plain", "adaptive", arms.plain_adaptive.auc});
  table.rows.push_back({"robust", "none", arms.robust_none.auc});
  table.rows.push_back({"robust", "adaptive", arms.robust_adaptive.auc});
  return table;
}

std::string eval_csv(const EvalTable& table) {
  std::string out = "detector,attack,auc,master_seed\n";
  for (const auto& r : table.rows) {
    out += fmt::format("{},{},{},{}\n", r.detector, r.attack, format_double(r.auc), table.master_seed);
  }
  return out;
}

}  // namespace trojanscan
