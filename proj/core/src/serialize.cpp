#include "trojanscan/serialize.hpp"

#include <fmt/format.h>

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "trojanscan/errors.hpp"

namespace trojanscan {
namespace {

using nlohmann::json;

void append_array(std::string& out, std::span<const double> values) {
  out += '[';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i != 0) out += ',';
    out += format_double(values[i]);
  }
  out += ']';
}

void append_shape(std::string& out, const std::vector<std::size_t>& shape) {
  out += '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i != 0) out += ',';
    out += std::to_string(shape[i]);
  }
  out += ']';
}

void append_params(std::string& out, const Network& net) {
  const auto names = net.param_names();
  out += '{';
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i != 0) out += ',';
    out += fmt::format("\"{}\":{{\"shape\":", names[i]);
    append_shape(out, net.params()[i].shape);
    out += ",\"data\":";
    append_array(out, net.params()[i].data);
    out += '}';
  }
  out += '}';
}

void append_arch(std::string& out, const Architecture& arch) {
  out += '[';
  for (std::size_t i = 0; i < arch.size(); ++i) {
    if (i != 0) out += ',';
    if (const auto* a = std::get_if<Affine>(&arch[i])) {
      out += fmt::format("[\"affine\",{},{}]", a->in, a->out);
    } else {
      out += "[\"relu\"]";
    }
  }
  out += ']';
}

void check_version(const json& j) {
  if (!j.contains("version") || j.at("version").get<int>() != kFormatVersion) {
    throw IoError("unsupported or missing format version");
  }
}

Network network_from(const json& arch_j, const json& params_j) {
  Architecture arch;
  for (const auto& layer : arch_j) {
    const auto kind = layer.at(0).get<std::string>();
    if (kind == "affine") {
      arch.push_back(Affine{layer.at(1).get<std::size_t>(), layer.at(2).get<std::size_t>()});
    } else if (kind == "relu") {
      arch.push_back(Relu{});
    } else {
      throw IoError("unknown layer kind '" + kind + "'");
    }
  }
  Network net(std::move(arch));
  const auto names = net.param_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!params_j.contains(names[i])) throw IoError("missing parameter '" + names[i] + "'");
    const auto& pj = params_j.at(names[i]);
    auto shape = pj.at("shape").get<std::vector<std::size_t>>();
    auto data = pj.at("data").get<std::vector<double>>();
    if (shape != net.params()[i].shape) throw ShapeError("parameter '" + names[i] + "' has the wrong shape");
    net.params()[i] = Tensor(std::move(shape), std::move(data));
  }
  return net;
}

std::string setting_text(const TrojanSetting& s) {
  std::string mask;
  mask.reserve(s.mask.size());
  for (auto m : s.mask) mask += m != 0 ? '1' : '0';
  std::string out = fmt::format("{{\"mask\":\"{}\",\"pattern\":", mask);
  append_array(out, s.pattern);
  out += fmt::format(",\"alpha\":{},\"target_label\":{},\"poison_ratio\":{},\"goal\":\"{}\"}}", format_double(s.alpha),
                     s.target_label, format_double(s.poison_ratio), to_string(s.goal));
  return out;
}

TrojanSetting setting_from(const json& j) {
  TrojanSetting s;
  const auto mask = j.at("mask").get<std::string>();
  s.mask.reserve(mask.size());
  for (char ch : mask) {
    if (ch != '0' && ch != '1') throw IoError("mask string must be base-2");
    s.mask.push_back(ch == '1' ? 1 : 0);
  }
  s.pattern = j.at("pattern").get<std::vector<double>>();
  s.alpha = j.at("alpha").get<double>();
  s.target_label = j.at("target_label").get<int>();
  s.poison_ratio = j.at("poison_ratio").get<double>();
  s.goal = parse_attack_goal(j.at("goal").get<std::string>());
  return s;
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError(std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

std::string model_to_json(const Network& net, std::optional<std::uint64_t> master_seed) {
  std::string out = fmt::format("{{\"version\":{},", kFormatVersion);
  if (master_seed) out += fmt::format("\"master_seed\":{},", *master_seed);
  out += "\"arch\":";
  append_arch(out, net.architecture());
  out += ",\"params\":";
  append_params(out, net);
  out += "}\n";
  return out;
}

Network model_from_json(std::string_view text) {
  const json j = parse_json(text);
  try {
    check_version(j);
    return network_from(j.at("arch"), j.at("params"));
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed model file: ") + e.what());
  }
}

void write_model_file(const std::filesystem::path& path, const Network& net, std::optional<std::uint64_t> master_seed) {
  write_text_file(path, model_to_json(net, master_seed));
}

Network read_model_file(const std::filesystem::path& path) {
  try {
    return model_from_json(read_text_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::string setting_to_json(const TrojanSetting& s) { return setting_text(s); }

TrojanSetting setting_from_json(std::string_view text) {
  try {
    return setting_from(parse_json(text));
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed trojan setting: ") + e.what());
  }
}

std::string manifest_line(const ManifestEntry& e, std::uint64_t master_seed) {
  const json path = e.path;
  std::string out = fmt::format("{{\"version\":{},\"master_seed\":{},\"path\":{},\"label\":{},\"setting\":", kFormatVersion,
                                master_seed, path.dump(), e.label);
  out += e.setting ? setting_text(*e.setting) : "null";
  out += fmt::format(",\"train_acc\":{},\"test_acc\":{},\"asr\":{},\"seed\":{}}}", format_double(e.train_acc),
                     format_double(e.test_acc), e.asr ? format_double(*e.asr) : "null", e.seed);
  return out;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<ManifestEntry> out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      check_version(j);
      ManifestEntry e;
      e.path = j.at("path").get<std::string>();
      e.label = j.at("label").get<int>();
      if (e.label != 0 && e.label != 1) throw IoError("label must be 0 or 1");
      if (!j.at("setting").is_null()) e.setting = setting_from(j.at("setting"));
      if (e.setting.has_value() != (e.label == 1)) throw IoError("setting must be present iff label == 1");
      e.train_acc = j.at("train_acc").get<double>();
      e.test_acc = j.value("test_acc", 0.0);
      if (!j.at("asr").is_null()) e.asr = j.at("asr").get<double>();
      e.seed = j.at("seed").get<std::uint64_t>();
      out.push_back(std::move(e));
    } catch (const std::exception& ex) {
      throw IoError(fmt::format("{}:{}: {}", path.string(), lineno, ex.what()));
    }
  }
  return out;
}

std::string meta_state_to_json(const MetaState& state, std::uint64_t master_seed) {
  std::string out = fmt::format(
      "{{\"version\":{},\"master_seed\":{},\"mode\":\"{}\",\"k\":{},\"c\":{},\"d_x\":{},\"hidden\":{},\"queries\":[",
      kFormatVersion, master_seed, to_string(state.mode), state.k(), state.classes, state.queries.dim(),
      state.meta.hidden());
  for (std::size_t i = 0; i < state.k(); ++i) {
    if (i != 0) out += ',';
    append_array(out, state.queries.queries.row(i));
  }
  out += "],\"theta\":";
  append_params(out, state.meta.net);
  out += ",\"rho\":";
  out += state.rho ? format_double(*state.rho) : "null";
  out += "}\n";
  return out;
}

MetaState meta_state_from_json(std::string_view text) {
  const json j = parse_json(text);
  try {
    check_version(j);
    MetaState s;
    s.mode = parse_meta_mode(j.at("mode").get<std::string>());
    const auto k = j.at("k").get<std::size_t>();
    s.classes = j.at("c").get<std::size_t>();
    const auto d = j.at("d_x").get<std::size_t>();
    const auto hidden = j.at("hidden").get<std::size_t>();
    const auto& qj = j.at("queries");
    if (qj.size() != k) throw IoError("query count does not match k");
    std::vector<double> q;
    for (const auto& row : qj) {
      auto r = row.get<std::vector<double>>();
      if (r.size() != d) throw IoError("query width does not match d_x");
      q.insert(q.end(), r.begin(), r.end());
    }
    s.queries.queries = Tensor({k, d}, std::move(q));
    s.meta.net = network_from(json::array({json::array({"affine", s.classes * k, hidden}), json::array({"relu"}),
                                           json::array({"affine", hidden, 1})}),
                              j.at("theta"));
    if (!j.at("rho").is_null()) s.rho = j.at("rho").get<double>();
    if (s.mode == MetaMode::oneclass && !s.rho) throw IoError("one-class state needs rho");
    return s;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed meta state: ") + e.what());
  }
}

void write_meta_state_file(const std::filesystem::path& path, const MetaState& state, std::uint64_t master_seed) {
  write_text_file(path, meta_state_to_json(state, master_seed));
}

MetaState read_meta_state_file(const std::filesystem::path& path) {
  try {
    return meta_state_from_json(read_text_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::string detection_csv(const std::vector<DetectionRow>& rows) {
  std::string out = "model_path,label,score\n";
  for (const auto& r : rows) out += fmt::format("{},{},{}\n", r.model, r.label, format_double(r.score));
  return out;
}

std::string arms_race_csv(const ArmsRaceReport& report) {
  std::string out = "defense,attack,auc\n";
  out += fmt::format("plain,none,{}\n", format_double(report.plain_none.auc));
  out += fmt::format("plain,adaptive,{}\n", format_double(report.plain_adaptive.auc));
  out += fmt::format("robust,none,{}\n", format_double(report.robust_none.auc));
  out += fmt::format("robust,adaptive,{}\n", format_double(report.robust_adaptive.auc));
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace trojanscan
