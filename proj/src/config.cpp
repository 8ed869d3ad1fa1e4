#include "dialogctl/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>

namespace dialogctl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path.lexically_normal();
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

const json& section(const json& j, const char* key) {
  static const json empty = json::object();
  if (!j.contains(key)) return empty;
  const auto& s = j.at(key);
  if (!s.is_object()) throw ConfigError(std::string("config section '") + key + "' must be an object");
  return s;
}

double parse_double(const std::string& name, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty())
    throw ConfigError(name + ": not a number: '" + text + "'");
  return v;
}

}  // namespace

AppConfig config_from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config root must be an object");
  AppConfig c;

  const auto& server = section(j, "server");
  read(server, "host", c.host);
  read(server, "port", c.port);

  const auto& paths = section(j, "paths");
  for (auto [key, target] : {std::pair{"corpus", &c.corpus_path},
                             std::pair{"addressbook", &c.addressbook_path},
                             std::pair{"checkpoint", &c.checkpoint_path},
                             std::pair{"results", &c.results_dir}}) {
    std::string p;
    read(paths, key, p);
    if (!p.empty()) *target = resolve(base_dir, p);
  }

  const auto& model = section(j, "model");
  if (model.contains("kind")) {
    std::string kind;
    read(model, "kind", kind);
    try {
      c.kind = parse_model_kind(kind);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }
  read(model, "hidden_dim", c.hidden_dim);
  read(model, "seed", c.seed);

  const auto& sl = section(j, "sl");
  read(sl, "max_epochs", c.sl.max_epochs);
  read(sl, "plateau_epochs", c.sl.plateau_epochs);
  read(sl, "plateau_rel_tol", c.sl.plateau_rel_tol);

  const auto& rl = section(j, "rl");
  read(rl, "alpha", c.pg.alpha);
  read(rl, "log_eps", c.pg.eps);
  read(rl, "gamma", c.gamma);
  read(rl, "weight_clip", c.weight_clip);
  read(rl, "buffer_size", c.buffer_size);
  read(rl, "max_turns", c.max_turns);

  const auto& sim = section(j, "simulator");
  for (const auto& [key, _] : sim.items()) {
    bool known = false;
    for (const auto& f : phone::sim_param_fields()) known = known || key == f.name;
    if (!known) throw ConfigError("unknown simulator parameter '" + key + "'");
  }
  for (const auto& f : phone::sim_param_fields()) read(sim, f.name, c.sim.*f.member);

  try {
    c.sim.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (c.port < 0 || c.port > 65535) throw ConfigError("port out of range");
  if (c.hidden_dim == 0) throw ConfigError("hidden_dim must be positive");
  return c;
}

json config_to_json(const AppConfig& c) {
  json sim = json::object();
  for (const auto& f : phone::sim_param_fields()) sim[f.name] = c.sim.*f.member;
  return json{
      {"server", {{"host", c.host}, {"port", c.port}}},
      {"paths",
       {{"corpus", c.corpus_path.string()},
        {"addressbook", c.addressbook_path.string()},
        {"checkpoint", c.checkpoint_path.string()},
        {"results", c.results_dir.string()}}},
      {"model",
       {{"kind", std::string(to_string(c.kind))}, {"hidden_dim", c.hidden_dim}, {"seed", c.seed}}},
      {"sl",
       {{"max_epochs", c.sl.max_epochs},
        {"plateau_epochs", c.sl.plateau_epochs},
        {"plateau_rel_tol", c.sl.plateau_rel_tol}}},
      {"rl",
       {{"alpha", c.pg.alpha},
        {"log_eps", c.pg.eps},
        {"gamma", c.gamma},
        {"weight_clip", c.weight_clip},
        {"buffer_size", c.buffer_size},
        {"max_turns", c.max_turns}}},
      {"simulator", sim},
  };
}

AppConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

void apply_env_overrides(AppConfig& c, const EnvLookup& env) {
  if (auto v = env("DIALOGCTL_HOST")) c.host = *v;
  if (auto v = env("DIALOGCTL_PORT")) {
    const double port = parse_double("DIALOGCTL_PORT", *v);
    if (port < 0 || port > 65535 || port != static_cast<int>(port))
      throw ConfigError("DIALOGCTL_PORT out of range: " + *v);
    c.port = static_cast<int>(port);
  }
  if (auto v = env("DIALOGCTL_CORPUS")) c.corpus_path = *v;
  if (auto v = env("DIALOGCTL_ADDRESSBOOK")) c.addressbook_path = *v;
  if (auto v = env("DIALOGCTL_CHECKPOINT")) c.checkpoint_path = *v;
  if (auto v = env("DIALOGCTL_RESULTS")) c.results_dir = *v;
  for (const auto& f : phone::sim_param_fields()) {
    std::string name = "DIALOGCTL_SIM_";
    for (const char* p = f.name; *p; ++p)
      name += static_cast<char>(std::toupper(static_cast<unsigned char>(*p)));
    if (auto v = env(name)) c.sim.*f.member = parse_double(name, *v);
  }
  try {
    c.sim.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

}  // namespace dialogctl
