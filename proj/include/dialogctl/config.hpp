#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include <json.hpp>

#include "dialogctl/model.hpp"
#include "dialogctl/phone/user_sim.hpp"
#include "dialogctl/rl_trainer.hpp"
#include "dialogctl/sl_trainer.hpp"

namespace dialogctl {

// Global configuration. File layout (JSON, every key optional):
//   {
//     "server":   {"host": "127.0.0.1", "port": 8080},
//     "paths":    {"corpus": "...", "addressbook": "...", "checkpoint": "...",
//                  "results": "..."},
//     "model":    {"kind": "lstm", "hidden_dim": 32, "seed": 0},
//     "sl":       {"max_epochs": 2000, "plateau_epochs": 100, "plateau_rel_tol": 1e-4},
//     "rl":       {"alpha": 1.0, "log_eps": 1e-8, "gamma": 0.95, "weight_clip": 10,
//                  "buffer_size": 100, "max_turns": 20},
//     "simulator": {"p_use_nickname": 0.5, ...}
//   }
// Relative paths are resolved against the directory holding the file.
struct AppConfig {
  std::string host = "127.0.0.1";
  int port = 8080;

  std::filesystem::path corpus_path;
  std::filesystem::path addressbook_path;
  std::filesystem::path checkpoint_path;
  std::filesystem::path results_dir;

  ModelKind kind = ModelKind::LSTM;
  std::size_t hidden_dim = 32;
  std::uint64_t seed = 0;

  SlOptions sl;

  PgOptions pg;
  double gamma = 0.95;
  double weight_clip = 10.0;
  std::size_t buffer_size = 100;
  std::size_t max_turns = 20;

  phone::SimParams sim;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

AppConfig config_from_json(const nlohmann::json& j,
                           const std::filesystem::path& base_dir = {});
nlohmann::json config_to_json(const AppConfig& config);

AppConfig load_config(const std::filesystem::path& path);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Reads DIALOGCTL_HOST, DIALOGCTL_PORT, DIALOGCTL_CORPUS, DIALOGCTL_ADDRESSBOOK,
/// DIALOGCTL_CHECKPOINT, DIALOGCTL_RESULTS and DIALOGCTL_SIM_<NAME> for each
/// simulator probability (upper case, e.g. DIALOGCTL_SIM_P_OOV_NAME).
void apply_env_overrides(AppConfig& config, const EnvLookup& env);

/// Lookup backed by the process environment.
std::optional<std::string> process_env(const std::string& name);

}  // namespace dialogctl
