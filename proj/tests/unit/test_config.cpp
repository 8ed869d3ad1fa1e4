#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "dialogctl/config.hpp"

using namespace dialogctl;
using nlohmann::json;

namespace {

EnvLookup env_of(std::map<std::string, std::string> vars) {
  return [vars](const std::string& k) -> std::optional<std::string> {
    const auto it = vars.find(k);
    if (it == vars.end()) return std::nullopt;
    return it->second;
  };
}

}  // namespace

TEST_CASE("empty config gives the defaults") {
  const auto c = config_from_json(json::object());
  CHECK(c.host == "127.0.0.1");
  CHECK(c.port == 8080);
  CHECK(c.kind == ModelKind::LSTM);
  CHECK(c.hidden_dim == 32);
  CHECK(c.gamma == 0.95);
  CHECK(c.weight_clip == 10.0);
  CHECK(c.buffer_size == 100);
  CHECK(c.sim == phone::SimParams{});
}

TEST_CASE("config sections are read and paths resolved") {
  const json j = {
      {"server", {{"host", "0.0.0.0"}, {"port", 9000}}},
      {"paths", {{"corpus", "data/c.dlg"}, {"checkpoint", "/abs/model.ckpt"}}},
      {"model", {{"kind", "rnn"}, {"hidden_dim", 16}, {"seed", 7}}},
      {"sl", {{"max_epochs", 50}}},
      {"rl", {{"alpha", 0.5}, {"buffer_size", 20}, {"max_turns", 12}}},
      {"simulator", {{"p_oov_name", 0.25}}},
  };
  const auto c = config_from_json(j, "/etc/dialogctl");
  CHECK(c.host == "0.0.0.0");
  CHECK(c.port == 9000);
  CHECK(c.corpus_path == std::filesystem::path("/etc/dialogctl/data/c.dlg"));
  CHECK(c.checkpoint_path == std::filesystem::path("/abs/model.ckpt"));
  CHECK(c.kind == ModelKind::RNN);
  CHECK(c.hidden_dim == 16);
  CHECK(c.seed == 7);
  CHECK(c.sl.max_epochs == 50);
  CHECK(c.pg.alpha == 0.5);
  CHECK(c.buffer_size == 20);
  CHECK(c.max_turns == 12);
  CHECK(c.sim.p_oov_name == 0.25);
  CHECK(c.sim.p_use_nickname == phone::SimParams{}.p_use_nickname);
}

TEST_CASE("config round trips through JSON") {
  auto c = config_from_json({{"model", {{"kind", "dnn"}}}, {"simulator", {{"p_accept_offer", 0.1}}}});
  c.corpus_path = "/x/c.dlg";
  const auto back = config_from_json(config_to_json(c));
  CHECK(back.kind == ModelKind::DNN);
  CHECK(back.sim == c.sim);
  CHECK(back.corpus_path == c.corpus_path);
  CHECK(config_to_json(back) == config_to_json(c));
}

TEST_CASE("bad config values are rejected") {
  CHECK_THROWS_AS(config_from_json(json::array()), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"server", 5}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"server", {{"port", 70000}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"server", {{"port", "http"}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"model", {{"kind", "gru"}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"model", {{"hidden_dim", 0}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"simulator", {{"p_fly", 0.5}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"simulator", {{"p_oov_name", 2.0}}}}), ConfigError);
}

TEST_CASE("environment overrides") {
  AppConfig c;
  apply_env_overrides(c, env_of({{"DIALOGCTL_HOST", "10.0.0.1"},
                                 {"DIALOGCTL_PORT", "1234"},
                                 {"DIALOGCTL_CORPUS", "/data/c.dlg"},
                                 {"DIALOGCTL_RESULTS", "/tmp/r"},
                                 {"DIALOGCTL_SIM_P_OOV_NAME", "0.4"},
                                 {"DIALOGCTL_SIM_P_GIVE_UP_ON_CONFUSION", "0"}}));
  CHECK(c.host == "10.0.0.1");
  CHECK(c.port == 1234);
  CHECK(c.corpus_path == std::filesystem::path("/data/c.dlg"));
  CHECK(c.results_dir == std::filesystem::path("/tmp/r"));
  CHECK(c.sim.p_oov_name == 0.4);
  CHECK(c.sim.p_give_up_on_confusion == 0.0);

  AppConfig d;
  CHECK_THROWS_AS(apply_env_overrides(d, env_of({{"DIALOGCTL_PORT", "x"}})), ConfigError);
  CHECK_THROWS_AS(apply_env_overrides(d, env_of({{"DIALOGCTL_PORT", "99999"}})), ConfigError);
  CHECK_THROWS_AS(apply_env_overrides(d, env_of({{"DIALOGCTL_SIM_P_OOV_NAME", "1.5"}})),
                  ConfigError);
  AppConfig e;
  apply_env_overrides(e, env_of({}));
  CHECK(config_to_json(e) == config_to_json(AppConfig{}));
}

TEST_CASE("load_config reads a file and reports errors with the path") {
  const auto dir = std::filesystem::temp_directory_path() / "dialogctl_cfg_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "good.json") << R"({"paths": {"corpus": "c.dlg"}})";
    std::ofstream(dir / "bad.json") << "{ nope";
  }
  CHECK(load_config(dir / "good.json").corpus_path == dir / "c.dlg");
  CHECK_THROWS_AS(load_config(dir / "bad.json"), ConfigError);
  CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("shipped default config loads") {
  const auto c = load_config(DIALOGCTL_DATA_DIR "/../config/default.json");
  CHECK(std::filesystem::exists(c.corpus_path));
  CHECK(std::filesystem::exists(c.addressbook_path));
  CHECK(c.sim == phone::SimParams{});
}
