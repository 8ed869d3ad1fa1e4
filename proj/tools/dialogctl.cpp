// dialogctl: training, evaluation and serving front end.

#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "dialogctl/checkpoint.hpp"
#include "dialogctl/config.hpp"
#include "dialogctl/http_api.hpp"
#include "dialogctl/phone/experiments.hpp"
#include "dialogctl/phone/scripted_policy.hpp"
#include "dialogctl/report.hpp"
#include "dialogctl/service.hpp"

namespace fs = std::filesystem;
using namespace dialogctl;

namespace {

struct Common {
  std::string config_path;
  std::string corpus;
  std::string addressbook;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string model = "lstm";
  std::size_t hidden = 0;
  bool serial = false;
  std::map<std::string, double> sim;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "configuration file (JSON)");
  cmd->add_option("--corpus", c.corpus, "dialog corpus file");
  cmd->add_option("--addressbook", c.addressbook, "address book file");
  cmd->add_option("--seed", c.seed, "base random seed");
  cmd->add_option("--out", c.out, "directory for CSV results");
}

void add_model(CLI::App* cmd, Common& c) {
  cmd->add_option("--model", c.model, "lstm, rnn or dnn")
      ->check(CLI::IsMember({"lstm", "rnn", "dnn"}));
  cmd->add_option("--hidden", c.hidden, "hidden units");
}

void add_sim(CLI::App* cmd, Common& c) {
  for (const auto& f : phone::sim_param_fields()) {
    std::string flag = std::string("--") + f.name;
    for (auto& ch : flag)
      if (ch == '_') ch = '-';
    cmd->add_option_function<double>(
           flag, [&c, name = std::string(f.name)](double v) { c.sim[name] = v; },
           "simulator probability")
        ->check(CLI::Range(0.0, 1.0));
  }
}

AppConfig resolve_config(const Common& c) {
  AppConfig cfg;
  if (!c.config_path.empty())
    cfg = load_config(c.config_path);
#ifdef DIALOGCTL_DEFAULT_CONFIG
  else if (fs::exists(DIALOGCTL_DEFAULT_CONFIG))
    cfg = load_config(DIALOGCTL_DEFAULT_CONFIG);
#endif
  apply_env_overrides(cfg, process_env);
  if (!c.corpus.empty()) cfg.corpus_path = c.corpus;
  if (!c.addressbook.empty()) cfg.addressbook_path = c.addressbook;
  if (!c.out.empty()) cfg.results_dir = c.out;
  if (c.seed) cfg.seed = *c.seed;
  cfg.kind = parse_model_kind(c.model);
  if (c.hidden) cfg.hidden_dim = c.hidden;
  for (const auto& f : phone::sim_param_fields()) {
    const auto it = c.sim.find(f.name);
    if (it != c.sim.end()) cfg.sim.*f.member = it->second;
  }
  cfg.sim.validate();
  if (cfg.corpus_path.empty()) throw ConfigError("no corpus given (--corpus or config)");
  if (cfg.addressbook_path.empty()) throw ConfigError("no address book given (--addressbook or config)");
  return cfg;
}

struct Loaded {
  AppConfig cfg;
  phone::PhoneDomain domain;
  std::vector<TrainingSequence> data;
};

Loaded load(const Common& c) {
  auto cfg = resolve_config(c);
  phone::PhoneDomain domain(phone::AddressBook::load(cfg.addressbook_path));
  auto data = featurize(load_corpus(cfg.corpus_path), domain);
  return Loaded{std::move(cfg), std::move(domain), std::move(data)};
}

void write_out(const AppConfig& cfg, const std::string& name, const std::string& text) {
  if (cfg.results_dir.empty()) return;
  fs::create_directories(cfg.results_dir);
  const auto path = cfg.results_dir / name;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  std::cout << "wrote " << path.string() << '\n';
}

HttpApi* g_api = nullptr;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dialog-control engine: supervised and reinforcement training of a recurrent "
               "policy over action templates"};
  app.require_subcommand(1);

  // --- train-sl
  Common tsl;
  std::string tsl_ckpt;
  std::string tsl_stop = "reconstruction";
  std::size_t tsl_epochs = 0;
  auto* cmd_tsl = app.add_subcommand("train-sl", "train on the corpus until it is reproduced");
  add_common(cmd_tsl, tsl);
  add_model(cmd_tsl, tsl);
  cmd_tsl->add_option("--checkpoint", tsl_ckpt, "write the trained model here");
  cmd_tsl->add_option("--stop", tsl_stop, "reconstruction or plateau")
      ->check(CLI::IsMember({"reconstruction", "plateau"}));
  cmd_tsl->add_option("--max-epochs", tsl_epochs, "epoch budget");

  // --- eval-loo
  Common loo;
  std::vector<std::size_t> loo_sizes{1, 2, 5, 10, 20};
  auto* cmd_loo = app.add_subcommand("eval-loo", "leave-one-out accuracy by training-set size");
  add_common(cmd_loo, loo);
  add_model(cmd_loo, loo);
  cmd_loo->add_option("--sizes", loo_sizes, "training-set sizes");
  cmd_loo->add_flag("--serial", loo.serial, "use the single-threaded reference");

  // --- compare-arch
  Common arch;
  std::vector<std::size_t> arch_sizes{1, 10, 21};
  auto* cmd_arch =
      app.add_subcommand("compare-arch", "which architectures can reproduce the training set");
  add_common(cmd_arch, arch);
  cmd_arch->add_option("--sizes", arch_sizes, "numbers of corpus dialogs");
  cmd_arch->add_option("--hidden", arch.hidden, "hidden units");
  cmd_arch->add_flag("--serial", arch.serial, "use the single-threaded reference");

  // --- roc
  Common roc;
  std::size_t roc_repeats = 10, roc_train = 11, roc_test = 10, roc_lowest = 20;
  auto* cmd_roc = app.add_subcommand("roc", "score calibration on held-out dialogs");
  add_common(cmd_roc, roc);
  add_model(cmd_roc, roc);
  cmd_roc->add_option("--repeats", roc_repeats, "random splits");
  cmd_roc->add_option("--train", roc_train, "training dialogs per split");
  cmd_roc->add_option("--test", roc_test, "test dialogs per split");
  cmd_roc->add_option("--lowest", roc_lowest, "size of the low-score group reported");
  cmd_roc->add_flag("--serial", roc.serial, "use the single-threaded reference");

  // --- run-rl
  Common rl;
  std::vector<std::size_t> rl_nsl{0, 1, 2, 5, 10};
  std::size_t rl_dialogs = 2000, rl_runs = 5, rl_every = 10, rl_eval = 500;
  bool rl_no_guard = false;
  auto* cmd_rl = app.add_subcommand("run-rl", "policy-gradient training against the simulated user");
  add_common(cmd_rl, rl);
  add_sim(cmd_rl, rl);
  cmd_rl->add_option("--n-sl", rl_nsl, "corpus dialogs used for pre-training");
  cmd_rl->add_option("--n-rl-dialogs", rl_dialogs, "RL dialogs per run");
  cmd_rl->add_option("--runs", rl_runs, "independent runs per n_sl");
  cmd_rl->add_option("--eval-every", rl_every, "RL dialogs between evaluations");
  cmd_rl->add_option("--eval-dialogs", rl_eval, "dialogs per evaluation");
  cmd_rl->add_option("--hidden", rl.hidden, "hidden units");
  cmd_rl->add_flag("--no-guard", rl_no_guard, "skip the corpus reconstruction guard");
  cmd_rl->add_flag("--serial", rl.serial, "use the single-threaded reference");

  // --- eval-tcr
  Common tcr;
  std::string tcr_ckpt;
  std::size_t tcr_dialogs = 500;
  bool tcr_scripted = false;
  auto* cmd_tcr = app.add_subcommand("eval-tcr", "task completion rate of a frozen policy");
  add_common(cmd_tcr, tcr);
  add_sim(cmd_tcr, tcr);
  cmd_tcr->add_option("--checkpoint", tcr_ckpt, "model to evaluate (default: train on corpus)");
  cmd_tcr->add_option("--dialogs", tcr_dialogs, "simulated dialogs");
  cmd_tcr->add_flag("--scripted", tcr_scripted, "evaluate the hand-written policy instead");

  // --- serve
  Common srv;
  std::string srv_host;
  int srv_port = 0;
  std::string srv_ckpt;
  auto* cmd_srv = app.add_subcommand("serve", "run the HTTP service");
  add_common(cmd_srv, srv);
  add_sim(cmd_srv, srv);
  cmd_srv->add_option("--host", srv_host, "bind address");
  cmd_srv->add_option("--port", srv_port, "port");
  cmd_srv->add_option("--checkpoint", srv_ckpt, "checkpoint path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cmd_tsl) {
      auto L = load(tsl);
      const auto layout = FeatureLayout::of(L.domain);
      auto params = init_model(L.cfg.kind, layout.dim, L.cfg.hidden_dim, L.domain.n_actions(),
                               L.cfg.seed);
      SlOptions o = L.cfg.sl;
      if (tsl_epochs) o.max_epochs = tsl_epochs;
      o.stop = tsl_stop == "plateau" ? StopRule::Plateau : StopRule::Reconstruction;
      o.shuffle_seed = L.cfg.seed;
      const auto r = train_sl(params, L.data, o);
      std::cout << text_table({"model", "dialogs", "epochs", "reconstructed", "seconds"},
                              {{std::string(to_string(L.cfg.kind)), std::to_string(L.data.size()),
                                std::to_string(r.epochs), r.reconstructed ? "yes" : "no",
                                fmt(r.seconds, 3)}});
      std::string csv = "epoch,loss\n";
      for (std::size_t i = 0; i < r.epoch_loss.size(); ++i)
        csv += std::to_string(i + 1) + "," + fmt(r.epoch_loss[i], 8) + "\n";
      write_out(L.cfg, "sl_loss.csv", csv);
      const std::string path = tsl_ckpt.empty() ? L.cfg.checkpoint_path.string() : tsl_ckpt;
      if (!path.empty()) {
        if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
        save_checkpoint(path, params);
        std::cout << "wrote " << path << '\n';
      }
      return r.reconstructed ? 0 : 2;
    }

    if (*cmd_loo) {
      auto L = load(loo);
      LooOptions o;
      o.train_sizes = loo_sizes;
      o.model = {L.cfg.kind, L.cfg.hidden_dim};
      o.sl = L.cfg.sl;
      o.seed = L.cfg.seed;
      const auto r = loo.serial ? loo_eval_serial(L.data, o) : loo_eval(L.data, o);
      std::cout << loo_table(r);
      write_out(L.cfg, "loo.csv", loo_csv(r));
      write_out(L.cfg, "loo_folds.csv", loo_folds_csv(r));
      return 0;
    }

    if (*cmd_arch) {
      auto L = load(arch);
      ArchOptions o;
      o.sizes = arch_sizes;
      o.hidden_dim = L.cfg.hidden_dim;
      o.sl.max_epochs = L.cfg.sl.max_epochs;
      o.sl.plateau_epochs = L.cfg.sl.plateau_epochs;
      o.sl.plateau_rel_tol = L.cfg.sl.plateau_rel_tol;
      o.seed = L.cfg.seed;
      const auto cells =
          arch.serial ? compare_architectures_serial(L.data, o) : compare_architectures(L.data, o);
      std::cout << arch_table(cells);
      write_out(L.cfg, "arch.csv", arch_csv(cells));
      return 0;
    }

    if (*cmd_roc) {
      auto L = load(roc);
      RocOptions o;
      o.repeats = roc_repeats;
      o.train_dialogs = roc_train;
      o.test_dialogs = roc_test;
      o.model = {L.cfg.kind, L.cfg.hidden_dim};
      o.sl = L.cfg.sl;
      o.seed = L.cfg.seed;
      const auto r = roc.serial ? roc_data_serial(L.data, o) : roc_data(L.data, o);
      std::cout << roc_table(r, roc_lowest);
      write_out(L.cfg, "roc_curve.csv", roc_curve_csv(r));
      write_out(L.cfg, "roc_scores.csv", roc_scores_csv(r));
      return 0;
    }

    if (*cmd_rl) {
      auto L = load(rl);
      phone::RlOptions o;
      o.n_rl_dialogs = rl_dialogs;
      o.eval_every = rl_every;
      o.eval_dialogs = rl_eval;
      o.max_turns = L.cfg.max_turns;
      o.hidden_dim = L.cfg.hidden_dim;
      o.buffer_size = L.cfg.buffer_size;
      o.gamma = L.cfg.gamma;
      o.weight_clip = L.cfg.weight_clip;
      o.guard = !rl_no_guard;
      o.pg = L.cfg.pg;
      o.sl = L.cfg.sl;
      o.seed = L.cfg.seed;
      std::vector<phone::RlCurve> curves;
      for (auto n : rl_nsl) {
        o.n_sl = n;
        std::cerr << "n_sl=" << n << ": " << rl_runs << " runs of " << rl_dialogs
                  << " dialogs\n";
        curves.push_back(rl.serial ? phone::rl_experiment_serial(L.domain, L.data, L.cfg.sim, o, rl_runs)
                                   : phone::rl_experiment(L.domain, L.data, L.cfg.sim, o, rl_runs));
      }
      std::cout << rl_table(curves);
      write_out(L.cfg, "rl_curves.csv", rl_curves_csv(curves));
      write_out(L.cfg, "rl_runs.csv", rl_runs_csv(curves));
      return 0;
    }

    if (*cmd_tcr) {
      auto L = load(tcr);
      const phone::EvalOptions eval{tcr_dialogs, L.cfg.max_turns, L.cfg.seed};
      phone::TcrResult r;
      if (tcr_scripted) {
        r = phone::evaluate_policy(
            L.domain, [&] { return std::make_unique<phone::ScriptedPhonePolicy>(L.domain); },
            L.cfg.sim, eval);
      } else {
        ModelParams params;
        if (!tcr_ckpt.empty()) {
          params = load_checkpoint(tcr_ckpt);
        } else {
          const auto layout = FeatureLayout::of(L.domain);
          params = init_model(L.cfg.kind, layout.dim, L.cfg.hidden_dim, L.domain.n_actions(),
                              L.cfg.seed);
          SlOptions o = L.cfg.sl;
          o.shuffle_seed = L.cfg.seed;
          train_sl(params, L.data, o);
        }
        r = phone::evaluate_tcr(L.domain, params, L.cfg.sim, eval);
      }
      std::cout << text_table({"dialogs", "successes", "tcr", "mean decisions"},
                              {{std::to_string(r.dialogs), std::to_string(r.successes),
                                fmt(r.tcr, 4), fmt(r.mean_decisions, 2)}});
      return 0;
    }

    if (*cmd_srv) {
      auto cfg = resolve_config(srv);
      if (!srv_host.empty()) cfg.host = srv_host;
      if (srv_port) cfg.port = srv_port;
      if (!srv_ckpt.empty()) cfg.checkpoint_path = srv_ckpt;
      auto service = Service::from_config(cfg);
      HttpApi api(*service);
      g_api = &api;
      std::signal(SIGINT, [](int) {
        if (g_api) g_api->stop();
      });
      std::signal(SIGTERM, [](int) {
        if (g_api) g_api->stop();
      });
      std::cerr << "listening on " << cfg.host << ':' << cfg.port << '\n';
      if (!api.listen(cfg.host, cfg.port)) {
        std::cerr << "cannot bind " << cfg.host << ':' << cfg.port << '\n';
        return 1;
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
