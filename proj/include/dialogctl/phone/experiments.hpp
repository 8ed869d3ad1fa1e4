#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dialogctl/engine.hpp"
#include "dialogctl/phone/phone_domain.hpp"
#include "dialogctl/phone/user_sim.hpp"
#include "dialogctl/rl_trainer.hpp"

namespace dialogctl::phone {

struct SimulatedDialog {
  DialogResult result;
  UserGoal goal;
};

/// One dialog between `policy` and a freshly sampled simulated user. The
/// goal, the user's choices and sampled actions all derive from `seed`.
SimulatedDialog simulate_dialog(const PhoneDomain& domain, Policy& policy,
                                const SimParams& sim, std::uint64_t seed,
                                SelectionMode mode = SelectionMode::Greedy,
                                std::size_t max_turns = 20);

struct EvalOptions {
  std::size_t dialogs = 500;
  std::size_t max_turns = 20;
  std::uint64_t seed = 0;
};

struct TcrResult {
  std::size_t dialogs = 0;
  std::size_t successes = 0;
  double tcr = 0.0;
  double mean_decisions = 0.0;

  bool operator==(const TcrResult&) const = default;
};

/// Task completion rate of a frozen model acting greedily.
TcrResult evaluate_tcr(const PhoneDomain& domain, const ModelParams& params,
                       const SimParams& sim, const EvalOptions& options);
TcrResult evaluate_tcr_serial(const PhoneDomain& domain, const ModelParams& params,
                              const SimParams& sim, const EvalOptions& options);

/// Same protocol for any policy; `make_policy` is called once per dialog.
TcrResult evaluate_policy(const PhoneDomain& domain,
                          const std::function<std::unique_ptr<Policy>()>& make_policy,
                          const SimParams& sim, const EvalOptions& options);

struct RlOptions {
  std::size_t n_sl = 0;             // corpus dialogs used for pre-training and guarding
  std::size_t n_rl_dialogs = 2000;
  std::size_t eval_every = 10;
  std::size_t eval_dialogs = 500;
  std::size_t max_turns = 20;
  std::size_t hidden_dim = 32;
  std::size_t buffer_size = 100;
  double gamma = 0.95;
  double weight_clip = 10.0;
  bool guard = true;                // keep reconstructing the pre-training dialogs
  PgOptions pg;
  SlOptions sl;
  std::uint64_t seed = 0;
};

struct RlRun {
  std::vector<std::size_t> checkpoints;  // RL dialogs completed at each evaluation
  std::vector<double> tcr;
  std::vector<std::string> sl_dialogs;
  std::size_t repairs = 0;
  std::size_t rollbacks = 0;
  bool always_reconstructed = true;
};

/// Called after every guarded update with (update index, model, corpus).
using RlObserver = std::function<void(std::size_t, const ModelParams&,
                                      const std::vector<TrainingSequence>&)>;

/// One run: sample n_sl corpus dialogs, pre-train, then alternate sampled
/// episodes and guarded updates, evaluating greedily every eval_every.
RlRun rl_run(const PhoneDomain& domain, const std::vector<TrainingSequence>& corpus,
             const SimParams& sim, const RlOptions& options, std::size_t run_index,
             const RlObserver& observer = {});

struct RlCurve {
  std::size_t n_sl = 0;
  std::vector<std::size_t> checkpoints;
  std::vector<double> mean;
  std::vector<double> stddev;  // population standard deviation across runs
  std::vector<RlRun> runs;
};

/// Mean and population stddev across runs at each checkpoint.
RlCurve aggregate_runs(std::vector<RlRun> runs, std::size_t n_sl);

RlCurve rl_experiment(const PhoneDomain& domain, const std::vector<TrainingSequence>& corpus,
                      const SimParams& sim, const RlOptions& options, std::size_t n_runs);
RlCurve rl_experiment_serial(const PhoneDomain& domain,
                             const std::vector<TrainingSequence>& corpus, const SimParams& sim,
                             const RlOptions& options, std::size_t n_runs);

}  // namespace dialogctl::phone
