#include "dialogctl/phone/experiments.hpp"

#include <cmath>
#include <memory>
#include <numeric>
#include <stdexcept>

namespace dialogctl::phone {

namespace {

constexpr std::uint64_t kGoalStream = 1;
constexpr std::uint64_t kUserStream = 2;
constexpr std::uint64_t kActionStream = 3;

constexpr std::uint64_t kInitStream = 11;
constexpr std::uint64_t kSampleStream = 12;
constexpr std::uint64_t kEvalStream = 13;
constexpr std::uint64_t kEpisodeStream = 14;
constexpr std::uint64_t kShuffleStream = 15;

TcrResult tally(const std::vector<std::uint8_t>& success, const std::vector<std::size_t>& steps) {
  TcrResult r;
  r.dialogs = success.size();
  for (auto s : success) r.successes += s;
  std::size_t total = 0;
  for (auto s : steps) total += s;
  if (r.dialogs > 0) {
    r.tcr = static_cast<double>(r.successes) / static_cast<double>(r.dialogs);
    r.mean_decisions = static_cast<double>(total) / static_cast<double>(r.dialogs);
  }
  return r;
}

}  // namespace

SimulatedDialog simulate_dialog(const PhoneDomain& domain, Policy& policy, const SimParams& sim,
                                std::uint64_t seed, SelectionMode mode, std::size_t max_turns) {
  Rng goal_rng(derive_seed(seed, kGoalStream));
  SimulatedDialog out;
  out.goal = sample_goal(domain.address_book(), sim, goal_rng);
  SimulatedUser user(domain, sim, out.goal, derive_seed(seed, kUserStream));
  DialogSession session(domain, policy, SessionOptions{mode, derive_seed(seed, kActionStream), 8});
  out.result = run_dialog(session, user, max_turns);
  return out;
}

TcrResult evaluate_tcr_serial(const PhoneDomain& domain, const ModelParams& params,
                              const SimParams& sim, const EvalOptions& options) {
  auto shared = std::make_shared<const ModelParams>(params);
  std::vector<std::uint8_t> success(options.dialogs);
  std::vector<std::size_t> steps(options.dialogs);
  for (std::size_t i = 0; i < options.dialogs; ++i) {
    NeuralPolicy policy(shared);
    const auto d = simulate_dialog(domain, policy, sim, derive_seed(options.seed, i),
                                   SelectionMode::Greedy, options.max_turns);
    success[i] = d.result.success ? 1 : 0;
    steps[i] = d.result.records.size();
  }
  return tally(success, steps);
}

TcrResult evaluate_tcr(const PhoneDomain& domain, const ModelParams& params,
                       const SimParams& sim, const EvalOptions& options) {
  auto shared = std::make_shared<const ModelParams>(params);
  std::vector<std::uint8_t> success(options.dialogs);
  std::vector<std::size_t> steps(options.dialogs);
  const auto n = static_cast<std::ptrdiff_t>(options.dialogs);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto i = static_cast<std::size_t>(k);
    NeuralPolicy policy(shared);
    const auto d = simulate_dialog(domain, policy, sim, derive_seed(options.seed, i),
                                   SelectionMode::Greedy, options.max_turns);
    success[i] = d.result.success ? 1 : 0;
    steps[i] = d.result.records.size();
  }
  return tally(success, steps);
}

TcrResult evaluate_policy(const PhoneDomain& domain,
                          const std::function<std::unique_ptr<Policy>()>& make_policy,
                          const SimParams& sim, const EvalOptions& options) {
  std::vector<std::uint8_t> success(options.dialogs);
  std::vector<std::size_t> steps(options.dialogs);
  for (std::size_t i = 0; i < options.dialogs; ++i) {
    auto policy = make_policy();
    const auto d = simulate_dialog(domain, *policy, sim, derive_seed(options.seed, i),
                                   SelectionMode::Greedy, options.max_turns);
    success[i] = d.result.success ? 1 : 0;
    steps[i] = d.result.records.size();
  }
  return tally(success, steps);
}

RlRun rl_run(const PhoneDomain& domain, const std::vector<TrainingSequence>& corpus,
             const SimParams& sim, const RlOptions& options, std::size_t run_index,
             const RlObserver& observer) {
  if (options.n_sl > corpus.size())
    throw std::invalid_argument("n_sl exceeds the corpus size");
  if (options.eval_every == 0) throw std::invalid_argument("eval_every must be positive");
  const std::uint64_t run_seed = derive_seed(options.seed, run_index);
  RlRun run;

  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng sample_rng(derive_seed(run_seed, kSampleStream));
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[sample_rng.below(i)]);
  std::vector<TrainingSequence> train;
  for (std::size_t i = 0; i < options.n_sl; ++i) {
    train.push_back(corpus[order[i]]);
    run.sl_dialogs.push_back(corpus[order[i]].dialog_id);
  }

  const FeatureLayout layout = FeatureLayout::of(domain);
  ModelParams params = init_model(ModelKind::LSTM, layout.dim, options.hidden_dim,
                                  domain.n_actions(), derive_seed(run_seed, kInitStream));
  AdaDeltaState sl_opt(params);
  SlOptions sl = options.sl;
  sl.shuffle_seed = derive_seed(run_seed, kShuffleStream);
  if (!train.empty()) train_sl(params, sl_opt, train, sl);
  AdaDeltaState rl_opt(params);

  const EvalOptions eval{options.eval_dialogs, options.max_turns,
                         derive_seed(run_seed, kEvalStream)};
  auto evaluate = [&](std::size_t done) {
    run.checkpoints.push_back(done);
    run.tcr.push_back(evaluate_tcr(domain, params, sim, eval).tcr);
  };
  evaluate(0);

  BaselineBuffer buffer(options.buffer_size);
  for (std::size_t i = 0; i < options.n_rl_dialogs; ++i) {
    auto shared = std::make_shared<const ModelParams>(params);
    NeuralPolicy policy(shared);
    const auto d = simulate_dialog(domain, policy, sim,
                                   derive_seed(derive_seed(run_seed, kEpisodeStream), i),
                                   SelectionMode::Sample, options.max_turns);
    Episode episode = Episode::from_records(d.result.records, d.result.success ? 1.0 : 0.0,
                                            options.gamma);
    if (!episode.steps.empty()) {
      const double b = estimate_baseline(buffer, params, options.weight_clip);
      static const std::vector<TrainingSequence> kNone;
      const auto g = guarded_update(params, rl_opt, sl_opt, episode, options.guard ? train : kNone,
                                    b, options.pg, sl);
      run.repairs += g.repaired ? 1 : 0;
      run.rollbacks += g.rolled_back ? 1 : 0;
      if (options.guard && !train.empty() && !reconstructs(params, train))
        run.always_reconstructed = false;
      if (observer) observer(i, params, train);
      buffer.push(std::move(episode));
    }
    if ((i + 1) % options.eval_every == 0) evaluate(i + 1);
  }
  return run;
}

RlCurve aggregate_runs(std::vector<RlRun> runs, std::size_t n_sl) {
  RlCurve c;
  c.n_sl = n_sl;
  if (!runs.empty()) {
    c.checkpoints = runs.front().checkpoints;
    const std::size_t k = c.checkpoints.size();
    c.mean.assign(k, 0.0);
    c.stddev.assign(k, 0.0);
    const double n = static_cast<double>(runs.size());
    for (std::size_t j = 0; j < k; ++j) {
      for (const auto& r : runs) c.mean[j] += r.tcr[j];
      c.mean[j] /= n;
      for (const auto& r : runs) c.stddev[j] += (r.tcr[j] - c.mean[j]) * (r.tcr[j] - c.mean[j]);
      c.stddev[j] = std::sqrt(c.stddev[j] / n);
    }
  }
  c.runs = std::move(runs);
  return c;
}

RlCurve rl_experiment_serial(const PhoneDomain& domain,
                             const std::vector<TrainingSequence>& corpus, const SimParams& sim,
                             const RlOptions& options, std::size_t n_runs) {
  std::vector<RlRun> runs(n_runs);
  for (std::size_t r = 0; r < n_runs; ++r) runs[r] = rl_run(domain, corpus, sim, options, r);
  return aggregate_runs(std::move(runs), options.n_sl);
}

RlCurve rl_experiment(const PhoneDomain& domain, const std::vector<TrainingSequence>& corpus,
                      const SimParams& sim, const RlOptions& options, std::size_t n_runs) {
  std::vector<RlRun> runs(n_runs);
  const auto n = static_cast<std::ptrdiff_t>(n_runs);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t r = 0; r < n; ++r)
    runs[static_cast<std::size_t>(r)] =
        rl_run(domain, corpus, sim, options, static_cast<std::size_t>(r));
  return aggregate_runs(std::move(runs), options.n_sl);
}

}  // namespace dialogctl::phone
