#pragma once

#include <cstddef>
#include <deque>
#include <vector>

#include "dialogctl/adadelta.hpp"
#include "dialogctl/engine.hpp"
#include "dialogctl/sl_trainer.hpp"

namespace dialogctl {

/// Terminal-only discounted return: gamma^(T-1) * reward, T >= 1 decisions.
double compute_return(double reward, std::size_t decisions, double gamma = 0.95);

struct EpisodeStep {
  std::vector<double> features;
  ActionMask mask;
  std::size_t action = 0;
  double behavior_prob = 0.0;
};

struct Episode {
  std::vector<EpisodeStep> steps;
  double reward = 0.0;
  double ret = 0.0;

  /// Product of the per-step behaviour probabilities.
  double behavior_prob() const;

  static Episode from_records(const std::vector<TurnRecord>& records, double reward,
                              double gamma = 0.95);
};

/// The most recent episodes, oldest evicted first.
class BaselineBuffer {
 public:
  explicit BaselineBuffer(std::size_t capacity = 100);

  void push(Episode episode);
  std::size_t size() const { return episodes_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return episodes_.empty(); }
  const std::deque<Episode>& episodes() const { return episodes_; }

 private:
  std::size_t capacity_;
  std::deque<Episode> episodes_;
};

/// prod_t pi_cur(a_t | h_t) / pi_beh(a_t | h_t), replaying the stored inputs
/// through `params`, clipped to [0, clip].
double importance_weight(const ModelParams& params, const Episode& episode, double clip = 10.0);

/// Weighted importance sampling estimate sum(w R) / sum(w) of the current
/// policy's return; 0 for an empty buffer or when every weight is 0.
double estimate_baseline(const BaselineBuffer& buffer, const ModelParams& params,
                         double clip = 10.0);
double estimate_baseline_serial(const BaselineBuffer& buffer, const ModelParams& params,
                                double clip = 10.0);

/// Gradient of sum_t log(q_t[a_t] + eps) with respect to the weights, where
/// q_t is the masked distribution at step t.
ModelParams log_prob_gradient(const ModelParams& params, const Episode& episode,
                              double eps = 1e-8);

struct PgOptions {
  double alpha = 1.0;
  double eps = 1e-8;
};

/// w <- w + alpha (R - b) grad, applied through AdaDelta ascent. Returns
/// false and leaves everything untouched when the step is zero or the
/// gradient is not finite.
bool policy_gradient_update(ModelParams& params, AdaDeltaState& opt, const Episode& episode,
                            double baseline, const PgOptions& options = {});

struct GuardReport {
  bool stepped = false;
  bool repaired = false;
  bool rolled_back = false;
  std::size_t repair_epochs = 0;
};

/// Policy-gradient step followed by supervised repair whenever the corpus is
/// no longer reconstructed. If the repair cannot reconstruct within its
/// epoch budget, the model and both optimizers are restored.
GuardReport guarded_update(ModelParams& params, AdaDeltaState& rl_opt, AdaDeltaState& sl_opt,
                           const Episode& episode, const std::vector<TrainingSequence>& corpus,
                           double baseline, const PgOptions& pg = {},
                           const SlOptions& sl = {});

}  // namespace dialogctl
