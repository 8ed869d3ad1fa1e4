#include "dialogctl/rl_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dialogctl {

double compute_return(double reward, std::size_t decisions, double gamma) {
  if (decisions == 0) throw std::invalid_argument("a return needs at least one decision");
  return std::pow(gamma, static_cast<double>(decisions - 1)) * reward;
}

double Episode::behavior_prob() const {
  double p = 1.0;
  for (const auto& s : steps) p *= s.behavior_prob;
  return p;
}

Episode Episode::from_records(const std::vector<TurnRecord>& records, double reward,
                              double gamma) {
  Episode e;
  e.steps.reserve(records.size());
  for (const auto& r : records) e.steps.push_back({r.features, r.mask, r.action, r.behavior_prob});
  e.reward = reward;
  e.ret = records.empty() ? 0.0 : compute_return(reward, records.size(), gamma);
  return e;
}

BaselineBuffer::BaselineBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("baseline buffer capacity must be positive");
}

void BaselineBuffer::push(Episode episode) {
  if (episodes_.size() == capacity_) episodes_.pop_front();
  episodes_.push_back(std::move(episode));
}

namespace {

// Masked log-softmax probabilities of the chosen actions, replaying the episode.
std::vector<double> replay_probs(const ModelParams& params, const Episode& episode) {
  std::vector<double> out;
  out.reserve(episode.steps.size());
  ModelState state = initial_state(params);
  for (const auto& s : episode.steps) {
    auto o = forward_step(params, state, s.features);
    state = std::move(o.state);
    out.push_back(masked_distribution(o.logits, s.mask)[s.action]);
  }
  return out;
}

double wis(const BaselineBuffer& buffer, const std::vector<double>& weights) {
  double num = 0.0, den = 0.0;
  std::size_t i = 0;
  for (const auto& e : buffer.episodes()) {
    num += weights[i] * e.ret;
    den += weights[i];
    ++i;
  }
  return den > 0.0 ? num / den : 0.0;
}

}  // namespace

double importance_weight(const ModelParams& params, const Episode& episode, double clip) {
  const auto cur = replay_probs(params, episode);
  // summed in log space so long episodes cannot overflow before clipping
  double log_w = 0.0;
  for (std::size_t t = 0; t < cur.size(); ++t) {
    const double beh = episode.steps[t].behavior_prob;
    if (!(beh > 0.0)) throw std::invalid_argument("behaviour probability must be positive");
    log_w += std::log(cur[t]) - std::log(beh);
  }
  return std::clamp(std::exp(std::min(log_w, std::log(clip))), 0.0, clip);
}

double estimate_baseline_serial(const BaselineBuffer& buffer, const ModelParams& params,
                                double clip) {
  std::vector<double> w;
  w.reserve(buffer.size());
  for (const auto& e : buffer.episodes()) w.push_back(importance_weight(params, e, clip));
  return wis(buffer, w);
}

double estimate_baseline(const BaselineBuffer& buffer, const ModelParams& params, double clip) {
  std::vector<double> w(buffer.size());
  const auto n = static_cast<std::ptrdiff_t>(buffer.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    w[static_cast<std::size_t>(i)] =
        importance_weight(params, buffer.episodes()[static_cast<std::size_t>(i)], clip);
  return wis(buffer, w);
}

ModelParams log_prob_gradient(const ModelParams& params, const Episode& episode, double eps) {
  std::vector<std::vector<double>> inputs;
  inputs.reserve(episode.steps.size());
  for (const auto& s : episode.steps) inputs.push_back(s.features);
  const auto trace = forward_sequence(params, inputs);

  std::vector<std::vector<double>> upstream(episode.steps.size(),
                                            std::vector<double>(params.n_actions, 0.0));
  for (std::size_t t = 0; t < episode.steps.size(); ++t) {
    const auto& s = episode.steps[t];
    const auto& logits = trace.steps[t].logits;
    // masked softmax computed from the logits so it never collapses to zero mass
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < logits.size(); ++j)
      if (s.mask.allowed(j)) m = std::max(m, logits[j]);
    std::vector<double> q(logits.size(), 0.0);
    double z = 0.0;
    for (std::size_t j = 0; j < logits.size(); ++j)
      if (s.mask.allowed(j)) z += q[j] = std::exp(logits[j] - m);
    for (auto& v : q) v /= z;
    const double a_prob = q[s.action];
    const double k = a_prob / (a_prob + eps);
    for (std::size_t j = 0; j < logits.size(); ++j)
      if (s.mask.allowed(j)) upstream[t][j] = k * ((j == s.action ? 1.0 : 0.0) - q[j]);
  }
  return backward_sequence(params, trace, upstream);
}

bool policy_gradient_update(ModelParams& params, AdaDeltaState& opt, const Episode& episode,
                            double baseline, const PgOptions& options) {
  const double scale = options.alpha * (episode.ret - baseline);
  if (scale == 0.0 || episode.steps.empty()) return false;
  auto grad = log_prob_gradient(params, episode, options.eps);
  for (auto& t : grad.tensors)
    for (auto& v : t.values) v *= scale;
  if (!grad.all_finite()) return false;
  adadelta_apply(opt, params, grad, Direction::Ascend);
  return true;
}

GuardReport guarded_update(ModelParams& params, AdaDeltaState& rl_opt, AdaDeltaState& sl_opt,
                           const Episode& episode, const std::vector<TrainingSequence>& corpus,
                           double baseline, const PgOptions& pg, const SlOptions& sl) {
  GuardReport report;
  const ModelParams saved = params;
  const AdaDeltaState saved_rl = rl_opt;
  const AdaDeltaState saved_sl = sl_opt;
  report.stepped = policy_gradient_update(params, rl_opt, episode, baseline, pg);
  if (!report.stepped || corpus.empty() || reconstructs(params, corpus)) return report;

  SlOptions repair = sl;
  repair.stop = StopRule::Reconstruction;
  const auto r = train_sl(params, sl_opt, corpus, repair);
  report.repaired = true;
  report.repair_epochs = r.epochs;
  if (!r.reconstructed) {
    params = saved;
    rl_opt = saved_rl;
    sl_opt = saved_sl;
    report.rolled_back = true;
  }
  return report;
}

}  // namespace dialogctl
