#include "dialogctl/sl_trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace dialogctl {

namespace {

std::vector<std::vector<double>> inputs_of(const TrainingSequence& seq) {
  std::vector<std::vector<double>> xs;
  xs.reserve(seq.steps.size());
  for (const auto& s : seq.steps) xs.push_back(s.features);
  return xs;
}

template <typename T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

std::vector<std::size_t> permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  shuffle_in_place(p, rng);
  return p;
}

std::vector<TrainingSequence> subset(const std::vector<TrainingSequence>& data,
                                     const std::vector<std::size_t>& idx, std::size_t n) {
  std::vector<TrainingSequence> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(data[idx[i]]);
  return out;
}

std::size_t input_dim(const std::vector<TrainingSequence>& data) {
  for (const auto& s : data)
    if (!s.steps.empty()) return s.steps.front().features.size();
  throw std::invalid_argument("training data has no steps");
}

std::size_t action_count(const std::vector<TrainingSequence>& data) {
  for (const auto& s : data)
    if (!s.steps.empty()) return s.steps.front().mask.size();
  throw std::invalid_argument("training data has no steps");
}

}  // namespace

std::vector<double> masked_distribution(std::span<const double> logits, const ActionMask& mask) {
  const auto p = softmax(logits);
  return mask_and_renormalize(p, mask);
}

double sequence_loss(const ModelParams& params, const TrainingSequence& seq,
                     std::vector<std::vector<double>>* upstream) {
  ModelState state = initial_state(params);
  double loss = 0.0;
  if (upstream) upstream->assign(seq.steps.size(), std::vector<double>(params.n_actions, 0.0));
  for (std::size_t t = 0; t < seq.steps.size(); ++t) {
    const auto& step = seq.steps[t];
    auto out = forward_step(params, state, step.features);
    state = std::move(out.state);
    // log-softmax restricted to allowed actions
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < out.logits.size(); ++j)
      if (step.mask.allowed(j)) m = std::max(m, out.logits[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < out.logits.size(); ++j)
      if (step.mask.allowed(j)) z += std::exp(out.logits[j] - m);
    const double log_z = m + std::log(z);
    loss -= out.logits[step.target] - log_z;
    if (upstream) {
      auto& g = (*upstream)[t];
      for (std::size_t j = 0; j < out.logits.size(); ++j)
        if (step.mask.allowed(j)) g[j] = std::exp(out.logits[j] - log_z);
      g[step.target] -= 1.0;
    }
  }
  return loss;
}

std::vector<StepPrediction> predict(const ModelParams& params, const TrainingSequence& seq) {
  std::vector<StepPrediction> out;
  out.reserve(seq.steps.size());
  ModelState state = initial_state(params);
  Rng unused(0);
  for (const auto& step : seq.steps) {
    auto o = forward_step(params, state, step.features);
    state = std::move(o.state);
    const auto dist = masked_distribution(o.logits, step.mask);
    StepPrediction p;
    p.action = select_action(dist, SelectionMode::Greedy, unused);
    p.score = dist[p.action];
    p.target = step.target;
    out.push_back(p);
  }
  return out;
}

bool reconstructs(const ModelParams& params, const std::vector<TrainingSequence>& data) {
  for (const auto& seq : data)
    for (const auto& p : predict(params, seq))
      if (!p.correct()) return false;
  return true;
}

SlReport train_sl(ModelParams& params, AdaDeltaState& opt,
                  const std::vector<TrainingSequence>& data, const SlOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  SlReport report;
  for (const auto& seq : data)
    for (const auto& step : seq.steps) {
      if (step.features.size() != params.input_dim || step.mask.size() != params.n_actions)
        throw std::invalid_argument("training step does not match model dimensions");
      if (!step.mask.allowed(step.target))
        throw MaskedCorpusAction("dialog " + seq.dialog_id + ": target action is masked");
    }

  Rng rng(options.shuffle_seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  double best = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  while (true) {
    if (reconstructs(params, data)) {
      report.reconstructed = true;
      break;
    }
    if (report.epochs >= options.max_epochs) break;
    if (options.stop == StopRule::Plateau && since_best >= options.plateau_epochs) {
      report.plateaued = true;
      break;
    }
    shuffle_in_place(order, rng);
    double epoch_loss = 0.0;
    std::vector<std::vector<double>> upstream;
    for (std::size_t i : order) {
      const auto& seq = data[i];
      if (seq.steps.empty()) continue;
      epoch_loss += sequence_loss(params, seq, &upstream);
      const auto grads = backward_sequence(params, inputs_of(seq), upstream);
      adadelta_apply(opt, params, grads, Direction::Descend);
    }
    ++report.epochs;
    report.epoch_loss.push_back(epoch_loss);
    if (epoch_loss < best * (1.0 - options.plateau_rel_tol)) {
      best = epoch_loss;
      since_best = 0;
    } else {
      ++since_best;
    }
  }
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

SlReport train_sl(ModelParams& params, const std::vector<TrainingSequence>& data,
                  const SlOptions& options) {
  AdaDeltaState opt(params);
  return train_sl(params, opt, data, options);
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::uint64_t kPermStream = 1;
constexpr std::uint64_t kInitStream = 2;
constexpr std::uint64_t kShuffleStream = 3;

// One (fold, size) cell of the leave-one-out grid.
LooFold loo_cell(const std::vector<TrainingSequence>& data, const LooOptions& options,
                 std::size_t fold, std::size_t size_index) {
  const std::size_t n = data.size();
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < n; ++i)
    if (i != fold) rest.push_back(i);
  Rng perm_rng(derive_seed(derive_seed(options.seed, kPermStream), fold));
  shuffle_in_place(rest, perm_rng);

  LooFold out;
  out.held_out = fold;
  out.train_size = options.train_sizes[size_index];
  auto train = subset(data, rest, out.train_size);
  auto params = init_model(options.model.kind, input_dim(data), options.model.hidden_dim,
                           action_count(data),
                           derive_seed(derive_seed(options.seed, kInitStream), fold));
  SlOptions sl = options.sl;
  sl.shuffle_seed =
      derive_seed(derive_seed(derive_seed(options.seed, kShuffleStream), fold), out.train_size);
  const auto report = train_sl(params, train, sl);
  out.reconstructed = report.reconstructed;
  out.epochs = report.epochs;

  const auto preds = predict(params, data[fold]);
  std::size_t correct = 0;
  for (const auto& p : preds) correct += p.correct() ? 1 : 0;
  out.turn_accuracy = preds.empty() ? 1.0 : static_cast<double>(correct) / preds.size();
  out.dialog_correct = correct == preds.size();
  return out;
}

void check_loo(const std::vector<TrainingSequence>& data, const LooOptions& options) {
  if (data.size() < 2) throw std::invalid_argument("leave-one-out needs at least two dialogs");
  for (auto s : options.train_sizes)
    if (s == 0 || s > data.size() - 1)
      throw std::invalid_argument("training size " + std::to_string(s) + " exceeds the " +
                                  std::to_string(data.size() - 1) + " dialogs available");
}

LooResult summarize_loo(std::vector<LooFold> folds, const LooOptions& options,
                        std::size_t n_folds) {
  LooResult r;
  const std::size_t k = options.train_sizes.size();
  for (std::size_t s = 0; s < k; ++s) {
    LooRow row;
    row.train_size = options.train_sizes[s];
    for (std::size_t f = 0; f < n_folds; ++f) {
      const auto& c = folds[f * k + s];
      row.turn_accuracy += c.turn_accuracy;
      row.dialog_accuracy += c.dialog_correct ? 1.0 : 0.0;
    }
    row.turn_accuracy /= static_cast<double>(n_folds);
    row.dialog_accuracy /= static_cast<double>(n_folds);
    r.rows.push_back(row);
  }
  r.folds = std::move(folds);
  return r;
}

}  // namespace

LooResult loo_eval_serial(const std::vector<TrainingSequence>& data, const LooOptions& options) {
  check_loo(data, options);
  const std::size_t k = options.train_sizes.size();
  std::vector<LooFold> folds(data.size() * k);
  for (std::size_t c = 0; c < folds.size(); ++c) folds[c] = loo_cell(data, options, c / k, c % k);
  return summarize_loo(std::move(folds), options, data.size());
}

LooResult loo_eval(const std::vector<TrainingSequence>& data, const LooOptions& options) {
  check_loo(data, options);
  const std::size_t k = options.train_sizes.size();
  std::vector<LooFold> folds(data.size() * k);
  const auto cells = static_cast<std::ptrdiff_t>(folds.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t c = 0; c < cells; ++c) {
    const auto i = static_cast<std::size_t>(c);
    folds[i] = loo_cell(data, options, i / k, i % k);
  }
  return summarize_loo(std::move(folds), options, data.size());
}

// ---------------------------------------------------------------------------

namespace {

ArchCell arch_cell(const std::vector<TrainingSequence>& data, const ArchOptions& options,
                   std::size_t kind_index, std::size_t size_index) {
  ArchCell cell;
  cell.kind = options.kinds[kind_index];
  cell.dialogs = std::min(options.sizes[size_index], data.size());
  const std::vector<TrainingSequence> train(data.begin(),
                                            data.begin() + static_cast<long>(cell.dialogs));
  auto params = init_model(cell.kind, input_dim(data), options.hidden_dim, action_count(data),
                           derive_seed(options.seed, static_cast<std::uint64_t>(cell.kind)));
  SlOptions sl = options.sl;
  sl.shuffle_seed = derive_seed(derive_seed(options.seed, kShuffleStream), cell.dialogs);
  const auto report = train_sl(params, train, sl);
  cell.reconstructed = report.reconstructed;
  cell.epochs = report.epochs;
  return cell;
}

}  // namespace

std::vector<ArchCell> compare_architectures_serial(const std::vector<TrainingSequence>& data,
                                                   const ArchOptions& options) {
  const std::size_t s = options.sizes.size();
  std::vector<ArchCell> cells(options.kinds.size() * s);
  for (std::size_t c = 0; c < cells.size(); ++c) cells[c] = arch_cell(data, options, c / s, c % s);
  return cells;
}

std::vector<ArchCell> compare_architectures(const std::vector<TrainingSequence>& data,
                                            const ArchOptions& options) {
  const std::size_t s = options.sizes.size();
  std::vector<ArchCell> cells(options.kinds.size() * s);
  const auto n = static_cast<std::ptrdiff_t>(cells.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t c = 0; c < n; ++c) {
    const auto i = static_cast<std::size_t>(c);
    cells[i] = arch_cell(data, options, i / s, i % s);
  }
  return cells;
}

// ---------------------------------------------------------------------------

double roc_auc(const std::vector<ScoredAction>& scored) {
  std::vector<double> pos, neg;
  for (const auto& s : scored) (s.correct ? pos : neg).push_back(s.score);
  if (pos.empty() || neg.empty()) return 1.0;
  std::sort(neg.begin(), neg.end());
  double wins = 0.0;
  for (double p : pos) {
    const auto lo = std::lower_bound(neg.begin(), neg.end(), p);
    const auto hi = std::upper_bound(neg.begin(), neg.end(), p);
    wins += static_cast<double>(lo - neg.begin()) + 0.5 * static_cast<double>(hi - lo);
  }
  return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

std::vector<RocPoint> roc_curve(const std::vector<ScoredAction>& scored) {
  std::vector<double> thresholds;
  std::size_t n_pos = 0, n_neg = 0;
  for (const auto& s : scored) {
    thresholds.push_back(s.score);
    (s.correct ? n_pos : n_neg) += 1;
  }
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  std::vector<RocPoint> curve{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
  for (double r : thresholds) {
    std::size_t tp = 0, fp = 0;
    for (const auto& s : scored)
      if (s.score >= r) (s.correct ? tp : fp) += 1;
    curve.push_back({r, n_neg ? static_cast<double>(fp) / n_neg : 0.0,
                     n_pos ? static_cast<double>(tp) / n_pos : 0.0});
  }
  return curve;
}

double incorrect_fraction_lowest(const std::vector<ScoredAction>& scored, std::size_t n) {
  std::vector<std::size_t> idx(scored.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scored[a].score < scored[b].score; });
  n = std::min(n, idx.size());
  if (n == 0) return 0.0;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < n; ++i) wrong += scored[idx[i]].correct ? 0 : 1;
  return static_cast<double>(wrong) / static_cast<double>(n);
}

namespace {

std::vector<ScoredAction> roc_repeat(const std::vector<TrainingSequence>& data,
                                     const RocOptions& options, std::size_t repeat) {
  Rng rng(derive_seed(derive_seed(options.seed, kPermStream), repeat));
  const auto perm = permutation(data.size(), rng);
  const auto train = subset(data, perm, options.train_dialogs);
  auto params = init_model(options.model.kind, input_dim(data), options.model.hidden_dim,
                           action_count(data),
                           derive_seed(derive_seed(options.seed, kInitStream), repeat));
  SlOptions sl = options.sl;
  sl.shuffle_seed = derive_seed(derive_seed(options.seed, kShuffleStream), repeat);
  train_sl(params, train, sl);
  std::vector<ScoredAction> out;
  for (std::size_t i = options.train_dialogs;
       i < options.train_dialogs + options.test_dialogs; ++i)
    for (const auto& p : predict(params, data[perm[i]])) out.push_back({p.score, p.correct()});
  return out;
}

RocResult finish_roc(std::vector<std::vector<ScoredAction>> per_repeat) {
  RocResult r;
  for (auto& v : per_repeat) r.scored.insert(r.scored.end(), v.begin(), v.end());
  r.curve = roc_curve(r.scored);
  r.auc = roc_auc(r.scored);
  return r;
}

void check_roc(const std::vector<TrainingSequence>& data, const RocOptions& options) {
  if (options.train_dialogs + options.test_dialogs > data.size() || options.train_dialogs == 0)
    throw std::invalid_argument("ROC split needs " +
                                std::to_string(options.train_dialogs + options.test_dialogs) +
                                " dialogs, corpus has " + std::to_string(data.size()));
}

}  // namespace

RocResult roc_data_serial(const std::vector<TrainingSequence>& data, const RocOptions& options) {
  check_roc(data, options);
  std::vector<std::vector<ScoredAction>> per(options.repeats);
  for (std::size_t r = 0; r < options.repeats; ++r) per[r] = roc_repeat(data, options, r);
  return finish_roc(std::move(per));
}

RocResult roc_data(const std::vector<TrainingSequence>& data, const RocOptions& options) {
  check_roc(data, options);
  std::vector<std::vector<ScoredAction>> per(options.repeats);
  const auto n = static_cast<std::ptrdiff_t>(options.repeats);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t r = 0; r < n; ++r)
    per[static_cast<std::size_t>(r)] = roc_repeat(data, options, static_cast<std::size_t>(r));
  return finish_roc(std::move(per));
}

}  // namespace dialogctl
