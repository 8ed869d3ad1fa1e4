#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dialogctl/adadelta.hpp"
#include "dialogctl/corpus.hpp"
#include "dialogctl/model.hpp"

namespace dialogctl {

/// Distribution the engine acts on: softmax, then masked renormalization.
std::vector<double> masked_distribution(std::span<const double> logits, const ActionMask& mask);

/// Cross-entropy of the target under the masked distribution, summed over a
/// sequence. When `upstream` is given it receives dloss/dlogits per step
/// (p_j - [j == target] on allowed actions, 0 on masked ones).
double sequence_loss(const ModelParams& params, const TrainingSequence& seq,
                     std::vector<std::vector<double>>* upstream = nullptr);

/// Greedy action and its masked probability at every step, replaying the
/// recorded inputs.
struct StepPrediction {
  std::size_t action = 0;
  double score = 0.0;
  std::size_t target = 0;
  bool correct() const { return action == target; }
};

std::vector<StepPrediction> predict(const ModelParams& params, const TrainingSequence& seq);

/// True iff greedy masked selection reproduces every target of every dialog.
bool reconstructs(const ModelParams& params, const std::vector<TrainingSequence>& data);

enum class StopRule {
  Reconstruction,  // train until reconstructed or max_epochs
  Plateau,         // also stop once the loss stops improving
};

struct SlOptions {
  std::size_t max_epochs = 2000;
  StopRule stop = StopRule::Reconstruction;
  std::size_t plateau_epochs = 100;
  double plateau_rel_tol = 1e-4;
  std::uint64_t shuffle_seed = 0;
};

struct SlReport {
  std::size_t epochs = 0;
  bool reconstructed = false;
  bool plateaued = false;
  std::vector<double> epoch_loss;  // summed loss seen during each epoch
  double seconds = 0.0;
};

/// One AdaDelta descent step per dialog, dialogs shuffled each epoch.
/// Checks reconstruction before every epoch, so an already reconstructing
/// model returns with epochs == 0.
SlReport train_sl(ModelParams& params, AdaDeltaState& opt,
                  const std::vector<TrainingSequence>& data, const SlOptions& options = {});

/// Same with a fresh optimizer.
SlReport train_sl(ModelParams& params, const std::vector<TrainingSequence>& data,
                  const SlOptions& options = {});

// ---------------------------------------------------------------------------
// Experiments over a featurized corpus. Each has a serial reference and an
// OpenMP version that must return identical results.

struct ModelSpec {
  ModelKind kind = ModelKind::LSTM;
  std::size_t hidden_dim = 32;
};

struct LooOptions {
  std::vector<std::size_t> train_sizes{1, 2, 5, 10, 20};
  ModelSpec model;
  SlOptions sl;
  std::uint64_t seed = 0;
};

struct LooFold {
  std::size_t held_out = 0;
  std::size_t train_size = 0;
  double turn_accuracy = 0.0;
  bool dialog_correct = false;
  bool reconstructed = false;
  std::size_t epochs = 0;
};

struct LooRow {
  std::size_t train_size = 0;
  double turn_accuracy = 0.0;    // mean over folds of per-dialog turn accuracy
  double dialog_accuracy = 0.0;  // fraction of held-out dialogs with no error
};

struct LooResult {
  std::vector<LooRow> rows;
  std::vector<LooFold> folds;  // fold-major, sizes in option order
};

/// Leave-one-out: each dialog held out in turn; nested training subsets of
/// every size drawn from the rest.
LooResult loo_eval(const std::vector<TrainingSequence>& data, const LooOptions& options);
LooResult loo_eval_serial(const std::vector<TrainingSequence>& data, const LooOptions& options);

struct ArchCell {
  ModelKind kind = ModelKind::LSTM;
  std::size_t dialogs = 0;
  bool reconstructed = false;
  std::size_t epochs = 0;
};

struct ArchOptions {
  std::vector<ModelKind> kinds{ModelKind::DNN, ModelKind::RNN, ModelKind::LSTM};
  std::vector<std::size_t> sizes{1, 10, 21};
  std::size_t hidden_dim = 32;
  SlOptions sl{2000, StopRule::Plateau, 100, 1e-4, 0};
  std::uint64_t seed = 0;
};

/// Trains every (architecture, first-n-dialogs) cell and records whether the
/// training set was reproduced.
std::vector<ArchCell> compare_architectures(const std::vector<TrainingSequence>& data,
                                            const ArchOptions& options);
std::vector<ArchCell> compare_architectures_serial(const std::vector<TrainingSequence>& data,
                                                   const ArchOptions& options);

struct ScoredAction {
  double score = 0.0;
  bool correct = false;
};

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocOptions {
  std::size_t repeats = 10;
  std::size_t train_dialogs = 11;
  std::size_t test_dialogs = 10;
  ModelSpec model;
  SlOptions sl;
  std::uint64_t seed = 0;
};

struct RocResult {
  std::vector<ScoredAction> scored;  // repeat-major
  std::vector<RocPoint> curve;
  double auc = 0.0;
};

/// Area under the ROC curve: P(score of a correct action > score of an
/// incorrect one), ties counting one half. 1.0 when either class is empty.
double roc_auc(const std::vector<ScoredAction>& scored);

/// The origin (threshold +inf), then a point at every distinct score
/// threshold r counting actions with score >= r, from the highest down.
std::vector<RocPoint> roc_curve(const std::vector<ScoredAction>& scored);

/// Fraction of incorrect actions among the `n` lowest-scored ones. Ties are
/// broken by the original order.
double incorrect_fraction_lowest(const std::vector<ScoredAction>& scored, std::size_t n);

RocResult roc_data(const std::vector<TrainingSequence>& data, const RocOptions& options);
RocResult roc_data_serial(const std::vector<TrainingSequence>& data, const RocOptions& options);

}  // namespace dialogctl
