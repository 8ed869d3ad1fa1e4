#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dialogctl/actions.hpp"
#include "dialogctl/domain.hpp"
#include "dialogctl/model.hpp"
#include "dialogctl/rng.hpp"

namespace dialogctl {

struct ExecutedAction {
  std::size_t id = 0;
  std::string name;
  ActionKind kind = ActionKind::Text;
  std::string text;  // rendered text; empty for API actions
  std::map<std::string, std::string> slots;
  bool terminal = false;
  bool awaits_user = true;
};

/// Entity store, previous action and pending API features for one dialog.
/// Drives feature assembly and action execution without any policy, so
/// corpus replay and live sessions share one code path.
class DialogTracker {
 public:
  explicit DialogTracker(const DomainHooks& hooks);
  DialogTracker(const DialogTracker& other);
  DialogTracker& operator=(const DialogTracker& other);
  DialogTracker(DialogTracker&&) noexcept = default;
  DialogTracker& operator=(DialogTracker&&) noexcept = default;

  /// Grounds this turn's mentions and records which entity types appeared.
  void begin_turn(const std::vector<EntityMention>& mentions);

  std::vector<double> features() const;
  ActionMask mask() const;

  /// Renders or calls the action. API features feed the next feature vector.
  ExecutedAction apply(std::size_t action_id);

  const DomainHooks& hooks() const { return *hooks_; }
  const FeatureLayout& layout() const { return layout_; }
  const EntityStore& store() const { return *store_; }
  EntityStore& store() { return *store_; }
  std::optional<std::size_t> prev_action() const { return prev_action_; }
  std::size_t turn_index() const { return turn_index_; }
  bool closed() const { return closed_; }

 private:
  const DomainHooks* hooks_;
  FeatureLayout layout_;
  std::unique_ptr<EntityStore> store_;
  std::vector<double> entity_flags_;
  std::vector<double> api_features_;
  std::optional<std::size_t> prev_action_;
  std::size_t turn_index_ = 0;
  bool turn_started_ = false;
  bool closed_ = false;
};

/// Builds the feature vector for the tracker's current state.
std::vector<double> assemble_features(const std::vector<EntityMention>& mentions,
                                      const DialogTracker& tracker);

/// Maps features to a full (pre-mask) distribution over templates.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual void reset() = 0;
  virtual std::vector<double> distribution(std::span<const double> features) = 0;
};

class NeuralPolicy : public Policy {
 public:
  explicit NeuralPolicy(std::shared_ptr<const ModelParams> params);

  void reset() override;
  std::vector<double> distribution(std::span<const double> features) override;
  const ModelParams& params() const { return *params_; }
  void set_params(std::shared_ptr<const ModelParams> params);

 private:
  std::shared_ptr<const ModelParams> params_;
  ModelState state_;
};

/// One policy decision as it happened.
struct TurnRecord {
  std::size_t turn_index = 0;
  std::string user_text;      // annotated with entity markup
  bool opens_turn = false;    // first decision after this user input
  std::vector<double> features;
  ActionMask mask;
  std::vector<double> distribution;  // after masking and renormalization
  std::size_t action = 0;
  double behavior_prob = 0.0;
};

struct SessionOptions {
  SelectionMode mode = SelectionMode::Greedy;
  std::uint64_t seed = 0;
  std::size_t max_steps_per_turn = 8;
};

class DialogSession {
 public:
  DialogSession(const DomainHooks& hooks, Policy& policy, SessionOptions options = {});

  /// One pass of the operational loop: extract entities, ground them, then
  /// choose and execute actions until one hands the floor back to the user
  /// or ends the dialog.
  std::vector<ExecutedAction> run_turn(std::string_view user_text);
  std::vector<ExecutedAction> run_turn(const std::vector<EntityMention>& mentions,
                                       std::string annotated_text);

  const DialogTracker& tracker() const { return tracker_; }
  const std::vector<TurnRecord>& transcript() const { return transcript_; }
  bool closed() const { return tracker_.closed(); }
  SelectionMode mode() const { return options_.mode; }
  std::size_t user_turns() const { return user_turns_; }

 private:
  const DomainHooks* hooks_;
  Policy* policy_;
  SessionOptions options_;
  Rng rng_;
  DialogTracker tracker_;
  std::vector<TurnRecord> transcript_;
  std::size_t user_turns_ = 0;
};

struct UserReply {
  enum class Kind { Utterance, Silent, HangUp };
  Kind kind = Kind::Utterance;
  std::string text;
};

/// Counterpart in run_dialog: answers each system text action and judges
/// the result.
class UserAgent {
 public:
  virtual ~UserAgent() = default;
  virtual UserReply respond(const ExecutedAction& last_text_action) = 0;
  virtual bool judge(const EntityStore& store) const = 0;
};

struct DialogResult {
  std::vector<TurnRecord> records;
  std::vector<ExecutedAction> actions;
  bool terminal = false;
  bool hung_up = false;
  bool success = false;
  std::size_t user_turns = 0;
};

/// Alternates run_turn and user replies until a terminal action, a hang-up
/// or `max_turns` engine turns (the opening turn included).
DialogResult run_dialog(DialogSession& session, UserAgent& user, std::size_t max_turns = 20);

}  // namespace dialogctl
