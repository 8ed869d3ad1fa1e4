#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dialogctl/engine.hpp"
#include "dialogctl/phone/phone_domain.hpp"
#include "dialogctl/rng.hpp"

namespace dialogctl::phone {

/// Behaviour probabilities of the simulated caller.
struct SimParams {
  double p_use_nickname = 0.5;          // say a nickname instead of the full name
  double p_omit_phonetype = 0.5;        // leave the phone type out of the request
  double p_extra_info = 0.3;            // volunteer the phone type when not asked
  double p_ignore_question = 0.15;      // answer a question with filler
  double p_give_up_per_turn = 0.03;     // hang up before replying
  double p_oov_name = 0.1;              // goal is somebody not in the book
  double p_unavailable_type = 0.25;     // goal type is one the contact lacks
  double p_accept_offer = 0.8;          // take the alternative type offered
  double p_restate_goal = 0.1;          // repeat name and type instead of answering
  double p_full_name_on_disambig = 0.7; // give the full name when asked
  double p_give_up_on_confusion = 0.5;  // hang up after a prompt that makes no sense

  /// Throws std::invalid_argument unless every probability is in [0, 1].
  void validate() const;

  /// All adversarial behaviour off; every goal reachable.
  static SimParams benign();

  bool operator==(const SimParams&) const = default;
};

struct SimParamField {
  const char* name;
  double SimParams::*member;
};

/// Every probability by name, in declaration order.
const std::vector<SimParamField>& sim_param_fields();


struct UserGoal {
  std::string target_name;             // canonical name, or an unknown name
  std::optional<std::size_t> entry;    // address-book row when known
  std::string target_phonetype;        // canonical phone type

  bool satisfiable(const AddressBook& book) const;
};

UserGoal sample_goal(const AddressBook& book, const SimParams& params, Rng& rng);

/// What the dialog achieved, as far as the user can judge.
struct DialogOutcome {
  std::optional<PlacedCall> placed;
  std::optional<std::string> accepted_substitute;  // type the user agreed to instead
};

bool judge(const DialogOutcome& outcome, const UserGoal& goal);

/// Rule-based caller keyed on the system's template id.
class SimulatedUser : public UserAgent {
 public:
  SimulatedUser(const PhoneDomain& domain, SimParams params, UserGoal goal,
                std::uint64_t seed);

  UserReply respond(const ExecutedAction& last_text_action) override;
  bool judge(const EntityStore& store) const override;

  const UserGoal& goal() const { return goal_; }
  const std::optional<std::string>& accepted_substitute() const { return accepted_; }

 private:
  std::string spoken_name();
  std::string spoken_phonetype();
  std::string request(bool with_type);
  std::string filler();
  UserReply say(std::string text, bool request = true);
  bool coherent(const ExecutedAction& action) const;
  UserReply answer(const ExecutedAction& action);

  const PhoneDomain* domain_;
  SimParams params_;
  UserGoal goal_;
  Rng rng_;
  std::optional<std::string> accepted_;
  std::optional<ExecutedAction> last_prompt_;
  bool spoke_ = false;           // has replied at least once
  bool last_was_filler_ = false;
};

}  // namespace dialogctl::phone
