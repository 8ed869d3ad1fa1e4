#include "dialogctl/phone/user_sim.hpp"

#include <algorithm>
#include <stdexcept>

namespace dialogctl::phone {

namespace {

template <typename T>
const T& pick(const std::vector<T>& items, Rng& rng) {
  return items[rng.below(items.size())];
}

const std::vector<std::string> kFillers = {"hmm", "uh", "let me think", "hello",
                                           "what was that"};

}  // namespace

const std::vector<SimParamField>& sim_param_fields() {
  static const std::vector<SimParamField> fields = {
      {"p_use_nickname", &SimParams::p_use_nickname},
      {"p_omit_phonetype", &SimParams::p_omit_phonetype},
      {"p_extra_info", &SimParams::p_extra_info},
      {"p_ignore_question", &SimParams::p_ignore_question},
      {"p_give_up_per_turn", &SimParams::p_give_up_per_turn},
      {"p_oov_name", &SimParams::p_oov_name},
      {"p_unavailable_type", &SimParams::p_unavailable_type},
      {"p_accept_offer", &SimParams::p_accept_offer},
      {"p_restate_goal", &SimParams::p_restate_goal},
      {"p_full_name_on_disambig", &SimParams::p_full_name_on_disambig},
      {"p_give_up_on_confusion", &SimParams::p_give_up_on_confusion},
  };
  return fields;
}

void SimParams::validate() const {
  for (const auto& f : sim_param_fields()) {
    const double p = this->*f.member;
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument(std::string("simulator probability ") + f.name +
                                  " outside [0, 1]: " + std::to_string(p));
  }
}

SimParams SimParams::benign() {
  SimParams p;
  p.p_extra_info = 0.0;
  p.p_ignore_question = 0.0;
  p.p_give_up_per_turn = 0.0;
  p.p_oov_name = 0.0;
  p.p_unavailable_type = 0.0;
  p.p_accept_offer = 1.0;
  p.p_restate_goal = 0.0;
  p.p_full_name_on_disambig = 1.0;
  p.p_give_up_on_confusion = 0.0;
  return p;
}

bool UserGoal::satisfiable(const AddressBook& book) const {
  return entry.has_value() && book.entries().at(*entry).has(target_phonetype);
}

UserGoal sample_goal(const AddressBook& book, const SimParams& params, Rng& rng) {
  UserGoal goal;
  if (book.entries().empty() || (!book.extra_names().empty() && rng.bernoulli(params.p_oov_name))) {
    goal.target_name = pick(book.extra_names(), rng);
    goal.target_phonetype = pick(kPhoneTypes, rng);
    return goal;
  }
  goal.entry = rng.below(book.entries().size());
  const auto& e = book.entries()[*goal.entry];
  goal.target_name = e.canonical_name;
  const auto have = e.phonetypes();
  std::vector<std::string> missing;
  for (const auto& t : kPhoneTypes)
    if (!e.has(t)) missing.push_back(t);
  if (!missing.empty() && rng.bernoulli(params.p_unavailable_type))
    goal.target_phonetype = pick(missing, rng);
  else
    goal.target_phonetype = pick(have, rng);
  return goal;
}

bool judge(const DialogOutcome& outcome, const UserGoal& goal) {
  if (!outcome.placed || !goal.entry) return false;
  if (outcome.placed->contact != goal.target_name) return false;
  if (outcome.placed->phonetype == goal.target_phonetype) return true;
  return outcome.accepted_substitute && outcome.placed->phonetype == *outcome.accepted_substitute;
}

SimulatedUser::SimulatedUser(const PhoneDomain& domain, SimParams params, UserGoal goal,
                             std::uint64_t seed)
    : domain_(&domain), params_(params), goal_(std::move(goal)), rng_(seed) {
  params_.validate();
}

std::string SimulatedUser::spoken_name() {
  if (!goal_.entry) return goal_.target_name;
  const auto& e = domain_->address_book().entries()[*goal_.entry];
  if (!e.nicknames.empty() && rng_.bernoulli(params_.p_use_nickname)) {
    const std::vector<std::string> nicks(e.nicknames.begin(), e.nicknames.end());
    return pick(nicks, rng_);
  }
  return e.canonical_name;
}

std::string SimulatedUser::spoken_phonetype() {
  return pick(phonetype_synonyms().at(goal_.target_phonetype), rng_);
}

std::string SimulatedUser::request(bool with_type) {
  std::string text = "Call " + spoken_name();
  if (with_type) text += " on the " + spoken_phonetype();
  return text;
}

std::string SimulatedUser::filler() { return pick(kFillers, rng_); }

UserReply SimulatedUser::say(std::string text, bool request) {
  spoke_ = true;
  last_was_filler_ = !request;
  return UserReply{UserReply::Kind::Utterance, std::move(text)};
}

bool SimulatedUser::coherent(const ExecutedAction& action) const {
  const auto slot = [&](const char* key) -> std::string {
    const auto it = action.slots.find(key);
    return it == action.slots.end() ? std::string{} : it->second;
  };
  const auto& book = domain_->address_book();
  switch (static_cast<Action>(action.id)) {
    case kGreeting: return !spoke_;
    case kDidntUnderstand:
    case kReprompt: return !spoke_ || last_was_filler_;
    case kUnknownName: return book.lookup(slot("name")).empty();
    case kDisambiguate: return book.lookup(slot("name")).size() > 1;
    case kOfferSole:
    case kOfferMulti: {
      const auto rows = book.lookup(slot("canonicalname"));
      const auto type = normalize_phonetype(slot("phonetype"));
      return rows.size() == 1 && !type.empty() && !book.entries()[rows[0]].has(type);
    }
    default: return true;
  }
}

UserReply SimulatedUser::respond(const ExecutedAction& action) {
  if (rng_.bernoulli(params_.p_give_up_per_turn)) return UserReply{UserReply::Kind::HangUp, {}};
  if (!coherent(action) && rng_.bernoulli(params_.p_give_up_on_confusion))
    return UserReply{UserReply::Kind::HangUp, {}};
  return answer(action);
}

UserReply SimulatedUser::answer(const ExecutedAction& action) {
  if (action.id != kReprompt) last_prompt_ = action;

  const auto slot = [&](const char* key) -> std::string {
    const auto it = action.slots.find(key);
    return it == action.slots.end() ? std::string{} : it->second;
  };
  const bool right_contact = goal_.entry && slot("canonicalname") == goal_.target_name;

  switch (static_cast<Action>(action.id)) {
    case kGreeting:
      return say(request(!rng_.bernoulli(params_.p_omit_phonetype)));

    case kDidntUnderstand:
    case kUnknownName:
      if (rng_.bernoulli(params_.p_ignore_question)) return say(filler(), false);
      return say(request(rng_.bernoulli(params_.p_extra_info)));

    case kDisambiguate: {
      if (rng_.bernoulli(params_.p_ignore_question)) return say(filler(), false);
      std::string text = rng_.bernoulli(params_.p_full_name_on_disambig) ? goal_.target_name
                                                                        : spoken_name();
      if (rng_.bernoulli(params_.p_extra_info)) text += " on the " + spoken_phonetype();
      return say(text);
    }

    case kAskPhonetype:
      if (rng_.bernoulli(params_.p_ignore_question)) return say(filler(), false);
      if (rng_.bernoulli(params_.p_restate_goal)) return say(request(true));
      return say(spoken_phonetype());

    case kOfferSole: {
      if (rng_.bernoulli(params_.p_ignore_question)) return say(filler(), false);
      const std::string offered = normalize_phonetype(slot("phonetypesavail"));
      const bool compatible = right_contact && !goal_.satisfiable(domain_->address_book());
      if (compatible && !offered.empty() && rng_.bernoulli(params_.p_accept_offer)) {
        accepted_ = offered;
        return say("yes");
      }
      return say("no");
    }

    case kOfferMulti: {
      if (rng_.bernoulli(params_.p_ignore_question)) return say(filler(), false);
      const bool compatible = right_contact && !goal_.satisfiable(domain_->address_book());
      if (compatible && rng_.bernoulli(params_.p_accept_offer)) {
        const auto& types = domain_->address_book().entries()[*goal_.entry].phonetypes();
        accepted_ = pick(types, rng_);
        return say(pick(phonetype_synonyms().at(*accepted_), rng_));
      }
      if (right_contact) return say("no");
      return say(request(true));
    }

    case kConfirmName:
      return say(right_contact ? "yes" : "no");

    case kReprompt:
      if (last_prompt_) return answer(ExecutedAction(*last_prompt_));
      return say(request(false));

    case kAnnounceCall:
    case kPlaceCall:
    case kSavePhonetype:
    case kApologyGoodbye:
    case kGoodbye:
      return UserReply{UserReply::Kind::Silent, {}};

    case kActionCount: break;
  }
  throw std::invalid_argument("simulated user has no rule for template " + action.name);
}

bool SimulatedUser::judge(const EntityStore& store) const {
  const auto& s = as_phone_store(store);
  return phone::judge(DialogOutcome{s.placed, accepted_}, goal_);
}

}  // namespace dialogctl::phone
