#include "dialogctl/engine.hpp"

#include <algorithm>
#include <stdexcept>

namespace dialogctl {

std::string DomainHooks::entity_output(const ActionTemplate& action,
                                       const EntityStore& store) const {
  if (action.kind != ActionKind::Text)
    throw std::logic_error("entity_output called for API action " + action.name);
  const auto values = slot_values(store);
  return render_pattern(action.pattern, [&](const std::string& slot) {
    const auto it = values.find(slot);
    if (it == values.end())
      throw DomainError("slot <" + slot + "> of " + action.name + " is not fillable");
    return it->second;
  });
}

const ActionTemplate& DomainHooks::find_template(std::string_view name) const {
  for (const auto& t : templates())
    if (t.name == name) return t;
  throw std::invalid_argument("unknown action template: " + std::string(name));
}

FeatureLayout FeatureLayout::of(const DomainHooks& hooks) {
  FeatureLayout l;
  const std::size_t A = hooks.n_actions();
  l.entity_flags = 0;
  l.context = hooks.entity_types().size();
  l.prev_action = l.context + hooks.context_dim();
  l.api = l.prev_action + A + 1;
  l.mask = l.api + hooks.api_feature_dim();
  l.dim = l.mask + A;
  return l;
}

// ---------------------------------------------------------------------------

DialogTracker::DialogTracker(const DomainHooks& hooks)
    : hooks_(&hooks),
      layout_(FeatureLayout::of(hooks)),
      store_(hooks.new_store()),
      entity_flags_(hooks.entity_types().size(), 0.0),
      api_features_(hooks.api_feature_dim(), 0.0) {}

DialogTracker::DialogTracker(const DialogTracker& other)
    : hooks_(other.hooks_),
      layout_(other.layout_),
      store_(other.store_->clone()),
      entity_flags_(other.entity_flags_),
      api_features_(other.api_features_),
      prev_action_(other.prev_action_),
      turn_index_(other.turn_index_),
      turn_started_(other.turn_started_),
      closed_(other.closed_) {}

DialogTracker& DialogTracker::operator=(const DialogTracker& other) {
  if (this != &other) *this = DialogTracker(other);
  return *this;
}

namespace {

std::vector<double> entity_flags_for(const std::vector<EntityMention>& mentions,
                                     const DomainHooks& hooks) {
  const auto& types = hooks.entity_types();
  std::vector<double> flags(types.size(), 0.0);
  for (const auto& m : mentions) {
    const auto it = std::find(types.begin(), types.end(), m.entity_type);
    if (it != types.end()) flags[static_cast<std::size_t>(it - types.begin())] = 1.0;
  }
  return flags;
}

std::vector<double> build_features(const DialogTracker& tracker,
                                   const std::vector<double>& flags,
                                   const std::vector<double>& api_features) {
  const auto& hooks = tracker.hooks();
  const auto& layout = tracker.layout();
  std::vector<double> x(layout.dim, 0.0);

  std::copy(flags.begin(), flags.end(), x.begin() + static_cast<long>(layout.entity_flags));

  const auto context = hooks.context_features(tracker.store());
  if (context.size() != hooks.context_dim())
    throw std::length_error("context features have " + std::to_string(context.size()) +
                            " entries, domain declared " +
                            std::to_string(hooks.context_dim()));
  std::copy(context.begin(), context.end(), x.begin() + static_cast<long>(layout.context));

  const std::size_t none_slot = hooks.n_actions();
  x[layout.prev_action + tracker.prev_action().value_or(none_slot)] = 1.0;

  std::copy(api_features.begin(), api_features.end(),
            x.begin() + static_cast<long>(layout.api));

  const auto mask = hooks.action_mask(tracker.store());
  for (std::size_t i = 0; i < mask.size(); ++i)
    x[layout.mask + i] = mask.allowed(i) ? 1.0 : 0.0;
  return x;
}

}  // namespace

void DialogTracker::begin_turn(const std::vector<EntityMention>& mentions) {
  if (closed_) throw std::logic_error("dialog already ended");
  if (turn_started_) ++turn_index_;
  turn_started_ = true;
  hooks_->entity_input(mentions, *store_);
  entity_flags_ = entity_flags_for(mentions, *hooks_);
}

std::vector<double> DialogTracker::features() const {
  return build_features(*this, entity_flags_, api_features_);
}

ActionMask DialogTracker::mask() const {
  auto m = hooks_->action_mask(*store_);
  if (m.size() != hooks_->n_actions())
    throw std::length_error("domain mask has wrong length");
  if (!m.any()) throw DomainError("domain masked every action");
  return m;
}

ExecutedAction DialogTracker::apply(std::size_t action_id) {
  if (closed_) throw std::logic_error("dialog already ended");
  const auto& templates = hooks_->templates();
  if (action_id >= templates.size())
    throw std::out_of_range("action id " + std::to_string(action_id) + " out of range");
  if (!mask().allowed(action_id))
    throw std::logic_error("action " + templates[action_id].name + " is masked");

  const ActionTemplate& t = templates[action_id];
  ExecutedAction done;
  done.id = t.id;
  done.name = t.name;
  done.kind = t.kind;
  done.terminal = t.terminal;
  done.awaits_user = t.kind == ActionKind::Text && t.awaits_user;

  if (t.kind == ActionKind::Text) {
    done.text = hooks_->entity_output(t, *store_);
    done.slots = hooks_->slot_values(*store_);
    hooks_->text_output(t, *store_);
    std::fill(api_features_.begin(), api_features_.end(), 0.0);
  } else {
    auto returned = hooks_->api_call(t, *store_);
    if (returned.size() != hooks_->api_feature_dim())
      throw std::length_error("API " + t.name + " returned wrong feature count");
    api_features_ = std::move(returned);
  }
  prev_action_ = action_id;
  std::fill(entity_flags_.begin(), entity_flags_.end(), 0.0);
  if (t.terminal) closed_ = true;
  return done;
}

std::vector<double> assemble_features(const std::vector<EntityMention>& mentions,
                                      const DialogTracker& tracker) {
  const auto x = tracker.features();
  auto flags = entity_flags_for(mentions, tracker.hooks());
  std::vector<double> out = x;
  std::copy(flags.begin(), flags.end(),
            out.begin() + static_cast<long>(tracker.layout().entity_flags));
  return out;
}

// ---------------------------------------------------------------------------

NeuralPolicy::NeuralPolicy(std::shared_ptr<const ModelParams> params)
    : params_(std::move(params)), state_(initial_state(*params_)) {}

void NeuralPolicy::reset() { state_ = initial_state(*params_); }

void NeuralPolicy::set_params(std::shared_ptr<const ModelParams> params) {
  params_ = std::move(params);
  reset();
}

std::vector<double> NeuralPolicy::distribution(std::span<const double> features) {
  auto out = forward_step(*params_, state_, features);
  state_ = std::move(out.state);
  return softmax(out.logits);
}

// ---------------------------------------------------------------------------

DialogSession::DialogSession(const DomainHooks& hooks, Policy& policy,
                             SessionOptions options)
    : hooks_(&hooks), policy_(&policy), options_(options), rng_(options.seed),
      tracker_(hooks) {
  policy_->reset();
}

std::vector<ExecutedAction> DialogSession::run_turn(std::string_view user_text) {
  auto mentions = extract_entities(user_text, hooks_->gazetteer());
  auto annotated = to_markup(user_text, mentions);
  return run_turn(mentions, std::move(annotated));
}

std::vector<ExecutedAction> DialogSession::run_turn(
    const std::vector<EntityMention>& mentions, std::string annotated_text) {
  if (tracker_.closed()) throw std::logic_error("session closed");
  std::vector<ExecutedAction> executed;
  try {
    tracker_.begin_turn(mentions);
    ++user_turns_;
    for (std::size_t step = 0; step < options_.max_steps_per_turn; ++step) {
      TurnRecord rec;
      rec.turn_index = tracker_.turn_index();
      rec.opens_turn = step == 0;
      if (step == 0) rec.user_text = annotated_text;
      rec.features = tracker_.features();
      rec.mask = tracker_.mask();
      const auto raw = policy_->distribution(rec.features);
      rec.distribution = mask_and_renormalize(raw, rec.mask);
      rec.action = select_action(rec.distribution, options_.mode, rng_);
      rec.behavior_prob = rec.distribution[rec.action];
      transcript_.push_back(rec);

      executed.push_back(tracker_.apply(rec.action));
      const auto& last = executed.back();
      if (last.terminal || last.awaits_user) break;
    }
  } catch (const DomainError& e) {
    throw DomainError("turn " + std::to_string(tracker_.turn_index()) + ": " + e.what());
  }
  return executed;
}

DialogResult run_dialog(DialogSession& session, UserAgent& user, std::size_t max_turns) {
  DialogResult result;
  if (max_turns == 0) return result;

  auto executed = session.run_turn(std::string_view{});
  result.actions = executed;
  while (!session.closed() && session.user_turns() < max_turns) {
    const ExecutedAction* prompt = nullptr;
    for (auto it = executed.rbegin(); it != executed.rend(); ++it)
      if (it->kind == ActionKind::Text) {
        prompt = &*it;
        break;
      }
    if (prompt == nullptr) prompt = &executed.back();

    const UserReply reply = user.respond(*prompt);
    if (reply.kind == UserReply::Kind::HangUp) {
      result.hung_up = true;
      break;
    }
    executed = session.run_turn(reply.kind == UserReply::Kind::Silent
                                    ? std::string_view{}
                                    : std::string_view{reply.text});
    result.actions.insert(result.actions.end(), executed.begin(), executed.end());
  }

  result.records = session.transcript();
  result.terminal = session.closed();
  result.user_turns = session.user_turns();
  result.success = user.judge(session.tracker().store());
  return result;
}

}  // namespace dialogctl
