#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "dialogctl/actions.hpp"
#include "dialogctl/entities.hpp"

namespace dialogctl {

/// Domain-owned per-dialog memory; opaque to the engine.
class EntityStore {
 public:
  virtual ~EntityStore() = default;
  virtual std::unique_ptr<EntityStore> clone() const = 0;
};

/// Raised by domain code when a hook cannot complete (for example an API
/// action invoked without its preconditions).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Developer-supplied code around the policy: entity grounding, context
/// features, business-rule masking, template rendering and API actions.
class DomainHooks {
 public:
  virtual ~DomainHooks() = default;

  virtual const std::vector<ActionTemplate>& templates() const = 0;
  /// Entity types the user can say, in feature-flag order.
  virtual const std::vector<std::string>& entity_types() const = 0;
  virtual const Gazetteer& gazetteer() const = 0;
  virtual std::size_t context_dim() const = 0;
  virtual std::size_t api_feature_dim() const = 0;

  virtual std::unique_ptr<EntityStore> new_store() const = 0;
  virtual void entity_input(const std::vector<EntityMention>& mentions,
                            EntityStore& store) const = 0;
  virtual std::vector<double> context_features(const EntityStore& store) const = 0;
  virtual ActionMask action_mask(const EntityStore& store) const = 0;
  /// Every slot value currently fillable from the store.
  virtual std::map<std::string, std::string> slot_values(const EntityStore& store) const = 0;
  virtual std::vector<double> api_call(const ActionTemplate& action,
                                       EntityStore& store) const = 0;
  /// Called after a Text action has been rendered to the user.
  virtual void text_output(const ActionTemplate& /*action*/, EntityStore& /*store*/) const {}

  /// Substitutes stored entity values into a Text template.
  std::string entity_output(const ActionTemplate& action, const EntityStore& store) const;

  std::size_t n_actions() const { return templates().size(); }
  const ActionTemplate& find_template(std::string_view name) const;
};

/// Offsets of the feature-vector segments:
///   [entity flags | context | previous action one-hot (A+1) | API features | mask (A)]
/// The last slot of the previous-action segment encodes "none".
struct FeatureLayout {
  std::size_t entity_flags = 0;
  std::size_t context = 0;
  std::size_t prev_action = 0;
  std::size_t api = 0;
  std::size_t mask = 0;
  std::size_t dim = 0;

  static FeatureLayout of(const DomainHooks& hooks);
};

}  // namespace dialogctl
