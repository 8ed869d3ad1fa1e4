#pragma once

#include <span>
#include <vector>

#include "dialogctl/engine.hpp"
#include "dialogctl/phone/phone_domain.hpp"

namespace dialogctl::phone {

/// Hand-written phone-dialing policy that reads only the feature vector.
/// Serves as a reference controller for the simulator and the engine loop.
class ScriptedPhonePolicy : public Policy {
 public:
  explicit ScriptedPhonePolicy(const PhoneDomain& domain, std::size_t max_retries = 2);

  void reset() override;
  std::vector<double> distribution(std::span<const double> features) override;

  /// The action this policy would take; a one-hot distribution puts all mass on it.
  std::size_t choose(std::span<const double> features);

 private:
  FeatureLayout layout_;
  std::size_t n_actions_;
  std::size_t max_retries_;
  std::size_t unknown_count_ = 0;
  std::size_t confused_count_ = 0;
};

}  // namespace dialogctl::phone
