#include "dialogctl/phone/scripted_policy.hpp"

#include <stdexcept>

namespace dialogctl::phone {

ScriptedPhonePolicy::ScriptedPhonePolicy(const PhoneDomain& domain, std::size_t max_retries)
    : layout_(FeatureLayout::of(domain)), n_actions_(domain.n_actions()),
      max_retries_(max_retries) {}

void ScriptedPhonePolicy::reset() {
  unknown_count_ = 0;
  confused_count_ = 0;
}

std::size_t ScriptedPhonePolicy::choose(std::span<const double> x) {
  if (x.size() != layout_.dim) throw std::invalid_argument("feature vector has wrong length");
  const auto ctx = [&](Context c) { return x[layout_.context + c] > 0.5; };
  const auto allowed = [&](Action a) { return x[layout_.mask + a] > 0.5; };
  std::size_t prev = n_actions_;
  for (std::size_t i = 0; i <= n_actions_; ++i)
    if (x[layout_.prev_action + i] > 0.5) prev = i;

  if (prev == n_actions_) return kGreeting;
  if (prev == kAnnounceCall) return kPlaceCall;
  if (prev == kSavePhonetype) return kAnnounceCall;

  const bool said_yes = ctx(kSaidYes), said_no = ctx(kSaidNo);
  if (prev == kOfferSole || prev == kReprompt) {
    if (said_yes && allowed(kSavePhonetype)) return kSavePhonetype;
    if (said_no) return kApologyGoodbye;
    if (prev == kOfferSole) return kReprompt;
  }

  if (ctx(kMatchesNone)) {
    if (++unknown_count_ > max_retries_) return kGoodbye;
    return kUnknownName;
  }
  if (ctx(kMatchesMany)) return kDisambiguate;
  if (ctx(kMatchesOne)) {
    if (ctx(kCommitted)) return kAnnounceCall;
    if (ctx(kRequestedUnavailable)) return ctx(kTypesOne) ? kOfferSole : kOfferMulti;
    if (ctx(kTypesOne) && allowed(kSavePhonetype)) return kSavePhonetype;
    return kAskPhonetype;
  }
  if (++confused_count_ > max_retries_) return kGoodbye;
  return kDidntUnderstand;
}

std::vector<double> ScriptedPhonePolicy::distribution(std::span<const double> features) {
  std::vector<double> d(n_actions_, 0.0);
  d[choose(features)] = 1.0;
  return d;
}

}  // namespace dialogctl::phone
