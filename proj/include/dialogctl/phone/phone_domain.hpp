#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dialogctl/domain.hpp"
#include "dialogctl/phone/addressbook.hpp"

namespace dialogctl::phone {

/// Template ids of the phone-dialing domain.
enum Action : std::size_t {
  kGreeting = 0,
  kAskPhonetype,
  kAnnounceCall,
  kPlaceCall,
  kSavePhonetype,
  kOfferSole,
  kOfferMulti,
  kApologyGoodbye,
  kDisambiguate,
  kUnknownName,
  kReprompt,
  kConfirmName,
  kGoodbye,
  kDidntUnderstand,
  kActionCount
};

/// Context-feature positions (see PhoneDomain::context_features).
enum Context : std::size_t {
  kMatchesNone = 0,
  kMatchesOne,
  kMatchesMany,
  kTypesNone,
  kTypesOne,
  kTypesMany,
  kRequestedAvailable,
  kRequestedUnavailable,
  kCommitted,
  kSaidYes,
  kSaidNo,
  kContextDim
};

/// API feature positions.
enum ApiFeature : std::size_t { kApiSavedPhonetype = 0, kApiPlacedCall, kApiDim };

struct PlacedCall {
  std::string contact;
  std::string phonetype;
  std::string number;

  bool operator==(const PlacedCall&) const = default;
};

/// Per-dialog entity memory. Values persist until a newer mention replaces
/// them; yes/no only describes the latest user input.
class PhoneStore : public EntityStore {
 public:
  std::unique_ptr<EntityStore> clone() const override {
    return std::make_unique<PhoneStore>(*this);
  }

  std::optional<std::string> name;                // as the user said it
  std::vector<std::size_t> matched_entries;       // address-book rows
  std::optional<std::string> phonetype;           // canonical, as requested
  std::optional<std::string> phonetype_surface;   // as the user said it
  std::optional<std::string> committed_phonetype;
  std::vector<std::string> phonetypes_avail;      // of the unique match
  bool announced = false;                         // call announced for the committed type
  std::optional<std::string> yesno;               // "yes" / "no", this turn
  std::optional<PlacedCall> placed;

  bool unique_contact() const { return matched_entries.size() == 1; }
};

class PhoneDomain : public DomainHooks {
 public:
  explicit PhoneDomain(AddressBook book);

  const AddressBook& address_book() const { return book_; }

  const std::vector<ActionTemplate>& templates() const override { return templates_; }
  const std::vector<std::string>& entity_types() const override { return entity_types_; }
  const Gazetteer& gazetteer() const override { return gazetteer_; }
  std::size_t context_dim() const override { return kContextDim; }
  std::size_t api_feature_dim() const override { return kApiDim; }

  std::unique_ptr<EntityStore> new_store() const override;
  void entity_input(const std::vector<EntityMention>& mentions,
                    EntityStore& store) const override;
  std::vector<double> context_features(const EntityStore& store) const override;
  ActionMask action_mask(const EntityStore& store) const override;
  std::map<std::string, std::string> slot_values(const EntityStore& store) const override;
  std::vector<double> api_call(const ActionTemplate& action, EntityStore& store) const override;
  void text_output(const ActionTemplate& action, EntityStore& store) const override;

  /// Commits the requested type, or the sole type of the matched contact.
  std::vector<double> api_save_phonetype(PhoneStore& store) const;
  /// Records the dialed (contact, type, number) as the dialog outcome.
  std::vector<double> api_place_call(PhoneStore& store) const;

  const AddressBookEntry& contact(const PhoneStore& store) const;

 private:
  AddressBook book_;
  std::vector<ActionTemplate> templates_;
  std::vector<std::string> entity_types_;
  Gazetteer gazetteer_;
};

const PhoneStore& as_phone_store(const EntityStore& store);
PhoneStore& as_phone_store(EntityStore& store);

/// Joins phone types for speech: "mobile or work", "mobile, work or home".
std::string speak_list(const std::vector<std::string>& items);

}  // namespace dialogctl::phone
