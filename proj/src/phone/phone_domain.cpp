#include "dialogctl/phone/phone_domain.hpp"

#include <stdexcept>

namespace dialogctl::phone {

namespace {

std::vector<ActionTemplate> make_templates() {
  using K = ActionKind;
  struct Row {
    Action id;
    const char* name;
    K kind;
    const char* pattern;
    bool terminal;
    bool awaits_user;
  };
  // announce_call is spoken and then the call is placed without waiting.
  static const Row rows[] = {
      {kGreeting, "greeting", K::Text, "How can I help you?", false, true},
      {kAskPhonetype, "ask_phonetype", K::Text, "Which type of phone: <phonetypesavail>?",
       false, true},
      {kAnnounceCall, "announce_call", K::Text,
       "Calling <canonicalname>, <canonicalphonetype>", false, false},
      {kPlaceCall, "PlaceCall", K::Api, "PlaceCall", true, false},
      {kSavePhonetype, "SavePhonetypeavail", K::Api, "SavePhonetypeavail", false, false},
      {kOfferSole, "offer_sole_phonetype", K::Text,
       "Sorry, I don't have a <phonetype> number for <canonicalname>. I only have a "
       "<phonetypesavail> phone. Do you want to call that number?",
       false, true},
      {kOfferMulti, "offer_other_phonetypes", K::Text,
       "Sorry, I don't have a <phonetype> number for <canonicalname>. I have "
       "<phonetypesavail>. Which would you like?",
       false, true},
      {kApologyGoodbye, "apology_goodbye", K::Text, "Oh, sorry about that. Goodbye.", true,
       true},
      {kDisambiguate, "disambiguate_name", K::Text,
       "There's more than one person named <name>. Can you say their full name?", false,
       true},
      {kUnknownName, "unknown_name", K::Text,
       "Sorry, I don't know of any names called <name>. Can you try again?", false, true},
      {kReprompt, "reprompt", K::Text, "Sorry, could you say that again?", false, true},
      {kConfirmName, "confirm_name", K::Text, "Do you want to call <canonicalname>?", false,
       true},
      {kGoodbye, "goodbye", K::Text, "Goodbye.", true, true},
      {kDidntUnderstand, "didnt_understand", K::Text,
       "Sorry, I didn't understand. Who would you like to call?", false, true},
  };
  std::vector<ActionTemplate> out;
  for (const auto& r : rows)
    out.push_back(ActionTemplate{r.id, r.name, r.kind, r.pattern, r.terminal, r.awaits_user});
  return out;
}

}  // namespace

std::string speak_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += i + 1 == items.size() ? " or " : ", ";
    out += items[i];
  }
  return out;
}

const PhoneStore& as_phone_store(const EntityStore& store) {
  const auto* s = dynamic_cast<const PhoneStore*>(&store);
  if (s == nullptr) throw std::invalid_argument("store is not a PhoneStore");
  return *s;
}

PhoneStore& as_phone_store(EntityStore& store) {
  auto* s = dynamic_cast<PhoneStore*>(&store);
  if (s == nullptr) throw std::invalid_argument("store is not a PhoneStore");
  return *s;
}

PhoneDomain::PhoneDomain(AddressBook book)
    : book_(std::move(book)),
      templates_(make_templates()),
      entity_types_{"name", "phonetype", "yesno"} {
  for (const auto& e : book_.entries()) {
    gazetteer_.add(e.canonical_name, "name", e.canonical_name);
    for (const auto& nick : e.nicknames) {
      const auto rows = book_.lookup(nick);
      gazetteer_.add(nick, "name",
                     rows.size() == 1 ? book_.entries()[rows[0]].canonical_name : nick);
    }
  }
  for (const auto& n : book_.extra_names()) gazetteer_.add(n, "name", n);
  for (const auto& [type, surfaces] : phonetype_synonyms())
    for (const auto& s : surfaces) gazetteer_.add(s, "phonetype", type);
  for (const auto& [value, surfaces] : yesno_synonyms())
    for (const auto& s : surfaces) gazetteer_.add(s, "yesno", value);
}

std::unique_ptr<EntityStore> PhoneDomain::new_store() const {
  return std::make_unique<PhoneStore>();
}

const AddressBookEntry& PhoneDomain::contact(const PhoneStore& store) const {
  if (!store.unique_contact()) throw DomainError("no unique contact");
  return book_.entries().at(store.matched_entries.front());
}

void PhoneDomain::entity_input(const std::vector<EntityMention>& mentions,
                               EntityStore& raw) const {
  auto& s = as_phone_store(raw);
  s.yesno.reset();
  for (const auto& m : mentions) {
    if (m.entity_type == "name") {
      s.name = m.surface;
      s.matched_entries = book_.lookup(m.surface);
      s.committed_phonetype.reset();
    } else if (m.entity_type == "phonetype") {
      const auto type = normalize_phonetype(m.surface);
      if (type.empty()) continue;
      s.phonetype = type;
      s.phonetype_surface = m.surface;
      s.committed_phonetype.reset();
    } else if (m.entity_type == "yesno") {
      const auto value = normalize_yesno(m.surface);
      if (!value.empty()) s.yesno = value;
    }
  }
  s.phonetypes_avail.clear();
  if (!s.committed_phonetype) s.announced = false;
  if (s.unique_contact()) {
    const auto& c = contact(s);
    s.phonetypes_avail = c.phonetypes();
    if (s.phonetype && c.has(*s.phonetype) && !s.committed_phonetype)
      s.committed_phonetype = s.phonetype;
  }
}

std::vector<double> PhoneDomain::context_features(const EntityStore& raw) const {
  const auto& s = as_phone_store(raw);
  std::vector<double> f(kContextDim, 0.0);
  if (s.name) {
    const auto n = s.matched_entries.size();
    f[n == 0 ? kMatchesNone : n == 1 ? kMatchesOne : kMatchesMany] = 1.0;
  }
  if (s.unique_contact()) {
    const auto n = s.phonetypes_avail.size();
    f[n == 0 ? kTypesNone : n == 1 ? kTypesOne : kTypesMany] = 1.0;
    if (s.phonetype)
      f[contact(s).has(*s.phonetype) ? kRequestedAvailable : kRequestedUnavailable] = 1.0;
  }
  if (s.committed_phonetype) f[kCommitted] = 1.0;
  if (s.yesno == "yes") f[kSaidYes] = 1.0;
  if (s.yesno == "no") f[kSaidNo] = 1.0;
  return f;
}

std::map<std::string, std::string> PhoneDomain::slot_values(const EntityStore& raw) const {
  const auto& s = as_phone_store(raw);
  std::map<std::string, std::string> v;
  if (s.name) v["name"] = *s.name;
  if (s.unique_contact()) {
    v["canonicalname"] = contact(s).canonical_name;
    v["phonetypesavail"] = speak_list(s.phonetypes_avail);
  }
  if (s.phonetype_surface) v["phonetype"] = *s.phonetype_surface;
  if (s.committed_phonetype) v["canonicalphonetype"] = *s.committed_phonetype;
  return v;
}

ActionMask PhoneDomain::action_mask(const EntityStore& raw) const {
  const auto& s = as_phone_store(raw);
  const auto values = slot_values(s);
  ActionMask mask(templates_.size(), false);
  for (const auto& t : templates_) {
    bool ok = true;
    if (t.kind == ActionKind::Text) {
      for (const auto& slot : t.slots()) ok = ok && values.count(slot) > 0;
    } else if (t.id == kPlaceCall) {
      ok = s.unique_contact() && s.committed_phonetype.has_value() && s.announced;
    } else if (t.id == kSavePhonetype) {
      ok = s.unique_contact() && !s.committed_phonetype && s.phonetypes_avail.size() == 1;
    }
    mask.set(t.id, ok);
  }
  return mask;
}

std::vector<double> PhoneDomain::api_save_phonetype(PhoneStore& s) const {
  if (!s.unique_contact())
    throw DomainError("SavePhonetypeavail needs a unique contact");
  const auto types = contact(s).phonetypes();
  if (types.size() != 1)
    throw DomainError("SavePhonetypeavail is ambiguous: " + contact(s).canonical_name +
                      " has " + std::to_string(types.size()) + " phone types");
  s.committed_phonetype = types.front();
  s.announced = false;
  std::vector<double> f(kApiDim, 0.0);
  f[kApiSavedPhonetype] = 1.0;
  return f;
}

std::vector<double> PhoneDomain::api_place_call(PhoneStore& s) const {
  if (!s.unique_contact() || !s.committed_phonetype)
    throw DomainError("PlaceCall needs a unique contact and a committed phone type");
  const auto& c = contact(s);
  const auto it = c.phones.find(*s.committed_phonetype);
  if (it == c.phones.end())
    throw DomainError(c.canonical_name + " has no " + *s.committed_phonetype + " phone");
  s.placed = PlacedCall{c.canonical_name, it->first, it->second};
  std::vector<double> f(kApiDim, 0.0);
  f[kApiPlacedCall] = 1.0;
  return f;
}

void PhoneDomain::text_output(const ActionTemplate& action, EntityStore& raw) const {
  if (action.id == kAnnounceCall) as_phone_store(raw).announced = true;
}

std::vector<double> PhoneDomain::api_call(const ActionTemplate& action,
                                          EntityStore& raw) const {
  auto& s = as_phone_store(raw);
  switch (action.id) {
    case kSavePhonetype: return api_save_phonetype(s);
    case kPlaceCall: return api_place_call(s);
    default: throw DomainError("no API behind template " + action.name);
  }
}

}  // namespace dialogctl::phone
