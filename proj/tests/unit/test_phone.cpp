#include <doctest.h>

#include "dialogctl/engine.hpp"
#include "dialogctl/phone/scripted_policy.hpp"
#include "support.hpp"

using namespace dialogctl;
using namespace dialogctl::phone;

namespace {

// Tracker after the greeting and one user utterance.
DialogTracker after_greeting(const std::string& utterance) {
  const auto& d = testing::phone_domain();
  DialogTracker t(d);
  t.begin_turn({});
  t.apply(kGreeting);
  t.begin_turn(extract_entities(utterance, d.gazetteer()));
  return t;
}

}  // namespace

TEST_CASE("address book lookup by name and nickname") {
  const auto& book = testing::phone_domain().address_book();
  CHECK(book.lookup("Jason Williams").size() == 1);
  CHECK(book.lookup("JASON").size() == 1);
  CHECK(book.lookup("michael").size() == 2);
  CHECK(book.lookup("Priya").empty());
  CHECK(book.entries()[book.lookup("bob")[0]].canonical_name == "Rob Chen");
}

TEST_CASE("address book JSON errors") {
  CHECK_THROWS(AddressBook::from_json("{"));
  CHECK_THROWS(AddressBook::from_json(R"({"contacts": [{"name": "X", "phones": {"fax": "1"}}]})"));
  const auto b = AddressBook::from_json(
      R"({"contacts": [{"name": "X Y", "phones": {"home": "1", "mobile": "2"}}]})");
  CHECK(b.entries()[0].phonetypes() == std::vector<std::string>{"mobile", "home"});
}

TEST_CASE("phone type and yes/no normalization") {
  CHECK(normalize_phonetype("Cell Phone") == "mobile");
  CHECK(normalize_phonetype("office") == "work");
  CHECK(normalize_phonetype("landline") == "home");
  CHECK(normalize_phonetype("fax").empty());
  CHECK(normalize_yesno("Yeah") == "yes");
  CHECK(normalize_yesno("nope") == "no");
  CHECK(normalize_yesno("maybe").empty());
  CHECK(speak_list({"mobile"}) == "mobile");
  CHECK(speak_list({"mobile", "work"}) == "mobile or work");
  CHECK(speak_list({"mobile", "work", "home"}) == "mobile, work or home");
}

TEST_CASE("feature layout of the phone domain") {
  const auto l = FeatureLayout::of(testing::phone_domain());
  CHECK(l.context == 3);
  CHECK(l.prev_action == 3 + kContextDim);
  CHECK(l.api == l.prev_action + kActionCount + 1);
  CHECK(l.mask == l.api + kApiDim);
  CHECK(l.dim == l.mask + kActionCount);
}

TEST_CASE("opening state allows only slot-free text actions") {
  const auto& d = testing::phone_domain();
  DialogTracker t(d);
  t.begin_turn({});
  const auto m = t.mask();
  for (const auto& tpl : d.templates()) {
    const bool expect = tpl.kind == ActionKind::Text && tpl.slots().empty();
    CHECK(m.allowed(tpl.id) == expect);
  }
  const auto x = t.features();
  const auto l = t.layout();
  CHECK(x[l.prev_action + kActionCount] == 1.0);  // "no previous action"
}

TEST_CASE("PlaceCall needs a unique contact, a committed type and an announcement") {
  auto t = after_greeting("call Jason Williams on his cell");
  auto m = t.mask();
  CHECK(m.allowed(kAnnounceCall));
  CHECK_FALSE(m.allowed(kPlaceCall));
  CHECK_FALSE(m.allowed(kSavePhonetype));  // two phone types
  const auto announced = t.apply(kAnnounceCall);
  CHECK(announced.text == "Calling Jason Williams, mobile");
  CHECK_FALSE(announced.awaits_user);
  CHECK(t.mask().allowed(kPlaceCall));
  const auto call = t.apply(kPlaceCall);
  CHECK(call.terminal);
  CHECK(t.closed());
  const auto& s = as_phone_store(t.store());
  REQUIRE(s.placed.has_value());
  CHECK(*s.placed == PlacedCall{"Jason Williams", "mobile", "+1 425 555 0101"});
}

TEST_CASE("ambiguous and unknown names") {
  auto many = after_greeting("call michael");
  auto x = many.features();
  CHECK(x[many.layout().context + kMatchesMany] == 1.0);
  CHECK(many.mask().allowed(kDisambiguate));
  CHECK_FALSE(many.mask().allowed(kConfirmName));
  CHECK_FALSE(many.mask().allowed(kAnnounceCall));
  CHECK(many.apply(kDisambiguate).text ==
        "There's more than one person named michael. Can you say their full name?");

  auto none = after_greeting("call Priya");
  CHECK(none.features()[none.layout().context + kMatchesNone] == 1.0);
  CHECK(none.mask().allowed(kUnknownName));
  CHECK_FALSE(none.mask().allowed(kConfirmName));
}

TEST_CASE("sole phone type is saved through the API") {
  auto t = after_greeting("call Frank");
  const auto& s = as_phone_store(t.store());
  CHECK(s.phonetypes_avail == std::vector<std::string>{"work"});
  CHECK(t.mask().allowed(kSavePhonetype));
  CHECK_FALSE(t.mask().allowed(kAnnounceCall));  // nothing committed yet
  const auto saved = t.apply(kSavePhonetype);
  CHECK(saved.kind == ActionKind::Api);
  CHECK(s.committed_phonetype == "work");
  const auto x = t.features();
  CHECK(x[t.layout().api + kApiSavedPhonetype] == 1.0);
  CHECK_FALSE(t.mask().allowed(kSavePhonetype));
  CHECK(t.mask().allowed(kAnnounceCall));
  t.apply(kAnnounceCall);
  // API features last only until the next action.
  CHECK(t.features()[t.layout().api + kApiSavedPhonetype] == 0.0);
}

TEST_CASE("unavailable phone type is offered an alternative") {
  auto t = after_greeting("call Frank on his cell phone");
  const auto x = t.features();
  CHECK(x[t.layout().context + kRequestedUnavailable] == 1.0);
  CHECK(x[t.layout().context + kCommitted] == 0.0);
  CHECK(t.apply(kOfferSole).text ==
        "Sorry, I don't have a cell phone number for Frank Seide. I only have a work phone. "
        "Do you want to call that number?");
  t.begin_turn(extract_entities("yes", testing::phone_domain().gazetteer()));
  CHECK(t.features()[t.layout().context + kSaidYes] == 1.0);
}

TEST_CASE("a new name clears the commitment and announcement") {
  auto t = after_greeting("call Jason Williams at work");
  t.apply(kAnnounceCall);
  CHECK(t.mask().allowed(kPlaceCall));
  t.begin_turn(extract_entities("no call Anna", testing::phone_domain().gazetteer()));
  const auto& s = as_phone_store(t.store());
  CHECK_FALSE(s.committed_phonetype.has_value());
  CHECK_FALSE(s.announced);
  CHECK_FALSE(t.mask().allowed(kPlaceCall));
}

TEST_CASE("tracker refuses masked actions and closed dialogs") {
  auto t = after_greeting("hello");
  CHECK_THROWS_AS(t.apply(kPlaceCall), std::logic_error);
  CHECK_THROWS_AS(t.apply(99), std::out_of_range);
  t.apply(kGoodbye);
  CHECK(t.closed());
  CHECK_THROWS(t.apply(kGreeting));
  CHECK_THROWS(t.begin_turn({}));
}

TEST_CASE("API hooks reject missing preconditions") {
  const auto& d = testing::phone_domain();
  PhoneStore s;
  CHECK_THROWS_AS(d.api_place_call(s), DomainError);
  CHECK_THROWS_AS(d.api_save_phonetype(s), DomainError);
  s.matched_entries = d.address_book().lookup("Jason Williams");
  CHECK_THROWS_AS(d.api_save_phonetype(s), DomainError);  // two types
}

TEST_CASE("features carry entity flags only on the turn they appear") {
  auto t = after_greeting("call Jason Williams");
  const auto l = t.layout();
  CHECK(t.features()[l.entity_flags + 0] == 1.0);
  CHECK(t.features()[l.entity_flags + 1] == 0.0);
  t.apply(kAskPhonetype);
  CHECK(t.features()[l.entity_flags + 0] == 0.0);
  CHECK(t.features()[l.prev_action + kAskPhonetype] == 1.0);
}

TEST_CASE("scripted policy completes a direct request") {
  const auto& d = testing::phone_domain();
  ScriptedPhonePolicy policy(d);
  DialogSession session(d, policy);
  const auto open = session.run_turn(std::string_view{});
  REQUIRE(open.size() == 1);
  CHECK(open[0].name == "greeting");
  const auto acts = session.run_turn("Call Jason Williams cellphone");
  REQUIRE(acts.size() == 2);
  CHECK(acts[0].name == "announce_call");
  CHECK(acts[1].name == "PlaceCall");
  CHECK(session.closed());
  CHECK(session.transcript().size() == 3);
  CHECK(session.transcript()[1].opens_turn);
  CHECK_FALSE(session.transcript()[2].opens_turn);
  CHECK_THROWS(session.run_turn("hello"));
}

TEST_CASE("session records masked, renormalized distributions") {
  const auto& d = testing::phone_domain();
  auto params = std::make_shared<const ModelParams>(
      init_model(ModelKind::LSTM, FeatureLayout::of(d).dim, 8, d.n_actions(), 3));
  NeuralPolicy policy(params);
  DialogSession session(d, policy, {SelectionMode::Sample, 7, 8});
  session.run_turn(std::string_view{});
  if (!session.closed()) session.run_turn("call michael on his cell");
  for (const auto& r : session.transcript()) {
    double s = 0.0;
    for (std::size_t a = 0; a < r.distribution.size(); ++a) {
      if (!r.mask.allowed(a)) CHECK(r.distribution[a] == 0.0);
      s += r.distribution[a];
    }
    CHECK(s == doctest::Approx(1.0));
    CHECK(r.behavior_prob == r.distribution[r.action]);
    CHECK(r.behavior_prob > 0.0);
  }
}
