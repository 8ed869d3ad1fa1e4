#include <doctest.h>

#include <cmath>
#include <set>

#include "dialogctl/phone/experiments.hpp"
#include "dialogctl/phone/scripted_policy.hpp"
#include "dialogctl/phone/user_sim.hpp"
#include "support.hpp"

using namespace dialogctl;
using namespace dialogctl::phone;

namespace {

ExecutedAction prompt(Action id, std::map<std::string, std::string> slots = {}) {
  const auto& t = testing::phone_domain().templates()[id];
  ExecutedAction a;
  a.id = id;
  a.name = t.name;
  a.kind = t.kind;
  a.slots = std::move(slots);
  return a;
}

UserGoal jason_mobile() {
  const auto& book = testing::phone_domain().address_book();
  return UserGoal{"Jason Williams", book.lookup("Jason Williams")[0], "mobile"};
}

SimParams quiet() {
  auto p = SimParams::benign();
  p.p_use_nickname = 0.0;
  p.p_omit_phonetype = 1.0;
  return p;
}

}  // namespace

TEST_CASE("simulator parameters validate their range") {
  SimParams p;
  CHECK_NOTHROW(p.validate());
  for (const auto& f : sim_param_fields()) {
    SimParams bad;
    bad.*f.member = 1.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.*f.member = std::nan("");
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }
  CHECK_THROWS(SimulatedUser(testing::phone_domain(), SimParams{.p_oov_name = -0.1},
                             jason_mobile(), 1));
}

TEST_CASE("parameter table lists every probability once") {
  const auto& fields = sim_param_fields();
  CHECK(fields.size() == 11);
  std::set<std::string> names;
  for (const auto& f : fields) names.insert(f.name);
  CHECK(names.size() == fields.size());
  // Writing through each member touches a distinct field.
  SimParams p;
  for (std::size_t i = 0; i < fields.size(); ++i) p.*fields[i].member = 0.001 * double(i + 1);
  for (std::size_t i = 0; i < fields.size(); ++i)
    CHECK(p.*fields[i].member == doctest::Approx(0.001 * double(i + 1)));
}

TEST_CASE("judge accepts the goal or an accepted substitute") {
  const auto goal = jason_mobile();
  const PlacedCall right{"Jason Williams", "mobile", "+1 425 555 0101"};
  const PlacedCall other_type{"Jason Williams", "work", "+1 425 555 0102"};
  const PlacedCall other_person{"Frank Seide", "work", "+1 425 555 0131"};
  CHECK(judge({right, std::nullopt}, goal));
  CHECK_FALSE(judge({other_type, std::nullopt}, goal));
  CHECK(judge({other_type, std::string("work")}, goal));
  CHECK_FALSE(judge({other_person, std::string("work")}, goal));
  CHECK_FALSE(judge({std::nullopt, std::nullopt}, goal));
  UserGoal unknown{"Priya", std::nullopt, "mobile"};
  CHECK_FALSE(judge({right, std::nullopt}, unknown));
}

TEST_CASE("goal sampling respects the parameters") {
  const auto& book = testing::phone_domain().address_book();
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) CHECK(sample_goal(book, SimParams::benign(), rng).satisfiable(book));
  SimParams oov;
  oov.p_oov_name = 1.0;
  const std::set<std::string> extra(book.extra_names().begin(), book.extra_names().end());
  for (int i = 0; i < 200; ++i) {
    const auto g = sample_goal(book, oov, rng);
    CHECK_FALSE(g.entry.has_value());
    CHECK(extra.count(g.target_name) == 1);
  }
  SimParams unavailable = SimParams::benign();
  unavailable.p_unavailable_type = 1.0;
  std::size_t unsat = 0;
  for (int i = 0; i < 200; ++i) unsat += !sample_goal(book, unavailable, rng).satisfiable(book);
  // Dana Whitfield has all three types, so not every goal can be unavailable.
  CHECK(unsat > 100);
}

TEST_CASE("simulated user answers the greeting with a request") {
  SimulatedUser u(testing::phone_domain(), quiet(), jason_mobile(), 1);
  const auto r = u.respond(prompt(kGreeting));
  CHECK(r.kind == UserReply::Kind::Utterance);
  CHECK(r.text == "Call Jason Williams");
}

TEST_CASE("reprompt repeats the answer to the last real prompt") {
  SimulatedUser u(testing::phone_domain(), quiet(), jason_mobile(), 2);
  u.respond(prompt(kGreeting));
  const auto a = u.respond(prompt(kAskPhonetype, {{"canonicalname", "Jason Williams"}}));
  CHECK(normalize_phonetype(a.text) == "mobile");
  const auto b = u.respond(prompt(kReprompt));
  CHECK(normalize_phonetype(b.text) == "mobile");
}

TEST_CASE("announcements and API actions get no reply") {
  SimulatedUser u(testing::phone_domain(), quiet(), jason_mobile(), 3);
  CHECK(u.respond(prompt(kAnnounceCall)).kind == UserReply::Kind::Silent);
  CHECK(u.respond(prompt(kGoodbye)).kind == UserReply::Kind::Silent);
}

TEST_CASE("incoherent prompts can make the user hang up") {
  auto p = quiet();
  p.p_give_up_on_confusion = 1.0;
  SimulatedUser u(testing::phone_domain(), p, jason_mobile(), 4);
  CHECK(u.respond(prompt(kGreeting)).kind == UserReply::Kind::Utterance);
  // A second greeting after the user has spoken makes no sense.
  CHECK(u.respond(prompt(kGreeting)).kind == UserReply::Kind::HangUp);

  SimulatedUser v(testing::phone_domain(), p, jason_mobile(), 5);
  v.respond(prompt(kGreeting));
  // "Unknown name" for a name that is in the book.
  CHECK(v.respond(prompt(kUnknownName, {{"name", "Jason Williams"}})).kind ==
        UserReply::Kind::HangUp);

  SimulatedUser w(testing::phone_domain(), quiet(), jason_mobile(), 6);
  w.respond(prompt(kGreeting));
  CHECK(w.respond(prompt(kGreeting)).kind == UserReply::Kind::Utterance);
}

TEST_CASE("user accepts an offered substitute only when the goal is unreachable") {
  const auto& book = testing::phone_domain().address_book();
  UserGoal frank_mobile{"Frank Seide", book.lookup("Frank")[0], "mobile"};
  SimulatedUser u(testing::phone_domain(), quiet(), frank_mobile, 7);
  u.respond(prompt(kGreeting));
  const auto r = u.respond(prompt(kOfferSole, {{"canonicalname", "Frank Seide"},
                                               {"phonetype", "cell"},
                                               {"phonetypesavail", "work"}}));
  CHECK(normalize_yesno(r.text) == "yes");
  CHECK(u.accepted_substitute() == "work");

  SimulatedUser v(testing::phone_domain(), quiet(), jason_mobile(), 8);
  v.respond(prompt(kGreeting));
  const auto s = v.respond(prompt(kOfferSole, {{"canonicalname", "Frank Seide"},
                                               {"phonetype", "cell"},
                                               {"phonetypesavail", "work"}}));
  CHECK(normalize_yesno(s.text) == "no");
  CHECK_FALSE(v.accepted_substitute().has_value());
}

TEST_CASE("scripted policy completes every benign dialog") {
  const auto& d = testing::phone_domain();
  const auto r = evaluate_policy(
      d, [&] { return std::make_unique<ScriptedPhonePolicy>(d); }, SimParams::benign(),
      {300, 20, 11});
  CHECK(r.dialogs == 300);
  CHECK(r.tcr == 1.0);
}

TEST_CASE("simulate_dialog is reproducible from its seed") {
  const auto& d = testing::phone_domain();
  ScriptedPhonePolicy p1(d), p2(d);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto a = simulate_dialog(d, p1, SimParams{}, seed);
    const auto b = simulate_dialog(d, p2, SimParams{}, seed);
    CHECK(a.result.success == b.result.success);
    REQUIRE(a.result.actions.size() == b.result.actions.size());
    for (std::size_t i = 0; i < a.result.actions.size(); ++i)
      CHECK(a.result.actions[i].text == b.result.actions[i].text);
    CHECK(a.goal.target_name == b.goal.target_name);
  }
}
