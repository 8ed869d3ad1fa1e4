#include <doctest.h>

#include <filesystem>
#include <set>

#include "dialogctl/phone/phone_domain.hpp"
#include "dialogctl/service.hpp"
#include "support.hpp"

using namespace dialogctl;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("dialogctl_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

AppConfig config_in(const fs::path& dir) {
  AppConfig c;
  c.corpus_path = dir / "corpus.dlg";
  c.addressbook_path = DIALOGCTL_DATA_DIR "/addressbook.json";
  c.checkpoint_path = dir / "model.ckpt";
  c.results_dir = dir / "results";
  c.hidden_dim = 32;
  return c;
}

std::unique_ptr<Service> trained_service(const fs::path& dir) {
  fs::copy_file(DIALOGCTL_DATA_DIR "/phone_corpus.dlg", dir / "corpus.dlg");
  auto svc = Service::from_config(config_in(dir));
  if (!svc->has_model()) REQUIRE(svc->train_model().reconstructed);
  return svc;
}

// Record index of the first decision of the last turn.
std::size_t last_turn_start(const TurnResponse& r) { return r.steps.front().record_index; }

}  // namespace

TEST_CASE("lowest_scored sorts ascending and truncates") {
  std::vector<QueueItem> items(3);
  items[0].score = 0.9;
  items[1].score = 0.2;
  items[2].score = 0.5;
  const auto out = lowest_scored(items, 2);
  REQUIRE(out.size() == 2);
  CHECK(out[0].score == 0.2);
  CHECK(out[1].score == 0.5);
  CHECK(lowest_scored(items, 10).size() == 3);
}

TEST_CASE("job event log") {
  Job j("j1", "loo");
  CHECK(j.state() == JobState::Running);
  j.emit("progress", {{"a", 1}});
  j.emit("progress", {{"a", 2}});
  const auto all = j.events_since(0);
  REQUIRE(all.size() == 2);
  CHECK(all[0].seq == 0);
  CHECK(all[1].seq == 1);
  CHECK(j.events_since(1).size() == 1);
  CHECK(j.events_since(5, std::chrono::milliseconds(10)).empty());
  j.finish(JobState::Done, {{"ok", true}});
  j.wait();
  CHECK(j.state() == JobState::Done);
  CHECK(j.result()["ok"] == true);
  CHECK(to_string(JobState::Cancelled) == "cancelled");
}

TEST_CASE("sessions without a model are refused") {
  TempDir dir("svc_nomodel");
  Service svc(config_in(dir.path), testing::phone_domain().address_book(),
              testing::phone_corpus());
  CHECK_FALSE(svc.has_model());
  try {
    svc.create_session(SelectionMode::Greedy);
    FAIL("expected no_model");
  } catch (const ServiceError& e) {
    CHECK(e.code() == "no_model");
  }
}

TEST_CASE("sessions run turns and close") {
  TempDir dir("svc_sessions");
  auto svc = trained_service(dir.path);
  const auto a = svc->create_session(SelectionMode::Greedy);
  const auto b = svc->create_session(SelectionMode::Greedy);
  CHECK(a.session_id != b.session_id);
  REQUIRE(a.steps.size() == 1);
  CHECK(a.steps[0].action.name == "greeting");
  CHECK(a.steps[0].action.text == "How can I help you?");

  const auto r = svc->post_utterance(a.session_id, "Call Jason Williams cellphone");
  REQUIRE(r.steps.size() == 2);
  CHECK(r.steps[0].action.name == "announce_call");
  CHECK(r.steps[1].action.name == "PlaceCall");
  CHECK(r.closed);
  for (const auto& s : r.steps) {
    double sum = 0.0;
    for (std::size_t i = 0; i < s.distribution.size(); ++i) {
      if (!s.mask.allowed(i)) CHECK(s.distribution[i] == 0.0);
      sum += s.distribution[i];
    }
    CHECK(sum == doctest::Approx(1.0));
    CHECK(s.score == s.distribution[s.action.id]);
  }
  CHECK(svc->transcript(a.session_id).size() == 3);

  try {
    svc->post_utterance(a.session_id, "hello");
    FAIL("expected session_closed");
  } catch (const ServiceError& e) {
    CHECK(e.code() == "session_closed");
  }
  svc->close_session(b.session_id);
  CHECK_FALSE(svc->session_open(b.session_id));
  try {
    svc->post_utterance("nope", "hello");
    FAIL("expected not_found");
  } catch (const ServiceError& e) {
    CHECK(e.code() == "not_found");
  }
}

TEST_CASE("uncertainty queue lists the least confident decisions") {
  TempDir dir("svc_queue");
  auto svc = trained_service(dir.path);
  for (const char* text : {"call michael", "call Priya", "hmm", "Call Frank on his cell"}) {
    const auto s = svc->create_session(SelectionMode::Greedy);
    svc->post_utterance(s.session_id, text);
  }
  const auto q = svc->uncertainty_queue(5);
  REQUIRE_FALSE(q.empty());
  CHECK(q.size() <= 5);
  for (std::size_t i = 1; i < q.size(); ++i) CHECK(q[i - 1].score <= q[i].score);
  for (const auto& item : q) CHECK(item.action_name == svc->domain().templates()[item.action].name);
}

TEST_CASE("corrections retrain quickly and change the replayed decision") {
  TempDir dir("svc_correction");
  auto svc = trained_service(dir.path);
  const auto before = svc->corpus().size();

  const auto s = svc->create_session(SelectionMode::Greedy);
  // A bare phone type with no name is not covered by the corpus.
  const auto r = svc->post_utterance(s.session_id, "the cell phone please");
  const auto idx = last_turn_start(r);
  const auto& mask = r.steps.front().mask;
  const std::size_t taken = r.steps.front().action.id;
  std::size_t fix = taken == phone::kReprompt ? phone::kDidntUnderstand : phone::kReprompt;
  REQUIRE(mask.allowed(fix));

  const auto report = svc->submit_correction(s.session_id, idx, fix);
  CHECK(report.reconstructed);
  CHECK(report.replay_matches);
  CHECK(report.seconds < 5.0);
  CHECK(svc->corpus().size() == before + 1);
  CHECK(load_corpus(dir.path / "corpus.dlg").size() == before + 1);
  CHECK(svc->corpus().back().id == report.dialog_id);

  // The next session with the same input follows the correction.
  const auto s2 = svc->create_session(SelectionMode::Greedy);
  const auto r2 = svc->post_utterance(s2.session_id, "the cell phone please");
  CHECK(r2.steps.front().action.id == fix);

  // Corrected decisions leave the queue.
  for (const auto& q : svc->uncertainty_queue(100))
    CHECK_FALSE((q.session_id == s.session_id && q.record_index == idx));
}

TEST_CASE("masked corrections are refused") {
  TempDir dir("svc_masked");
  auto svc = trained_service(dir.path);
  const auto s = svc->create_session(SelectionMode::Greedy);
  const auto r = svc->post_utterance(s.session_id, "hello");
  REQUIRE_FALSE(r.steps.front().mask.allowed(phone::kPlaceCall));
  try {
    svc->submit_correction(s.session_id, last_turn_start(r), phone::kPlaceCall);
    FAIL("expected masked_action");
  } catch (const ServiceError& e) {
    CHECK(e.code() == "masked_action");
  }
  CHECK_THROWS_AS(svc->submit_correction(s.session_id, 99, 0), ServiceError);
}

TEST_CASE("contradicting corrections leave everything unchanged") {
  TempDir dir("svc_contradict");
  auto svc = trained_service(dir.path);
  const auto model_before = *svc->model();
  const auto corpus_before = svc->corpus();
  const auto s = svc->create_session(SelectionMode::Greedy);
  const auto r = svc->post_utterance(s.session_id, "Call Jason Williams");
  // The corpus already answers exactly this input with ask_phonetype.
  REQUIRE(r.steps.front().action.name == "ask_phonetype");
  try {
    svc->submit_correction(s.session_id, last_turn_start(r), phone::kGoodbye);
    FAIL("expected not_reconstructed");
  } catch (const ServiceError& e) {
    CHECK(e.code() == "not_reconstructed");
  }
  CHECK(*svc->model() == model_before);
  CHECK(svc->corpus() == corpus_before);
}

TEST_CASE("checkpoint round trip reproduces sessions") {
  TempDir dir("svc_ckpt");
  auto svc = trained_service(dir.path);
  const auto script = [&](Service& service) {
    const auto s = service.create_session(SelectionMode::Sample, 42);
    std::vector<std::vector<double>> dists;
    for (const auto& st : s.steps) dists.push_back(st.distribution);
    for (const char* text : {"call michael", "Michael Lopez", "home"}) {
      if (!service.session_open(s.session_id)) break;
      const auto r = service.post_utterance(s.session_id, text);
      for (const auto& st : r.steps) dists.push_back(st.distribution);
      if (r.closed) break;
    }
    return dists;
  };
  const auto first = script(*svc);
  svc->save_model(dir.path / "copy.ckpt");
  svc->set_model(init_model(ModelKind::LSTM, FeatureLayout::of(svc->domain()).dim, 32,
                            svc->domain().n_actions(), 99));
  svc->load_model(dir.path / "copy.ckpt");
  CHECK(script(*svc) == first);

  CHECK_THROWS_AS(svc->set_model(init_model(ModelKind::LSTM, 3, 4, 2, 1)), ServiceError);
  CHECK_THROWS_AS(svc->load_model(dir.path / "missing.ckpt"), ServiceError);
}

TEST_CASE("a second writer is refused while a job runs") {
  TempDir dir("svc_busy");
  auto svc = trained_service(dir.path);
  const auto job = svc->start_job(
      "rl", {{"n_sl", {0}}, {"runs", 1}, {"n_rl_dialogs", 100000}, {"eval_every", 1000},
             {"eval_dialogs", 10}});
  try {
    svc->start_job("train-sl", nlohmann::json::object());
    FAIL("expected busy");
  } catch (const ServiceError& e) {
    CHECK(e.code() == "busy");
  }
  // Readers are not blocked by the writer.
  const auto s = svc->create_session(SelectionMode::Greedy);
  CHECK(s.steps.size() == 1);
  svc->cancel_job(job->id());
  job->wait();
  CHECK(job->state() == JobState::Cancelled);
  // The slot is free again.
  const auto next = svc->start_job("train-sl", {{"fresh", false}});
  next->wait();
  CHECK(next->state() == JobState::Done);
  CHECK_THROWS_AS(svc->start_job("dance", nlohmann::json::object()), ServiceError);
  CHECK_THROWS_AS(svc->job("missing"), ServiceError);
}

TEST_CASE("loo job writes its artifact") {
  TempDir dir("svc_loojob");
  auto svc = trained_service(dir.path);
  const auto job = svc->start_job("loo", {{"sizes", {1}}});
  job->wait();
  REQUIRE(job->state() == JobState::Done);
  CHECK(job->result().contains("rows"));
  CHECK(fs::exists(dir.path / "results" / "loo.csv"));
  const auto events = job->events_since(0);
  REQUIRE_FALSE(events.empty());
  for (std::size_t i = 0; i < events.size(); ++i) CHECK(events[i].seq == i);
}

TEST_CASE("corpus replacement is validated") {
  TempDir dir("svc_corpus");
  auto svc = trained_service(dir.path);
  const auto before = svc->corpus();
  CHECK_THROWS_AS(svc->put_corpus("not a corpus"), ServiceError);
  CHECK_THROWS_AS(
      svc->put_corpus("%dialog-corpus 1\n\ndialog x\nS: PlaceCall\nend\n"), ServiceError);
  CHECK(svc->corpus() == before);
  const std::string small =
      "%dialog-corpus 1\n\ndialog a\nS: greeting\nU: bye\nS: goodbye\nend\n";
  const auto r = svc->put_corpus(small);
  CHECK(r.reconstructed);
  CHECK(svc->corpus().size() == 1);
  CHECK(serialize_corpus(load_corpus(dir.path / "corpus.dlg")) == small);
}
