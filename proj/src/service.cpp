#include "dialogctl/service.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>

#include "dialogctl/checkpoint.hpp"
#include "dialogctl/phone/experiments.hpp"
#include "dialogctl/report.hpp"

namespace dialogctl {

using nlohmann::json;
namespace fs = std::filesystem;

std::vector<QueueItem> lowest_scored(std::vector<QueueItem> items, std::size_t limit) {
  std::stable_sort(items.begin(), items.end(),
                   [](const QueueItem& a, const QueueItem& b) { return a.score < b.score; });
  if (items.size() > limit) items.resize(limit);
  return items;
}

std::string_view to_string(JobState state) {
  switch (state) {
    case JobState::Running: return "running";
    case JobState::Done: return "done";
    case JobState::Failed: return "failed";
    case JobState::Cancelled: return "cancelled";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------

Job::Job(std::string id, std::string kind) : id_(std::move(id)), kind_(std::move(kind)) {}

JobState Job::state() const {
  std::lock_guard lock(mutex_);
  return state_;
}

json Job::result() const {
  std::lock_guard lock(mutex_);
  return result_;
}

void Job::emit(std::string type, json data) {
  {
    std::lock_guard lock(mutex_);
    events_.push_back(JobEvent{events_.size(), std::move(type), std::move(data)});
  }
  cv_.notify_all();
}

void Job::finish(JobState state, json result) {
  {
    std::lock_guard lock(mutex_);
    const char* type = state == JobState::Done        ? "result"
                       : state == JobState::Cancelled ? "cancelled"
                                                      : "error";
    events_.push_back(JobEvent{events_.size(), type, result});
    state_ = state;
    result_ = std::move(result);
  }
  cv_.notify_all();
}

std::vector<JobEvent> Job::events_since(std::size_t from, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mutex_);
  if (timeout.count() > 0)
    cv_.wait_for(lock, timeout,
                 [&] { return events_.size() > from || state_ != JobState::Running; });
  if (from >= events_.size()) return {};
  return {events_.begin() + static_cast<std::ptrdiff_t>(from), events_.end()};
}

void Job::wait() const {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] { return state_ != JobState::Running; });
}

// ---------------------------------------------------------------------------

struct Service::SessionEntry {
  std::mutex mutex;
  std::string id;
  SelectionMode mode = SelectionMode::Greedy;
  std::shared_ptr<const ModelParams> pinned;
  std::unique_ptr<NeuralPolicy> policy;
  std::unique_ptr<DialogSession> session;
  std::vector<ExecutedAction> actions;  // parallel to the session transcript
  bool closed = false;
};

/// Exclusive right to change the model or the corpus. Not tied to a thread,
/// so a job can carry it to its worker.
class Service::WriterSlot {
 public:
  explicit WriterSlot(std::atomic<bool>& flag) : flag_(&flag) {
    bool expected = false;
    if (!flag.compare_exchange_strong(expected, true))
      throw ServiceError("busy", "busy: another training job or correction is running");
  }
  ~WriterSlot() { flag_->store(false); }
  WriterSlot(const WriterSlot&) = delete;
  WriterSlot& operator=(const WriterSlot&) = delete;

 private:
  std::atomic<bool>* flag_;
};

namespace {

struct JobCancelled {};

}  // namespace

Service::Service(AppConfig config, phone::AddressBook book, Corpus corpus)
    : config_(std::move(config)), domain_(std::move(book)), corpus_(std::move(corpus)) {
  data_ = featurize(corpus_, domain_);
}

Service::~Service() {
  {
    std::lock_guard lock(jobs_mutex_);
    for (auto& [_, job] : jobs_) job->request_cancel();
  }
  for (auto& t : job_threads_)
    if (t.joinable()) t.join();
}

std::unique_ptr<Service> Service::from_config(const AppConfig& config) {
  if (config.addressbook_path.empty()) throw ConfigError("no address book path configured");
  if (config.corpus_path.empty()) throw ConfigError("no corpus path configured");
  auto service = std::make_unique<Service>(config, phone::AddressBook::load(config.addressbook_path),
                                           load_corpus(config.corpus_path));
  if (!config.checkpoint_path.empty() && fs::exists(config.checkpoint_path))
    service->load_model(config.checkpoint_path);
  else
    service->train_model();
  return service;
}

std::string Service::next_id(const char* prefix) {
  return std::string(prefix) + std::to_string(++id_counter_);
}

// --- model -----------------------------------------------------------------

bool Service::has_model() const { return model() != nullptr; }

std::shared_ptr<const ModelParams> Service::model() const {
  std::shared_lock lock(model_mutex_);
  return model_;
}

RetrainReport Service::retrain_locked(std::vector<TrainingSequence> data, bool fresh) {
  const auto current = model();
  ModelParams params;
  AdaDeltaState opt;
  if (fresh || !current) {
    const auto layout = FeatureLayout::of(domain_);
    params = init_model(config_.kind, layout.dim, config_.hidden_dim, domain_.n_actions(),
                        config_.seed);
    opt = AdaDeltaState(params);
  } else {
    params = *current;
    opt = sl_opt_ ? *sl_opt_ : AdaDeltaState(params);
  }
  SlOptions sl = config_.sl;
  sl.stop = StopRule::Reconstruction;
  sl.shuffle_seed = derive_seed(config_.seed, model_version_ + 1);
  const SlReport r = train_sl(params, opt, data, sl);

  RetrainReport report;
  report.epochs = r.epochs;
  report.seconds = r.seconds;
  report.reconstructed = r.reconstructed;
  if (!r.reconstructed) return report;

  auto next = std::make_shared<const ModelParams>(std::move(params));
  {
    std::unique_lock lock(model_mutex_);
    model_ = std::move(next);
    ++model_version_;
  }
  sl_opt_ = std::move(opt);
  std::lock_guard lock(corpus_mutex_);
  data_ = std::move(data);
  return report;
}

RetrainReport Service::train_model() {
  WriterSlot slot(writer_busy_);
  auto report = retrain_locked(data_, true);
  if (!report.reconstructed)
    throw ServiceError("not_reconstructed", "training did not reproduce the corpus within " +
                                                std::to_string(config_.sl.max_epochs) + " epochs");
  return report;
}

void Service::set_model(ModelParams params) {
  WriterSlot slot(writer_busy_);
  const auto layout = FeatureLayout::of(domain_);
  if (params.input_dim != layout.dim || params.n_actions != domain_.n_actions())
    throw ServiceError("invalid", "model dimensions do not match the domain");
  sl_opt_ = AdaDeltaState(params);
  std::unique_lock lock(model_mutex_);
  model_ = std::make_shared<const ModelParams>(std::move(params));
  ++model_version_;
}

void Service::save_model(const fs::path& path) const {
  const auto m = model();
  if (!m) throw ServiceError("no_model", "no model loaded");
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  save_checkpoint(path, *m);
}

void Service::load_model(const fs::path& path) {
  ModelParams params;
  try {
    params = load_checkpoint(path);
  } catch (const std::exception& e) {
    throw ServiceError("invalid", e.what());
  }
  set_model(std::move(params));
}

// --- sessions --------------------------------------------------------------

std::shared_ptr<Service::SessionEntry> Service::find_session(const std::string& id) const {
  std::lock_guard lock(sessions_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ServiceError("not_found", "no session " + id);
  return it->second;
}

StepView Service::view_of(const SessionEntry& s, std::size_t i,
                          const ExecutedAction& action) const {
  const auto& rec = s.session->transcript()[i];
  StepView v;
  v.record_index = i;
  v.turn_index = rec.turn_index;
  v.action = action;
  v.distribution = rec.distribution;
  v.mask = rec.mask;
  v.score = rec.distribution[rec.action];
  return v;
}

void Service::remember_turns(const SessionEntry& s, std::size_t from) {
  const auto& t = s.session->transcript();
  std::lock_guard lock(queue_mutex_);
  for (std::size_t i = from; i < t.size(); ++i) {
    QueueItem item;
    item.session_id = s.id;
    item.record_index = i;
    item.turn_index = t[i].turn_index;
    // The user text that led to this decision is on the turn's first record.
    for (std::size_t k = i + 1; k-- > 0;)
      if (t[k].opens_turn) {
        item.user_text = t[k].user_text;
        break;
      }
    item.action = t[i].action;
    item.action_name = domain_.templates()[t[i].action].name;
    item.score = t[i].distribution[t[i].action];
    recent_.push_back(std::move(item));
    if (recent_.size() > recent_capacity_) recent_.pop_front();
  }
}

TurnResponse Service::create_session(SelectionMode mode, std::optional<std::uint64_t> seed) {
  auto m = model();
  if (!m) throw ServiceError("no_model", "no model loaded");
  auto s = std::make_shared<SessionEntry>();
  s->id = next_id("s");
  s->mode = mode;
  s->pinned = m;
  s->policy = std::make_unique<NeuralPolicy>(m);
  SessionOptions opts;
  opts.mode = mode;
  opts.seed = seed.value_or(derive_seed(config_.seed, id_counter_.load()));
  s->session = std::make_unique<DialogSession>(domain_, *s->policy, opts);

  std::lock_guard session_lock(s->mutex);
  auto executed = s->session->run_turn(std::string_view{});
  TurnResponse out;
  out.session_id = s->id;
  for (std::size_t i = 0; i < executed.size(); ++i) {
    s->actions.push_back(executed[i]);
    out.steps.push_back(view_of(*s, i, executed[i]));
  }
  out.closed = s->session->closed();
  remember_turns(*s, 0);
  {
    std::lock_guard lock(sessions_mutex_);
    sessions_[s->id] = s;
  }
  return out;
}

TurnResponse Service::post_utterance(const std::string& session_id, const std::string& text) {
  auto s = find_session(session_id);
  std::lock_guard lock(s->mutex);
  if (s->closed || s->session->closed()) throw ServiceError("session_closed", "session closed");

  // Move to the newest model, rebuilding the recurrent state from the
  // recorded inputs so history carries over.
  auto latest = model();
  if (latest && latest != s->pinned) {
    s->policy->set_params(latest);
    for (const auto& rec : s->session->transcript()) s->policy->distribution(rec.features);
    s->pinned = latest;
  }

  const std::size_t before = s->session->transcript().size();
  std::vector<ExecutedAction> executed;
  try {
    executed = s->session->run_turn(std::string_view{text});
  } catch (const DomainError& e) {
    throw ServiceError("invalid", e.what());
  }
  TurnResponse out;
  out.session_id = s->id;
  for (std::size_t k = 0; k < executed.size(); ++k) {
    s->actions.push_back(executed[k]);
    out.steps.push_back(view_of(*s, before + k, executed[k]));
  }
  out.closed = s->session->closed();
  remember_turns(*s, before);
  return out;
}

void Service::close_session(const std::string& session_id) {
  auto s = find_session(session_id);
  std::lock_guard lock(s->mutex);
  s->closed = true;
}

bool Service::session_open(const std::string& session_id) const {
  auto s = find_session(session_id);
  std::lock_guard lock(s->mutex);
  return !s->closed && !s->session->closed();
}

std::vector<StepView> Service::transcript(const std::string& session_id) const {
  auto s = find_session(session_id);
  std::lock_guard lock(s->mutex);
  std::vector<StepView> out;
  for (std::size_t i = 0; i < s->actions.size(); ++i) out.push_back(view_of(*s, i, s->actions[i]));
  return out;
}

// --- active learning ---------------------------------------------------------

RetrainReport Service::submit_correction(const std::string& session_id, std::size_t record_index,
                                         std::size_t action) {
  auto s = find_session(session_id);
  CorpusDialog dialog;
  {
    std::lock_guard lock(s->mutex);
    const auto& t = s->session->transcript();
    if (record_index >= t.size())
      throw ServiceError("invalid", "turn " + std::to_string(record_index) + " not in transcript");
    if (action >= domain_.n_actions())
      throw ServiceError("invalid", "no action " + std::to_string(action));
    if (!t[record_index].mask.allowed(action))
      throw ServiceError("masked_action", "action " + domain_.templates()[action].name +
                                              " is masked at that turn");
    for (std::size_t i = 0; i <= record_index; ++i) {
      if (t[i].opens_turn && t[i].turn_index > 0)
        dialog.lines.push_back({Speaker::User, t[i].user_text});
      const std::size_t a = i == record_index ? action : t[i].action;
      dialog.lines.push_back({Speaker::System, domain_.templates()[a].name});
    }
  }

  WriterSlot slot(writer_busy_);
  {
    std::lock_guard lock(corpus_mutex_);
    std::size_t n = corpus_.size();
    auto taken = [&](const std::string& id) {
      return std::any_of(corpus_.begin(), corpus_.end(),
                         [&](const CorpusDialog& d) { return d.id == id; });
    };
    do {
      dialog.id = "correction-" + session_id + "-" + std::to_string(record_index) + "-" +
                  std::to_string(n++);
    } while (taken(dialog.id));
  }

  TrainingSequence seq;
  try {
    seq = featurize(dialog, domain_);
  } catch (const MaskedCorpusAction& e) {
    throw ServiceError("masked_action", e.what());
  }
  std::vector<TrainingSequence> data;
  {
    std::lock_guard lock(corpus_mutex_);
    data = data_;
  }
  data.push_back(seq);
  RetrainReport report = retrain_locked(std::move(data), false);
  report.dialog_id = dialog.id;
  if (!report.reconstructed)
    throw ServiceError("not_reconstructed",
                       "retraining could not reproduce the corpus with this correction; "
                       "nothing was changed");
  {
    std::lock_guard lock(corpus_mutex_);
    corpus_.push_back(dialog);
  }
  persist_corpus();
  report.replay_matches = predict(*model(), seq).back().action == action;

  std::lock_guard lock(queue_mutex_);
  std::erase_if(recent_, [&](const QueueItem& q) {
    return q.session_id == session_id && q.record_index == record_index;
  });
  return report;
}

std::vector<QueueItem> Service::uncertainty_queue(std::size_t limit) const {
  std::vector<QueueItem> items;
  {
    std::lock_guard lock(queue_mutex_);
    items.assign(recent_.begin(), recent_.end());
  }
  return lowest_scored(std::move(items), limit);
}

// --- corpus ------------------------------------------------------------------

Corpus Service::corpus() const {
  std::lock_guard lock(corpus_mutex_);
  return corpus_;
}

void Service::persist_corpus() const {
  if (config_.corpus_path.empty()) return;
  const auto c = corpus();
  const auto tmp = fs::path(config_.corpus_path).concat(".tmp");
  save_corpus(tmp, c);
  fs::rename(tmp, config_.corpus_path);
}

RetrainReport Service::put_corpus(const std::string& text) {
  Corpus next;
  std::vector<TrainingSequence> data;
  try {
    next = parse_corpus(text);
    data = featurize(next, domain_);
  } catch (const CorpusParseError& e) {
    throw ServiceError("invalid", "line " + std::to_string(e.line()) + ": " + e.what());
  } catch (const MaskedCorpusAction& e) {
    throw ServiceError("masked_action", e.what());
  } catch (const std::exception& e) {
    throw ServiceError("invalid", e.what());
  }
  WriterSlot slot(writer_busy_);
  auto report = retrain_locked(std::move(data), false);
  if (!report.reconstructed)
    throw ServiceError("not_reconstructed", "the model could not reproduce the new corpus");
  {
    std::lock_guard lock(corpus_mutex_);
    corpus_ = std::move(next);
  }
  persist_corpus();
  return report;
}

// --- jobs --------------------------------------------------------------------

std::shared_ptr<Job> Service::job(const std::string& id) const {
  std::lock_guard lock(jobs_mutex_);
  const auto it = jobs_.find(id);
  if (it == jobs_.end()) throw ServiceError("not_found", "no job " + id);
  return it->second;
}

void Service::cancel_job(const std::string& id) { job(id)->request_cancel(); }

std::shared_ptr<Job> Service::start_job(const std::string& kind, const json& params) {
  if (kind != "rl" && kind != "loo" && kind != "train-sl")
    throw ServiceError("invalid", "unknown job kind '" + kind + "'");
  if (!params.is_object() && !params.is_null())
    throw ServiceError("invalid", "job parameters must be an object");
  auto slot = std::make_shared<WriterSlot>(writer_busy_);
  auto j = std::make_shared<Job>(next_id("j"), kind);
  std::lock_guard lock(jobs_mutex_);
  jobs_[j->id()] = j;
  job_threads_.emplace_back([this, j, slot, params]() mutable { run_job(j, params, slot); });
  return j;
}

namespace {

template <typename T>
T param(const json& p, const char* key, T fallback) {
  if (!p.is_object() || !p.contains(key)) return fallback;
  try {
    return p.at(key).get<T>();
  } catch (const json::exception&) {
    throw ServiceError("invalid", std::string("bad job parameter '") + key + "'");
  }
}

void write_artifact(const fs::path& dir, const std::string& name, const std::string& text) {
  if (dir.empty()) return;
  fs::create_directories(dir);
  std::ofstream(dir / name) << text;
}

}  // namespace

void Service::run_job(const std::shared_ptr<Job>& j, const json& p,
                      std::shared_ptr<WriterSlot>& slot) {
  JobState state = JobState::Done;
  json result;
  try {
    std::vector<TrainingSequence> data;
    {
      std::lock_guard lock(corpus_mutex_);
      data = data_;
    }
    if (j->kind() == "train-sl") {
      j->emit("progress", {{"stage", "training"}, {"dialogs", data.size()}});
      auto r = retrain_locked(data, param(p, "fresh", true));
      if (!r.reconstructed) throw ServiceError("not_reconstructed", "corpus not reproduced");
      result = {{"epochs", r.epochs}, {"seconds", r.seconds}, {"reconstructed", r.reconstructed}};
    } else if (j->kind() == "loo") {
      LooOptions o;
      o.train_sizes = param(p, "sizes", o.train_sizes);
      o.model.kind = parse_model_kind(param<std::string>(p, "model", "lstm"));
      o.model.hidden_dim = config_.hidden_dim;
      o.sl = config_.sl;
      o.seed = param(p, "seed", config_.seed);
      j->emit("progress", {{"stage", "loo"}, {"folds", data.size()}});
      const auto r = loo_eval(data, o);
      if (j->cancel_requested()) throw JobCancelled{};
      write_artifact(config_.results_dir, "loo.csv", loo_csv(r));
      result = to_json(r);
      result["table"] = loo_table(r);
    } else {
      phone::RlOptions o;
      o.n_rl_dialogs = param(p, "n_rl_dialogs", o.n_rl_dialogs);
      o.eval_every = param(p, "eval_every", o.eval_every);
      o.eval_dialogs = param(p, "eval_dialogs", o.eval_dialogs);
      o.max_turns = config_.max_turns;
      o.hidden_dim = config_.hidden_dim;
      o.buffer_size = config_.buffer_size;
      o.gamma = config_.gamma;
      o.weight_clip = config_.weight_clip;
      o.pg = config_.pg;
      o.sl = config_.sl;
      o.seed = param(p, "seed", config_.seed);
      const auto n_sl = param(p, "n_sl", std::vector<std::size_t>{0, 1, 2, 5, 10});
      const auto runs = param<std::size_t>(p, "runs", 5);
      std::vector<phone::RlCurve> curves;
      for (auto n : n_sl) {
        o.n_sl = n;
        std::vector<phone::RlRun> done;
        for (std::size_t r = 0; r < runs; ++r) {
          auto observer = [&](std::size_t i, const ModelParams&, const auto&) {
            if (j->cancel_requested()) throw JobCancelled{};
            if ((i + 1) % 100 == 0)
              j->emit("progress", {{"n_sl", n}, {"run", r}, {"dialogs", i + 1}});
          };
          done.push_back(phone::rl_run(domain_, data, config_.sim, o, r, observer));
          j->emit("progress", {{"n_sl", n}, {"run", r}, {"final_tcr", done.back().tcr.back()}});
        }
        curves.push_back(phone::aggregate_runs(std::move(done), n));
      }
      write_artifact(config_.results_dir, "rl_curves.csv", rl_curves_csv(curves));
      write_artifact(config_.results_dir, "rl_runs.csv", rl_runs_csv(curves));
      result = {{"curves", json::array()}, {"table", rl_table(curves)}};
      for (const auto& c : curves) result["curves"].push_back(to_json(c));
    }
  } catch (const JobCancelled&) {
    state = JobState::Cancelled;
    result = json::object();
  } catch (const std::exception& e) {
    state = JobState::Failed;
    result = {{"error", e.what()}};
  }
  slot.reset();  // free the writer before anyone sees the job finish
  j->finish(state, std::move(result));
}

}  // namespace dialogctl
