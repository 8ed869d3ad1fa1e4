#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dialogctl/config.hpp"
#include "dialogctl/corpus.hpp"
#include "dialogctl/engine.hpp"
#include "dialogctl/phone/phone_domain.hpp"

namespace dialogctl {

/// Error with a machine-readable code ("not_found", "session_closed",
/// "busy", "invalid", "no_model", "masked_action", "not_reconstructed").
class ServiceError : public std::runtime_error {
 public:
  ServiceError(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

/// One decision as shown to a client.
struct StepView {
  std::size_t record_index = 0;  // position in the session transcript
  std::size_t turn_index = 0;
  ExecutedAction action;
  std::vector<double> distribution;  // masked and renormalized
  ActionMask mask;
  double score = 0.0;                // probability of the chosen action
};

struct TurnResponse {
  std::string session_id;
  std::vector<StepView> steps;
  bool closed = false;
};

struct RetrainReport {
  std::string dialog_id;   // corpus entry created by the correction
  std::size_t epochs = 0;
  double seconds = 0.0;
  bool reconstructed = false;
  bool replay_matches = false;  // the corrected prefix now yields the corrected action
};

struct QueueItem {
  std::string session_id;
  std::size_t record_index = 0;
  std::size_t turn_index = 0;
  std::string user_text;
  std::size_t action = 0;
  std::string action_name;
  double score = 0.0;
};

/// Items sorted ascending by score (stable), truncated to `limit`.
std::vector<QueueItem> lowest_scored(std::vector<QueueItem> items, std::size_t limit);

enum class JobState { Running, Done, Failed, Cancelled };
std::string_view to_string(JobState state);

struct JobEvent {
  std::size_t seq = 0;
  std::string type;  // "progress", "result", "error", "cancelled"
  nlohmann::json data;
};

/// Progress log of one background job. Events are appended in order and
/// never removed.
class Job {
 public:
  Job(std::string id, std::string kind);

  const std::string& id() const { return id_; }
  const std::string& kind() const { return kind_; }
  JobState state() const;
  nlohmann::json result() const;

  void emit(std::string type, nlohmann::json data);
  void finish(JobState state, nlohmann::json result);

  /// Events with seq >= from; waits up to `timeout` for one to arrive.
  std::vector<JobEvent> events_since(std::size_t from,
                                     std::chrono::milliseconds timeout = {}) const;
  /// Blocks until the job leaves the Running state.
  void wait() const;

  void request_cancel() { cancel_.store(true); }
  bool cancel_requested() const { return cancel_.load(); }

 private:
  std::string id_;
  std::string kind_;
  mutable std::mutex mutex_;
  mutable std::condition_variable cv_;
  std::vector<JobEvent> events_;
  JobState state_ = JobState::Running;
  nlohmann::json result_;
  std::atomic<bool> cancel_{false};
};

/// Chat sessions, on-line correction, uncertainty queue, model and corpus
/// management and background experiment jobs around one served model.
///
/// Readers take a shared_ptr snapshot of the model; every model change goes
/// through the single writer slot and swaps the pointer, so a session never
/// sees a partially updated model. A second writer is refused with "busy".
class Service {
 public:
  Service(AppConfig config, phone::AddressBook book, Corpus corpus);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Loads the address book, the corpus and, if it exists, the checkpoint
  /// named in `config`.
  static std::unique_ptr<Service> from_config(const AppConfig& config);

  const AppConfig& config() const { return config_; }
  const phone::PhoneDomain& domain() const { return domain_; }

  // --- model -------------------------------------------------------------
  bool has_model() const;
  std::shared_ptr<const ModelParams> model() const;
  /// Fresh model trained on the whole corpus until it is reproduced.
  RetrainReport train_model();
  void set_model(ModelParams params);
  void save_model(const std::filesystem::path& path) const;
  void load_model(const std::filesystem::path& path);

  // --- sessions ----------------------------------------------------------
  /// Opens a session and runs the opening turn.
  TurnResponse create_session(SelectionMode mode, std::optional<std::uint64_t> seed = {});
  TurnResponse post_utterance(const std::string& session_id, const std::string& text);
  void close_session(const std::string& session_id);
  std::vector<StepView> transcript(const std::string& session_id) const;
  bool session_open(const std::string& session_id) const;

  // --- active learning -----------------------------------------------------
  RetrainReport submit_correction(const std::string& session_id, std::size_t record_index,
                                  std::size_t action);
  std::vector<QueueItem> uncertainty_queue(std::size_t limit) const;

  // --- corpus --------------------------------------------------------------
  Corpus corpus() const;
  /// Replaces the corpus and retrains until it is reproduced. Rejected (and
  /// nothing changed) if the text does not parse, an action is masked, or
  /// the model cannot reproduce it.
  RetrainReport put_corpus(const std::string& text);

  // --- jobs ----------------------------------------------------------------
  /// kind: "rl", "loo", "train-sl". Rejected with "busy" while another
  /// training job or a correction holds the writer slot.
  std::shared_ptr<Job> start_job(const std::string& kind, const nlohmann::json& params);
  std::shared_ptr<Job> job(const std::string& id) const;
  void cancel_job(const std::string& id);

 private:
  struct SessionEntry;
  class WriterSlot;

  std::shared_ptr<SessionEntry> find_session(const std::string& id) const;
  StepView view_of(const SessionEntry& s, std::size_t record_index,
                   const ExecutedAction& action) const;
  void remember_turns(const SessionEntry& s, std::size_t from);
  RetrainReport retrain_locked(std::vector<TrainingSequence> data, bool fresh);
  void persist_corpus() const;
  void run_job(const std::shared_ptr<Job>& job, const nlohmann::json& params,
               std::shared_ptr<WriterSlot>& slot);
  std::string next_id(const char* prefix);

  AppConfig config_;
  phone::PhoneDomain domain_;

  mutable std::shared_mutex model_mutex_;
  std::shared_ptr<const ModelParams> model_;
  std::uint64_t model_version_ = 0;

  std::atomic<bool> writer_busy_{false};  // set while the model or corpus is changing
  Corpus corpus_;
  mutable std::mutex corpus_mutex_;
  std::vector<TrainingSequence> data_;
  std::optional<AdaDeltaState> sl_opt_;

  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<SessionEntry>> sessions_;

  mutable std::mutex queue_mutex_;
  std::deque<QueueItem> recent_;
  std::size_t recent_capacity_ = 2000;

  mutable std::mutex jobs_mutex_;
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  std::vector<std::thread> job_threads_;

  std::atomic<std::uint64_t> id_counter_{0};
};

}  // namespace dialogctl
