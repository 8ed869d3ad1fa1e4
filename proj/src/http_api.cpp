#include "dialogctl/http_api.hpp"

#include <httplib.h>

namespace dialogctl {

using nlohmann::json;

json to_json(const StepView& s) {
  json mask = json::array();
  for (auto b : s.mask.bits) mask.push_back(b != 0);
  json slots = json::object();
  for (const auto& [k, v] : s.action.slots) slots[k] = v;
  return json{{"record_index", s.record_index},
              {"turn_index", s.turn_index},
              {"action_id", s.action.id},
              {"action", s.action.name},
              {"kind", s.action.kind == ActionKind::Api ? "api" : "text"},
              {"text", s.action.text},
              {"slots", slots},
              {"terminal", s.action.terminal},
              {"distribution", s.distribution},
              {"mask", mask},
              {"score", s.score}};
}

json to_json(const TurnResponse& r) {
  json steps = json::array();
  for (const auto& s : r.steps) steps.push_back(to_json(s));
  return json{{"session", r.session_id}, {"steps", steps}, {"closed", r.closed}};
}

json to_json(const RetrainReport& r) {
  return json{{"dialog_id", r.dialog_id},
              {"epochs", r.epochs},
              {"seconds", r.seconds},
              {"reconstructed", r.reconstructed},
              {"replay_matches", r.replay_matches}};
}

json to_json(const QueueItem& q) {
  return json{{"session", q.session_id}, {"turn", q.record_index},
              {"turn_index", q.turn_index}, {"user_text", q.user_text},
              {"action_id", q.action},      {"action", q.action_name},
              {"score", q.score}};
}

int http_status(const std::string& code) {
  if (code == "not_found") return 404;
  if (code == "busy" || code == "session_closed") return 409;
  if (code == "masked_action" || code == "not_reconstructed") return 422;
  if (code == "no_model") return 503;
  return 400;
}

namespace {

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const std::string& code, const std::string& message) {
  send_json(res, {{"error", code}, {"message", message}}, http_status(code));
}

json body_of(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    auto j = json::parse(req.body);
    if (!j.is_object()) throw ServiceError("invalid", "request body must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw ServiceError("invalid", std::string("malformed JSON: ") + e.what());
  }
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const ServiceError& e) {
      send_error(res, e.code(), e.what());
    } catch (const json::exception& e) {
      send_error(res, "invalid", e.what());
    } catch (const std::exception& e) {
      send_error(res, "internal", e.what());
    }
  };
}

std::string sse(std::size_t id, const std::string& event, const json& data) {
  return "id: " + std::to_string(id) + "\nevent: " + event + "\ndata: " + data.dump() + "\n\n";
}

std::size_t action_id(const Service& service, const json& v) {
  if (v.is_number_unsigned()) return v.get<std::size_t>();
  if (v.is_string()) {
    try {
      return service.domain().find_template(v.get<std::string>()).id;
    } catch (const std::exception& e) {
      throw ServiceError("invalid", e.what());
    }
  }
  throw ServiceError("invalid", "action must be a template id or name");
}

}  // namespace

HttpApi::HttpApi(Service& service)
    : service_(&service), server_(std::make_unique<httplib::Server>()) {
  install();
}

HttpApi::~HttpApi() { stop(); }

bool HttpApi::listen(const std::string& host, int port) { return server_->listen(host, port); }
int HttpApi::bind_any_port(const std::string& host) { return server_->bind_to_any_port(host); }
bool HttpApi::listen_after_bind() { return server_->listen_after_bind(); }
void HttpApi::wait_until_ready() const { server_->wait_until_ready(); }
void HttpApi::stop() {
  if (server_) server_->stop();
}

void HttpApi::install() {
  auto& srv = *server_;
  Service& svc = *service_;

  srv.Get("/health", guarded([&svc](const auto&, auto& res) {
            send_json(res, {{"status", "ok"}, {"model_loaded", svc.has_model()}});
          }));

  srv.Get("/templates", guarded([&svc](const auto&, auto& res) {
            json out = json::array();
            for (const auto& t : svc.domain().templates())
              out.push_back({{"id", t.id},
                             {"name", t.name},
                             {"kind", t.kind == ActionKind::Api ? "api" : "text"},
                             {"pattern", t.pattern},
                             {"terminal", t.terminal}});
            send_json(res, out);
          }));

  srv.Post("/sessions", guarded([&svc](const auto& req, auto& res) {
             const auto body = body_of(req);
             const std::string mode = body.value("mode", "greedy");
             if (mode != "greedy" && mode != "sample")
               throw ServiceError("invalid", "mode must be greedy or sample");
             std::optional<std::uint64_t> seed;
             if (body.contains("seed")) seed = body.at("seed").template get<std::uint64_t>();
             send_json(res,
                       to_json(svc.create_session(
                           mode == "sample" ? SelectionMode::Sample : SelectionMode::Greedy, seed)),
                       201);
           }));

  srv.Get(R"(/sessions/([^/]+))", guarded([&svc](const auto& req, auto& res) {
            const std::string id = req.matches[1];
            json steps = json::array();
            for (const auto& s : svc.transcript(id)) steps.push_back(to_json(s));
            send_json(res, {{"session", id}, {"open", svc.session_open(id)}, {"steps", steps}});
          }));

  srv.Delete(R"(/sessions/([^/]+))", guarded([&svc](const auto& req, auto& res) {
               svc.close_session(req.matches[1]);
               send_json(res, {{"closed", true}});
             }));

  srv.Post(R"(/sessions/([^/]+)/utterances)", guarded([&svc](const auto& req, auto& res) {
             const auto body = body_of(req);
             send_json(res, to_json(svc.post_utterance(req.matches[1], body.value("text", ""))));
           }));

  srv.Post(R"(/sessions/([^/]+)/utterances/stream)",
           guarded([&svc](const auto& req, auto& res) {
             const auto body = body_of(req);
             // Run the turn first so errors still get a normal status code.
             const auto turn = svc.post_utterance(req.matches[1], body.value("text", ""));
             auto events = std::make_shared<std::string>();
             std::size_t n = 0;
             for (const auto& s : turn.steps) *events += sse(n++, "step", to_json(s));
             *events += sse(n, "done", {{"closed", turn.closed}});
             res.set_chunked_content_provider(
                 "text/event-stream", [events](std::size_t, httplib::DataSink& sink) {
                   sink.write(events->data(), events->size());
                   sink.done();
                   return true;
                 });
           }));

  srv.Post("/corrections", guarded([&svc](const auto& req, auto& res) {
             const auto body = body_of(req);
             const auto report = svc.submit_correction(body.at("session").template get<std::string>(),
                                                       body.at("turn").template get<std::size_t>(),
                                                       action_id(svc, body.at("action")));
             send_json(res, to_json(report));
           }));

  srv.Get("/uncertainty", guarded([&svc](const auto& req, auto& res) {
            std::size_t limit = 20;
            if (req.has_param("limit")) limit = std::stoul(req.get_param_value("limit"));
            json out = json::array();
            for (const auto& q : svc.uncertainty_queue(limit)) out.push_back(to_json(q));
            send_json(res, out);
          }));

  srv.Get("/corpus", guarded([&svc](const auto&, auto& res) {
            res.set_content(serialize_corpus(svc.corpus()), "text/plain");
          }));

  srv.Put("/corpus", guarded([&svc](const auto& req, auto& res) {
            send_json(res, to_json(svc.put_corpus(req.body)));
          }));

  srv.Post("/checkpoint/save", guarded([&svc](const auto& req, auto& res) {
             const auto body = body_of(req);
             const std::string path = body.value("path", svc.config().checkpoint_path.string());
             if (path.empty()) throw ServiceError("invalid", "no checkpoint path");
             svc.save_model(path);
             send_json(res, {{"saved", path}});
           }));

  srv.Post("/checkpoint/load", guarded([&svc](const auto& req, auto& res) {
             const auto body = body_of(req);
             const std::string path = body.value("path", svc.config().checkpoint_path.string());
             if (path.empty()) throw ServiceError("invalid", "no checkpoint path");
             svc.load_model(path);
             send_json(res, {{"loaded", path}});
           }));

  srv.Post("/jobs", guarded([&svc](const auto& req, auto& res) {
             const auto body = body_of(req);
             const auto job =
                 svc.start_job(body.at("kind").template get<std::string>(),
                               body.contains("params") ? body.at("params") : json::object());
             send_json(res, {{"id", job->id()}, {"kind", job->kind()}}, 202);
           }));

  srv.Get(R"(/jobs/([^/]+))", guarded([&svc](const auto& req, auto& res) {
            const auto job = svc.job(req.matches[1]);
            send_json(res, {{"id", job->id()},
                            {"kind", job->kind()},
                            {"state", std::string(to_string(job->state()))},
                            {"result", job->result()}});
          }));

  srv.Delete(R"(/jobs/([^/]+))", guarded([&svc](const auto& req, auto& res) {
               svc.cancel_job(req.matches[1]);
               send_json(res, {{"cancel_requested", true}});
             }));

  srv.Get(R"(/jobs/([^/]+)/events)", guarded([&svc](const auto& req, auto& res) {
            const auto job = svc.job(req.matches[1]);
            auto next = std::make_shared<std::size_t>(0);
            if (req.has_param("from")) *next = std::stoul(req.get_param_value("from"));
            res.set_chunked_content_provider(
                "text/event-stream", [job, next](std::size_t, httplib::DataSink& sink) {
                  const auto events = job->events_since(*next, std::chrono::milliseconds(500));
                  for (const auto& e : events) {
                    const auto chunk = sse(e.seq, e.type, e.data);
                    if (!sink.write(chunk.data(), chunk.size())) return false;
                    *next = e.seq + 1;
                  }
                  if (job->state() != JobState::Running &&
                      job->events_since(*next).empty())
                    sink.done();
                  return true;
                });
          }));
}

}  // namespace dialogctl
