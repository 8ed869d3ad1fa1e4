#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "dialogctl/service.hpp"

namespace httplib {
class Server;
}

namespace dialogctl {

// HTTP front end of Service. Bodies are JSON unless noted; errors are
// {"error": <code>, "message": <text>} with a matching status.
//
//   GET    /health
//   GET    /templates
//   POST   /sessions                      {"mode": "greedy"|"sample", "seed": n}
//   GET    /sessions/{id}
//   DELETE /sessions/{id}
//   POST   /sessions/{id}/utterances      {"text": "..."}
//   POST   /sessions/{id}/utterances/stream   same, answered as server-sent events
//   POST   /corrections                   {"session": id, "turn": n, "action": id|name}
//   GET    /uncertainty?limit=n
//   GET    /corpus                        text/plain corpus file
//   PUT    /corpus                        text/plain corpus file
//   POST   /checkpoint/save               {"path": "..."} (defaults to the configured one)
//   POST   /checkpoint/load               {"path": "..."}
//   POST   /jobs                          {"kind": "rl"|"loo"|"train-sl", "params": {...}}
//   GET    /jobs/{id}
//   DELETE /jobs/{id}                     request cancellation
//   GET    /jobs/{id}/events?from=n       server-sent events, one per job event
class HttpApi {
 public:
  explicit HttpApi(Service& service);
  ~HttpApi();

  /// Binds and serves until stop(); returns false if the port cannot be bound.
  bool listen(const std::string& host, int port);
  /// Binds to a free port and returns it; serve with listen_after_bind().
  int bind_any_port(const std::string& host);
  bool listen_after_bind();
  void wait_until_ready() const;
  void stop();

 private:
  void install();

  Service* service_;
  std::unique_ptr<httplib::Server> server_;
};

nlohmann::json to_json(const StepView& step);
nlohmann::json to_json(const TurnResponse& response);
nlohmann::json to_json(const RetrainReport& report);
nlohmann::json to_json(const QueueItem& item);

/// HTTP status for a ServiceError code.
int http_status(const std::string& code);

}  // namespace dialogctl
