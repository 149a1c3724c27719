#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "sokoplan/intervention.hpp"
#include "sokoplan/levels.hpp"

namespace sokoplan {

struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
};

/// JSON wire forms shared by the service and its clients.
nlohmann::json board_to_json(const Board& board);
nlohmann::json grid_to_json(const ConceptGrid& grid);
ConceptGrid grid_from_json(const nlohmann::json& j);

/// Live rollouts with painted interventions. Everything goes through
/// handle(); the HTTP server is a thin adapter around it.
///
///   POST /sessions                    {"level": {...}, "checkpoint": id, "episode_seed": n}
///   GET  /sessions/{id}
///   DELETE /sessions/{id}
///   POST /sessions/{id}/interventions {"entries": [...], "mode": "replace"|"merge", "stop": {...}, "final_tick_only": b}
///   POST /sessions/{id}/step          {"mode": "greedy"|"action"|"think", "count": n, "action": "U", "decode": [probe ids]}
///   GET  /sessions/{id}/history
///   GET  /probes
///   GET  /checkpoints
///
/// A level is {"text": rows}, {"id": registered id} or
/// {"handcrafted": {"kind": k, "base": i, "corridor_length": n, "variant": v}}.
class SteeringService {
 public:
  void add_checkpoint(const std::string& id, Params<float> params);
  void add_probe(const std::string& id, Probe<float> probe);
  void add_level(const Level& level);

  ServiceResponse handle(const std::string& method, const std::string& path, const std::string& body);

 private:
  struct Session;

  ServiceResponse create_session(const nlohmann::json& req);
  ServiceResponse set_interventions(Session& s, const nlohmann::json& req);
  ServiceResponse step_session(Session& s, const nlohmann::json& req);
  Level resolve_level(const nlohmann::json& source) const;
  std::shared_ptr<Session> find_session(const std::string& id) const;

  mutable std::shared_mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<const Params<float>>> checkpoints_;
  std::map<std::string, std::shared_ptr<const Probe<float>>> probes_;
  std::map<std::string, Level> levels_;

  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_session_ = 1;
};

/// HTTP/1.1 adapter: every request goes to service.handle() verbatim.
class HttpServer {
 public:
  explicit HttpServer(SteeringService& service);
  ~HttpServer();
  /// Port 0 picks a free port. Returns the bound port; throws Io on failure.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace sokoplan
