#include "sokoplan/service.hpp"

#include <cmath>

namespace sokoplan {

namespace {

struct HttpError {
  int status;
  std::string message;
};

[[noreturn]] void fail(int status, std::string message) { throw HttpError{status, std::move(message)}; }

ServiceResponse error_response(int status, const std::string& message) {
  return {status, {{"error", message}}};
}

int status_for(Errc code) {
  switch (code) {
    case Errc::BadIndex: return 404;
    case Errc::SteppedAfterTerminal: return 409;
    case Errc::Io: return 500;
    default: return 400;
  }
}

Pos pos_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
    fail(400, "a position is [row, col]");
  }
  const Pos p{j[0].get<int>(), j[1].get<int>()};
  if (!p.on_grid()) fail(400, "position off the grid");
  return p;
}

nlohmann::json pos_to_json(Pos p) { return nlohmann::json::array({p.row, p.col}); }

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : path.substr(0, path.find('?'))) {
    if (c == '/') {
      if (!cur.empty()) parts.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) parts.push_back(std::move(cur));
  return parts;
}

std::string_view stop_name(StopCondition s) {
  switch (s) {
    case StopCondition::AgentEntered: return "agent_entered";
    case StopCondition::BoxPushedOff: return "box_pushed_off";
    default: return "none";
  }
}

StopCondition parse_stop(const std::string& name) {
  if (name == "none") return StopCondition::None;
  if (name == "agent_entered") return StopCondition::AgentEntered;
  if (name == "box_pushed_off") return StopCondition::BoxPushedOff;
  fail(400, "unknown stop condition '" + name + "'");
}

}  // namespace

nlohmann::json board_to_json(const Board& board) {
  const std::string text = board_to_text(board);
  nlohmann::json grid = nlohmann::json::array();
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    nlohmann::json row = nlohmann::json::array();
    for (char c : line) row.push_back(std::string(1, c));
    grid.push_back(std::move(row));
  }
  return {{"grid", std::move(grid)},
          {"text", text},
          {"agent", pos_to_json(board.agent())},
          {"step_count", board.step_count},
          {"boxes_on_targets", board.boxes_on_targets()},
          {"solved", board.solved()},
          {"terminal", board.terminal()}};
}

nlohmann::json grid_to_json(const ConceptGrid& grid) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < kRows; ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < kCols; ++c) row.push_back(concept_class_name(grid[r * kCols + c]));
    rows.push_back(std::move(row));
  }
  return rows;
}

ConceptGrid grid_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != kRows) throw Error(Errc::MalformedRecord, "a grid has 8 rows");
  ConceptGrid g;
  for (int r = 0; r < kRows; ++r) {
    if (!j[r].is_array() || j[r].size() != kCols) throw Error(Errc::MalformedRecord, "a grid row has 8 entries");
    for (int c = 0; c < kCols; ++c) {
      const auto cls = parse_concept_class(j[r][c].get<std::string>());
      if (!cls) throw Error(Errc::MalformedRecord, "unknown class '" + j[r][c].get<std::string>() + "'");
      g[r * kCols + c] = *cls;
    }
  }
  return g;
}

struct SteeringService::Session {
  std::mutex mutex;
  std::string id;
  Level level;
  std::string checkpoint;
  std::shared_ptr<const Params<float>> params;
  std::uint64_t episode_seed = 0;
  Board board;
  DRCState<float> state;
  Trajectory so_far;
  // painted entries as echoed, and the specs built from them (one per layer)
  nlohmann::json entries = nlohmann::json::array();
  StopCondition stop = StopCondition::None;
  Pos anchor;
  bool final_tick_only = false;
  std::map<int, InterventionSpec> specs;
  std::vector<nlohmann::json> history;
};

void SteeringService::add_checkpoint(const std::string& id, Params<float> params) {
  std::unique_lock lock(registry_mutex_);
  checkpoints_[id] = std::make_shared<const Params<float>>(std::move(params));
}

void SteeringService::add_probe(const std::string& id, Probe<float> probe) {
  std::unique_lock lock(registry_mutex_);
  probes_[id] = std::make_shared<const Probe<float>>(std::move(probe));
}

void SteeringService::add_level(const Level& level) {
  std::unique_lock lock(registry_mutex_);
  levels_[level.id] = level;
}

std::shared_ptr<SteeringService::Session> SteeringService::find_session(const std::string& id) const {
  std::lock_guard lock(sessions_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) fail(404, "unknown session '" + id + "'");
  return it->second;
}

Level SteeringService::resolve_level(const nlohmann::json& source) const {
  if (!source.is_object()) fail(400, "level must be an object");
  if (source.contains("text")) {
    Level level;
    level.initial = board_from_text(source["text"].get<std::string>());
    level.id = source.value("id", std::string("custom"));
    return level;
  }
  if (source.contains("id")) {
    const std::string id = source["id"].get<std::string>();
    std::shared_lock lock(registry_mutex_);
    const auto it = levels_.find(id);
    if (it == levels_.end()) fail(404, "unknown level '" + id + "'");
    return it->second;
  }
  if (source.contains("handcrafted")) {
    const auto& h = source["handcrafted"];
    const auto kind = parse_level_kind(h.at("kind").get<std::string>());
    if (!kind) fail(404, "unknown level kind");
    HandcraftedParams params;
    params.corridor_length = h.value("corridor_length", 0);
    params.variant = h.value("variant", 0);
    return generate_handcrafted(*kind, h.value("base", 0), params);
  }
  fail(400, "level needs one of text, id or handcrafted");
}

ServiceResponse SteeringService::create_session(const nlohmann::json& req) {
  const std::string ckpt = req.at("checkpoint").get<std::string>();
  std::shared_ptr<const Params<float>> params;
  {
    std::shared_lock lock(registry_mutex_);
    const auto it = checkpoints_.find(ckpt);
    if (it == checkpoints_.end()) fail(404, "unknown checkpoint '" + ckpt + "'");
    params = it->second;
  }
  auto s = std::make_shared<Session>();
  s->level = resolve_level(req.at("level"));
  s->checkpoint = ckpt;
  s->params = params;
  s->episode_seed = req.value("episode_seed", std::uint64_t{0});
  s->board = start_episode(s->level, s->episode_seed);
  s->state = DRCState<float>::zeros(params->config);
  s->so_far.level_id = s->level.id;
  {
    std::lock_guard lock(sessions_mutex_);
    s->id = "s" + std::to_string(next_session_++);
    sessions_[s->id] = s;
  }
  return {201, {{"id", s->id}, {"level_id", s->level.id}, {"checkpoint", ckpt}, {"board", board_to_json(s->board)}}};
}

ServiceResponse SteeringService::set_interventions(Session& s, const nlohmann::json& req) {
  const std::string mode = req.value("mode", std::string("replace"));
  if (mode != "replace" && mode != "merge") fail(400, "mode is replace or merge");
  nlohmann::json entries = mode == "merge" ? s.entries : nlohmann::json::array();
  StopCondition stop = s.stop;
  Pos anchor = s.anchor;
  if (req.contains("stop")) {
    stop = parse_stop(req["stop"].at("condition").get<std::string>());
    if (stop != StopCondition::None) anchor = pos_from_json(req["stop"].at("anchor"));
  } else if (mode == "replace") {
    stop = StopCondition::None;
  }
  const bool final_tick_only = req.value("final_tick_only", mode == "merge" ? s.final_tick_only : false);

  const DRCConfig& config = s.params->config;
  std::map<int, InterventionSpec> specs;
  nlohmann::json resolved = nlohmann::json::array();
  std::shared_lock lock(registry_mutex_);
  for (const auto& e : req.value("entries", nlohmann::json::array())) entries.push_back(e);
  for (const auto& e : entries) {
    const Pos pos = pos_from_json(e.at("pos"));
    const std::string probe_id = e.at("probe").get<std::string>();
    const auto it = probes_.find(probe_id);
    if (it == probes_.end()) fail(404, "unknown probe '" + probe_id + "'");
    const Probe<float>& probe = *it->second;
    const auto* target = std::get_if<ConceptSpec>(&probe.config.target);
    if (!target || probe.config.kernel != 1 || probe.config.source.kind != SourceKind::CellState) {
      fail(400, "probe '" + probe_id + "' is not a 1x1 cell-state concept probe");
    }
    const int layer = probe.config.source.layer;
    if (layer >= config.D || probe.config.channels != config.G) {
      fail(400, "probe '" + probe_id + "' does not fit the session's network");
    }
    if (e.contains("layer") && e["layer"].get<int>() != layer) fail(400, "entry layer differs from the probe's layer");
    if (e.contains("concept") && e["concept"].get<std::string>() != concept_kind_name(target->kind)) {
      fail(400, "entry concept differs from the probe's concept");
    }
    const auto cls = parse_concept_class(e.at("class").get<std::string>());
    const auto& classes = class_set(target->kind);
    if (!cls || std::find(classes.begin(), classes.end(), *cls) == classes.end()) {
      fail(400, "class '" + e["class"].get<std::string>() + "' is not a class of " +
                    std::string(concept_kind_name(target->kind)));
    }
    const double alpha = e.value("alpha", 1.0);
    if (!std::isfinite(alpha)) fail(400, "alpha must be finite");
    const std::string schedule = e.value("schedule", std::string("always"));
    if (schedule != "always" && schedule != "until_stop") fail(400, "schedule is always or until_stop");

    const Eigen::VectorXf v = probe.class_vector(class_index(target->kind, *cls));
    InterventionSpec& spec = specs[layer];
    spec.layer = layer;
    spec.stop = stop;
    spec.anchor = anchor;
    spec.final_tick_only = final_tick_only;
    (schedule == "always" ? spec.short_route : spec.directional)
        .push_back({pos, v, static_cast<float>(alpha), std::string(concept_class_name(*cls))});
    resolved.push_back({{"pos", pos_to_json(pos)},
                        {"probe", probe_id},
                        {"concept", concept_kind_name(target->kind)},
                        {"class", concept_class_name(*cls)},
                        {"alpha", alpha},
                        {"layer", layer},
                        {"schedule", schedule},
                        {"norm", static_cast<double>(v.norm())}});
  }
  for (auto& [layer, spec] : specs) spec.validate(config.D);

  s.entries = std::move(entries);
  s.stop = stop;
  s.anchor = anchor;
  s.final_tick_only = final_tick_only;
  s.specs = std::move(specs);
  nlohmann::json out{{"entries", std::move(resolved)},
                     {"stop", {{"condition", stop_name(stop)}}},
                     {"final_tick_only", final_tick_only}};
  if (stop != StopCondition::None) out["stop"]["anchor"] = pos_to_json(anchor);
  return {200, out};
}

ServiceResponse SteeringService::step_session(Session& s, const nlohmann::json& req) {
  if (s.board.terminal()) fail(409, "session '" + s.id + "' has ended");
  const std::string mode = req.value("mode", std::string("greedy"));
  if (mode != "greedy" && mode != "action" && mode != "think") fail(400, "mode is greedy, action or think");
  const int count = req.value("count", 1);
  if (count < 1 || count > 10000) fail(400, "count must be in 1..10000");
  Action forced = Action::Noop;
  if (mode == "action") {
    const std::string a = req.at("action").get<std::string>();
    const auto parsed = a.size() == 1 ? parse_action_letter(a[0]) : std::nullopt;
    if (!parsed) fail(400, "action is one of U D L R N");
    forced = *parsed;
  }

  std::vector<std::pair<std::string, std::shared_ptr<const Probe<float>>>> decode;
  {
    std::shared_lock lock(registry_mutex_);
    for (const auto& id : req.value("decode", nlohmann::json::array())) {
      const auto it = probes_.find(id.get<std::string>());
      if (it == probes_.end()) fail(404, "unknown probe '" + id.get<std::string>() + "'");
      const ProbeConfig& c = it->second->config;
      const bool fits = c.source.kind == SourceKind::Observation
                            ? c.channels == kNumSquareStates
                            : c.source.layer < s.params->config.D && c.channels == s.params->config.G;
      if (c.global() || !std::holds_alternative<ConceptSpec>(c.target) || !fits) {
        fail(400, "probe '" + it->first + "' cannot decode plans for this session");
      }
      decode.emplace_back(it->first, it->second);
    }
  }

  const Params<float>& params = *s.params;
  nlohmann::json steps = nlohmann::json::array();
  double reward = 0;
  for (int i = 0; i < count && !s.board.terminal(); ++i) {
    HookSet hooks;
    for (const auto& [layer, spec] : s.specs) {
      HookSet h = step_hooks(spec, !stop_reached(spec, s.so_far, s.board), params.config.N);
      hooks.insert(hooks.end(), h.begin(), h.end());
    }
    const ObsTensor obs = encode_observation(s.board);
    StepOutput<float> o = forward_step(params, obs, s.state, hooks);
    const Action a = mode == "greedy" ? o.greedy_action() : forced;
    const StepResult r = step(s.board, a);

    nlohmann::json frames = nlohmann::json::array();
    for (std::size_t j = 0; j < o.trace.size(); ++j) {
      nlohmann::json decoded = nlohmann::json::object();
      for (const auto& [id, probe] : decode) {
        decoded[id] = grid_to_json(probe->config.source.kind == SourceKind::Observation ? predict_grid(*probe, obs)
                                                                                        : predict_grid(*probe, o.trace[j]));
      }
      frames.push_back({{"tick", j}, {"decoded", std::move(decoded)}});
    }
    nlohmann::json entry{{"step", s.so_far.length()},
                         {"action", std::string(1, action_letter(a))},
                         {"reward", r.reward},
                         {"done", r.done},
                         {"hooks", hooks.size()},
                         {"board", board_to_json(r.board)},
                         {"frames", std::move(frames)}};
    s.so_far.steps.push_back({s.board, a, r.reward, r.done, r.events});
    s.state = std::move(o.state);
    s.board = r.board;
    s.so_far.final_board = s.board;
    reward += r.reward;
    s.history.push_back(entry);
    steps.push_back(std::move(entry));
  }
  return {200,
          {{"steps", std::move(steps)}, {"reward", reward}, {"done", s.board.terminal()}, {"board", board_to_json(s.board)}}};
}

ServiceResponse SteeringService::handle(const std::string& method, const std::string& path, const std::string& body) {
  try {
    const auto parts = split_path(path);
    auto request = [&] {
      if (body.empty()) return nlohmann::json::object();
      nlohmann::json j = nlohmann::json::parse(body);
      if (!j.is_object()) fail(400, "request body must be a JSON object");
      return j;
    };
    auto only = [&](const char* allowed) {
      if (method != allowed) fail(405, "method not allowed");
    };

    if (parts.size() == 1 && parts[0] == "checkpoints") {
      only("GET");
      std::shared_lock lock(registry_mutex_);
      nlohmann::json list = nlohmann::json::array();
      for (const auto& [id, p] : checkpoints_) list.push_back({{"id", id}, {"drc", config_to_json(p->config)}});
      return {200, {{"checkpoints", std::move(list)}}};
    }
    if (parts.size() == 1 && parts[0] == "probes") {
      only("GET");
      std::shared_lock lock(registry_mutex_);
      nlohmann::json list = nlohmann::json::array();
      for (const auto& [id, p] : probes_) {
        list.push_back({{"id", id}, {"config", probe_config_to_json(p->config)}, {"parameters", p->parameter_count()}});
      }
      return {200, {{"probes", std::move(list)}}};
    }
    if (parts.size() == 1 && parts[0] == "levels") {
      only("GET");
      std::shared_lock lock(registry_mutex_);
      nlohmann::json list = nlohmann::json::array();
      for (const auto& [id, l] : levels_) list.push_back(id);
      return {200, {{"levels", std::move(list)}}};
    }
    if (parts.size() == 1 && parts[0] == "sessions") {
      only("POST");
      return create_session(request());
    }
    if (parts.size() >= 2 && parts[0] == "sessions") {
      if (parts.size() == 2 && method == "DELETE") {
        std::lock_guard lock(sessions_mutex_);
        if (!sessions_.erase(parts[1])) fail(404, "unknown session '" + parts[1] + "'");
        return {200, {{"deleted", parts[1]}}};
      }
      const auto session = find_session(parts[1]);
      std::lock_guard lock(session->mutex);
      Session& s = *session;
      if (parts.size() == 2) {
        only("GET");
        return {200,
                {{"id", s.id},
                 {"level_id", s.level.id},
                 {"checkpoint", s.checkpoint},
                 {"steps", s.so_far.length()},
                 {"board", board_to_json(s.board)},
                 {"done", s.board.terminal()}}};
      }
      if (parts.size() == 3 && parts[2] == "interventions") {
        if (method == "GET") return {200, {{"entries", s.entries}}};
        only("POST");
        return set_interventions(s, request());
      }
      if (parts.size() == 3 && parts[2] == "step") {
        only("POST");
        return step_session(s, request());
      }
      if (parts.size() == 3 && parts[2] == "history") {
        only("GET");
        return {200, {{"id", s.id}, {"steps", s.history}}};
      }
    }
    return error_response(404, "no route for " + path);
  } catch (const HttpError& e) {
    return error_response(e.status, e.message);
  } catch (const nlohmann::json::exception& e) {
    return error_response(400, std::string("bad request: ") + e.what());
  } catch (const Error& e) {
    return error_response(status_for(e.code()), e.what());
  }
}

}  // namespace sokoplan
