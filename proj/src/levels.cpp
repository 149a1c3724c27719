#include "sokoplan/levels.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <random>
#include <tuple>

#include "sokoplan/solver.hpp"

namespace sokoplan {

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a * 0x9E3779B97F4A7C15ull + b + 0x632BE59BD9B4E019ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

int uniform(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
bool chance(std::mt19937_64& rng, double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; }

struct Canvas {
  Board b;
  Canvas() { b.grid.fill(Square::Wall); }
  bool wall(Pos p) const { return !p.on_grid() || b.at(p) == Square::Wall; }
  bool empty(Pos p) const { return p.on_grid() && b.at(p) == Square::Floor; }
  void floor(Pos p) { b.set(p, Square::Floor); }
  void block(Pos p) { b.set(p, Square::Wall); }
  void target(Pos p) { b.set(p, Square::EmptyTarget); }
  void box(Pos p) { b.set(p, is_target(b.at(p)) ? Square::BoxOnTarget : Square::BoxOnFloor); }
  void agent(Pos p) { b.set(p, is_target(b.at(p)) ? Square::AgentOnTarget : Square::AgentOnFloor); }
};

std::vector<Pos> floor_cells(const Canvas& c) {
  std::vector<Pos> out;
  for (int i = 0; i < kCells; ++i) {
    if (c.b.grid[i] == Square::Floor) out.push_back(Pos::from_index(i));
  }
  return out;
}

SearchBudget generation_budget() {
  SearchBudget b;
  b.max_nodes = 400'000;
  b.max_seconds = 20.0;
  return b;
}

// Tracks the box that starts at `start` through a plan; returns every push of
// it as (square pushed off, direction).
std::vector<RouteStep> box_pushes(const Board& board, const std::vector<Action>& plan, Pos start) {
  std::vector<RouteStep> pushes;
  Board b = board;
  b.episode_limit = 1 << 20;
  Pos tracked = start;
  for (Action a : plan) {
    const Pos agent = b.agent();
    const StepResult r = step(b, a);
    if (r.events.has(StepEvent::BoxMoved)) {
      const Direction d = *to_direction(a);
      const Pos pushed = moved(agent, d);
      if (pushed == tracked) {
        pushes.push_back({tracked, d});
        tracked = moved(tracked, d);
      }
    }
    b = r.board;
  }
  return pushes;
}

std::vector<Pos> agent_squares(const Board& board, const std::vector<Action>& plan) {
  std::vector<Pos> out;
  Board b = board;
  b.episode_limit = 1 << 20;
  for (Action a : plan) {
    b = step(b, a).board;
    out.push_back(b.agent());
  }
  return out;
}

// Places a box with an adjacent target inside `allowed` cells.
bool place_pair(Canvas& c, std::mt19937_64& rng, const std::vector<Pos>& allowed) {
  for (int tries = 0; tries < 50; ++tries) {
    const Pos q = allowed[uniform(rng, 0, static_cast<int>(allowed.size()) - 1)];
    const Direction d = kDirections[uniform(rng, 0, 3)];
    const Pos t = moved(q, d);
    if (!c.empty(q) || !c.empty(t)) continue;
    if (std::find(allowed.begin(), allowed.end(), t) == allowed.end()) continue;
    c.target(t);
    c.box(q);
    return true;
  }
  return false;
}

bool adjacent_to_target(const Board& b, Pos p) {
  for (Direction d : kDirections) {
    if (is_target(b.at(moved(p, d)))) return true;
  }
  return false;
}

// Corridor family ------------------------------------------------------------

struct Frame {
  int room_top;  // first room row; the entrance sits just above it
  int col;       // column of the entrance and of the vertical corridor leg
};

// Frames whose corridor (up from the entrance, along row 0, down column 7)
// fits length 14 and never bends at the final push for lengths 2/6/10/14.
constexpr std::array<Frame, 6> kFrames{{{3, 1}, {3, 2}, {4, 2}, {4, 3}, {5, 3}, {5, 4}}};

std::vector<Pos> corridor_path(const Frame& f) {
  std::vector<Pos> path;
  for (int r = f.room_top - 2; r >= 0; --r) path.push_back({r, f.col});
  for (int c = f.col + 1; c < kCols; ++c) path.push_back({0, c});
  for (int r = 1; r < kRows; ++r) path.push_back({r, kCols - 1});
  return path;
}

std::optional<Level> try_corridor_level(LevelKind kind, int base, int length, int variant, int attempt) {
  std::mt19937_64 rng(mix(mix(static_cast<std::uint64_t>(kind) + 11, base), mix(variant, attempt)));
  const Frame f = kFrames[uniform(rng, 0, static_cast<int>(kFrames.size()) - 1)];
  const std::vector<Pos> path = corridor_path(f);
  if (static_cast<int>(path.size()) < length) return std::nullopt;
  const std::vector<Pos> interior(path.begin(), path.begin() + length);
  const Pos entrance{f.room_top - 1, f.col};
  const Pos x{f.room_top, f.col};
  const Pos a{f.room_top + 1, f.col};

  Canvas c;
  std::vector<Pos> room;
  for (int r = f.room_top; r < kRows; ++r) {
    for (int col = 0; col <= 5; ++col) {
      c.floor({r, col});
      room.push_back({r, col});
    }
  }
  const std::vector<Pos> reserved{x, a, {x.row, x.col - 1}, {x.row, x.col + 1}, {a.row, a.col - 1}, {a.row, a.col + 1}};
  auto is_reserved = [&](Pos p) { return std::find(reserved.begin(), reserved.end(), p) != reserved.end(); };
  const int pillars = uniform(rng, 0, 2);
  for (int i = 0; i < pillars; ++i) {
    const Pos p = room[uniform(rng, 0, static_cast<int>(room.size()) - 1)];
    if (!is_reserved(p)) c.block(p);
  }
  c.floor(entrance);
  c.target(entrance);
  for (Pos p : interior) c.floor(p);
  c.target(interior.back());
  c.box(interior[interior.size() - 2 + (length == 1 ? 1 : 0)]);
  c.box(x);
  c.agent(a);

  std::vector<Pos> open;
  for (Pos p : room) {
    if (!is_reserved(p) && c.empty(p)) open.push_back(p);
  }
  for (int i = 0; i < 2; ++i) {
    if (!place_pair(c, rng, open)) return std::nullopt;
  }
  try {
    validate(c.b);
  } catch (const Error&) {
    return std::nullopt;
  }

  const SolveResult sol = solve(c.b, generation_budget());
  if (!sol.plan) return std::nullopt;
  Board myopic = step(c.b, Action::Up).board;
  myopic.step_count = 0;
  if (solve(myopic, generation_budget()).status != SolveStatus::ProvenUnsolvable) return std::nullopt;
  const auto pushes = box_pushes(c.b, sol.plan->actions, x);
  if (pushes.empty() || pushes.front().dir == Direction::Up || pushes.front().dir == Direction::Down) {
    return std::nullopt;
  }

  Level level;
  level.initial = c.b;
  RouteAnnotations ann;
  ann.kind = kind;
  ann.anchor = x;
  ann.long_route_prefix = {pushes.front()};
  ann.corridor = CorridorInfo{entrance, interior};
  level.annotations = ann;
  return level;
}

// Agent-shortcut family ------------------------------------------------------

std::optional<Level> try_agent_shortcut(int base, int variant, int attempt) {
  std::mt19937_64 rng(mix(mix(101, base), mix(variant, attempt)));
  const int region_top = uniform(rng, 3, 5);
  const int start_col = uniform(rng, 1, 6);
  const int side = chance(rng, 0.5) ? 1 : -1;
  const int far_col = start_col + side * uniform(rng, 2, 4);
  if (far_col < 0 || far_col >= kCols) return std::nullopt;
  const Direction side_dir = side > 0 ? Direction::Right : Direction::Left;

  Canvas c;
  for (int col = std::min(start_col, far_col); col <= std::max(start_col, far_col); ++col) c.floor({0, col});
  std::vector<Pos> short_route, region;
  for (int r = 1; r < region_top; ++r) {
    c.floor({r, start_col});
    c.floor({r, far_col});
    short_route.push_back({r, start_col});
  }
  for (int r = region_top; r < kRows; ++r) {
    for (int col = 0; col < kCols; ++col) {
      c.floor({r, col});
      region.push_back({r, col});
    }
  }
  const int pillars = uniform(rng, 0, 2);
  for (int i = 0; i < pillars; ++i) {
    const Pos p{uniform(rng, region_top + 1, kRows - 1), uniform(rng, 0, kCols - 1)};
    c.block(p);
  }
  std::vector<Pos> near;
  for (Pos p : region) {
    if (c.empty(p) && p.row > region_top && std::abs(p.col - start_col) <= 2) near.push_back(p);
  }
  if (near.size() < 10) return std::nullopt;
  for (int i = 0; i < 4; ++i) {
    if (!place_pair(c, rng, near)) return std::nullopt;
  }
  const Pos start{0, start_col};
  c.agent(start);
  try {
    validate(c.b);
  } catch (const Error&) {
    return std::nullopt;
  }

  std::vector<RouteStep> long_route;
  for (int col = start_col + side; col != far_col + side; col += side) long_route.push_back({{0, col}, side_dir});
  for (int r = 1; r <= region_top; ++r) long_route.push_back({{r, far_col}, Direction::Down});

  const SolveResult sol = solve(c.b, generation_budget());
  if (!sol.plan || sol.plan->actions.empty() || sol.plan->actions.front() != Action::Down) return std::nullopt;
  for (Pos p : agent_squares(c.b, sol.plan->actions)) {
    if (p == long_route.front().pos) return std::nullopt;
  }
  Canvas blocked = c;
  for (Pos p : short_route) blocked.block(p);
  const SolveResult detour = solve(blocked.b, generation_budget());
  if (!detour.plan || detour.plan->cost <= sol.plan->cost) return std::nullopt;

  Level level;
  level.initial = c.b;
  RouteAnnotations ann;
  ann.kind = LevelKind::AgentShortcut;
  ann.short_route = short_route;
  ann.long_route_prefix = long_route;
  ann.anchor = long_route.front().pos;
  level.annotations = ann;
  return level;
}

// Box-shortcut family --------------------------------------------------------

std::optional<Level> try_box_shortcut(int base, int variant, int attempt) {
  std::mt19937_64 rng(mix(mix(202, base), mix(variant, attempt)));
  Canvas c;
  const int top = uniform(rng, 0, 1), bottom = uniform(rng, 6, 7);
  const int left = uniform(rng, 0, 1), right = uniform(rng, 6, 7);
  std::vector<Pos> room;
  for (int r = top; r <= bottom; ++r) {
    for (int col = left; col <= right; ++col) {
      c.floor({r, col});
      room.push_back({r, col});
    }
  }
  const Direction d = kDirections[uniform(rng, 0, 3)];
  const int k = uniform(rng, 3, 4);
  const Pos b0 = room[uniform(rng, 0, static_cast<int>(room.size()) - 1)];
  std::vector<Pos> line{b0};
  for (int i = 1; i <= k; ++i) line.push_back(moved(b0, d));
  for (int i = 1; i <= k; ++i) line[i] = moved(line[i - 1], d);
  for (Pos p : line) {
    if (!c.empty(p)) return std::nullopt;
  }
  // The free box must be pushable from behind.
  if (!c.empty(moved(b0, opposite(d)))) return std::nullopt;
  const std::vector<Pos> short_route(line.begin() + 1, line.end() - 1);
  auto on_line = [&](Pos p) {
    for (Pos q : line) {
      if (std::abs(q.row - p.row) + std::abs(q.col - p.col) <= 1) return true;
    }
    return false;
  };
  const int pillars = uniform(rng, 1, 3);
  for (int i = 0; i < pillars; ++i) {
    const Pos p = room[uniform(rng, 0, static_cast<int>(room.size()) - 1)];
    if (!on_line(p)) c.block(p);
  }
  c.target(line.back());
  c.box(b0);
  std::vector<Pos> open;
  for (Pos p : room) {
    if (c.empty(p) && !on_line(p)) open.push_back(p);
  }
  if (open.size() < 8) return std::nullopt;
  for (int i = 0; i < 3; ++i) {
    if (!place_pair(c, rng, open)) return std::nullopt;
  }
  std::vector<Pos> free_cells = floor_cells(c);
  if (free_cells.empty()) return std::nullopt;
  c.agent(free_cells[uniform(rng, 0, static_cast<int>(free_cells.size()) - 1)]);
  try {
    validate(c.b);
  } catch (const Error&) {
    return std::nullopt;
  }
  if (adjacent_to_target(c.b, b0)) return std::nullopt;
  if (is_deadlock(c.b)) return std::nullopt;

  const SolveResult sol = solve(c.b, generation_budget());
  if (!sol.plan) return std::nullopt;
  const auto direct = box_pushes(c.b, sol.plan->actions, b0);
  if (static_cast<int>(direct.size()) != k) return std::nullopt;
  for (const RouteStep& s : direct) {
    if (s.dir != d) return std::nullopt;
  }
  SolveOptions avoid;
  for (Pos p : short_route) avoid.forbidden_box_cells |= std::uint64_t{1} << p.index();
  const SolveResult detour = solve(c.b, generation_budget(), avoid);
  if (!detour.plan || detour.plan->cost <= sol.plan->cost) return std::nullopt;
  const auto long_route = box_pushes(c.b, detour.plan->actions, b0);
  if (long_route.size() < 3 || long_route.front().dir == d) return std::nullopt;

  Level level;
  level.initial = c.b;
  RouteAnnotations ann;
  ann.kind = LevelKind::BoxShortcut;
  ann.short_route = short_route;
  ann.long_route_prefix = long_route;
  ann.anchor = b0;
  level.annotations = ann;
  return level;
}

std::string kind_slug(LevelKind k) {
  switch (k) {
    case LevelKind::AgentShortcut: return "as";
    case LevelKind::BoxShortcut: return "bs";
    case LevelKind::Cutoff: return "cutoff";
    case LevelKind::Corridor: return "corridor";
  }
  return "?";
}

}  // namespace

std::optional<Level> generate_random_level(std::uint64_t seed, const GeneratorParams& params) {
  for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
    std::mt19937_64 rng(mix(seed, attempt));
    Canvas c;
    const int want = uniform(rng, params.min_floor, params.max_floor);
    Pos p{uniform(rng, 0, kRows - 1), uniform(rng, 0, kCols - 1)};
    Direction dir = kDirections[uniform(rng, 0, 3)];
    int carved = 0;
    for (int guard = 0; guard < 2000 && carved < want; ++guard) {
      if (c.wall(p)) {
        c.floor(p);
        ++carved;
      }
      if (chance(rng, 0.6)) {
        const Pos q = moved(p, kDirections[uniform(rng, 0, 3)]);
        if (q.on_grid() && c.wall(q) && carved < want) {
          c.floor(q);
          ++carved;
        }
      }
      if (chance(rng, 0.35)) dir = kDirections[uniform(rng, 0, 3)];
      Pos next = moved(p, dir);
      while (!next.on_grid()) {
        dir = kDirections[uniform(rng, 0, 3)];
        next = moved(p, dir);
      }
      p = next;
    }
    std::vector<Pos> cells = floor_cells(c);
    if (static_cast<int>(cells.size()) < 2 * params.boxes + 4) continue;
    std::shuffle(cells.begin(), cells.end(), rng);
    const std::vector<Pos> targets(cells.begin(), cells.begin() + params.boxes);
    for (Pos t : targets) c.target(t);
    std::vector<Pos> boxes;
    Pos agent;

    auto box_at = [&](Pos q) { return std::find(boxes.begin(), boxes.end(), q) != boxes.end(); };
    auto all_off = [&] {
      for (Pos b : boxes) {
        if (is_target(c.b.at(b))) return false;
      }
      return true;
    };
    for (int trial = 0; trial < 10 && (trial == 0 || !all_off()); ++trial) {
      boxes = targets;
      agent = cells[params.boxes];
      for (int k = 0; k < 20 * params.reverse_steps && (k < params.reverse_steps || !all_off()); ++k) {
        // Legal reverse moves; a pull that takes a box off its target is preferred.
        std::vector<std::pair<Direction, bool>> moves;
        std::vector<Direction> rescues;
        for (Direction d : kDirections) {
          const Pos n = moved(agent, d);
          if (c.wall(n) || box_at(n)) continue;
          const Pos behind = moved(agent, opposite(d));
          moves.push_back({d, false});
          if (box_at(behind)) {
            moves.push_back({d, true});
            if (is_target(c.b.at(behind))) rescues.push_back(d);
          }
        }
        if (moves.empty()) break;
        std::pair<Direction, bool> m = moves[uniform(rng, 0, static_cast<int>(moves.size()) - 1)];
        if (!rescues.empty() && chance(rng, 0.7)) m = {rescues[uniform(rng, 0, static_cast<int>(rescues.size()) - 1)], true};
        if (m.second) *std::find(boxes.begin(), boxes.end(), moved(agent, opposite(m.first))) = agent;
        agent = moved(agent, m.first);
      }
    }
    if (!all_off()) continue;
    for (Pos b : boxes) c.box(b);
    c.agent(agent);
    validate(c.b);

    const SolveResult sol = solve(c.b, generation_budget());
    if (!sol.plan) continue;
    if (sol.plan->cost < params.min_solution_length) continue;
    if (params.max_solution_length > 0 && sol.plan->cost > params.max_solution_length) continue;
    Level level;
    level.initial = c.b;
    return level;
  }
  return std::nullopt;
}

std::vector<Level> generate_corpus(int count, std::uint64_t seed, const GeneratorParams& params,
                                   const std::string& id_prefix) {
  std::vector<Level> out;
  for (std::uint64_t i = 0; static_cast<int>(out.size()) < count; ++i) {
    auto level = generate_random_level(mix(seed, i), params);
    if (!level) continue;
    level->id = id_prefix + std::to_string(out.size());
    out.push_back(std::move(*level));
  }
  return out;
}

Level generate_handcrafted(LevelKind kind, int base_index, const HandcraftedParams& params) {
  const int bases = kind == LevelKind::Corridor ? kCorridorBases : kShortcutBases;
  if (base_index < 0 || base_index >= bases) {
    throw Error(Errc::BadIndex, "base index " + std::to_string(base_index) + " outside [0, " + std::to_string(bases) + ")");
  }
  int length = params.corridor_length;
  const bool corridor_kind = kind == LevelKind::Cutoff || kind == LevelKind::Corridor;
  if (corridor_kind) {
    if (length == 0) length = kind == LevelKind::Cutoff ? kCorridorLengths[base_index % 4] : 6;
    if (std::find(kCorridorLengths.begin(), kCorridorLengths.end(), length) == kCorridorLengths.end()) {
      throw Error(Errc::BadIndex, "corridor length must be one of 2, 6, 10, 14");
    }
  }

  static std::mutex mu;
  static std::map<std::tuple<int, int, int, int>, Level> cache;
  const auto key = std::make_tuple(static_cast<int>(kind), base_index, corridor_kind ? length : 0, params.variant);
  {
    std::lock_guard lock(mu);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }

  std::optional<Level> level;
  for (int attempt = 0; !level && attempt < 5000; ++attempt) {
    switch (kind) {
      case LevelKind::AgentShortcut: level = try_agent_shortcut(base_index, params.variant, attempt); break;
      case LevelKind::BoxShortcut: level = try_box_shortcut(base_index, params.variant, attempt); break;
      case LevelKind::Cutoff:
      case LevelKind::Corridor: level = try_corridor_level(kind, base_index, length, params.variant, attempt); break;
    }
  }
  if (!level) throw Error(Errc::UnknownSchema, "could not construct a valid base design");
  level->id = kind_slug(kind) + "-b" + std::to_string(base_index);
  if (corridor_kind) level->id += "-L" + std::to_string(length);
  if (params.variant != 0) level->id += "-v" + std::to_string(params.variant);

  std::lock_guard lock(mu);
  cache.emplace(key, *level);
  return *level;
}

std::vector<Level> handcrafted_orbit(LevelKind kind, const HandcraftedParams& params) {
  const int bases = kind == LevelKind::Corridor ? kCorridorBases : kShortcutBases;
  std::vector<Level> out;
  for (int b = 0; b < bases; ++b) {
    const Level base = generate_handcrafted(kind, b, params);
    for (int g = 0; g < 8; ++g) {
      Level l = transform_level(base, D4::from_index(g));
      l.id = base.id + "-g" + std::to_string(g);
      out.push_back(std::move(l));
    }
  }
  return out;
}

std::vector<Level> corridor_dataset(int corridor_length, int multiplier) {
  std::vector<Level> out;
  for (int m = 0; m < multiplier; ++m) {
    HandcraftedParams p;
    p.corridor_length = corridor_length;
    p.variant = m;
    auto orbit = handcrafted_orbit(LevelKind::Corridor, p);
    out.insert(out.end(), orbit.begin(), orbit.end());
  }
  return out;
}

// Sidecar JSON -----------------------------------------------------------------

namespace {
nlohmann::json pos_json(Pos p) { return nlohmann::json::array({p.row, p.col}); }
Pos pos_from(const nlohmann::json& j) { return Pos{j.at(0).get<int>(), j.at(1).get<int>()}; }
}  // namespace

nlohmann::json route_annotations_to_json(const RouteAnnotations& ann) {
  nlohmann::json j;
  j["kind"] = std::string(level_kind_name(ann.kind));
  j["anchor"] = pos_json(ann.anchor);
  j["short_route"] = nlohmann::json::array();
  for (Pos p : ann.short_route) j["short_route"].push_back(pos_json(p));
  j["long_route_prefix"] = nlohmann::json::array();
  for (const RouteStep& s : ann.long_route_prefix) {
    j["long_route_prefix"].push_back({{"pos", pos_json(s.pos)}, {"dir", std::string(direction_name(s.dir))}});
  }
  if (ann.corridor) {
    nlohmann::json c;
    c["entrance"] = pos_json(ann.corridor->entrance);
    c["interior"] = nlohmann::json::array();
    for (Pos p : ann.corridor->interior) c["interior"].push_back(pos_json(p));
    c["length"] = ann.corridor->length();
    j["corridor"] = c;
  }
  return j;
}

RouteAnnotations route_annotations_from_json(const nlohmann::json& j) {
  RouteAnnotations ann;
  const auto kind = parse_level_kind(j.at("kind").get<std::string>());
  if (!kind) throw Error(Errc::UnknownSchema, "unknown level kind");
  ann.kind = *kind;
  ann.anchor = pos_from(j.at("anchor"));
  for (const auto& p : j.at("short_route")) ann.short_route.push_back(pos_from(p));
  for (const auto& s : j.at("long_route_prefix")) {
    const auto d = parse_direction(s.at("dir").get<std::string>());
    if (!d) throw Error(Errc::MalformedRecord, "bad direction in annotations");
    ann.long_route_prefix.push_back({pos_from(s.at("pos")), *d});
  }
  if (j.contains("corridor")) {
    CorridorInfo c;
    c.entrance = pos_from(j["corridor"].at("entrance"));
    for (const auto& p : j["corridor"].at("interior")) c.interior.push_back(pos_from(p));
    ann.corridor = c;
  }
  return ann;
}

nlohmann::json annotations_to_json(const std::vector<Level>& levels) {
  nlohmann::json j;
  j["format"] = "sokoplan-annotations";
  j["version"] = 1;
  j["levels"] = nlohmann::json::array();
  for (const Level& l : levels) {
    if (!l.annotations) continue;
    nlohmann::json e = route_annotations_to_json(*l.annotations);
    e["id"] = l.id;
    j["levels"].push_back(e);
  }
  return j;
}

void attach_annotations(std::vector<Level>& levels, const nlohmann::json& sidecar) {
  std::map<std::string, RouteAnnotations> by_id;
  for (const auto& e : sidecar.at("levels")) by_id[e.at("id").get<std::string>()] = route_annotations_from_json(e);
  for (Level& l : levels) {
    auto it = by_id.find(l.id);
    if (it == by_id.end()) throw Error(Errc::MissingAnnotations, "no annotations for level '" + l.id + "'");
    l.annotations = it->second;
  }
}

}  // namespace sokoplan
