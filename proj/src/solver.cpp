#include "sokoplan/solver.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdlib>
#include <queue>
#include <unordered_map>

namespace sokoplan {

namespace {

using Mask = std::uint64_t;

constexpr Mask bit(int i) { return Mask{1} << i; }

struct Statics {
  Mask walls = 0;
  Mask targets = 0;
  Mask dead = 0;  // squares where an off-target box can never move to a target
  std::array<int, kCells> nearest_target{};
};

int neighbor(int cell, Direction d) {
  const Pos p = moved(Pos::from_index(cell), d);
  return p.on_grid() ? p.index() : -1;
}

bool wall_at(const Statics& s, int cell) { return cell < 0 || (s.walls & bit(cell)) != 0; }

// A square is dead if a box there sits in a corner, or lies against a wall
// line closed at both ends with no target on it.
bool dead_square(const Statics& s, int cell) {
  if (wall_at(s, cell) || (s.targets & bit(cell))) return false;
  const bool up = wall_at(s, neighbor(cell, Direction::Up));
  const bool down = wall_at(s, neighbor(cell, Direction::Down));
  const bool left = wall_at(s, neighbor(cell, Direction::Left));
  const bool right = wall_at(s, neighbor(cell, Direction::Right));
  if ((up || down) && (left || right)) return true;

  auto pinned_line = [&](Direction side, Direction along) {
    for (Direction way : {along, opposite(along)}) {
      int c = cell;
      while (true) {
        if (s.targets & bit(c)) return false;
        if (!wall_at(s, neighbor(c, side))) return false;
        const int n = neighbor(c, way);
        if (wall_at(s, n)) break;
        c = n;
      }
    }
    return true;
  };
  if (up && pinned_line(Direction::Up, Direction::Left)) return true;
  if (down && pinned_line(Direction::Down, Direction::Left)) return true;
  if (left && pinned_line(Direction::Left, Direction::Up)) return true;
  if (right && pinned_line(Direction::Right, Direction::Up)) return true;
  return false;
}

Statics make_statics(const Board& board) {
  Statics s;
  for (int i = 0; i < kCells; ++i) {
    if (is_wall(board.grid[i])) s.walls |= bit(i);
    if (is_target(board.grid[i])) s.targets |= bit(i);
  }
  for (int i = 0; i < kCells; ++i) {
    if (dead_square(s, i)) s.dead |= bit(i);
    int best = 1 << 20;
    const Pos p = Pos::from_index(i);
    for (int t = 0; t < kCells; ++t) {
      if (s.targets & bit(t)) {
        const Pos q = Pos::from_index(t);
        best = std::min(best, std::abs(p.row - q.row) + std::abs(p.col - q.col));
      }
    }
    s.nearest_target[i] = best;
  }
  return s;
}

Mask box_mask(const Board& board) {
  Mask m = 0;
  for (int i = 0; i < kCells; ++i) {
    if (has_box(board.grid[i])) m |= bit(i);
  }
  return m;
}

// BFS distances for the agent; -1 = unreachable. parent_dir holds the move
// used to enter each reached cell.
void agent_bfs(const Statics& s, Mask boxes, int from, std::array<int, kCells>& dist,
               std::array<std::int8_t, kCells>* parent_dir = nullptr) {
  dist.fill(-1);
  std::array<int, kCells> queue{};
  int head = 0, tail = 0;
  dist[from] = 0;
  queue[tail++] = from;
  while (head < tail) {
    const int c = queue[head++];
    for (Direction d : kDirections) {
      const int n = neighbor(c, d);
      if (n < 0 || (s.walls & bit(n)) || (boxes & bit(n)) || dist[n] >= 0) continue;
      dist[n] = dist[c] + 1;
      if (parent_dir) (*parent_dir)[n] = static_cast<std::int8_t>(d);
      queue[tail++] = n;
    }
  }
}

struct Key {
  Mask boxes;
  int agent;
  bool operator==(const Key&) const = default;
};

struct KeyHash {
  std::size_t operator()(const Key& k) const noexcept {
    std::uint64_t h = k.boxes * 0x9E3779B97F4A7C15ull;
    h ^= static_cast<std::uint64_t>(k.agent) + 0x7F4A7C159E3779B9ull + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

struct Node {
  Mask boxes;
  int agent;
  int parent;
  int push_box;  // cell the pushed box left
  Direction dir;
  int g;
};

struct QueueEntry {
  int f;
  std::int64_t seq;
  int node;
  bool operator>(const QueueEntry& o) const { return f != o.f ? f > o.f : seq > o.seq; }
};

int heuristic(const Statics& s, Mask boxes) {
  int h = 0;
  for (Mask m = boxes; m; m &= m - 1) h += s.nearest_target[__builtin_ctzll(m)];
  return h;
}

std::vector<Action> walk_path(const Statics& s, Mask boxes, int from, int to) {
  std::array<int, kCells> dist{};
  std::array<std::int8_t, kCells> parent{};
  agent_bfs(s, boxes, from, dist, &parent);
  std::vector<Action> path;
  int c = to;
  while (c != from) {
    const Direction d = static_cast<Direction>(parent[c]);
    path.push_back(to_action(d));
    c = neighbor(c, opposite(d));
  }
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace

bool is_deadlock(const Board& board) {
  const Statics s = make_statics(board);
  return (box_mask(board) & ~s.targets & s.dead) != 0;
}

SolveResult solve(const Board& board, const SearchBudget& budget, const SolveOptions& options) {
  validate(board);
  const auto t0 = std::chrono::steady_clock::now();
  const Statics s = make_statics(board);
  SolveResult result;

  const Mask start_boxes = box_mask(board);
  const int start_agent = board.agent().index();
  if (options.deadlock_pruning && (start_boxes & ~s.targets & s.dead)) {
    result.status = SolveStatus::ProvenUnsolvable;
    return result;
  }

  std::vector<Node> nodes;
  std::unordered_map<Key, int, KeyHash> best_g;
  std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>> open;
  std::int64_t seq = 0;

  nodes.push_back({start_boxes, start_agent, -1, -1, Direction::Up, 0});
  best_g[{start_boxes, start_agent}] = 0;
  open.push({heuristic(s, start_boxes), seq++, 0});

  std::array<int, kCells> dist{};
  while (!open.empty()) {
    const QueueEntry top = open.top();
    open.pop();
    const Node cur = nodes[top.node];
    if (best_g[{cur.boxes, cur.agent}] < cur.g) continue;

    if ((cur.boxes & ~s.targets) == 0) {
      std::vector<int> chain;
      for (int n = top.node; n > 0; n = nodes[n].parent) chain.push_back(n);
      std::reverse(chain.begin(), chain.end());
      Plan plan;
      Mask boxes = start_boxes;
      int agent = start_agent;
      for (int n : chain) {
        const Node& nd = nodes[n];
        const int stand = neighbor(nd.push_box, opposite(nd.dir));
        for (Action a : walk_path(s, boxes, agent, stand)) plan.actions.push_back(a);
        plan.actions.push_back(to_action(nd.dir));
        boxes = nd.boxes;
        agent = nd.push_box;
      }
      plan.cost = static_cast<int>(plan.actions.size());
      result.plan = std::move(plan);
      result.status = SolveStatus::Solved;
      return result;
    }

    ++result.nodes_expanded;
    if (result.nodes_expanded > budget.max_nodes) {
      result.status = SolveStatus::BudgetExhausted;
      return result;
    }
    if ((result.nodes_expanded & 1023) == 0) {
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (secs > budget.max_seconds) {
        result.status = SolveStatus::BudgetExhausted;
        return result;
      }
    }

    agent_bfs(s, cur.boxes, cur.agent, dist);
    for (Mask m = cur.boxes; m; m &= m - 1) {
      const int box = __builtin_ctzll(m);
      for (Direction d : kDirections) {
        const int stand = neighbor(box, opposite(d));
        const int dest = neighbor(box, d);
        if (stand < 0 || dest < 0 || dist[stand] < 0) continue;
        if ((s.walls & bit(dest)) || (cur.boxes & bit(dest))) continue;
        if (options.forbidden_box_cells & bit(dest)) continue;
        if (options.deadlock_pruning && (s.dead & bit(dest))) continue;
        const Mask nb = (cur.boxes & ~bit(box)) | bit(dest);
        const int g = cur.g + dist[stand] + 1;
        const Key key{nb, box};
        auto it = best_g.find(key);
        if (it != best_g.end() && it->second <= g) continue;
        best_g[key] = g;
        nodes.push_back({nb, box, top.node, box, d, g});
        open.push({g + heuristic(s, nb), seq++, static_cast<int>(nodes.size()) - 1});
      }
    }
  }
  result.status = SolveStatus::ProvenUnsolvable;
  return result;
}

std::string plan_to_string(const Plan& plan) {
  std::string out;
  for (Action a : plan.actions) out += action_letter(a);
  return out;
}

Trajectory rollout_actions(const Board& start, const std::vector<Action>& actions, const std::string& level_id) {
  Trajectory traj;
  traj.level_id = level_id;
  Board b = start;
  for (Action a : actions) {
    StepResult r = step(b, a);
    traj.steps.push_back({b, a, r.reward, r.done, r.events});
    b = r.board;
    if (r.done) break;
  }
  traj.final_board = b;
  return traj;
}

std::optional<Trajectory> demo_trajectory(const Level& level, const SearchBudget& budget, std::uint64_t episode_seed) {
  const SolveResult res = solve(level, budget);
  if (!res.plan) return std::nullopt;
  const Board start = start_episode(level, episode_seed);
  return rollout_actions(start, res.plan->actions, level.id);
}

}  // namespace sokoplan
