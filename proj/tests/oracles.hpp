#pragma once
// Independent reference implementations used only by tests. They work on the
// plain character grid of the Boxoban format and share no code with the
// library's transition function or solver.

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "sokoplan/sokoban.hpp"

namespace oracle {

using Grid = std::array<std::string, 8>;

inline Grid grid_of(const sokoplan::Board& b) {
  Grid g;
  const std::string text = sokoplan::board_to_text(b);
  for (int r = 0; r < 8; ++r) g[r] = text.substr(r * 9, 8);
  return g;
}

inline std::string text_of(const Grid& g) {
  std::string s;
  for (const auto& row : g) s += row + "\n";
  return s;
}

inline bool box_c(char c) { return c == '$' || c == '*'; }
inline bool agent_c(char c) { return c == '@' || c == '+'; }
inline bool target_c(char c) { return c == '.' || c == '*' || c == '+'; }

struct RefOutcome {
  Grid next;
  double reward = 0;
  bool done = false;
  bool blocked = false;
  bool pushed_onto = false;
  bool pushed_off_target = false;
};

// Rules as written: move onto empty squares, push a single box into an empty
// square, otherwise nothing moves. -0.01 per step, +1 onto a target, -1 off a
// target, +10 when the push completes the puzzle. The episode ends on
// completion or once the step counter reaches the limit.
inline RefOutcome ref_step(const Grid& g, char action, int steps_before, int limit) {
  RefOutcome out;
  out.next = g;
  out.reward = -0.01;
  int ar = -1, ac = -1;
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c)
      if (agent_c(g[r][c])) ar = r, ac = c;
  int dr = 0, dc = 0;
  if (action == 'U') dr = -1;
  if (action == 'D') dr = 1;
  if (action == 'L') dc = -1;
  if (action == 'R') dc = 1;
  auto cell = [&](int r, int c) -> char { return (r < 0 || r > 7 || c < 0 || c > 7) ? '#' : g[r][c]; };
  bool pushed = false;
  if (dr != 0 || dc != 0) {
    const int tr = ar + dr, tc = ac + dc;
    const char t = cell(tr, tc);
    bool move = false;
    if (t == '#') {
      out.blocked = true;
    } else if (box_c(t)) {
      const char b = cell(tr + dr, tc + dc);
      if (b == ' ' || b == '.') {
        out.next[tr + dr][tc + dc] = (b == '.') ? '*' : '$';
        out.next[tr][tc] = (t == '*') ? '.' : ' ';
        if (b == '.') out.pushed_onto = true, out.reward += 1.0;
        if (t == '*') out.pushed_off_target = true, out.reward -= 1.0;
        pushed = true;
        move = true;
      } else {
        out.blocked = true;
      }
    } else {
      move = true;
    }
    if (move) {
      out.next[ar][ac] = target_c(g[ar][ac]) ? '.' : ' ';
      const char dest = out.next[tr][tc];
      out.next[tr][tc] = target_c(dest) ? '+' : '@';
    }
  }
  bool all_on = true;
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c)
      if (out.next[r][c] == '$') all_on = false;
  if (all_on && pushed) out.reward += 10.0;
  out.done = all_on || steps_before + 1 >= limit;
  return out;
}

/// Boards of the exhaustive suite: a 4x4 open interior at rows/cols 2..5 with
/// up to two boxes and as many targets, agent anywhere free; plus single
/// inner-wall variants with one box.
inline void for_each_suite_grid(const std::function<void(const Grid&)>& fn) {
  std::vector<std::pair<int, int>> cells;
  for (int r = 2; r < 6; ++r)
    for (int c = 2; c < 6; ++c) cells.push_back({r, c});
  const int n = static_cast<int>(cells.size());
  Grid base;
  base.fill(std::string(8, '#'));

  auto emit = [&](Grid g, const std::vector<int>& boxes, const std::vector<int>& targets, int wall) {
    for (int i = 0; i < n; ++i)
      if (i != wall) g[cells[i].first][cells[i].second] = ' ';
    for (int t : targets) g[cells[t].first][cells[t].second] = '.';
    for (int b : boxes) {
      char& ch = g[cells[b].first][cells[b].second];
      ch = (ch == '.') ? '*' : '$';
    }
    for (int a = 0; a < n; ++a) {
      if (a == wall) continue;
      char& ch = g[cells[a].first][cells[a].second];
      if (box_c(ch)) continue;
      const char saved = ch;
      ch = (ch == '.') ? '+' : '@';
      fn(g);
      ch = saved;
    }
  };

  emit(base, {}, {}, -1);
  for (int b = 0; b < n; ++b)
    for (int t = 0; t < n; ++t) emit(base, {b}, {t}, -1);
  for (int b0 = 0; b0 < n; ++b0)
    for (int b1 = b0 + 1; b1 < n; ++b1)
      for (int t0 = 0; t0 < n; ++t0)
        for (int t1 = t0 + 1; t1 < n; ++t1) emit(base, {b0, b1}, {t0, t1}, -1);
  for (int w = 0; w < n; ++w)
    for (int b = 0; b < n; ++b)
      for (int t = 0; t < n; ++t)
        if (b != w && t != w) emit(base, {b}, {t}, w);
}

/// Exhaustive breadth-first search over primitive moves. Returns the optimal
/// number of steps to put every box on a target, or nullopt if none exists.
inline std::optional<int> bfs_optimal_cost(const Grid& start, std::size_t max_states = 5'000'000) {
  auto solved = [](const Grid& g) {
    for (const auto& row : g)
      if (row.find('$') != std::string::npos) return false;
    return true;
  };
  if (solved(start)) return 0;
  std::unordered_map<std::string, int> seen;
  std::deque<Grid> q;
  seen[text_of(start)] = 0;
  q.push_back(start);
  while (!q.empty()) {
    Grid g = q.front();
    q.pop_front();
    const int d = seen[text_of(g)];
    for (char a : {'U', 'D', 'L', 'R'}) {
      RefOutcome o = ref_step(g, a, 0, 1 << 30);
      const std::string key = text_of(o.next);
      if (seen.count(key)) continue;
      if (solved(o.next)) return d + 1;
      seen[key] = d + 1;
      if (seen.size() > max_states) return std::nullopt;
      q.push_back(o.next);
    }
  }
  return std::nullopt;
}

/// Solvability of every state sharing a wall/target layout, computed by
/// reverse reachability from solved states over the explicit move graph.
class LayoutSolvability {
 public:
  bool solvable(const Grid& g) {
    const std::string layout = layout_key(g);
    auto it = cache_.find(layout);
    if (it == cache_.end()) it = cache_.emplace(layout, build(g)).first;
    return it->second.count(text_of(g)) > 0;
  }

 private:
  static std::string layout_key(const Grid& g) {
    std::string k;
    int boxes = 0;
    for (const auto& row : g)
      for (char c : row) {
        k += c == '#' ? '#' : (target_c(c) ? '.' : ' ');
        boxes += box_c(c);
      }
    return k + std::to_string(boxes);
  }

  static std::map<std::string, int> build(const Grid& g) {
    // Enumerate every placement of the same number of boxes plus the agent.
    std::vector<std::pair<int, int>> free;
    int boxes = 0;
    Grid empty = g;
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 8; ++c) {
        const char ch = g[r][c];
        boxes += box_c(ch);
        if (ch != '#') {
          free.push_back({r, c});
          empty[r][c] = target_c(ch) ? '.' : ' ';
        }
      }
    std::vector<Grid> states;
    std::vector<int> pick;
    std::function<void(int)> rec = [&](int start) {
      if (static_cast<int>(pick.size()) == boxes) {
        Grid s = empty;
        for (int i : pick) {
          char& ch = s[free[i].first][free[i].second];
          ch = ch == '.' ? '*' : '$';
        }
        for (const auto& [r, c] : free) {
          char& ch = s[r][c];
          if (box_c(ch)) continue;
          const char saved = ch;
          ch = ch == '.' ? '+' : '@';
          states.push_back(s);
          ch = saved;
        }
        return;
      }
      for (int i = start; i < static_cast<int>(free.size()); ++i) {
        pick.push_back(i);
        rec(i + 1);
        pick.pop_back();
      }
    };
    rec(0);
    std::unordered_map<std::string, int> index;
    for (int i = 0; i < static_cast<int>(states.size()); ++i) index[text_of(states[i])] = i;
    std::vector<std::vector<int>> reverse(states.size());
    std::deque<int> q;
    std::vector<char> good(states.size(), 0);
    for (int i = 0; i < static_cast<int>(states.size()); ++i) {
      bool solved = true;
      for (const auto& row : states[i])
        if (row.find('$') != std::string::npos) solved = false;
      if (solved) {
        good[i] = 1;
        q.push_back(i);
      }
      for (char a : {'U', 'D', 'L', 'R'}) {
        const RefOutcome o = ref_step(states[i], a, 0, 1 << 30);
        reverse[index.at(text_of(o.next))].push_back(i);
      }
    }
    while (!q.empty()) {
      const int s = q.front();
      q.pop_front();
      for (int p : reverse[s])
        if (!good[p]) good[p] = 1, q.push_back(p);
    }
    std::map<std::string, int> out;
    for (int i = 0; i < static_cast<int>(states.size()); ++i)
      if (good[i]) out[text_of(states[i])] = 1;
    return out;
  }

  std::map<std::string, std::map<std::string, int>> cache_;
};

}  // namespace oracle
