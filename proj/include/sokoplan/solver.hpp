#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sokoplan/sokoban.hpp"

namespace sokoplan {

struct Plan {
  std::vector<Action> actions;
  int cost = 0;
};

struct SearchBudget {
  std::int64_t max_nodes = 2'000'000;
  double max_seconds = 30.0;
};

enum class SolveStatus { Solved, ProvenUnsolvable, BudgetExhausted };

struct SolveOptions {
  bool deadlock_pruning = true;
  /// Cells (bit = Pos::index()) that a push may not move a box onto.
  std::uint64_t forbidden_box_cells = 0;
};

struct SolveResult {
  std::optional<Plan> plan;
  SolveStatus status = SolveStatus::ProvenUnsolvable;
  std::int64_t nodes_expanded = 0;
};

/// Step-optimal A* over push states. Edge cost = agent walk distance + 1; the
/// heuristic is the sum over boxes of the Manhattan distance to the nearest
/// target, which is consistent for unit-cost pushes.
SolveResult solve(const Board& board, const SearchBudget& budget = {}, const SolveOptions& options = {});
inline SolveResult solve(const Level& level, const SearchBudget& budget = {}, const SolveOptions& options = {}) {
  return solve(level.initial, budget, options);
}

/// True only for provably dead boards: a box off-target in a corner, or
/// pinned against a wall line that holds no target.
bool is_deadlock(const Board& board);

std::string plan_to_string(const Plan& plan);  // "UDLR..."

struct Transition {
  Board board;  // state observed before acting
  Action action = Action::Noop;
  double reward = 0.0;
  bool done = false;
  StepEvents events;
};

/// A rolled-out episode. steps[t].board is the state in which steps[t].action
/// was taken; final_board is the state after the last action.
struct Trajectory {
  std::string level_id;
  std::vector<Transition> steps;
  Board final_board;

  int length() const { return static_cast<int>(steps.size()); }
  bool solved() const { return final_board.solved(); }
  ObsTensor observation(int t) const { return encode_observation(steps.at(t).board); }
};

/// Replays `actions` from `start` through the environment.
Trajectory rollout_actions(const Board& start, const std::vector<Action>& actions, const std::string& level_id = {});

std::optional<Trajectory> demo_trajectory(const Level& level, const SearchBudget& budget = {},
                                          std::uint64_t episode_seed = 0);

}  // namespace sokoplan
