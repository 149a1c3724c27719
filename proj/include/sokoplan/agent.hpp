#pragma once

#include <functional>

#include "sokoplan/drc.hpp"
#include "sokoplan/solver.hpp"

namespace sokoplan {

/// Chooses the hooks for the next step given the episode so far.
using HookSchedule = std::function<HookSet(const Trajectory& so_far, const Board& current)>;

struct RolloutOptions {
  /// Forced NOOP steps before the agent acts; they are ordinary environment
  /// steps and appear in the trajectory.
  int thinking_steps = 0;
  std::uint64_t episode_seed = 0;
  /// Stop after this many steps even if the episode is still running (0 = no cap).
  int max_steps = 0;
  bool record_traces = true;
  HookSchedule hooks;
};

struct Rollout {
  Trajectory trajectory;
  std::vector<TickTrace<float>> traces;  // one per step, aligned with trajectory.steps
  std::vector<Vec<float>> logits;
  std::vector<HookSet> hooks;  // hooks active at each step
  int thinking_steps = 0;
};

/// Greedy rollout: the action with the greatest logit, lowest index on ties.
Rollout greedy_rollout(const Params<float>& params, const Level& level, const RolloutOptions& options = {});

}  // namespace sokoplan
