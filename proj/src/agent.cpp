#include "sokoplan/agent.hpp"

namespace sokoplan {

Rollout greedy_rollout(const Params<float>& params, const Level& level, const RolloutOptions& options) {
  Rollout out;
  out.thinking_steps = options.thinking_steps;
  out.trajectory.level_id = level.id;
  Board board = start_episode(level, options.episode_seed);
  DRCState<float> state = DRCState<float>::zeros(params.config);
  for (int t = 0; !board.terminal(); ++t) {
    if (options.max_steps > 0 && t >= options.max_steps) break;
    HookSet hooks = options.hooks ? options.hooks(out.trajectory, board) : HookSet{};
    StepOutput<float> o = forward_step(params, encode_observation(board), state, hooks);
    const Action a = t < options.thinking_steps ? Action::Noop : o.greedy_action();
    const StepResult r = step(board, a);
    out.trajectory.steps.push_back({board, a, r.reward, r.done, r.events});
    if (options.record_traces) out.traces.push_back(std::move(o.trace));
    out.logits.push_back(o.logits);
    out.hooks.push_back(std::move(hooks));
    state = std::move(o.state);
    board = r.board;
  }
  out.trajectory.final_board = board;
  return out;
}

}  // namespace sokoplan
