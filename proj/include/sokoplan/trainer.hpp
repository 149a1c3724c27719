#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sokoplan/agent.hpp"
#include "sokoplan/drc.hpp"
#include "sokoplan/solver.hpp"

namespace sokoplan {

struct TrainHyper {
  double gamma = 0.97;
  double entropy_coef = 1e-2;
  /// Penalties are coef * 0.5 * ||x||^2 on the logits (per step) and on the
  /// policy and value head weights (per update).
  double logit_l2 = 1e-3;
  double head_l2 = 1e-5;
  double value_coef = 0.5;
  int batch_size = 16;
  double lr_start = 4e-4;
  double lr_end = 0.0;
  int unroll = 20;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  /// Behavior cloning passes over the demos.
  int epochs = 10;
  /// Environment transitions between checkpoints (0 = none).
  std::int64_t checkpoint_interval = 0;
  std::string checkpoint_dir;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainRow {
  int update = 0;
  int epoch = 0;
  std::int64_t transitions = 0;
  double lr = 0;
  double loss = 0;
  double policy_loss = 0;
  double value_loss = 0;
  double entropy = 0;
  double accuracy = 0;  // greedy agreement with the demo or sampled action
};

struct TrainReport {
  std::vector<TrainRow> rows;
  std::vector<std::string> checkpoints;
  std::vector<std::int64_t> checkpoint_transitions;
  /// Mean loss per epoch (behavior cloning).
  std::vector<double> epoch_loss;

  std::string to_csv() const;
};

class Adam {
 public:
  Adam(const Params<float>& shape, double beta1, double beta2, double eps);
  void step(Params<float>& params, const Params<float>& grads, double lr);

 private:
  Params<float> m_, v_;
  double beta1_, beta2_, eps_;
  int t_ = 0;
};

/// Per-step loss terms for one step's outputs; fills the output gradient.
struct StepLoss {
  double cross_entropy = 0;
  double logit_penalty = 0;
  bool argmax_matches = false;
};
StepLoss cloning_step_loss(const Vec<float>& logits, int target, double logit_l2, StepGrad<float>& grad);

/// Cross-entropy cloning of solver demos with truncated BPTT. Recurrent
/// state is carried through each episode across unroll windows; one Adam
/// update per batch of `batch_size` episodes.
/// Called after every epoch with the epoch index and current parameters.
using EpochCallback = std::function<void(int epoch, const Params<float>& params)>;

std::pair<Params<float>, TrainReport> behavior_clone(Params<float> params, const std::vector<Trajectory>& demos,
                                                     const TrainHyper& hyper, const EpochCallback& on_epoch = {});

/// Discounted n-step returns: R_t = r_t + gamma * (1 - done_t) * R_{t+1},
/// seeded with `bootstrap` after the last step.
std::vector<double> nstep_returns(const std::vector<double>& rewards, const std::vector<bool>& dones, double gamma,
                                  double bootstrap);

/// Synchronous n-step advantage actor-critic over `hyper.batch_size`
/// environments drawing levels from `levels`, until `budget` transitions.
std::pair<Params<float>, TrainReport> a2c_train(Params<float> params, const std::vector<Level>& levels,
                                                const TrainHyper& hyper, std::int64_t budget);

/// Fraction of levels solved by greedy play after `thinking_steps` NOOPs.
/// Level i uses episode seed `seed + i`.
double evaluate_solve_rate(const Params<float>& params, const std::vector<Level>& levels, int thinking_steps,
                           std::uint64_t seed = 0);

}  // namespace sokoplan
