#include "sokoplan/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <sstream>

namespace sokoplan {

void TrainHyper::validate() const {
  if (gamma < 0 || entropy_coef < 0 || logit_l2 < 0 || head_l2 < 0 || value_coef < 0 || lr_start < 0 || lr_end < 0) {
    throw Error(Errc::InvalidArgument, "training coefficients must be non-negative");
  }
  if (batch_size < 1 || unroll < 1 || epochs < 0 || checkpoint_interval < 0) {
    throw Error(Errc::InvalidArgument, "batch size and unroll must be positive");
  }
}

std::string TrainReport::to_csv() const {
  std::ostringstream out;
  out << "update,epoch,transitions,lr,loss,policy_loss,value_loss,entropy,accuracy\n";
  out.precision(8);
  for (const TrainRow& r : rows) {
    out << r.update << ',' << r.epoch << ',' << r.transitions << ',' << r.lr << ',' << r.loss << ',' << r.policy_loss
        << ',' << r.value_loss << ',' << r.entropy << ',' << r.accuracy << '\n';
  }
  return out.str();
}

Adam::Adam(const Params<float>& shape, double beta1, double beta2, double eps)
    : m_(Params<float>::zeros(shape.config)), v_(Params<float>::zeros(shape.config)), beta1_(beta1), beta2_(beta2),
      eps_(eps) {}

void Adam::step(Params<float>& params, const Params<float>& grads, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, t_), c2 = 1.0 - std::pow(beta2_, t_);
  const auto p = params.tensor_ptrs();
  const auto m = m_.tensor_ptrs();
  const auto v = v_.tensor_ptrs();
  std::vector<const Mat<float>*> g;
  grads.for_each([&](const std::string&, const Mat<float>& x) { g.push_back(&x); });
  const auto b1 = static_cast<float>(beta1_), b2 = static_cast<float>(beta2_);
  const auto step_size = static_cast<float>(lr / c1), eps = static_cast<float>(eps_);
  const auto inv_c2 = static_cast<float>(1.0 / c2);
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i]->array() = b1 * m[i]->array() + (1 - b1) * g[i]->array();
    v[i]->array() = b2 * v[i]->array() + (1 - b2) * g[i]->array().square();
    p[i]->array() -= step_size * m[i]->array() / ((v[i]->array() * inv_c2).sqrt() + eps);
  }
}

namespace {

Vec<double> softmax(const Vec<float>& logits) {
  const Vec<double> l = logits.cast<double>();
  const Vec<double> e = (l.array() - l.maxCoeff()).exp();
  return e / e.sum();
}

void scale(Params<float>& grads, float s) {
  grads.for_each([&](const std::string&, Mat<float>& m) { m *= s; });
}

void add_head_penalty(Params<float>& grads, const Params<float>& params, double coef) {
  const auto c = static_cast<float>(coef);
  grads.policy_w += c * params.policy_w;
  grads.value_w += c * params.value_w;
}

double head_penalty(const Params<float>& params, double coef) {
  return coef * 0.5 * (params.policy_w.cast<double>().squaredNorm() + params.value_w.cast<double>().squaredNorm());
}

double linear_lr(const TrainHyper& h, double progress) {
  return h.lr_start + (h.lr_end - h.lr_start) * std::clamp(progress, 0.0, 1.0);
}

}  // namespace

StepLoss cloning_step_loss(const Vec<float>& logits, int target, double logit_l2, StepGrad<float>& grad) {
  const Vec<double> pi = softmax(logits);
  StepLoss out;
  out.cross_entropy = -std::log(std::max(pi(target), 1e-300));
  out.logit_penalty = logit_l2 * 0.5 * logits.cast<double>().squaredNorm();
  Eigen::Index best;
  logits.maxCoeff(&best);
  out.argmax_matches = best == target;
  Vec<double> d = pi;
  d(target) -= 1.0;
  d += logit_l2 * logits.cast<double>();
  grad.dlogits = d.cast<float>();
  grad.dvalue = 0;
  return out;
}

std::pair<Params<float>, TrainReport> behavior_clone(Params<float> params, const std::vector<Trajectory>& demos,
                                                     const TrainHyper& hyper, const EpochCallback& on_epoch) {
  hyper.validate();
  if (demos.empty()) throw Error(Errc::EmptyDataset, "no demonstrations");
  TrainReport report;
  if (hyper.epochs == 0) return {std::move(params), report};

  const int n = static_cast<int>(demos.size());
  const int batches_per_epoch = (n + hyper.batch_size - 1) / hyper.batch_size;
  const int total_updates = hyper.epochs * batches_per_epoch;
  Adam adam(params, hyper.adam_beta1, hyper.adam_beta2, hyper.adam_eps);
  std::mt19937_64 rng(hyper.seed);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::int64_t transitions = 0;
  int update = 0;

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0;
    std::int64_t epoch_steps = 0;
    for (int b = 0; b < batches_per_epoch; ++b) {
      Params<float> grads = Params<float>::zeros(params.config);
      double ce = 0, penalty = 0;
      int correct = 0, steps = 0;
      for (int k = b * hyper.batch_size; k < std::min(n, (b + 1) * hyper.batch_size); ++k) {
        const Trajectory& traj = demos[order[k]];
        DRCState<float> state = DRCState<float>::zeros(params.config);
        for (int w = 0; w < traj.length(); w += hyper.unroll) {
          const int end = std::min(traj.length(), w + hyper.unroll);
          std::vector<StepTape<float>> tapes(end - w);
          std::vector<StepGrad<float>> sg(end - w);
          for (int t = w; t < end; ++t) {
            StepOutput<float> out = forward_step(params, traj.observation(t), state, {}, &tapes[t - w]);
            const StepLoss l =
                cloning_step_loss(out.logits, static_cast<int>(traj.steps[t].action), hyper.logit_l2, sg[t - w]);
            ce += l.cross_entropy;
            penalty += l.logit_penalty;
            correct += l.argmax_matches;
            state = std::move(out.state);
          }
          backward(params, tapes, sg, grads);
          steps += end - w;
        }
      }
      if (steps == 0) continue;
      scale(grads, 1.0f / static_cast<float>(steps));
      add_head_penalty(grads, params, hyper.head_l2);
      const double loss = (ce + penalty) / steps + head_penalty(params, hyper.head_l2);
      if (!std::isfinite(loss)) throw Error(Errc::NonFiniteLoss, "behavior cloning loss is not finite");
      const double lr = linear_lr(hyper, static_cast<double>(update) / total_updates);
      adam.step(params, grads, lr);
      transitions += steps;
      epoch_loss += ce + penalty;
      epoch_steps += steps;

      TrainRow row;
      row.update = update++;
      row.epoch = epoch;
      row.transitions = transitions;
      row.lr = lr;
      row.loss = loss;
      row.policy_loss = ce / steps;
      row.accuracy = static_cast<double>(correct) / steps;
      report.rows.push_back(row);
    }
    report.epoch_loss.push_back(epoch_loss / std::max<std::int64_t>(epoch_steps, 1));
    if (on_epoch) on_epoch(epoch, params);
  }
  return {std::move(params), report};
}

std::vector<double> nstep_returns(const std::vector<double>& rewards, const std::vector<bool>& dones, double gamma,
                                  double bootstrap) {
  if (rewards.size() != dones.size()) throw Error(Errc::LengthMismatch, "rewards and dones differ in length");
  std::vector<double> out(rewards.size());
  double next = bootstrap;
  for (int t = static_cast<int>(rewards.size()) - 1; t >= 0; --t) {
    next = rewards[t] + (dones[t] ? 0.0 : gamma * next);
    out[t] = next;
  }
  return out;
}

namespace {

struct Env {
  Board board;
  DRCState<float> state;
};

struct Segment {
  std::vector<StepTape<float>> tapes;
  std::vector<Vec<float>> logits;
  std::vector<float> values;
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<bool> dones;
};

}  // namespace

std::pair<Params<float>, TrainReport> a2c_train(Params<float> params, const std::vector<Level>& levels,
                                                const TrainHyper& hyper, std::int64_t budget) {
  hyper.validate();
  if (levels.empty()) throw Error(Errc::EmptyDataset, "no training levels");
  TrainReport report;
  std::mt19937_64 rng(hyper.seed);
  std::uniform_int_distribution<std::size_t> pick(0, levels.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto reset = [&](Env& e) {
    e.board = start_episode(levels[pick(rng)], rng());
    e.state = DRCState<float>::zeros(params.config);
  };
  std::vector<Env> envs(hyper.batch_size);
  for (Env& e : envs) reset(e);

  Adam adam(params, hyper.adam_beta1, hyper.adam_beta2, hyper.adam_eps);
  std::int64_t transitions = 0;
  std::int64_t next_mark = hyper.checkpoint_interval;
  int update = 0;
  while (transitions < budget) {
    std::vector<Segment> segments;
    std::vector<std::size_t> open(envs.size());
    for (std::size_t i = 0; i < envs.size(); ++i) {
      open[i] = segments.size();
      segments.emplace_back();
    }
    for (int t = 0; t < hyper.unroll; ++t) {
      for (std::size_t i = 0; i < envs.size(); ++i) {
        Env& e = envs[i];
        Segment& seg = segments[open[i]];
        StepTape<float> tape;
        StepOutput<float> out = forward_step(params, encode_observation(e.board), e.state, {}, &tape);
        const Vec<double> pi = softmax(out.logits);
        double u = unit(rng);
        int a = kNumActions - 1;
        for (int k = 0; k < kNumActions; ++k) {
          if ((u -= pi(k)) < 0) {
            a = k;
            break;
          }
        }
        const StepResult r = step(e.board, static_cast<Action>(a));
        seg.tapes.push_back(std::move(tape));
        seg.logits.push_back(out.logits);
        seg.values.push_back(out.value);
        seg.actions.push_back(a);
        seg.rewards.push_back(r.reward);
        seg.dones.push_back(r.done);
        ++transitions;
        if (r.done) {
          reset(e);
          open[i] = segments.size();
          segments.emplace_back();
        } else {
          e.board = r.board;
          e.state = std::move(out.state);
        }
      }
    }

    Params<float> grads = Params<float>::zeros(params.config);
    double pl = 0, vl = 0, ent = 0, penalty = 0;
    int steps = 0, agree = 0;
    for (std::size_t s = 0; s < segments.size(); ++s) {
      Segment& seg = segments[s];
      if (seg.tapes.empty()) continue;
      double bootstrap = 0;
      if (!seg.dones.back()) {
        const std::size_t env = std::find(open.begin(), open.end(), s) - open.begin();
        bootstrap = forward_step(params, encode_observation(envs[env].board), envs[env].state).value;
      }
      const std::vector<double> returns = nstep_returns(seg.rewards, seg.dones, hyper.gamma, bootstrap);
      std::vector<StepGrad<float>> sg(seg.tapes.size());
      for (std::size_t t = 0; t < seg.tapes.size(); ++t) {
        const Vec<double> pi = softmax(seg.logits[t]);
        const Vec<double> logpi = pi.array().max(1e-300).log();
        const double h = -(pi.array() * logpi.array()).sum();
        const double adv = returns[t] - seg.values[t];
        const int a = seg.actions[t];
        Vec<double> d = adv * pi;
        d(a) -= adv;
        d += hyper.entropy_coef * (pi.array() * (logpi.array() + h)).matrix();
        d += hyper.logit_l2 * seg.logits[t].cast<double>();
        sg[t].dlogits = d.cast<float>();
        sg[t].dvalue = static_cast<float>(hyper.value_coef * (seg.values[t] - returns[t]));
        pl += -adv * logpi(a);
        vl += 0.5 * (seg.values[t] - returns[t]) * (seg.values[t] - returns[t]);
        ent += h;
        penalty += hyper.logit_l2 * 0.5 * seg.logits[t].cast<double>().squaredNorm();
        Eigen::Index best;
        seg.logits[t].maxCoeff(&best);
        agree += best == a;
        ++steps;
      }
      backward(params, seg.tapes, sg, grads);
    }
    scale(grads, 1.0f / static_cast<float>(steps));
    add_head_penalty(grads, params, hyper.head_l2);
    const double loss =
        (pl + hyper.value_coef * vl - hyper.entropy_coef * ent + penalty) / steps + head_penalty(params, hyper.head_l2);
    if (!std::isfinite(loss)) throw Error(Errc::NonFiniteLoss, "actor-critic loss is not finite");
    const double lr = linear_lr(hyper, static_cast<double>(transitions - steps) / static_cast<double>(budget));
    adam.step(params, grads, lr);

    TrainRow row;
    row.update = update++;
    row.transitions = transitions;
    row.lr = lr;
    row.loss = loss;
    row.policy_loss = pl / steps;
    row.value_loss = vl / steps;
    row.entropy = ent / steps;
    row.accuracy = static_cast<double>(agree) / steps;
    report.rows.push_back(row);

    while (hyper.checkpoint_interval > 0 && next_mark <= std::min(transitions, budget)) {
      const std::string bytes = save_checkpoint(params, {{"transitions", next_mark}});
      std::string path;
      if (!hyper.checkpoint_dir.empty()) {
        std::filesystem::create_directories(hyper.checkpoint_dir);
        path = (std::filesystem::path(hyper.checkpoint_dir) / ("ckpt_" + std::to_string(next_mark) + ".skpc")).string();
        write_file(path, bytes);
      }
      report.checkpoints.push_back(path);
      report.checkpoint_transitions.push_back(next_mark);
      next_mark += hyper.checkpoint_interval;
    }
  }
  return {std::move(params), report};
}

double evaluate_solve_rate(const Params<float>& params, const std::vector<Level>& levels, int thinking_steps,
                           std::uint64_t seed) {
  if (levels.empty()) throw Error(Errc::EmptyDataset, "no evaluation levels");
  int solved = 0;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    RolloutOptions opt;
    opt.thinking_steps = thinking_steps;
    opt.episode_seed = seed + i;
    opt.record_traces = false;
    solved += greedy_rollout(params, levels[i], opt).trajectory.solved();
  }
  return static_cast<double>(solved) / static_cast<double>(levels.size());
}

}  // namespace sokoplan
