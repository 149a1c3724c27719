#include <random>

#include "doctest.h"
#include "sokoplan/intervention.hpp"
#include "sokoplan/levels.hpp"

using namespace sokoplan;

namespace {

DRCConfig small_config() {
  DRCConfig c;
  c.D = 2;
  c.N = 2;
  c.G = 8;
  c.head_dim = 16;
  return c;
}

const Params<float>& small_params() {
  static const Params<float> p = init_params<float>(small_config(), 21);
  return p;
}

Probe<float> random_1x1(ConceptKind kind, int layer, int channels, std::uint64_t seed) {
  ProbeConfig c;
  c.target = ConceptSpec{kind};
  c.source = {SourceKind::CellState, layer};
  c.channels = channels;
  Probe<float> p = Probe<float>::zeros(c);
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> n;
  for (Eigen::Index i = 0; i < p.weight.size(); ++i) p.weight.data()[i] = n(rng);
  for (int k = 0; k < p.bias.size(); ++k) p.bias(k) = n(rng);
  return p;
}

// Replays a plan that avoids the short route: walls on the short-route
// squares for agent detours, forbidden box cells for box detours.
Trajectory detour(const Level& level) {
  const RouteAnnotations& ann = *level.annotations;
  Board blocked = level.initial;
  SolveOptions options;
  if (ann.kind == LevelKind::AgentShortcut) {
    for (Pos p : ann.short_route) blocked.set(p, Square::Wall);
  } else {
    for (Pos p : ann.short_route) options.forbidden_box_cells |= std::uint64_t{1} << p.index();
  }
  const auto plan = solve(blocked, {}, options).plan;
  REQUIRE(plan);
  return rollout_actions(level.initial, plan->actions, level.id);
}

}  // namespace

TEST_CASE("agent-shortcut spec") {
  const Level level = generate_handcrafted(LevelKind::AgentShortcut, 0);
  const RouteAnnotations& ann = *level.annotations;
  const Probe<float> agent = random_1x1(ConceptKind::AgentApproachDir, 1, 8, 1);

  const InterventionSpec p0 = build_agent_shortcut(level, agent, 1.0f, 0);
  CHECK(p0.directional.empty());
  CHECK(p0.short_route.size() == ann.short_route.size());

  const InterventionSpec spec = build_agent_shortcut(level, agent, 1.0f, 1);
  REQUIRE(spec.directional.size() == 1);
  CHECK(spec.directional[0].pos == ann.long_route_prefix[0].pos);
  CHECK(spec.directional[0].label == concept_class_name(class_of(ann.long_route_prefix[0].dir)));
  CHECK(spec.directional[0].vector == agent.class_vector(static_cast<int>(ann.long_route_prefix[0].dir)));
  for (const VectorEntry& e : spec.short_route) {
    CHECK(e.label == "NEVER");
    CHECK(e.vector == agent.class_vector(4));
    CHECK(e.alpha == 1.0f);
  }
  CHECK(spec.stop == StopCondition::AgentEntered);
  CHECK(spec.anchor == ann.anchor);
  CHECK(spec.layer == 1);

  const Level bs = generate_handcrafted(LevelKind::BoxShortcut, 0);
  CHECK_THROWS_AS(build_agent_shortcut(bs, agent), Error);
  CHECK_THROWS_AS(build_agent_shortcut(level, random_1x1(ConceptKind::BoxPushDir, 0, 8, 2)), Error);
  Level bare = level;
  bare.annotations.reset();
  CHECK_THROWS_AS(build_agent_shortcut(bare, agent), Error);
}

TEST_CASE("box-shortcut spec") {
  const Level level = generate_handcrafted(LevelKind::BoxShortcut, 3);
  const RouteAnnotations& ann = *level.annotations;
  const Probe<float> box = random_1x1(ConceptKind::BoxPushDir, 0, 8, 3);
  const InterventionSpec spec = build_box_shortcut(level, box, 2.0f, 1);
  CHECK(spec.stop == StopCondition::BoxPushedOff);
  CHECK(spec.anchor == ann.anchor);
  REQUIRE(spec.directional.size() == 1);
  CHECK(spec.directional[0].pos == ann.anchor);
  CHECK(spec.directional[0].alpha == 2.0f);
  CHECK(build_box_shortcut(level, box, 1.0f, 0).directional.empty());
  CHECK_THROWS_AS(build_box_shortcut(generate_handcrafted(LevelKind::Cutoff, 0), box), Error);
}

TEST_CASE("cutoff specs") {
  const Level level = generate_handcrafted(LevelKind::Cutoff, 2);
  const RouteAnnotations& ann = *level.annotations;
  const Probe<float> agent = random_1x1(ConceptKind::AgentApproachDir, 1, 8, 4);
  const Probe<float> box = random_1x1(ConceptKind::BoxPushDir, 1, 8, 5);
  const auto a = build_cutoff(CutoffKind::AgentOnly, level, &agent, nullptr, 4.0f);
  const auto b = build_cutoff(CutoffKind::BoxOnly, level, nullptr, &box, 4.0f);
  const auto ab = build_cutoff(CutoffKind::AgentAndBox, level, &agent, &box, 4.0f);
  REQUIRE(a.directional.size() == 1);
  REQUIRE(b.directional.size() == 1);
  REQUIRE(ab.directional.size() == 2);
  CHECK(a.directional[0].pos == ann.corridor->entrance);
  CHECK(b.directional[0].pos == ann.anchor);
  CHECK(ab.directional[0].pos == a.directional[0].pos);
  CHECK(ab.directional[0].vector == a.directional[0].vector);
  CHECK(ab.directional[1].pos == b.directional[0].pos);
  CHECK(ab.directional[1].vector == b.directional[0].vector);
  CHECK(ab.directional[1].alpha == 4.0f);
  CHECK(ab.short_route.empty());
  CHECK(ab.stop == StopCondition::BoxPushedOff);
  CHECK_THROWS_AS(build_cutoff(CutoffKind::AgentAndBox, level, &agent, nullptr, 1.0f), Error);
  CHECK_THROWS_AS(build_cutoff(CutoffKind::AgentOnly, generate_handcrafted(LevelKind::AgentShortcut, 1), &agent,
                               nullptr, 1.0f),
                  Error);

  // The stop condition fires on the step the entrance box first moves.
  const auto plan = solve(level.initial).plan;
  REQUIRE(plan);
  const Trajectory traj = rollout_actions(level.initial, plan->actions);
  int first_move = -1;
  for (int t = 0; t < traj.length() && first_move < 0; ++t) {
    const Board& next = t + 1 < traj.length() ? traj.steps[t + 1].board : traj.final_board;
    if (!has_box(next.at(ann.anchor))) first_move = t;
  }
  REQUIRE(first_move >= 0);
  for (int t = 0; t <= traj.length(); ++t) {
    Trajectory prefix;
    prefix.steps.assign(traj.steps.begin(), traj.steps.begin() + t);
    const Board& current = t < traj.length() ? traj.steps[t].board : traj.final_board;
    CHECK(stop_reached(ab, prefix, current) == (t > first_move));
    const HookSet hooks = make_schedule(ab, 3)(prefix, current);
    CHECK(hooks.size() == (t > first_move ? 0u : 2u));
  }
}

TEST_CASE("zero strength leaves rollouts bitwise unchanged on 20 handcrafted levels") {
  const Params<float>& params = small_params();
  const Probe<float> agent = random_1x1(ConceptKind::AgentApproachDir, 1, 8, 6);
  const Probe<float> box = random_1x1(ConceptKind::BoxPushDir, 1, 8, 7);
  std::vector<Level> levels;
  for (LevelKind kind : {LevelKind::AgentShortcut, LevelKind::BoxShortcut}) {
    const auto orbit = handcrafted_orbit(kind);
    for (int i = 0; i < 10; ++i) levels.push_back(orbit[i * 17]);
  }
  for (const Level& level : levels) {
    const InterventionSpec spec = level.annotations->kind == LevelKind::AgentShortcut
                                      ? build_agent_shortcut(level, agent, 0.0f, 1)
                                      : build_box_shortcut(level, box, 0.0f, 1);
    InterventionRun run;
    run.max_steps = 25;
    const EpisodeResult with = run_with_interventions(params, level, spec, run);
    RolloutOptions plain;
    plain.max_steps = 25;
    const Rollout without = greedy_rollout(params, level, plain);
    REQUIRE(with.rollout.trajectory.length() == without.trajectory.length());
    bool same = true;
    for (int t = 0; t < without.trajectory.length(); ++t) {
      same &= with.rollout.trajectory.steps[t].action == without.trajectory.steps[t].action;
      same &= with.rollout.logits[t] == without.logits[t];
      for (std::size_t k = 0; k < without.traces[t].size(); ++k) {
        same &= with.rollout.traces[t][k].g == without.traces[t][k].g;
        same &= with.rollout.traces[t][k].h == without.traces[t][k].h;
      }
    }
    CHECK(same);
    CHECK(with.activity.front().short_route == static_cast<int>(spec.short_route.size()));
  }
}

TEST_CASE("hooked cell and logit shift") {
  const Params<float>& params = small_params();
  const Level level = generate_handcrafted(LevelKind::AgentShortcut, 5);
  const Probe<float> agent = random_1x1(ConceptKind::AgentApproachDir, 1, 8, 8);
  const ObsTensor obs = encode_observation(level.initial);
  const DRCState<float> s0 = DRCState<float>::zeros(params.config);
  const Pos pos{3, 4};
  for (int k = 0; k < 5; ++k) {
    for (float alpha : {0.5f, 1.0f, 4.0f}) {
      InterventionSpec spec;
      spec.layer = 1;
      spec.final_tick_only = true;
      spec.directional.push_back({pos, agent.class_vector(k), alpha, ""});
      const auto hooked = forward_step(params, obs, s0, step_hooks(spec, true, params.config.N));
      const auto plain = forward_step(params, obs, s0);
      // Everything before the hook matches, so the last tick's layer-1 cell
      // differs exactly by alpha * w_k at pos.
      const auto& g1 = hooked.trace.back().g[1];
      const auto& g0 = plain.trace.back().g[1];
      const Eigen::VectorXf expected = g0.row(pos.index()).transpose() + alpha * agent.class_vector(k);
      CHECK((g1.row(pos.index()).transpose() - expected).cwiseAbs().maxCoeff() < 1e-6f);
      Mat<float> rest0 = g0, rest1 = g1;
      rest0.row(pos.index()).setZero();
      rest1.row(pos.index()).setZero();
      CHECK(rest0 == rest1);

      const Mat<double> l1 = probe_logits(agent, g1).cast<double>();
      const Mat<double> l0 = probe_logits(agent, g0).cast<double>();
      const double shift = l1(pos.index(), k) - l0(pos.index(), k);
      const double expected_shift = alpha * static_cast<double>(agent.class_vector(k).squaredNorm());
      CHECK(std::abs(shift - expected_shift) <= 1e-5 * std::max(1.0, expected_shift));
    }
  }
}

TEST_CASE("success predicates") {
  const Level as = generate_handcrafted(LevelKind::AgentShortcut, 2);
  const auto optimal = solve(as.initial).plan;
  REQUIRE(optimal);
  CHECK_FALSE(evaluate_success(rollout_actions(as.initial, optimal->actions), as));
  CHECK(evaluate_success(detour(as), as));
  CHECK_FALSE(evaluate_success(rollout_actions(as.initial, {Action::Noop}), as));

  const Level bs = generate_handcrafted(LevelKind::BoxShortcut, 2);
  const auto bs_optimal = solve(bs.initial).plan;
  REQUIRE(bs_optimal);
  CHECK_FALSE(evaluate_success(rollout_actions(bs.initial, bs_optimal->actions), bs));
  CHECK(evaluate_success(detour(bs), bs));

  const Level cut = generate_handcrafted(LevelKind::Cutoff, 0);
  CHECK(evaluate_success(rollout_actions(cut.initial, solve(cut.initial).plan->actions), cut));
  CHECK_FALSE(evaluate_success(rollout_actions(cut.initial, {Action::Noop}), cut));
  Level bare = cut;
  bare.annotations.reset();
  CHECK_THROWS_AS(evaluate_success(rollout_actions(cut.initial, {Action::Noop}), bare), Error);
}

TEST_CASE("directional hooks stop once the agent reaches the anchor") {
  const Level as = generate_handcrafted(LevelKind::AgentShortcut, 4);
  const Probe<float> agent = random_1x1(ConceptKind::AgentApproachDir, 0, 8, 9);
  const InterventionSpec spec = build_agent_shortcut(as, agent, 1.0f, 1);
  const Trajectory traj = detour(as);
  bool entered = false;
  for (int t = 0; t <= traj.length(); ++t) {
    Trajectory prefix;
    prefix.steps.assign(traj.steps.begin(), traj.steps.begin() + t);
    const Board& current = t < traj.length() ? traj.steps[t].board : traj.final_board;
    entered |= current.agent() == spec.anchor;
    const HookSet hooks = make_schedule(spec, 2)(prefix, current);
    CHECK(hooks.size() == spec.short_route.size() + (entered ? 0 : 1));
  }
  CHECK(entered);
}

TEST_CASE("sweep table") {
  const Params<float>& params = small_params();
  const std::vector<Level> one{generate_handcrafted(LevelKind::AgentShortcut, 0)};
  SweepProbes trained{1, "trained", {random_1x1(ConceptKind::AgentApproachDir, 1, 8, 10)}, {}};
  SweepGrid grid;
  grid.alphas = {0.0f, 1.0f};
  grid.max_steps = 20;
  const SweepResult single = sweep(params, one, {trained}, grid);
  REQUIRE(single.rows.size() == 2);
  for (const SweepRow& r : single.rows) CHECK((r.success == 0.0 || r.success == 1.0));
  CHECK(single.cells[0].stddev == 0.0);

  std::vector<Level> levels;
  for (int b = 0; b < 2; ++b) levels.push_back(generate_handcrafted(LevelKind::AgentShortcut, b));
  SweepProbes five{0, "trained", {}, {}};
  SweepProbes rand{0, "random", {}, {}};
  for (int s = 0; s < 5; ++s) {
    five.agent.push_back(random_1x1(ConceptKind::AgentApproachDir, 0, 8, 20 + s));
    rand.agent.push_back(random_probe(five.agent.back().config, 100 + s, five.agent.back()));
  }
  grid.alphas = {2.0f};
  const SweepResult table = sweep(params, levels, {five, rand}, grid);
  REQUIRE(table.cells.size() == 2);
  CHECK(table.rows.size() == 10);
  for (const SweepCell& c : table.cells) {
    CHECK(c.repetitions == 5);
    double mean = 0, var = 0;
    for (const SweepRow& r : table.rows) {
      if (r.probe_kind == c.probe_kind) mean += r.success / 5;
    }
    for (const SweepRow& r : table.rows) {
      if (r.probe_kind == c.probe_kind) var += (r.success - mean) * (r.success - mean) / 5;
    }
    CHECK(c.mean == doctest::Approx(mean));
    CHECK(c.stddev == doctest::Approx(std::sqrt(var)));
  }
  for (int s = 0; s < 5; ++s) {
    for (int k = 0; k < 5; ++k) {
      CHECK(rand.agent[s].class_vector(k).norm() == doctest::Approx(five.agent[s].class_vector(k).norm()));
    }
  }
  CHECK(table.rows_csv().rfind("schema,layer,probe_kind,seed,alpha,p,success\nAgentShortcut,0,trained,0,2,1,", 0) == 0);
}
