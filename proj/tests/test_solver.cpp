#include "doctest.h"
#include "oracles.hpp"
#include "sokoplan/solver.hpp"

using namespace sokoplan;

namespace {

Board board(const char* rows) { return board_from_text(rows); }

}  // namespace

TEST_CASE("single push next to a target") {
  const Board b = board(
      "########\n"
      "#      #\n"
      "# .$ @ #\n"
      "#      #\n"
      "########\n"
      "########\n"
      "########\n"
      "########\n");
  const SolveResult r = solve(b);
  REQUIRE(r.plan);
  CHECK(r.status == SolveStatus::Solved);
  CHECK(plan_to_string(*r.plan) == "LL");
  CHECK(r.plan->cost == *oracle::bfs_optimal_cost(oracle::grid_of(b)));
}

TEST_CASE("corner deadlock is proven unsolvable") {
  const Board b = board(
      "########\n"
      "#$     #\n"
      "#    . #\n"
      "#  @   #\n"
      "########\n"
      "########\n"
      "########\n"
      "########\n");
  CHECK(is_deadlock(b));
  for (bool prune : {true, false}) {
    SolveOptions opt;
    opt.deadlock_pruning = prune;
    const SolveResult r = solve(b, {}, opt);
    CHECK_FALSE(r.plan);
    CHECK(r.status == SolveStatus::ProvenUnsolvable);
  }
}

TEST_CASE("wall-line deadlock") {
  const Board dead = board(
      "########\n"
      "#  $   #\n"
      "#      #\n"
      "#  @ . #\n"
      "########\n"
      "########\n"
      "########\n"
      "########\n");
  CHECK(is_deadlock(dead));
  const Board alive = board(
      "########\n"
      "#  $ . #\n"
      "#      #\n"
      "#  @   #\n"
      "########\n"
      "########\n"
      "########\n"
      "########\n");
  CHECK_FALSE(is_deadlock(alive));
}

TEST_CASE("already solved level yields an empty plan") {
  const Board b = board(
      "########\n"
      "#@*    #\n"
      "########\n"
      "########\n"
      "########\n"
      "########\n"
      "########\n"
      "########\n");
  const SolveResult r = solve(b);
  REQUIRE(r.plan);
  CHECK(r.plan->actions.empty());
  CHECK(r.plan->cost == 0);
  CHECK_FALSE(is_deadlock(b));
}

TEST_CASE("budget exhaustion is distinguished from unsolvability") {
  const Board b = board(
      "########\n"
      "#@     #\n"
      "# $  $ #\n"
      "#  ..  #\n"
      "#  ..  #\n"
      "# $  $ #\n"
      "#      #\n"
      "########\n");
  SearchBudget tiny;
  tiny.max_nodes = 2;
  const SolveResult r = solve(b, tiny);
  CHECK_FALSE(r.plan);
  CHECK(r.status == SolveStatus::BudgetExhausted);
  CHECK(solve(b).status == SolveStatus::Solved);
}

TEST_CASE("deadlock detection is sound on the exhaustive suite") {
  oracle::LayoutSolvability oracle_solvable;
  std::size_t flagged = 0, unsound = 0;
  oracle::for_each_suite_grid([&](const oracle::Grid& g) {
    const Board b = board_from_text(oracle::text_of(g));
    if (!is_deadlock(b)) return;
    ++flagged;
    if (oracle_solvable.solvable(g)) ++unsound;
  });
  CHECK(flagged > 1000);
  CHECK(unsound == 0);
}

TEST_CASE("solver is optimal and pruning-invariant on a suite sample") {
  oracle::LayoutSolvability oracle_solvable;
  std::size_t index = 0, checked = 0;
  oracle::for_each_suite_grid([&](const oracle::Grid& g) {
    if (index++ % 97 != 0) return;
    const Board b = board_from_text(oracle::text_of(g));
    SolveOptions no_prune;
    no_prune.deadlock_pruning = false;
    const SolveResult pruned = solve(b);
    const SolveResult plain = solve(b, {}, no_prune);
    CHECK(pruned.plan.has_value() == plain.plan.has_value());
    CHECK(pruned.plan.has_value() == oracle_solvable.solvable(g));
    if (pruned.plan) {
      const auto cost = oracle::bfs_optimal_cost(g);
      REQUIRE(cost);
      CHECK(pruned.plan->cost == *cost);
      CHECK(plain.plan->cost == *cost);
      const Trajectory t = rollout_actions(b, pruned.plan->actions);
      CHECK(t.solved());
    }
    ++checked;
  });
  CHECK(checked > 2000);
}

TEST_CASE("demo trajectory rewards follow the reward rules") {
  const Level level{board("########\n"
                          "#      #\n"
                          "# $ .  #\n"
                          "# .$@  #\n"
                          "#   $  #\n"
                          "#  .$. #\n"
                          "#      #\n"
                          "########\n"),
                    "demo", std::nullopt};
  const auto traj = demo_trajectory(level);
  REQUIRE(traj);
  CHECK(traj->solved());
  CHECK(traj->steps.back().events.has(StepEvent::Solved));
  CHECK(traj->steps.back().done);
  double total = 0;
  int onto = 0, off = 0;
  for (const Transition& tr : traj->steps) {
    total += tr.reward;
    onto += tr.events.has(StepEvent::PushedOntoTarget);
    off += tr.events.has(StepEvent::PushedOffTarget);
  }
  const int boxes = level.initial.box_count();
  CHECK(onto - off == boxes);
  // Every push off a target (-1) is matched by a later push back on (+1).
  CHECK(total == doctest::Approx(10.0 + boxes - 0.01 * traj->length()).epsilon(1e-12));

  const Level dead{board("########\n"
                         "#$     #\n"
                         "#    . #\n"
                         "#  @   #\n"
                         "########\n"
                         "########\n"
                         "########\n"
                         "########\n"),
                   "dead", std::nullopt};
  CHECK_FALSE(demo_trajectory(dead));
}
