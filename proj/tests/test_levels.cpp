#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "sokoplan/levels.hpp"
#include "sokoplan/solver.hpp"

using namespace sokoplan;

namespace {

std::set<Pos> cells_of(const std::vector<RouteStep>& steps) {
  std::set<Pos> out;
  for (const RouteStep& s : steps) out.insert(s.pos);
  return out;
}

std::vector<Pos> agent_path(const Board& start, const std::vector<Action>& actions) {
  std::vector<Pos> out;
  Board b = start;
  b.episode_limit = 1 << 20;
  for (Action a : actions) {
    b = step(b, a).board;
    out.push_back(b.agent());
  }
  return out;
}

}  // namespace

TEST_CASE("random levels are seeded, solvable and start with no box on a target") {
  GeneratorParams p;
  p.max_solution_length = 60;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto a = generate_random_level(seed, p);
    REQUIRE(a);
    CHECK(*a == *generate_random_level(seed, p));
    CHECK(a->initial.box_count() == 4);
    CHECK(a->initial.boxes_on_targets() == 0);
    const SolveResult r = solve(a->initial);
    REQUIRE(r.plan);
    CHECK(r.plan->cost <= 60);
    CHECK(rollout_actions(a->initial, r.plan->actions).solved());
  }
  const auto corpus = generate_corpus(30, 5, p, "t");
  CHECK(corpus.size() == 30);
  CHECK(corpus[29].id == "t29");
  CHECK(parse_boxoban(serialize_boxoban(corpus)) == corpus);
}

TEST_CASE("agent-shortcut base 0") {
  const Level l = generate_handcrafted(LevelKind::AgentShortcut, 0);
  REQUIRE(l.annotations);
  const RouteAnnotations& ann = *l.annotations;
  CHECK(ann.kind == LevelKind::AgentShortcut);
  CHECK_FALSE(ann.short_route.empty());
  const auto long_cells = cells_of(ann.long_route_prefix);
  for (Pos p : ann.short_route) CHECK(long_cells.count(p) == 0);
  CHECK(ann.anchor == ann.long_route_prefix.front().pos);

  const SolveResult r = solve(l.initial);
  REQUIRE(r.plan);
  const auto path = agent_path(l.initial, r.plan->actions);
  CHECK(std::find(path.begin(), path.end(), ann.short_route.front()) != path.end());
  CHECK(std::find(path.begin(), path.end(), ann.anchor) == path.end());

  Board blocked = l.initial;
  for (Pos p : ann.short_route) blocked.set(p, Square::Wall);
  const SolveResult detour = solve(blocked);
  REQUIRE(detour.plan);
  CHECK(detour.plan->cost > r.plan->cost);
}

TEST_CASE("box-shortcut bases have a straight short route and a longer detour") {
  for (int b = 0; b < 5; ++b) {
    const Level l = generate_handcrafted(LevelKind::BoxShortcut, b);
    const RouteAnnotations& ann = *l.annotations;
    CHECK(has_box(l.initial.at(ann.anchor)));
    CHECK(ann.long_route_prefix.front().pos == ann.anchor);
    CHECK(ann.long_route_prefix.size() >= 3);
    const auto long_cells = cells_of(ann.long_route_prefix);
    for (Pos p : ann.short_route) {
      CHECK(long_cells.count(p) == 0);
      CHECK(l.initial.at(p) == Square::Floor);
    }
    // The short route cells lie on one line through the anchor.
    const Pos first = ann.short_route.front();
    const auto d = direction_between(ann.anchor, first);
    REQUIRE(d);
    Pos cur = ann.anchor;
    for (Pos p : ann.short_route) {
      cur = moved(cur, *d);
      CHECK(p == cur);
    }
    CHECK(is_target(l.initial.at(moved(cur, *d))));
  }
}

TEST_CASE("cutoff levels") {
  HandcraftedParams p;
  p.corridor_length = 6;
  const Level l = generate_handcrafted(LevelKind::Cutoff, 3, p);
  REQUIRE(l.annotations);
  REQUIRE(l.annotations->corridor);
  const CorridorInfo& c = *l.annotations->corridor;
  CHECK(c.length() == 6);
  CHECK(c.interior.size() == 6);
  CHECK(is_target(l.initial.at(c.entrance)));
  CHECK(is_target(l.initial.at(c.interior.back())));
  // Consecutive corridor cells are 4-adjacent and start next to the entrance.
  CHECK(direction_between(c.entrance, c.interior.front()));
  for (std::size_t i = 1; i < c.interior.size(); ++i) CHECK(direction_between(c.interior[i - 1], c.interior[i]));

  const Pos x = l.annotations->anchor;
  CHECK(has_box(l.initial.at(x)));
  CHECK(direction_between(x, c.entrance) == Direction::Up);
  CHECK(solve(l.initial).status == SolveStatus::Solved);
  Board myopic = step(l.initial, Action::Up).board;
  CHECK(myopic.at(c.entrance) == Square::BoxOnTarget);
  myopic.step_count = 0;
  CHECK(solve(myopic).status == SolveStatus::ProvenUnsolvable);

  for (int len : kCorridorLengths) {
    HandcraftedParams q;
    q.corridor_length = len;
    CHECK(generate_handcrafted(LevelKind::Corridor, 0, q).annotations->corridor->length() == len);
  }
  HandcraftedParams bad;
  bad.corridor_length = 5;
  CHECK_THROWS_AS(generate_handcrafted(LevelKind::Cutoff, 0, bad), Error);
}

TEST_CASE("base index range") {
  try {
    generate_handcrafted(LevelKind::AgentShortcut, kShortcutBases);
    FAIL("expected BadIndex");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::BadIndex);
  }
  CHECK_THROWS_AS(generate_handcrafted(LevelKind::Corridor, kCorridorBases), Error);
  CHECK_THROWS_AS(generate_handcrafted(LevelKind::BoxShortcut, -1), Error);
}

TEST_CASE("orbits have 200 distinct levels that stay solvable under symmetry") {
  for (LevelKind k : {LevelKind::AgentShortcut, LevelKind::BoxShortcut, LevelKind::Cutoff}) {
    const auto orbit = handcrafted_orbit(k);
    CHECK(orbit.size() == 200);
    std::set<std::string> ids, grids;
    for (const Level& l : orbit) {
      ids.insert(l.id);
      grids.insert(board_to_text(l.initial));
    }
    CHECK(ids.size() == 200);
    CHECK(grids.size() == 200);
    // Optimal cost is invariant under the symmetry group.
    for (std::size_t i = 0; i < orbit.size(); i += 8) {
      const auto base_cost = solve(orbit[i].initial).plan->cost;
      for (std::size_t g = 1; g < 8; g += 3) {
        const Level& t = orbit[i + g];
        const SolveResult r = solve(t.initial);
        REQUIRE(r.plan);
        CHECK(r.plan->cost == base_cost);
        CHECK(has_box(t.initial.at(t.annotations->anchor)) == (k != LevelKind::AgentShortcut));
      }
    }
  }
  CHECK(corridor_dataset(2, 2).size() == 2 * 64);
}

TEST_CASE("annotation sidecar round trip") {
  auto levels = handcrafted_orbit(LevelKind::Cutoff);
  const nlohmann::json sidecar = annotations_to_json(levels);
  auto reloaded = parse_boxoban(serialize_boxoban(levels));
  attach_annotations(reloaded, nlohmann::json::parse(sidecar.dump()));
  CHECK(reloaded == levels);
  reloaded.back().id = "missing";
  try {
    attach_annotations(reloaded, sidecar);
    FAIL("expected MissingAnnotations");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::MissingAnnotations);
  }
}
