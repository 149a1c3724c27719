#include "sokoplan/concepts.hpp"

#include <algorithm>

namespace sokoplan {

std::string_view concept_kind_name(ConceptKind k) {
  switch (k) {
    case ConceptKind::AgentApproachDir: return "AgentApproachDir";
    case ConceptKind::BoxPushDir: return "BoxPushDir";
    case ConceptKind::AgentApproach: return "AgentApproach";
    case ConceptKind::BoxPush: return "BoxPush";
    case ConceptKind::AgentExitDir: return "AgentExitDir";
    case ConceptKind::BoxApproachDir: return "BoxApproachDir";
  }
  return "?";
}

std::optional<ConceptKind> parse_concept_kind(std::string_view name) {
  for (ConceptKind k : kConceptKinds) {
    if (concept_kind_name(k) == name) return k;
  }
  return std::nullopt;
}

bool is_directional(ConceptKind k) { return k != ConceptKind::AgentApproach && k != ConceptKind::BoxPush; }

std::string_view concept_class_name(ConceptClass c) {
  switch (c) {
    case ConceptClass::Up: return "UP";
    case ConceptClass::Down: return "DOWN";
    case ConceptClass::Left: return "LEFT";
    case ConceptClass::Right: return "RIGHT";
    case ConceptClass::Never: return "NEVER";
    case ConceptClass::Again: return "AGAIN";
  }
  return "?";
}

std::optional<ConceptClass> parse_concept_class(std::string_view name) {
  for (int i = 0; i < 6; ++i) {
    if (concept_class_name(static_cast<ConceptClass>(i)) == name) return static_cast<ConceptClass>(i);
  }
  return std::nullopt;
}

ConceptClass class_of(Direction d) { return static_cast<ConceptClass>(static_cast<int>(d)); }

const std::vector<ConceptClass>& class_set(ConceptKind k) {
  static const std::vector<ConceptClass> directional{ConceptClass::Up, ConceptClass::Down, ConceptClass::Left,
                                                     ConceptClass::Right, ConceptClass::Never};
  static const std::vector<ConceptClass> binary{ConceptClass::Never, ConceptClass::Again};
  return is_directional(k) ? directional : binary;
}

int class_index(ConceptKind k, ConceptClass c) {
  const auto& set = class_set(k);
  const auto it = std::find(set.begin(), set.end(), c);
  if (it == set.end()) throw Error(Errc::InvalidArgument, "class not in the concept's class set");
  return static_cast<int>(it - set.begin());
}

nlohmann::json concept_spec_to_json(const ConceptSpec& s) {
  return {{"kind", concept_kind_name(s.kind)},
          {"horizon", s.horizon},
          {"convention", s.convention == DirectionConvention::Movement ? "movement" : "side_of_approach"}};
}

ConceptSpec concept_spec_from_json(const nlohmann::json& j) {
  ConceptSpec s;
  const auto kind = parse_concept_kind(j.at("kind").get<std::string>());
  if (!kind) throw Error(Errc::InvalidArgument, "unknown concept kind");
  s.kind = *kind;
  s.horizon = j.value("horizon", kUnbounded);
  if (s.horizon < 0) throw Error(Errc::InvalidArgument, "negative horizon");
  const std::string conv = j.value("convention", std::string("movement"));
  if (conv == "movement") {
    s.convention = DirectionConvention::Movement;
  } else if (conv == "side_of_approach") {
    s.convention = DirectionConvention::SideOfApproach;
  } else {
    throw Error(Errc::InvalidArgument, "unknown direction convention '" + conv + "'");
  }
  return s;
}

namespace {

struct Move {
  Pos square;
  Direction dir;
};

// What happened during step tau, derived from the boards around it.
struct Interactions {
  std::optional<Move> agent_on, agent_off, box_off, box_on;
};

Interactions interactions_at(const Trajectory& traj, int tau) {
  const Board& before = traj.steps[tau].board;
  const Board& after = tau + 1 < traj.length() ? traj.steps[tau + 1].board : traj.final_board;
  Interactions out;
  const Pos a0 = before.agent(), a1 = after.agent();
  if (a0 == a1) return out;
  const Direction d = *direction_between(a0, a1);
  out.agent_on = Move{a1, d};
  out.agent_off = Move{a0, d};
  if (traj.steps[tau].events.has(StepEvent::BoxMoved)) {
    out.box_off = Move{a1, d};
    out.box_on = Move{moved(a1, d), d};
  }
  return out;
}

const std::optional<Move>& relevant(const Interactions& in, ConceptKind k) {
  switch (k) {
    case ConceptKind::AgentApproachDir:
    case ConceptKind::AgentApproach: return in.agent_on;
    case ConceptKind::BoxPushDir:
    case ConceptKind::BoxPush: return in.box_off;
    case ConceptKind::AgentExitDir: return in.agent_off;
    case ConceptKind::BoxApproachDir: return in.box_on;
  }
  return in.agent_on;
}

ConceptClass class_for(const Move& m, const ConceptSpec& spec) {
  if (!is_directional(spec.kind)) return ConceptClass::Again;
  const bool approach = spec.kind == ConceptKind::AgentApproachDir || spec.kind == ConceptKind::BoxApproachDir;
  if (approach && spec.convention == DirectionConvention::SideOfApproach) return class_of(opposite(m.dir));
  return class_of(m.dir);
}

int window_end(const Trajectory& traj, int t, const ConceptSpec& spec) {
  return spec.horizon > 0 ? std::min(traj.length(), t + spec.horizon) : traj.length();
}

}  // namespace

ConceptClass label_square(const Trajectory& traj, int t, Pos pos, const ConceptSpec& spec) {
  if (t < 0 || t >= traj.length() || !pos.on_grid()) throw Error(Errc::IndexOutOfRange, "no such step or square");
  const int end = window_end(traj, t, spec);
  for (int tau = t; tau < end; ++tau) {
    const Interactions in = interactions_at(traj, tau);
    const auto& m = relevant(in, spec.kind);
    if (m && m->square == pos) return class_for(*m, spec);
  }
  return ConceptClass::Never;
}

std::vector<ConceptGrid> label_trajectory(const Trajectory& traj, const ConceptSpec& spec) {
  const int T = traj.length();
  std::vector<ConceptGrid> grids(T);
  std::array<int, kCells> next_time;
  std::array<ConceptClass, kCells> next_class;
  next_time.fill(-1);
  next_class.fill(ConceptClass::Never);
  for (int t = T - 1; t >= 0; --t) {
    const Interactions in = interactions_at(traj, t);
    if (const auto& m = relevant(in, spec.kind)) {
      next_time[m->square.index()] = t;
      next_class[m->square.index()] = class_for(*m, spec);
    }
    const int end = window_end(traj, t, spec);
    for (int cell = 0; cell < kCells; ++cell) {
      grids[t][cell] = next_time[cell] >= 0 && next_time[cell] < end ? next_class[cell] : ConceptClass::Never;
    }
  }
  return grids;
}

int future_action_label(const Trajectory& traj, int t, int n) {
  if (n < 1 || n > 10) throw Error(Errc::IndexOutOfRange, "future offset must be in 1..10");
  if (t < 0 || t >= traj.length()) throw Error(Errc::IndexOutOfRange, "no such step");
  const int tau = t + n - 1;
  return tau < traj.length() ? static_cast<int>(traj.steps[tau].action) : kPad;
}

std::array<std::int64_t, 6> class_balance(const std::vector<ConceptGrid>& grids) {
  std::array<std::int64_t, 6> counts{};
  for (const ConceptGrid& g : grids) {
    for (ConceptClass c : g) ++counts[static_cast<int>(c)];
  }
  return counts;
}

}  // namespace sokoplan
