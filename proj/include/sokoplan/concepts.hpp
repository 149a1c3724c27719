#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sokoplan/solver.hpp"

namespace sokoplan {

enum class ConceptKind { AgentApproachDir, BoxPushDir, AgentApproach, BoxPush, AgentExitDir, BoxApproachDir };
inline constexpr std::array<ConceptKind, 6> kConceptKinds{ConceptKind::AgentApproachDir, ConceptKind::BoxPushDir,
                                                          ConceptKind::AgentApproach,    ConceptKind::BoxPush,
                                                          ConceptKind::AgentExitDir,     ConceptKind::BoxApproachDir};

std::string_view concept_kind_name(ConceptKind k);
std::optional<ConceptKind> parse_concept_kind(std::string_view name);
bool is_directional(ConceptKind k);

enum class ConceptClass { Up, Down, Left, Right, Never, Again };

std::string_view concept_class_name(ConceptClass c);
std::optional<ConceptClass> parse_concept_class(std::string_view name);
ConceptClass class_of(Direction d);

/// Which direction names an approach: the direction the agent (or box) moves
/// in, or the side of the square it arrives from.
enum class DirectionConvention { Movement, SideOfApproach };

inline constexpr int kUnbounded = 0;

struct ConceptSpec {
  ConceptKind kind = ConceptKind::AgentApproachDir;
  int horizon = kUnbounded;  // K > 0 limits the look-ahead to steps [t, t + K)
  DirectionConvention convention = DirectionConvention::Movement;

  bool operator==(const ConceptSpec&) const = default;
};

/// {"kind": "BoxPushDir", "horizon": 0, "convention": "movement"}
nlohmann::json concept_spec_to_json(const ConceptSpec& s);
ConceptSpec concept_spec_from_json(const nlohmann::json& j);

/// Ordered class set of a concept: [UP, DOWN, LEFT, RIGHT, NEVER] for the
/// directional kinds and [NEVER, AGAIN] for the binary kinds. Probes and
/// metrics use positions in this list as class indices.
const std::vector<ConceptClass>& class_set(ConceptKind k);
int class_index(ConceptKind k, ConceptClass c);

using ConceptGrid = std::array<ConceptClass, kCells>;

/// Label of one square at step t, by direct scan of the future steps.
/// Throws IndexOutOfRange for t outside [0, length) or an off-grid square.
ConceptClass label_square(const Trajectory& traj, int t, Pos pos, const ConceptSpec& spec);

/// One grid per step, computed in a single backward sweep.
std::vector<ConceptGrid> label_trajectory(const Trajectory& traj, const ConceptSpec& spec);

/// Future-action classes are the five actions plus PAD past the episode end.
inline constexpr int kFutureActionClasses = 5;
inline constexpr int kPad = 5;
/// Action taken at step t + n - 1 (n = 1 is the current step), or kPad.
int future_action_label(const Trajectory& traj, int t, int n);

/// Counts per ConceptClass (indexed by the enum value).
std::array<std::int64_t, 6> class_balance(const std::vector<ConceptGrid>& grids);

}  // namespace sokoplan
