#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sokoplan/sokoban.hpp"

namespace sokoplan {

/// Procedural Boxoban-style generator: random-walk room carving, targets and
/// agent placed on the floor, then reverse play pulls the boxes off targets.
struct GeneratorParams {
  int boxes = 4;
  int min_floor = 22;
  int max_floor = 34;
  int reverse_steps = 60;
  /// Reject levels whose optimal plan is longer than this (0 = no limit).
  int max_solution_length = 0;
  int min_solution_length = 1;
  int max_attempts = 200;
};

std::optional<Level> generate_random_level(std::uint64_t seed, const GeneratorParams& params = {});

/// `count` solvable levels with ids "<prefix><i>", drawn from seeds derived from `seed`.
std::vector<Level> generate_corpus(int count, std::uint64_t seed, const GeneratorParams& params = {},
                                   const std::string& id_prefix = "");

inline constexpr int kShortcutBases = 25;  // AgentShortcut, BoxShortcut and Cutoff
inline constexpr int kCorridorBases = 8;
inline constexpr std::array<int, 4> kCorridorLengths{2, 6, 10, 14};

struct HandcraftedParams {
  /// Corridor length for Cutoff / Corridor levels; 0 picks the base's default.
  int corridor_length = 0;
  /// Room-filling variant; the Corridor multiplier draws extra variants through it.
  int variant = 0;
};

/// Annotated handcrafted level in its canonical orientation. Throws
/// BadIndex for an out-of-range base or corridor length.
Level generate_handcrafted(LevelKind kind, int base_index, const HandcraftedParams& params = {});

/// All bases of a kind under the 8 D4 elements (25 x 8 = 200 for the shortcut
/// and Cutoff families). Corridor orbits use `params.corridor_length`.
std::vector<Level> handcrafted_orbit(LevelKind kind, const HandcraftedParams& params = {});

/// Corridor levels of one length: 8 bases x 8 symmetries x multiplier variants.
std::vector<Level> corridor_dataset(int corridor_length, int multiplier = 1);

nlohmann::json annotations_to_json(const std::vector<Level>& levels);
/// Attaches sidecar annotations to levels by id. Throws MissingAnnotations if an id is absent.
void attach_annotations(std::vector<Level>& levels, const nlohmann::json& sidecar);

nlohmann::json route_annotations_to_json(const RouteAnnotations& ann);
RouteAnnotations route_annotations_from_json(const nlohmann::json& j);

}  // namespace sokoplan
