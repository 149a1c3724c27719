#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "sokoplan/core.hpp"

namespace sokoplan {

/// Square states. The enumerator value is the observation channel.
enum class Square : std::uint8_t {
  Wall = 0,
  Floor = 1,
  AgentOnFloor = 2,
  AgentOnTarget = 3,
  BoxOnFloor = 4,
  BoxOnTarget = 5,
  EmptyTarget = 6,
};
inline constexpr int kNumSquareStates = 7;

constexpr bool has_box(Square s) { return s == Square::BoxOnFloor || s == Square::BoxOnTarget; }
constexpr bool has_agent(Square s) { return s == Square::AgentOnFloor || s == Square::AgentOnTarget; }
constexpr bool is_target(Square s) {
  return s == Square::BoxOnTarget || s == Square::AgentOnTarget || s == Square::EmptyTarget;
}
constexpr bool is_wall(Square s) { return s == Square::Wall; }

inline constexpr int kDefaultEpisodeLimit = 120;

struct Board {
  std::array<Square, kCells> grid{};
  int step_count = 0;
  int episode_limit = kDefaultEpisodeLimit;

  Square at(Pos p) const { return p.on_grid() ? grid[p.index()] : Square::Wall; }
  void set(Pos p, Square s) { grid[p.index()] = s; }

  Pos agent() const;
  int box_count() const;
  int target_count() const;
  int boxes_on_targets() const;
  /// Bit i set when square i holds a box.
  std::uint64_t box_mask() const;
  bool solved() const;
  bool timed_out() const { return step_count >= episode_limit; }
  bool terminal() const { return solved() || timed_out(); }

  /// Grid equality, ignoring step bookkeeping.
  bool same_grid(const Board& other) const { return grid == other.grid; }
  bool operator==(const Board&) const = default;
};

/// Throws CountMismatch unless there is exactly one agent and boxes == targets.
void validate(const Board& board);

enum class StepEvent : std::uint8_t {
  PushedOntoTarget = 1u << 0,
  PushedOffTarget = 1u << 1,
  BoxMoved = 1u << 2,
  Blocked = 1u << 3,
  Solved = 1u << 4,
  TimedOut = 1u << 5,
};

struct StepEvents {
  std::uint8_t bits = 0;
  bool has(StepEvent e) const { return (bits & static_cast<std::uint8_t>(e)) != 0; }
  void add(StepEvent e) { bits |= static_cast<std::uint8_t>(e); }
  bool operator==(const StepEvents&) const = default;
};

struct StepResult {
  Board board;
  double reward = 0.0;
  bool done = false;
  StepEvents events;
};

struct RewardRules {
  double step_penalty = -0.01;
  double onto_target = 1.0;
  double off_target = -1.0;
  double solved_bonus = 10.0;
  /// Charge off_target for every push rather than only pushes off a target square.
  bool penalize_every_push = false;
};

/// Pure transition function. Throws SteppedAfterTerminal on a solved or timed-out board.
StepResult step(const Board& board, Action action, const RewardRules& rules = {});

using ObsTensor = Eigen::Matrix<float, kCells, kNumSquareStates, Eigen::RowMajor>;

/// One-hot encoding; row = cell index (row-major), column = Square channel.
ObsTensor encode_observation(const Board& board);

enum class LevelKind : std::uint8_t { AgentShortcut, BoxShortcut, Cutoff, Corridor };
std::string_view level_kind_name(LevelKind k);
std::optional<LevelKind> parse_level_kind(std::string_view name);

struct RouteStep {
  Pos pos;
  Direction dir;
  bool operator==(const RouteStep&) const = default;
};

struct CorridorInfo {
  Pos entrance;
  std::vector<Pos> interior;  // ordered from the entrance inward
  int length() const { return static_cast<int>(interior.size()); }
  bool operator==(const CorridorInfo&) const = default;
};

struct RouteAnnotations {
  LevelKind kind = LevelKind::AgentShortcut;
  std::vector<Pos> short_route;
  std::vector<RouteStep> long_route_prefix;
  Pos anchor;
  std::optional<CorridorInfo> corridor;
  bool operator==(const RouteAnnotations&) const = default;
};

struct Level {
  Board initial;
  std::string id;
  std::optional<RouteAnnotations> annotations;
  bool operator==(const Level&) const = default;
};

/// Fresh episode board with the episode limit drawn uniformly from [115, 120].
Board start_episode(const Level& level, std::uint64_t seed);

// Boxoban text format -------------------------------------------------------

std::vector<Level> parse_boxoban(std::string_view text);
std::string serialize_boxoban(const std::vector<Level>& levels);
std::string board_to_text(const Board& board);  // 8 lines, no border
Board board_from_text(std::string_view rows);   // 8 lines of 8 chars, validated

// D4 symmetry ---------------------------------------------------------------

/// Element of the square's symmetry group: optional column mirror followed by
/// `rotations` clockwise quarter turns. index() = 4 * reflect + rotations.
struct D4 {
  int rotations = 0;
  bool reflect = false;

  static D4 from_index(int i) { return D4{i % 4, i >= 4}; }
  int index() const { return (reflect ? 4 : 0) + rotations; }
  static D4 identity() { return {}; }
  static D4 rot90() { return {1, false}; }
  bool operator==(const D4&) const = default;
};

D4 compose(D4 second, D4 first);  // second after first
D4 inverse(D4 g);
Pos transform_pos(D4 g, Pos p);
Direction transform_direction(D4 g, Direction d);
Action transform_action(D4 g, Action a);
Board transform_board(D4 g, const Board& board);
RouteAnnotations transform_annotations(D4 g, const RouteAnnotations& ann);
Level transform_level(const Level& level, D4 g);

}  // namespace sokoplan
