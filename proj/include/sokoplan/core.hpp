#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sokoplan {

inline constexpr int kRows = 8;
inline constexpr int kCols = 8;
inline constexpr int kCells = kRows * kCols;

enum class Errc {
  MalformedRecord,
  BorderMissing,
  CountMismatch,
  SteppedAfterTerminal,
  UnknownSchema,
  BadIndex,
  VersionMismatch,
  CorruptChecksum,
  NonFiniteGradient,
  NonFiniteLoss,
  IndexOutOfRange,
  EmptyDataset,
  SourceMismatch,
  LengthMismatch,
  ShapeMismatch,
  KindMismatch,
  MissingAnnotations,
  InvalidArgument,
  Io,
};

std::string_view errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Grid coordinate. Row 0 is the top row; UP decreases the row.
struct Pos {
  int row = 0;
  int col = 0;

  constexpr auto operator<=>(const Pos&) const = default;
  constexpr bool on_grid() const { return row >= 0 && row < kRows && col >= 0 && col < kCols; }
  constexpr int index() const { return row * kCols + col; }
  static constexpr Pos from_index(int i) { return Pos{i / kCols, i % kCols}; }
};

enum class Direction : std::uint8_t { Up = 0, Down = 1, Left = 2, Right = 3 };
inline constexpr std::array<Direction, 4> kDirections{Direction::Up, Direction::Down, Direction::Left,
                                                      Direction::Right};

/// The five environment actions. The integer values double as policy-logit indices.
enum class Action : std::uint8_t { Up = 0, Down = 1, Left = 2, Right = 3, Noop = 4 };
inline constexpr int kNumActions = 5;

constexpr Pos delta(Direction d) {
  switch (d) {
    case Direction::Up: return {-1, 0};
    case Direction::Down: return {1, 0};
    case Direction::Left: return {0, -1};
    case Direction::Right: return {0, 1};
  }
  return {0, 0};
}

constexpr Pos moved(Pos p, Direction d) {
  const Pos dd = delta(d);
  return {p.row + dd.row, p.col + dd.col};
}

constexpr Direction opposite(Direction d) {
  switch (d) {
    case Direction::Up: return Direction::Down;
    case Direction::Down: return Direction::Up;
    case Direction::Left: return Direction::Right;
    case Direction::Right: return Direction::Left;
  }
  return d;
}

constexpr Action to_action(Direction d) { return static_cast<Action>(static_cast<int>(d)); }

constexpr std::optional<Direction> to_direction(Action a) {
  if (a == Action::Noop) return std::nullopt;
  return static_cast<Direction>(static_cast<int>(a));
}

/// Direction of the unit move a -> b, if a and b are 4-adjacent.
std::optional<Direction> direction_between(Pos a, Pos b);

std::string_view direction_name(Direction d);  // "UP", "DOWN", ...
std::optional<Direction> parse_direction(std::string_view name);
char action_letter(Action a);  // U D L R N
std::optional<Action> parse_action_letter(char c);

}  // namespace sokoplan
