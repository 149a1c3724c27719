#include "sokoplan/core.hpp"

namespace sokoplan {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::MalformedRecord: return "MalformedRecord";
    case Errc::BorderMissing: return "BorderMissing";
    case Errc::CountMismatch: return "CountMismatch";
    case Errc::SteppedAfterTerminal: return "SteppedAfterTerminal";
    case Errc::UnknownSchema: return "UnknownSchema";
    case Errc::BadIndex: return "BadIndex";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::CorruptChecksum: return "CorruptChecksum";
    case Errc::NonFiniteGradient: return "NonFiniteGradient";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::SourceMismatch: return "SourceMismatch";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::KindMismatch: return "KindMismatch";
    case Errc::MissingAnnotations: return "MissingAnnotations";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

std::optional<Direction> direction_between(Pos a, Pos b) {
  for (Direction d : kDirections) {
    if (moved(a, d) == b) return d;
  }
  return std::nullopt;
}

std::string_view direction_name(Direction d) {
  switch (d) {
    case Direction::Up: return "UP";
    case Direction::Down: return "DOWN";
    case Direction::Left: return "LEFT";
    case Direction::Right: return "RIGHT";
  }
  return "?";
}

std::optional<Direction> parse_direction(std::string_view name) {
  for (Direction d : kDirections) {
    if (direction_name(d) == name) return d;
  }
  return std::nullopt;
}

char action_letter(Action a) {
  switch (a) {
    case Action::Up: return 'U';
    case Action::Down: return 'D';
    case Action::Left: return 'L';
    case Action::Right: return 'R';
    case Action::Noop: return 'N';
  }
  return '?';
}

std::optional<Action> parse_action_letter(char c) {
  switch (c) {
    case 'U': case 'u': return Action::Up;
    case 'D': case 'd': return Action::Down;
    case 'L': case 'l': return Action::Left;
    case 'R': case 'r': return Action::Right;
    case 'N': case 'n': return Action::Noop;
    default: return std::nullopt;
  }
}

}  // namespace sokoplan
