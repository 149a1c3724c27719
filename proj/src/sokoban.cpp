#include "sokoplan/sokoban.hpp"

#include <random>
#include <sstream>

namespace sokoplan {

Pos Board::agent() const {
  for (int i = 0; i < kCells; ++i) {
    if (has_agent(grid[i])) return Pos::from_index(i);
  }
  throw Error(Errc::CountMismatch, "board has no agent");
}

int Board::box_count() const {
  int n = 0;
  for (Square s : grid) n += has_box(s) ? 1 : 0;
  return n;
}

int Board::target_count() const {
  int n = 0;
  for (Square s : grid) n += is_target(s) ? 1 : 0;
  return n;
}

std::uint64_t Board::box_mask() const {
  std::uint64_t m = 0;
  for (int i = 0; i < kCells; ++i) {
    if (has_box(grid[i])) m |= std::uint64_t{1} << i;
  }
  return m;
}

int Board::boxes_on_targets() const {
  int n = 0;
  for (Square s : grid) n += s == Square::BoxOnTarget ? 1 : 0;
  return n;
}

bool Board::solved() const {
  for (Square s : grid) {
    if (s == Square::BoxOnFloor) return false;
  }
  return true;
}

void validate(const Board& board) {
  int agents = 0;
  for (Square s : board.grid) agents += has_agent(s) ? 1 : 0;
  if (agents != 1) throw Error(Errc::CountMismatch, "expected exactly one agent, found " + std::to_string(agents));
  if (board.box_count() != board.target_count()) {
    throw Error(Errc::CountMismatch, "boxes (" + std::to_string(board.box_count()) + ") != targets (" +
                                         std::to_string(board.target_count()) + ")");
  }
}

namespace {

Square without_agent(Square s) { return s == Square::AgentOnTarget ? Square::EmptyTarget : Square::Floor; }
Square without_box(Square s) { return s == Square::BoxOnTarget ? Square::EmptyTarget : Square::Floor; }
Square with_agent(Square s) { return is_target(s) ? Square::AgentOnTarget : Square::AgentOnFloor; }
Square with_box(Square s) { return is_target(s) ? Square::BoxOnTarget : Square::BoxOnFloor; }
bool free_for_box(Square s) { return s == Square::Floor || s == Square::EmptyTarget; }

}  // namespace

StepResult step(const Board& board, Action action, const RewardRules& rules) {
  if (board.terminal()) throw Error(Errc::SteppedAfterTerminal, "episode already finished");
  StepResult out;
  out.board = board;
  Board& next = out.board;
  double reward = rules.step_penalty;

  if (auto dir = to_direction(action)) {
    const Pos a = board.agent();
    const Pos t = moved(a, *dir);
    const Square ts = board.at(t);
    bool moves = false;
    if (is_wall(ts)) {
      out.events.add(StepEvent::Blocked);
    } else if (has_box(ts)) {
      const Pos b2 = moved(t, *dir);
      const Square bs = board.at(b2);
      if (!free_for_box(bs)) {
        out.events.add(StepEvent::Blocked);
      } else {
        next.set(b2, with_box(bs));
        next.set(t, without_box(ts));
        out.events.add(StepEvent::BoxMoved);
        if (is_target(bs)) {
          out.events.add(StepEvent::PushedOntoTarget);
          reward += rules.onto_target;
        }
        if (ts == Square::BoxOnTarget) out.events.add(StepEvent::PushedOffTarget);
        if (rules.penalize_every_push || ts == Square::BoxOnTarget) reward += rules.off_target;
        moves = true;
      }
    } else {
      moves = true;
    }
    if (moves) {
      next.set(a, without_agent(board.at(a)));
      next.set(t, with_agent(next.at(t)));
    }
  }

  next.step_count += 1;
  if (next.solved()) {
    out.events.add(StepEvent::Solved);
    reward += rules.solved_bonus;
    out.done = true;
  } else if (next.timed_out()) {
    out.events.add(StepEvent::TimedOut);
    out.done = true;
  }
  out.reward = reward;
  return out;
}

ObsTensor encode_observation(const Board& board) {
  ObsTensor obs = ObsTensor::Zero();
  for (int i = 0; i < kCells; ++i) obs(i, static_cast<int>(board.grid[i])) = 1.0f;
  return obs;
}

std::string_view level_kind_name(LevelKind k) {
  switch (k) {
    case LevelKind::AgentShortcut: return "AgentShortcut";
    case LevelKind::BoxShortcut: return "BoxShortcut";
    case LevelKind::Cutoff: return "Cutoff";
    case LevelKind::Corridor: return "Corridor";
  }
  return "?";
}

std::optional<LevelKind> parse_level_kind(std::string_view name) {
  for (LevelKind k : {LevelKind::AgentShortcut, LevelKind::BoxShortcut, LevelKind::Cutoff, LevelKind::Corridor}) {
    if (level_kind_name(k) == name) return k;
  }
  return std::nullopt;
}

Board start_episode(const Level& level, std::uint64_t seed) {
  Board b = level.initial;
  std::mt19937_64 rng(seed);
  b.step_count = 0;
  b.episode_limit = std::uniform_int_distribution<int>(115, 120)(rng);
  return b;
}

// Boxoban ---------------------------------------------------------------------

namespace {

constexpr int kRecordSide = kRows + 2;

std::optional<Square> square_from_char(char c) {
  switch (c) {
    case '#': return Square::Wall;
    case ' ': return Square::Floor;
    case '$': return Square::BoxOnFloor;
    case '@': return Square::AgentOnFloor;
    case '.': return Square::EmptyTarget;
    case '*': return Square::BoxOnTarget;
    case '+': return Square::AgentOnTarget;
    default: return std::nullopt;
  }
}

char char_from_square(Square s) {
  switch (s) {
    case Square::Wall: return '#';
    case Square::Floor: return ' ';
    case Square::BoxOnFloor: return '$';
    case Square::AgentOnFloor: return '@';
    case Square::EmptyTarget: return '.';
    case Square::BoxOnTarget: return '*';
    case Square::AgentOnTarget: return '+';
  }
  return '?';
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

}  // namespace

std::vector<Level> parse_boxoban(std::string_view text) {
  const auto lines = split_lines(text);
  std::vector<Level> levels;
  std::size_t i = 0;
  while (i < lines.size()) {
    if (lines[i].empty()) {
      ++i;
      continue;
    }
    if (lines[i].front() != ';') throw Error(Errc::MalformedRecord, "expected ';' header at line " + std::to_string(i + 1));
    std::string_view header = lines[i].substr(1);
    if (!header.empty() && header.front() == ' ') header.remove_prefix(1);
    Level level;
    level.id = std::string(header);
    if (i + kRecordSide >= lines.size()) {
      throw Error(Errc::MalformedRecord, "record '" + level.id + "' is truncated");
    }
    for (int r = 0; r < kRecordSide; ++r) {
      const std::string_view row = lines[i + 1 + r];
      if (row.size() != kRecordSide) {
        throw Error(Errc::MalformedRecord, "record '" + level.id + "' row " + std::to_string(r) + " has width " +
                                               std::to_string(row.size()));
      }
      for (int c = 0; c < kRecordSide; ++c) {
        const auto sq = square_from_char(row[c]);
        if (!sq) throw Error(Errc::MalformedRecord, "record '" + level.id + "' has bad character");
        const bool border = r == 0 || c == 0 || r == kRecordSide - 1 || c == kRecordSide - 1;
        if (border) {
          if (*sq != Square::Wall) throw Error(Errc::BorderMissing, "record '" + level.id + "' border is not all '#'");
        } else {
          level.initial.set(Pos{r - 1, c - 1}, *sq);
        }
      }
    }
    validate(level.initial);
    levels.push_back(std::move(level));
    i += 1 + kRecordSide;
  }
  return levels;
}

std::string serialize_boxoban(const std::vector<Level>& levels) {
  std::string out;
  const std::string ring(kRecordSide, '#');
  for (const Level& level : levels) {
    out += "; " + level.id + "\n";
    out += ring + "\n";
    for (int r = 0; r < kRows; ++r) {
      out += '#';
      for (int c = 0; c < kCols; ++c) out += char_from_square(level.initial.at({r, c}));
      out += "#\n";
    }
    out += ring + "\n\n";
  }
  return out;
}

std::string board_to_text(const Board& board) {
  std::string out;
  for (int r = 0; r < kRows; ++r) {
    for (int c = 0; c < kCols; ++c) out += char_from_square(board.at({r, c}));
    out += '\n';
  }
  return out;
}

Board board_from_text(std::string_view rows) {
  const auto lines = split_lines(rows);
  std::vector<std::string_view> kept;
  for (auto l : lines) {
    if (!l.empty()) kept.push_back(l);
  }
  if (kept.size() != kRows) throw Error(Errc::MalformedRecord, "expected 8 rows");
  Board b;
  for (int r = 0; r < kRows; ++r) {
    if (kept[r].size() != kCols) throw Error(Errc::MalformedRecord, "expected 8 columns");
    for (int c = 0; c < kCols; ++c) {
      const auto sq = square_from_char(kept[r][c]);
      if (!sq) throw Error(Errc::MalformedRecord, "bad character");
      b.set({r, c}, *sq);
    }
  }
  validate(b);
  return b;
}

// D4 ----------------------------------------------------------------------------

Pos transform_pos(D4 g, Pos p) {
  if (g.reflect) p.col = kCols - 1 - p.col;
  for (int k = 0; k < g.rotations; ++k) p = Pos{p.col, kRows - 1 - p.row};
  return p;
}

Direction transform_direction(D4 g, Direction d) {
  Pos v = delta(d);
  if (g.reflect) v.col = -v.col;
  for (int k = 0; k < g.rotations; ++k) v = Pos{v.col, -v.row};
  for (Direction e : kDirections) {
    if (delta(e) == v) return e;
  }
  return d;
}

Action transform_action(D4 g, Action a) {
  if (auto d = to_direction(a)) return to_action(transform_direction(g, *d));
  return a;
}

D4 compose(D4 second, D4 first) {
  const Pos p0{0, 1}, p1{2, 5};
  for (int i = 0; i < 8; ++i) {
    const D4 h = D4::from_index(i);
    if (transform_pos(h, p0) == transform_pos(second, transform_pos(first, p0)) &&
        transform_pos(h, p1) == transform_pos(second, transform_pos(first, p1))) {
      return h;
    }
  }
  return D4{};
}

D4 inverse(D4 g) {
  for (int i = 0; i < 8; ++i) {
    const D4 h = D4::from_index(i);
    if (compose(h, g) == D4::identity()) return h;
  }
  return D4{};
}

Board transform_board(D4 g, const Board& board) {
  Board out = board;
  for (int i = 0; i < kCells; ++i) {
    const Pos p = Pos::from_index(i);
    out.set(transform_pos(g, p), board.at(p));
  }
  return out;
}

RouteAnnotations transform_annotations(D4 g, const RouteAnnotations& ann) {
  RouteAnnotations out;
  out.kind = ann.kind;
  for (Pos p : ann.short_route) out.short_route.push_back(transform_pos(g, p));
  for (const RouteStep& s : ann.long_route_prefix) {
    out.long_route_prefix.push_back({transform_pos(g, s.pos), transform_direction(g, s.dir)});
  }
  out.anchor = transform_pos(g, ann.anchor);
  if (ann.corridor) {
    CorridorInfo c;
    c.entrance = transform_pos(g, ann.corridor->entrance);
    for (Pos p : ann.corridor->interior) c.interior.push_back(transform_pos(g, p));
    out.corridor = std::move(c);
  }
  return out;
}

Level transform_level(const Level& level, D4 g) {
  Level out;
  out.id = level.id;
  out.initial = transform_board(g, level.initial);
  if (level.annotations) out.annotations = transform_annotations(g, *level.annotations);
  return out;
}

}  // namespace sokoplan
