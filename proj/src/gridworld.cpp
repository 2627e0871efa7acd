#include "rmbench/gridworld.hpp"

#include <deque>
#include <sstream>

namespace rmbench::grid {

namespace {

constexpr int kDx[kNumActions] = {0, 0, -1, 1};
constexpr int kDy[kNumActions] = {-1, 1, 0, 0};

int room_bit(Room r) {
  switch (r) {
    case Room::orange: return 0;
    case Room::green: return 1;
    case Room::blue: return 2;
    default: return -1;
  }
}

Room glyph_room(char c) {
  switch (c) {
    case 'O': return Room::orange;
    case 'G': return Room::green;
    case 'B': return Room::blue;
    default: return Room::none;
  }
}

}  // namespace

int move_from(const GridMap& map, int cell, Action a) {
  const int x = cell % map.width + kDx[static_cast<int>(a)];
  const int y = cell / map.width + kDy[static_cast<int>(a)];
  if (x < 0 || x >= map.width || y < 0 || y >= map.height) return cell;
  const int next = map.index(x, y);
  return map.is_wall(next) ? cell : next;
}

GridMap parse_map(const std::string& text) {
  std::vector<std::string> lines;
  {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
  }
  if (lines.size() < 3) throw MapError("map needs at least 3 rows");

  GridMap m;
  m.height = static_cast<int>(lines.size());
  m.width = static_cast<int>(lines[0].size());
  if (m.width < 3) throw MapError("map needs at least 3 columns");
  for (int y = 0; y < m.height; ++y)
    if (static_cast<int>(lines[y].size()) != m.width)
      throw MapError("ragged row " + std::to_string(y) + ": expected width " +
                     std::to_string(m.width));

  m.walls.assign(m.cell_count(), 0);
  m.rooms.assign(m.cell_count(), Room::none);

  struct Special {
    char glyph;
    int cell;
  };
  std::vector<Special> specials;

  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      const char c = lines[y][x];
      const int idx = m.index(x, y);
      const bool border = x == 0 || y == 0 || x == m.width - 1 || y == m.height - 1;
      switch (c) {
        case '#':
          m.walls[idx] = 1;
          break;
        case 'H':
          break;
        case 'O':
        case 'G':
        case 'B':
          m.rooms[idx] = glyph_room(c);
          break;
        case 'K':
        case 'C':
        case 'D':
        case 'A':
        case '1':
        case '2':
        case '3':
          specials.push_back({c, idx});
          break;
        default:
          throw MapError(std::string("unknown glyph '") + c + "' at (" +
                         std::to_string(x) + "," + std::to_string(y) + ")");
      }
      if (border && c != '#')
        throw MapError("map border must be wall at (" + std::to_string(x) +
                       "," + std::to_string(y) + ")");
    }
  }

  // Special glyphs replace the floor color, so their room is recovered from
  // adjacent colored cells; it must be unambiguous.
  auto infer_room = [&](int cell, char glyph, bool allow_none) {
    Room found = Room::none;
    for (int a = 0; a < kNumActions; ++a) {
      const int x = cell % m.width + kDx[a];
      const int y = cell / m.width + kDy[a];
      if (x < 0 || x >= m.width || y < 0 || y >= m.height) continue;
      const Room r = glyph_room(lines[y][x]);
      if (r == Room::none) continue;
      if (found != Room::none && found != r)
        throw MapError(std::string("ambiguous room for glyph '") + glyph + "'");
      found = r;
    }
    if (found == Room::none && !allow_none)
      throw MapError(std::string("cannot infer room for glyph '") + glyph +
                     "': no adjacent colored floor");
    return found;
  };

  std::vector<int> item_cells;  // cells bound by the doorway-distance rule
  for (const auto& s : specials) {
    const Room room = infer_room(s.cell, s.glyph, s.glyph == 'A');
    m.rooms[s.cell] = room;
    switch (s.glyph) {
      case 'A':
        if (m.start >= 0) throw MapError("multiple start cells");
        m.start = s.cell;
        break;
      case 'K':
        if (m.button >= 0) throw MapError("multiple button cells");
        if (room != Room::orange) throw MapError("button must be in the orange room");
        m.button = s.cell;
        break;
      case 'D':
        if (m.display >= 0) throw MapError("multiple display cells");
        if (room != Room::orange) throw MapError("display must be in the orange room");
        m.display = s.cell;
        break;
      case 'C': {
        int* slot = nullptr;
        if (room == Room::green) slot = &m.cookie_cell_green;
        else if (room == Room::blue) slot = &m.cookie_cell_blue;
        else throw MapError("cookie spawn must be in the green or blue room");
        if (*slot >= 0) throw MapError("duplicate cookie spawn in one room");
        *slot = s.cell;
        item_cells.push_back(s.cell);
        break;
      }
      case '1':
      case '2':
      case '3': {
        int ri;
        if (room == Room::green) ri = 0;
        else if (room == Room::blue) ri = 1;
        else throw MapError("symbol cell must be in the green or blue room");
        const int si = s.glyph - '1';
        if (m.symbol_cells[ri][si] >= 0)
          throw MapError("duplicate symbol cell in one room");
        m.symbol_cells[ri][si] = s.cell;
        item_cells.push_back(s.cell);
        break;
      }
    }
  }
  if (m.start < 0) throw MapError("map has no start cell 'A'");

  // Doorway distance: every cookie/symbol cell must be at least 2 moves from
  // every doorway of its room, so room entry is observed strictly before the
  // item can be reached.
  for (int cell : item_cells) {
    const Room room = m.rooms[cell];
    std::vector<int> dist(m.cell_count(), -1);
    std::deque<int> queue{cell};
    dist[cell] = 0;
    while (!queue.empty()) {
      const int cur = queue.front();
      queue.pop_front();
      for (int a = 0; a < kNumActions; ++a) {
        const int nxt = move_from(m, cur, static_cast<Action>(a));
        if (nxt == cur || dist[nxt] >= 0) continue;
        dist[nxt] = dist[cur] + 1;
        queue.push_back(nxt);
      }
    }
    for (int d = 0; d < m.cell_count(); ++d) {
      if (m.walls[d] || m.rooms[d] != Room::none) continue;
      bool doorway = false;
      for (int a = 0; a < kNumActions && !doorway; ++a) {
        const int n = move_from(m, d, static_cast<Action>(a));
        doorway = n != d && m.rooms[n] == room;
      }
      if (doorway && dist[d] >= 0 && dist[d] < 2)
        throw MapError("item cell too close to a doorway of its room");
    }
  }
  return m;
}

const char* const kDefaultCookieMap =
    "#########\n"
    "#GGG#BBB#\n"
    "#GCG#BCB#\n"
    "#GGG#BBB#\n"
    "##H###H##\n"
    "#HHHHHHH#\n"
    "####H####\n"
    "#OOOOOOO#\n"
    "#OOOKOOO#\n"
    "#OOOAOOO#\n"
    "#########\n";

const char* const kDefaultSymbolMap =
    "#############\n"
    "#BBB#OOO#GGG#\n"
    "#B1B#ODO#G1G#\n"
    "#B2BHOAOHG2G#\n"
    "#B3B#OOO#G3G#\n"
    "#############\n";

// ---------------------------------------------------------------------------
// CookieWorld

CookieWorldEnv::CookieWorldEnv(GridMap map, int step_limit)
    : map_(std::move(map)),
      step_limit_(step_limit),
      alphabet_({"room_orange", "room_green", "room_blue", "button", "cookie",
                 "eaten"}) {
  if (step_limit_ < 1) throw EnvError("step limit must be >= 1");
  if (map_.button < 0) throw EnvError("cookie world map needs a button 'K'");
  if (map_.cookie_cell_green < 0 || map_.cookie_cell_blue < 0)
    throw EnvError("cookie world map needs a cookie spawn in green and blue");
  if (map_.display >= 0 || map_.symbol_cells[0][0] >= 0 ||
      map_.symbol_cells[1][0] >= 0)
    throw EnvError("map contains symbol-world cells");
}

Observation CookieWorldEnv::observe(const EnvState& s) const {
  const Room room = map_.room_at(s.agent);
  const bool visible =
      s.aux >= 0 && room != Room::none && map_.room_at(s.aux) == room;
  return {s.agent, room, visible ? 1 : 0};
}

rm::LabelSet CookieWorldEnv::compute_label(const EnvState& before,
                                           const EnvState& after) const {
  rm::LabelSet l;
  const Room room = map_.room_at(after.agent);
  const int rb = room_bit(room);
  if (rb >= 0) l = l.with(rb);
  if (after.agent == map_.button && before.agent != map_.button)
    l = l.with(3);  // button (edge-triggered)
  if (after.aux >= 0 && room != Room::none && map_.room_at(after.aux) == room)
    l = l.with(4);  // cookie visible
  if (before.aux >= 0 && after.agent == before.aux && after.aux < 0)
    l = l.with(5);  // eaten
  return l;
}

StepOutcome CookieWorldEnv::reset(Rng&) const {
  EnvState s{map_.start, -1, 0, Status::running};
  return {s, observe(s), compute_label(s, s), s.status};
}

StepOutcome CookieWorldEnv::step(const EnvState& state, Action action,
                                 Rng& rng) const {
  if (state.status != Status::running)
    throw EnvError("step on a finished episode");
  EnvState s = state;
  s.agent = move_from(map_, s.agent, action);
  ++s.step_count;
  if (s.agent == map_.button && state.agent != map_.button) {
    s.aux = rng.next_index(2) == 0 ? map_.cookie_cell_green
                                   : map_.cookie_cell_blue;
  } else if (s.aux >= 0 && s.agent == s.aux) {
    s.aux = -1;
    s.status = Status::success;
  }
  if (s.status == Status::running && s.step_count >= step_limit_)
    s.status = Status::timeout;
  return {s, observe(s), compute_label(state, s), s.status};
}

// ---------------------------------------------------------------------------
// SymbolWorld

SymbolWorldEnv::SymbolWorldEnv(GridMap map, int step_limit)
    : map_(std::move(map)),
      step_limit_(step_limit),
      alphabet_({"room_orange", "room_green", "room_blue", "sym_club",
                 "sym_spade", "sym_diamond", "got_club", "got_spade",
                 "got_diamond", "arrow_right", "arrow_left"}) {
  if (step_limit_ < 1) throw EnvError("step limit must be >= 1");
  if (map_.display < 0) throw EnvError("symbol world map needs a display 'D'");
  for (int r = 0; r < 2; ++r)
    for (int s = 0; s < 3; ++s)
      if (map_.symbol_cells[r][s] < 0)
        throw EnvError("symbol world map needs all six symbol cells");
  if (map_.button >= 0 || map_.cookie_cell_green >= 0 ||
      map_.cookie_cell_blue >= 0)
    throw EnvError("map contains cookie-world cells");
}

int SymbolWorldEnv::symbol_at(int cell) const {
  for (int r = 0; r < 2; ++r)
    for (int s = 0; s < 3; ++s)
      if (map_.symbol_cells[r][s] == cell) return s;
  return -1;
}

Observation SymbolWorldEnv::observe(const EnvState& s) const {
  const Room room = map_.room_at(s.agent);
  const int display = room == Room::orange ? 1 + s.aux : 0;
  return {s.agent, room, display};
}

rm::LabelSet SymbolWorldEnv::compute_label(const EnvState& /*before*/,
                                           const EnvState& after) const {
  rm::LabelSet l;
  const Room room = map_.room_at(after.agent);
  const int rb = room_bit(room);
  if (rb >= 0) l = l.with(rb);
  if (room == Room::orange) {
    const int target = after.aux / 3;
    const int constraint = after.aux % 3;
    l = l.with(3 + target);  // sym_*
    if (constraint == static_cast<int>(Constraint::right)) l = l.with(9);
    if (constraint == static_cast<int>(Constraint::left)) l = l.with(10);
  }
  if (room == Room::green || room == Room::blue) {
    const int sym = symbol_at(after.agent);
    if (sym >= 0) l = l.with(6 + sym);  // got_*
  }
  return l;
}

StepOutcome SymbolWorldEnv::reset(Rng& rng) const {
  EnvState s{map_.start, static_cast<int>(rng.next_index(9)), 0,
             Status::running};
  return {s, observe(s), compute_label(s, s), s.status};
}

StepOutcome SymbolWorldEnv::step(const EnvState& state, Action action,
                                 Rng&) const {
  if (state.status != Status::running)
    throw EnvError("step on a finished episode");
  EnvState s = state;
  s.agent = move_from(map_, s.agent, action);
  ++s.step_count;
  const Room room = map_.room_at(s.agent);
  const int sym = (room == Room::green || room == Room::blue)
                      ? symbol_at(s.agent)
                      : -1;
  if (sym >= 0) {
    const int target = s.aux / 3;
    const auto constraint = static_cast<Constraint>(s.aux % 3);
    const bool room_ok = constraint == Constraint::none ||
                         (constraint == Constraint::right && room == Room::green) ||
                         (constraint == Constraint::left && room == Room::blue);
    s.status = (sym == target && room_ok) ? Status::success : Status::failure;
  } else if (s.step_count >= step_limit_) {
    s.status = Status::timeout;
  }
  return {s, observe(s), compute_label(state, s), s.status};
}

}  // namespace rmbench::grid
