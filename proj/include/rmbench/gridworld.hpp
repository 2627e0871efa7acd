#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rmbench/rmcore.hpp"
#include "rmbench/rng.hpp"

namespace rmbench::grid {

class MapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EnvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Action : int { up = 0, down = 1, left = 2, right = 3 };
inline constexpr int kNumActions = 4;

enum class Room : std::int8_t { none = 0, orange = 1, green = 2, blue = 3 };

enum class Symbol : int { club = 0, spade = 1, diamond = 2 };
enum class Constraint : int { right = 0, none = 1, left = 2 };

enum class Status : int { running = 0, success = 1, failure = 2, timeout = 3 };

// Parsed ASCII map. Cells are indexed row-major (idx = y * width + x).
// Glyphs: '#' wall, 'H' room-less floor, 'O'/'G'/'B' colored floor,
// 'K' button, 'C' cookie spawn, '1'/'2'/'3' club/spade/diamond symbol cells,
// 'D' display, 'A' start. Special glyphs sit on floor; their room is
// inferred from adjacent colored cells.
struct GridMap {
  int width = 0;
  int height = 0;
  std::vector<std::int8_t> walls;  // 1 = wall
  std::vector<Room> rooms;         // Room::none for walls and hallway

  int start = -1;
  int button = -1;
  int display = -1;
  int cookie_cell_green = -1;
  int cookie_cell_blue = -1;
  // symbol_cells[room][symbol]; room index 0 = green, 1 = blue.
  std::array<std::array<int, 3>, 2> symbol_cells = {{{-1, -1, -1},
                                                     {-1, -1, -1}}};

  bool is_wall(int idx) const { return walls[idx] != 0; }
  Room room_at(int idx) const { return rooms[idx]; }
  int index(int x, int y) const { return y * width + x; }
  int cell_count() const { return width * height; }
};

GridMap parse_map(const std::string& text);

extern const char* const kDefaultCookieMap;
extern const char* const kDefaultSymbolMap;

// Environment-side state. `aux` is domain-specific: CookieWorld stores the
// cookie's cell (-1 when absent); SymbolWorld stores the episode task as
// symbol * 3 + constraint.
struct EnvState {
  int agent = -1;
  int aux = -1;
  int step_count = 0;
  Status status = Status::running;
};

// What the agent sees: its own cell plus the content of the room it is in.
// `feature` is domain-specific: cookie visibility (0/1) for CookieWorld;
// 0 or 1 + task index for the SymbolWorld display (shown only in orange).
struct Observation {
  int cell = -1;
  Room room = Room::none;
  int feature = 0;

  std::uint32_t key() const {
    return static_cast<std::uint32_t>(cell) * 16u +
           static_cast<std::uint32_t>(feature);
  }
  bool operator==(const Observation&) const = default;
};

struct StepOutcome {
  EnvState state;
  Observation obs;
  rm::LabelSet label;  // ground truth, in the environment's alphabet
  Status status = Status::running;
};

// Deterministic partially observable grid environment. Instances are
// immutable and shareable; all episode state lives in EnvState, so step()
// is a pure function of (state, action, rng draw).
class Env {
 public:
  virtual ~Env() = default;

  virtual const rm::Alphabet& alphabet() const = 0;
  virtual StepOutcome reset(Rng& rng) const = 0;
  virtual StepOutcome step(const EnvState& state, Action action,
                           Rng& rng) const = 0;
  virtual int step_limit() const = 0;
};

class CookieWorldEnv : public Env {
 public:
  explicit CookieWorldEnv(GridMap map, int step_limit = 500);

  const rm::Alphabet& alphabet() const override { return alphabet_; }
  StepOutcome reset(Rng& rng) const override;
  StepOutcome step(const EnvState& state, Action action,
                   Rng& rng) const override;
  int step_limit() const override { return step_limit_; }

  const GridMap& map() const { return map_; }
  rm::LabelSet compute_label(const EnvState& before,
                             const EnvState& after) const;

 private:
  Observation observe(const EnvState& s) const;

  GridMap map_;
  int step_limit_;
  rm::Alphabet alphabet_;
};

class SymbolWorldEnv : public Env {
 public:
  explicit SymbolWorldEnv(GridMap map, int step_limit = 500);

  const rm::Alphabet& alphabet() const override { return alphabet_; }
  StepOutcome reset(Rng& rng) const override;
  StepOutcome step(const EnvState& state, Action action,
                   Rng& rng) const override;
  int step_limit() const override { return step_limit_; }

  const GridMap& map() const { return map_; }
  rm::LabelSet compute_label(const EnvState& before,
                             const EnvState& after) const;

 private:
  Observation observe(const EnvState& s) const;
  // Returns the symbol at `cell` in a green/blue room, or -1.
  int symbol_at(int cell) const;

  GridMap map_;
  int step_limit_;
  rm::Alphabet alphabet_;
};

// Neighbor cell in direction `a`, or the same cell when the move hits a wall.
int move_from(const GridMap& map, int cell, Action a);

}  // namespace rmbench::grid
