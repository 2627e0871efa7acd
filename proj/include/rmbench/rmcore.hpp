#pragma once

#include <bit>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rmbench::rm {

class RmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The proposition alphabet P. Names are lowercase identifiers, unique, and
// their position in the vector is the bit index used by LabelSet.
class Alphabet {
 public:
  Alphabet() = default;
  explicit Alphabet(std::vector<std::string> names);

  int size() const { return static_cast<int>(names_.size()); }
  int index_of(std::string_view name) const;  // -1 if absent
  const std::string& name(int i) const { return names_.at(i); }
  const std::vector<std::string>& names() const { return names_; }

  bool operator==(const Alphabet&) const = default;

  static bool valid_name(std::string_view name);

 private:
  std::vector<std::string> names_;
};

// A label L in 2^P, as a bitmask over the owning alphabet.
struct LabelSet {
  std::uint32_t bits = 0;

  static LabelSet of(const Alphabet& alphabet,
                     std::initializer_list<const char*> names);

  bool empty() const { return bits == 0; }
  int size() const { return std::popcount(bits); }
  bool contains(int i) const { return (bits >> i) & 1u; }
  LabelSet with(int i) const { return {bits | (1u << i)}; }
  LabelSet without(int i) const { return {bits & ~(1u << i)}; }
  bool subset_of(LabelSet other) const { return (bits & ~other.bits) == 0; }

  bool operator==(const LabelSet&) const = default;
};

std::string label_to_string(LabelSet label, const Alphabet& alphabet);

// Nonempty event set required on a transition; matched by subset inclusion.
struct Guard {
  LabelSet required;
  bool operator==(const Guard&) const = default;
};

struct Transition {
  int src = -1;
  Guard guard;
  int dst = -1;
  double reward = 0.0;
  bool operator==(const Transition&) const = default;
};

struct RmStep {
  int next_state = -1;
  double reward = 0.0;
  bool operator==(const RmStep&) const = default;
};

// Guarded finite-state transducer over label sets with rewards on
// transitions. Immutable after construction; step() is pure.
//
// Guard matching: a transition (u, g, u', r) is eligible for label L iff
// g ⊆ L. The eligible guard of largest cardinality wins; a label matching
// no guard self-loops with reward 0. Equal-size ties resolve to the
// earliest-declared transition, which makes step() total and deterministic
// even on labels that mix normally exclusive events (noise can produce
// those).
class RewardMachine {
 public:
  static RewardMachine create(std::vector<std::string> state_names,
                              Alphabet alphabet, const std::string& initial,
                              const std::string& terminal,
                              std::vector<Transition> transitions);

  RmStep step(int u, LabelSet label) const;
  bool is_terminal(int u) const { return u == terminal_; }

  int initial_state() const { return initial_; }
  int terminal_state() const { return terminal_; }
  int num_states() const { return static_cast<int>(state_names_.size()); }
  int state_index(std::string_view name) const;  // -1 if absent
  const std::string& state_name(int u) const { return state_names_.at(u); }
  const std::vector<std::string>& state_names() const { return state_names_; }
  const Alphabet& alphabet() const { return alphabet_; }
  const std::vector<Transition>& transitions() const { return transitions_; }

  // Structural equality up to transition ordering.
  bool equivalent(const RewardMachine& other) const;

 private:
  RewardMachine() = default;

  std::vector<std::string> state_names_;
  Alphabet alphabet_;
  int initial_ = -1;
  int terminal_ = -1;
  std::vector<Transition> transitions_;       // declaration order
  std::vector<std::vector<int>> by_source_;   // transition indices per state
};

// Line-oriented text format (see README): `alphabet a,b,c`, `state u0 init`,
// `state u4 terminal`, `trans u0 -> u1 on a,b reward 0`. `#` comments.
RewardMachine parse(const std::string& text);
std::string render(const RewardMachine& machine);

std::uint64_t digest(const RewardMachine& machine);

// The CookieWorld task machine: press the button, locate the cookie, eat it.
RewardMachine cookie_world_rm();

// The SymbolWorld task machine: read the display in the orange room, then
// collect the shown symbol in the room the arrow points at (either room when
// no arrow is shown). 11 states; u10 is terminal.
//
// Task-state index table (constraint: right = collect in the green room,
// left = collect in the blue room):
//   u1 club/right    u2 spade/right   u3 diamond/right
//   u4 club/none     u5 spade/none    u6 diamond/none
//   u7 diamond/left  u8 spade/left    u9 club/left
RewardMachine symbol_world_rm();

}  // namespace rmbench::rm
