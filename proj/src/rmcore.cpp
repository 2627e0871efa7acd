#include "rmbench/rmcore.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <sstream>
#include <tuple>
#include <unordered_set>

namespace rmbench::rm {

namespace {

std::string format_reward(double r) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", r);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> tokens(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string t;
  while (in >> t) out.push_back(t);
  return out;
}

[[noreturn]] void syntax_error(int lineno, const std::string& what) {
  throw RmError("line " + std::to_string(lineno) + ": " + what);
}

}  // namespace

Alphabet::Alphabet(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.empty()) throw RmError("alphabet must be nonempty");
  if (names_.size() > 32) throw RmError("alphabet larger than 32 propositions");
  std::unordered_set<std::string> seen;
  for (const auto& n : names_) {
    if (!valid_name(n)) throw RmError("invalid proposition name: '" + n + "'");
    if (!seen.insert(n).second)
      throw RmError("duplicate proposition name: '" + n + "'");
  }
}

int Alphabet::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return static_cast<int>(i);
  return -1;
}

bool Alphabet::valid_name(std::string_view name) {
  if (name.empty()) return false;
  if (!(name[0] >= 'a' && name[0] <= 'z')) return false;
  for (char c : name.substr(1)) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    if (!ok) return false;
  }
  return true;
}

LabelSet LabelSet::of(const Alphabet& alphabet,
                      std::initializer_list<const char*> names) {
  LabelSet l;
  for (const char* n : names) {
    const int i = alphabet.index_of(n);
    if (i < 0) throw RmError(std::string("proposition not in alphabet: ") + n);
    l = l.with(i);
  }
  return l;
}

std::string label_to_string(LabelSet label, const Alphabet& alphabet) {
  std::string out = "{";
  bool first = true;
  for (int i = 0; i < alphabet.size(); ++i) {
    if (!label.contains(i)) continue;
    if (!first) out += ',';
    out += alphabet.name(i);
    first = false;
  }
  return out + "}";
}

RewardMachine RewardMachine::create(std::vector<std::string> state_names,
                                    Alphabet alphabet,
                                    const std::string& initial,
                                    const std::string& terminal,
                                    std::vector<Transition> transitions) {
  RewardMachine m;
  m.state_names_ = std::move(state_names);
  m.alphabet_ = std::move(alphabet);

  if (m.state_names_.empty()) throw RmError("machine needs at least one state");
  std::unordered_set<std::string> seen;
  for (const auto& s : m.state_names_)
    if (!seen.insert(s).second) throw RmError("duplicate state name: " + s);

  m.initial_ = m.state_index(initial);
  if (m.initial_ < 0)
    throw RmError("initial state '" + initial + "' not in state set");
  m.terminal_ = m.state_index(terminal);
  if (m.terminal_ < 0)
    throw RmError("terminal state '" + terminal + "' not in state set");

  const int n = m.num_states();
  m.by_source_.resize(n);
  const std::uint32_t alpha_mask =
      m.alphabet_.size() == 32 ? ~0u : ((1u << m.alphabet_.size()) - 1u);
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    const Transition& t = transitions[i];
    if (t.src < 0 || t.src >= n || t.dst < 0 || t.dst >= n)
      throw RmError("transition references unknown state");
    if (t.src == m.terminal_)
      throw RmError("transition out of terminal state " +
                    m.state_names_[m.terminal_]);
    if (t.guard.required.empty())
      throw RmError("empty guard on transition from " + m.state_names_[t.src] +
                    " (the implicit self-loop covers unguarded labels)");
    if ((t.guard.required.bits & ~alpha_mask) != 0)
      throw RmError("guard proposition not in alphabet on transition from " +
                    m.state_names_[t.src]);
    for (int j : m.by_source_[t.src])
      if (transitions[j].guard == t.guard)
        throw RmError("duplicate guard " +
                      label_to_string(t.guard.required, m.alphabet_) +
                      " on state " + m.state_names_[t.src]);
    m.by_source_[t.src].push_back(static_cast<int>(i));
  }
  m.transitions_ = std::move(transitions);
  return m;
}

int RewardMachine::state_index(std::string_view name) const {
  for (std::size_t i = 0; i < state_names_.size(); ++i)
    if (state_names_[i] == name) return static_cast<int>(i);
  return -1;
}

RmStep RewardMachine::step(int u, LabelSet label) const {
  if (u < 0 || u >= num_states()) throw RmError("state index out of range");
  if (u == terminal_)
    throw RmError("step from terminal state " + state_names_[terminal_]);
  int best = -1;
  int best_size = -1;
  for (int i : by_source_[u]) {
    const Transition& t = transitions_[i];
    if (!t.guard.required.subset_of(label)) continue;
    const int sz = t.guard.required.size();
    if (sz > best_size) {  // ties keep the earliest-declared transition
      best = i;
      best_size = sz;
    }
  }
  if (best < 0) return {u, 0.0};  // implicit self-loop
  return {transitions_[best].dst, transitions_[best].reward};
}

bool RewardMachine::equivalent(const RewardMachine& other) const {
  if (state_names_ != other.state_names_) return false;
  if (!(alphabet_ == other.alphabet_)) return false;
  if (initial_ != other.initial_ || terminal_ != other.terminal_) return false;
  auto key = [](const Transition& t) {
    return std::tuple(t.src, t.guard.required.bits, t.dst, t.reward);
  };
  auto a = transitions_;
  auto b = other.transitions_;
  auto lt = [&](const Transition& x, const Transition& y) {
    return key(x) < key(y);
  };
  std::sort(a.begin(), a.end(), lt);
  std::sort(b.begin(), b.end(), lt);
  return a == b;
}

// ---------------------------------------------------------------------------
// Text format

RewardMachine parse(const std::string& text) {
  std::vector<std::string> alphabet_names;
  std::vector<std::string> states;
  std::string initial, terminal;
  struct RawTrans {
    std::string src, dst, props;
    double reward;
    int lineno;
  };
  std::vector<RawTrans> raw;

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool have_alphabet = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto toks = tokens(line);
    if (toks[0] == "alphabet") {
      if (have_alphabet) syntax_error(lineno, "duplicate alphabet statement");
      if (toks.size() != 2) syntax_error(lineno, "expected: alphabet a,b,c");
      for (auto& n : split(toks[1], ',')) alphabet_names.push_back(trim(n));
      have_alphabet = true;
    } else if (toks[0] == "state") {
      if (toks.size() < 2 || toks.size() > 3)
        syntax_error(lineno, "expected: state NAME [init|terminal]");
      states.push_back(toks[1]);
      if (toks.size() == 3) {
        if (toks[2] == "init") {
          if (!initial.empty()) syntax_error(lineno, "duplicate init state");
          initial = toks[1];
        } else if (toks[2] == "terminal") {
          if (!terminal.empty())
            syntax_error(lineno, "duplicate terminal state");
          terminal = toks[1];
        } else {
          syntax_error(lineno, "unknown state qualifier '" + toks[2] + "'");
        }
      }
    } else if (toks[0] == "trans") {
      if (!have_alphabet)
        syntax_error(lineno, "alphabet must be declared before transitions");
      // trans SRC -> DST on a,b reward R
      if (toks.size() != 8 || toks[2] != "->" || toks[4] != "on" ||
          toks[6] != "reward")
        syntax_error(lineno, "expected: trans SRC -> DST on a,b reward R");
      double reward = 0.0;
      try {
        std::size_t pos = 0;
        reward = std::stod(toks[7], &pos);
        if (pos != toks[7].size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        syntax_error(lineno, "bad reward '" + toks[7] + "'");
      }
      raw.push_back({toks[1], toks[3], toks[5], reward, lineno});
    } else {
      syntax_error(lineno, "unknown statement '" + toks[0] + "'");
    }
  }

  if (!have_alphabet) throw RmError("missing alphabet statement");
  if (initial.empty()) throw RmError("missing init state");
  if (terminal.empty()) throw RmError("missing terminal state");

  Alphabet alphabet(alphabet_names);
  auto state_of = [&](const std::string& name, int ln) {
    int i = -1;
    for (std::size_t k = 0; k < states.size(); ++k)
      if (states[k] == name) i = static_cast<int>(k);
    if (i < 0) syntax_error(ln, "unknown state '" + name + "'");
    return i;
  };

  std::vector<Transition> transitions;
  for (const auto& r : raw) {
    LabelSet guard;
    for (auto& p : split(r.props, ',')) {
      const int i = alphabet.index_of(trim(p));
      if (i < 0)
        syntax_error(r.lineno, "proposition '" + trim(p) + "' not in alphabet");
      guard = guard.with(i);
    }
    transitions.push_back(
        {state_of(r.src, r.lineno), {guard}, state_of(r.dst, r.lineno), r.reward});
  }
  return RewardMachine::create(std::move(states), std::move(alphabet), initial,
                               terminal, std::move(transitions));
}

std::string render(const RewardMachine& m) {
  std::string out = "alphabet ";
  const auto& names = m.alphabet().names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out += ',';
    out += names[i];
  }
  out += '\n';
  for (int u = 0; u < m.num_states(); ++u) {
    out += "state " + m.state_name(u);
    if (u == m.initial_state()) out += " init";
    if (u == m.terminal_state()) out += " terminal";
    out += '\n';
  }
  for (const auto& t : m.transitions()) {
    out += "trans " + m.state_name(t.src) + " -> " + m.state_name(t.dst) + " on ";
    bool first = true;
    for (int i = 0; i < m.alphabet().size(); ++i) {
      if (!t.guard.required.contains(i)) continue;
      if (!first) out += ',';
      out += m.alphabet().name(i);
      first = false;
    }
    out += " reward " + format_reward(t.reward) + '\n';
  }
  return out;
}

std::uint64_t digest(const RewardMachine& machine) {
  const std::string text = render(machine);
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a 64
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Builtin machines

RewardMachine cookie_world_rm() {
  Alphabet a({"room_orange", "room_green", "room_blue", "button", "cookie",
              "eaten"});
  auto l = [&](std::initializer_list<const char*> names) {
    return Guard{LabelSet::of(a, names)};
  };
  std::vector<Transition> ts = {
      {0, l({"room_orange", "button"}), 1, 0.0},
      {1, l({"room_blue", "cookie"}), 2, 0.0},
      {1, l({"room_green"}), 2, 0.0},
      {1, l({"room_green", "cookie"}), 3, 0.0},
      {1, l({"room_blue"}), 3, 0.0},
      // The eat guards require the matching room event, not bare {eaten}.
      // On real trajectories the two are equivalent (eating always happens
      // inside the cookie's room), but the counterfactual QRM update also
      // replays experiences through states the agent was not in. With a bare
      // {eaten} guard, u2's table would book a +1 for eating the *green*
      // cookie — impossible once green is known to be empty — and that
      // phantom value leaks through the bootstrap max into u2's doorway
      // entries, trapping the greedy policy in the wrong room.
      {2, l({"room_blue", "eaten"}), 4, 1.0},
      {2, l({"room_orange", "button"}), 1, 0.0},
      {3, l({"room_green", "eaten"}), 4, 1.0},
      {3, l({"room_orange", "button"}), 1, 0.0},
  };
  return RewardMachine::create({"u0", "u1", "u2", "u3", "u4"}, std::move(a),
                               "u0", "u4", std::move(ts));
}

RewardMachine symbol_world_rm() {
  Alphabet a({"room_orange", "room_green", "room_blue", "sym_club",
              "sym_spade", "sym_diamond", "got_club", "got_spade",
              "got_diamond", "arrow_right", "arrow_left"});
  auto l = [&](std::initializer_list<const char*> names) {
    return Guard{LabelSet::of(a, names)};
  };
  const char* sym[3] = {"sym_club", "sym_spade", "sym_diamond"};
  const char* got[3] = {"got_club", "got_spade", "got_diamond"};
  // Task-state index table; see header. Constraints: 0 right, 1 none, 2 left.
  auto task_state = [](int symbol, int constraint) {
    static const int table[3][3] = {{1, 4, 9}, {2, 5, 8}, {3, 6, 7}};
    return table[symbol][constraint];
  };

  std::vector<Transition> ts;
  for (int s = 0; s < 3; ++s) {
    ts.push_back({0, l({"room_orange", sym[s], "arrow_right"}),
                  task_state(s, 0), 0.0});
    ts.push_back({0, l({"room_orange", sym[s]}), task_state(s, 1), 0.0});
    ts.push_back({0, l({"room_orange", sym[s], "arrow_left"}),
                  task_state(s, 2), 0.0});
  }
  for (int s = 0; s < 3; ++s) {
    for (int c = 0; c < 3; ++c) {
      const int u = task_state(s, c);
      const double green_reward = (c == 2) ? -1.0 : 1.0;
      const double blue_reward = (c == 0) ? -1.0 : 1.0;
      ts.push_back({u, l({"room_green", got[s]}), 10, green_reward});
      ts.push_back({u, l({"room_blue", got[s]}), 10, blue_reward});
      for (int w = 0; w < 3; ++w)
        if (w != s) ts.push_back({u, l({got[w]}), 10, -1.0});
    }
  }
  return RewardMachine::create(
      {"u0", "u1", "u2", "u3", "u4", "u5", "u6", "u7", "u8", "u9", "u10"},
      std::move(a), "u0", "u10", std::move(ts));
}

}  // namespace rmbench::rm
