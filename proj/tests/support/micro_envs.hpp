#pragma once

// Tiny deterministic environments for oracle tests. They implement the same
// Env interface as the grid worlds but have no map and draw nothing from the
// rng, so their cross-product MDPs can be enumerated exactly.

#include "rmbench/gridworld.hpp"
#include "rmbench/rmcore.hpp"

namespace rmbench::testing {

// Two cells; `right` from cell 0 reaches the goal cell 1. Everything else
// self-loops.
class CorridorEnv : public grid::Env {
 public:
  CorridorEnv() : alphabet_({"goal"}) {}

  const rm::Alphabet& alphabet() const override { return alphabet_; }
  int step_limit() const override { return 1000; }

  grid::StepOutcome reset(Rng&) const override {
    grid::EnvState s{0, 0, 0, grid::Status::running};
    return {s, observe(s), {}, s.status};
  }

  grid::StepOutcome step(const grid::EnvState& state, grid::Action a,
                         Rng&) const override {
    grid::EnvState s = state;
    if (a == grid::Action::right) s.agent = 1;
    if (a == grid::Action::left) s.agent = 0;
    ++s.step_count;
    rm::LabelSet label;
    if (s.agent == 1 && state.agent != 1) {
      label = label.with(0);
      s.status = grid::Status::success;
    }
    return {s, observe(s), label, s.status};
  }

 private:
  grid::Observation observe(const grid::EnvState& s) const {
    return {s.agent, grid::Room::none, 0};
  }
  rm::Alphabet alphabet_;
};

// Open n x n room; start at the top-left corner, goal at the bottom-right.
class RoomEnv : public grid::Env {
 public:
  explicit RoomEnv(int n = 5) : n_(n), alphabet_({"goal"}) {}

  const rm::Alphabet& alphabet() const override { return alphabet_; }
  int step_limit() const override { return 1000; }

  grid::StepOutcome reset(Rng&) const override {
    grid::EnvState s{0, 0, 0, grid::Status::running};
    return {s, observe(s), {}, s.status};
  }

  grid::StepOutcome step(const grid::EnvState& state, grid::Action a,
                         Rng&) const override {
    grid::EnvState s = state;
    int x = s.agent % n_, y = s.agent / n_;
    switch (a) {
      case grid::Action::up: y = std::max(0, y - 1); break;
      case grid::Action::down: y = std::min(n_ - 1, y + 1); break;
      case grid::Action::left: x = std::max(0, x - 1); break;
      case grid::Action::right: x = std::min(n_ - 1, x + 1); break;
    }
    s.agent = y * n_ + x;
    ++s.step_count;
    const int goal = n_ * n_ - 1;
    rm::LabelSet label;
    if (s.agent == goal && state.agent != goal) {
      label = label.with(0);
      s.status = grid::Status::success;
    }
    return {s, observe(s), label, s.status};
  }

 private:
  grid::Observation observe(const grid::EnvState& s) const {
    return {s.agent, grid::Room::none, 0};
  }
  int n_;
  rm::Alphabet alphabet_;
};

// One-transition machine: reach the goal, get +1, stop.
inline rm::RewardMachine goal_rm() {
  rm::Alphabet a({"goal"});
  std::vector<rm::Transition> ts = {
      {0, {rm::LabelSet::of(a, {"goal"})}, 1, 1.0}};
  return rm::RewardMachine::create({"u0", "u1"}, std::move(a), "u0", "u1",
                                   std::move(ts));
}

}  // namespace rmbench::testing
