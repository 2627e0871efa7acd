#pragma once

// Independent oracle: enumerates the explicit (environment state, reward
// machine state) cross-product of a deterministic environment and solves it
// by value iteration. Shares no code with the QRM implementation path.

#include <array>
#include <map>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "rmbench/gridworld.hpp"
#include "rmbench/qrm.hpp"
#include "rmbench/rmcore.hpp"

namespace rmbench::testing {

struct CrossProduct {
  struct Node {
    grid::EnvState env;
    int u;
  };
  std::vector<Node> nodes;
  std::vector<std::array<int, grid::kNumActions>> next;  // -1 = absorbed
  std::vector<std::array<double, grid::kNumActions>> reward;
  std::vector<std::uint32_t> obs_key;
  int start = -1;
};

// The environment must be deterministic and must not consume rng draws.
inline CrossProduct enumerate_cross_product(const grid::Env& env,
                                            const rm::RewardMachine& machine,
                                            int max_states = 500) {
  const auto env2rm = qrm::alphabet_map(env.alphabet(), machine.alphabet());
  CrossProduct cp;
  std::map<std::tuple<int, int, int>, int> index;  // (agent, aux, u)

  Rng dummy(0);
  const auto start = env.reset(dummy);

  auto node_of = [&](const grid::EnvState& s, std::uint32_t key, int u) {
    const auto k = std::tuple(s.agent, s.aux, u);
    const auto it = index.find(k);
    if (it != index.end()) return it->second;
    const int id = static_cast<int>(cp.nodes.size());
    if (id >= max_states)
      throw std::runtime_error("cross product larger than the state cap");
    index.emplace(k, id);
    cp.nodes.push_back({{s.agent, s.aux, 0, grid::Status::running}, u});
    cp.obs_key.push_back(key);
    cp.next.push_back({-1, -1, -1, -1});
    cp.reward.push_back({0, 0, 0, 0});
    return id;
  };

  cp.start = node_of(start.state, start.obs.key(), machine.initial_state());
  for (std::size_t i = 0; i < cp.nodes.size(); ++i) {
    const auto node = cp.nodes[i];
    for (int a = 0; a < grid::kNumActions; ++a) {
      const auto out =
          env.step(node.env, static_cast<grid::Action>(a), dummy);
      const auto rs = machine.step(node.u, qrm::translate(out.label, env2rm));
      cp.reward[i][a] = rs.reward;
      if (machine.is_terminal(rs.next_state) ||
          out.status != grid::Status::running) {
        cp.next[i][a] = -1;
      } else {
        cp.next[i][a] = node_of(out.state, out.obs.key(), rs.next_state);
      }
    }
  }
  return cp;
}

inline std::vector<std::array<double, grid::kNumActions>> value_iteration(
    const CrossProduct& cp, double gamma, double tol = 1e-13,
    int max_iters = 1000000) {
  std::vector<std::array<double, grid::kNumActions>> q(
      cp.nodes.size(), {0.0, 0.0, 0.0, 0.0});
  auto vmax = [&](int i) {
    double best = q[i][0];
    for (int a = 1; a < grid::kNumActions; ++a) best = std::max(best, q[i][a]);
    return best;
  };
  for (int it = 0; it < max_iters; ++it) {
    double delta = 0.0;
    for (std::size_t i = 0; i < cp.nodes.size(); ++i) {
      for (int a = 0; a < grid::kNumActions; ++a) {
        const int j = cp.next[i][a];
        const double target =
            cp.reward[i][a] + (j < 0 ? 0.0 : gamma * vmax(j));
        delta = std::max(delta, std::abs(target - q[i][a]));
        q[i][a] = target;
      }
    }
    if (delta < tol) break;
  }
  return q;
}

inline double optimal_return(const CrossProduct& cp, double gamma) {
  const auto q = value_iteration(cp, gamma);
  double best = q[cp.start][0];
  for (int a = 1; a < grid::kNumActions; ++a)
    best = std::max(best, q[cp.start][a]);
  return best;
}

// Discounted return of the learned greedy policy rolled out on the explicit
// model from the start state.
inline double greedy_rollout_return(const CrossProduct& cp,
                                    const qrm::QTables& q, double gamma,
                                    int max_steps = 100000) {
  int node = cp.start;
  double ret = 0.0;
  double disc = 1.0;
  for (int t = 0; t < max_steps && node >= 0; ++t) {
    const int u = cp.nodes[node].u;
    const std::uint32_t key = cp.obs_key[node];
    int a = 0;
    double best = q.get(u, key, 0);
    for (int b = 1; b < grid::kNumActions; ++b) {
      const double v = q.get(u, key, b);
      if (v > best) {
        best = v;
        a = b;
      }
    }
    ret += disc * cp.reward[node][a];
    disc *= gamma;
    node = cp.next[node][a];
  }
  return ret;
}

}  // namespace rmbench::testing
