#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "rmbench/gridworld.hpp"
#include "rmbench/rmcore.hpp"
#include "rmbench/rng.hpp"

namespace rmbench::qrm {

class QrmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Hyperparams {
  // With a constant learning rate, Q-values oscillate around their fixed
  // point forever and an argmax can be flipped at the moment training ends.
  // The probe-verified checkpoint guards the solution path, but entries the
  // probes never visit (wrong room for a given machine state) have no such
  // guard, and noisy evaluation does land on them. 0.1 keeps the oscillation
  // amplitude below the margin between a real move and a wall bump
  // (measured at 50% SymbolWorld noise: alpha=0.5 leaves 2/30 agents with a
  // greedy cycle off-path, alpha=0.1 leaves 0/30).
  double alpha = 0.1;
  double gamma = 0.9;
  // 0.35 rather than a smaller rate: SymbolWorld's side rooms are behind
  // single-cell doorways, and with less exploration some agents never gather
  // enough wrong-side experience to separate the left/right constraints
  // within the step budget (measured: eps=0.15 converges 0/20 seeds,
  // eps=0.30 is borderline, eps=0.35 converges 40/40 with ~35% budget slack).
  double epsilon = 0.35;
  long train_steps = 300000;
  int episode_cap = 500;
  long eval_every = 5000;
  int convergence_episodes = 100;  // probe episodes per gate; 0 disables

  void validate() const;
};

// One sparse Q-table per reward-machine state, keyed by (observation key,
// action). Missing entries read as 0; the terminal state's table stays empty
// and its max-over-actions reads as 0.
class QTables {
 public:
  QTables() = default;
  explicit QTables(int num_rm_states) : tables_(num_rm_states) {}

  int num_rm_states() const { return static_cast<int>(tables_.size()); }

  double get(int u, std::uint32_t obs_key, int action) const {
    const auto& t = tables_[u];
    const auto it = t.find(entry_key(obs_key, action));
    return it == t.end() ? 0.0 : it->second;
  }
  void set(int u, std::uint32_t obs_key, int action, double value) {
    tables_[u][entry_key(obs_key, action)] = value;
  }
  double max_over_actions(int u, std::uint32_t obs_key) const;
  int greedy(int u, std::uint32_t obs_key) const;  // lowest index on ties

  const std::unordered_map<std::uint64_t, double>& table(int u) const {
    return tables_[u];
  }

  bool operator==(const QTables&) const = default;

  static std::uint64_t entry_key(std::uint32_t obs_key, int action) {
    return (static_cast<std::uint64_t>(obs_key) << 2) |
           static_cast<std::uint64_t>(action);
  }

 private:
  std::vector<std::unordered_map<std::uint64_t, double>> tables_;
};

// One environment transition at the observation level, with its ground-truth
// label already translated into the reward machine's alphabet.
struct Experience {
  grid::Observation o;
  grid::Action a = grid::Action::up;
  grid::Observation next_o;
  rm::LabelSet label;
  grid::Status env_status = grid::Status::running;
};

// Counterfactual update: every non-terminal RM state is advanced through the
// experience's label and its table updated from the single transition.
void qrm_update(QTables& q, const rm::RewardMachine& machine,
                const Experience& x, const Hyperparams& h);

grid::Action greedy_action(const QTables& q, int u, const grid::Observation& o);
grid::Action epsilon_greedy(const QTables& q, int u, const grid::Observation& o,
                            double epsilon, Rng& rng);

// Translation table from one alphabet's bit indices into another's (-1 for
// names absent from `to`). Events without a slot in `to` are dropped, which
// is sound for guard matching since guards only use `to`'s propositions.
std::vector<int> alphabet_map(const rm::Alphabet& from, const rm::Alphabet& to);
rm::LabelSet translate(rm::LabelSet label, const std::vector<int>& map);

// Throws unless every proposition used by the machine's guards exists in the
// environment's alphabet.
void check_compatible(const grid::Env& env, const rm::RewardMachine& machine);

struct TrainResult {
  QTables q;
  bool converged = false;
  // Step count at which the returned tables were taken: the last
  // probe-verified checkpoint when converged, otherwise the full budget.
  long steps_used = 0;
};

// Epsilon-greedy QRM training on ground-truth labels. Internally derives
// three streams from `seed` (exploration, environment, convergence probes).
// Always runs the full `train_steps` budget; every `eval_every` steps it runs
// up to `convergence_episodes` greedy probe episodes and checkpoints the
// tables whenever all of them succeed. Returns the latest verified
// checkpoint, or the final tables if no probe gate ever passed. Deterministic
// given (env, machine, hyperparams, seed).
TrainResult train(const grid::Env& env, const rm::RewardMachine& machine,
                  const Hyperparams& h, std::uint64_t seed);

// Greedy rollout without noise; true iff the episode ends in env success.
bool greedy_episode_succeeds(const grid::Env& env,
                             const rm::RewardMachine& machine, const QTables& q,
                             int episode_cap, Rng& env_rng);

}  // namespace rmbench::qrm
