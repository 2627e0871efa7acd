#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rmbench/gridworld.hpp"
#include "rmbench/noise.hpp"
#include "rmbench/qrm.hpp"
#include "rmbench/rmcore.hpp"

namespace rmbench::harness {

class HarnessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::uint64_t fnv1a64(const std::string& text);

struct ExperimentConfig {
  std::string env = "cookie";  // cookie | symbol
  std::string map;             // path to a map file; empty = builtin default
  int agents = 10;
  int episodes = 1000;  // per agent and noise level
  int step_limit = 500;
  std::vector<double> noise_levels = {0, 1, 5, 10, 20, 30, 40, 50};  // percent
  qrm::Hyperparams hyper;
  std::uint64_t seed = 1;
  std::string out_dir = "out";

  void validate() const;
};

// Flat key=value file; keys match the config field names (hyperparameters
// flattened: alpha, gamma, epsilon, train_steps, episode_cap, eval_every,
// convergence_episodes). Unknown keys are errors. `base` supplies defaults.
ExperimentConfig load_config_file(const std::string& path,
                                  const ExperimentConfig& base = {});

// Environment + reward machine pair resolved from a config.
struct Domain {
  std::unique_ptr<grid::Env> env;
  rm::RewardMachine machine;
  std::string map_text;
  std::uint64_t map_digest = 0;
  std::uint64_t rm_digest = 0;
};

Domain make_domain(const ExperimentConfig& cfg);

struct PolicyMeta {
  int version = 1;
  std::string env;
  std::uint64_t map_digest = 0;
  std::uint64_t rm_digest = 0;
  qrm::Hyperparams hyper;
  std::uint64_t seed = 0;
  int agent_id = 0;
  bool converged = false;
};

struct TrainedPolicy {
  qrm::QTables q;
  PolicyMeta meta;
};

void save_policy(const TrainedPolicy& policy, const std::string& path);
TrainedPolicy load_policy(const std::string& path);
// Digest-checked variant; throws on env/map/machine mismatch.
TrainedPolicy load_policy(const std::string& path, const std::string& env_id,
                          std::uint64_t map_digest, std::uint64_t rm_digest);

struct EpisodeRecord {
  int agent = 0;
  double noise_pct = 0.0;
  grid::Status outcome = grid::Status::timeout;
  int steps = 0;
  double final_reward = 0.0;  // ground truth; timeouts score 0
  std::uint64_t seed = 0;
};

// One row per noise level; the four averages are rounded to 2 decimals (the
// reported precision) and absent when their denominator is empty. Failure
// statistics pool genuine failures and timeouts.
struct MetricsRow {
  double noise_pct = 0.0;
  long episodes = 0;
  long n_success = 0;
  long n_failure = 0;
  long n_timeout = 0;
  double success_rate_pct = 0.0;
  std::optional<double> avg_steps_success;
  std::optional<double> avg_steps_failure;
  std::optional<double> avg_failure_reward;

  bool operator==(const MetricsRow&) const = default;
};

// Per-step label transform applied between the environment's ground-truth
// labelling and the agent's reward-machine update.
class LabelTamperer {
 public:
  virtual ~LabelTamperer() = default;
  virtual void episode_start() {}
  virtual rm::LabelSet apply(rm::LabelSet label, Rng& rng) = 0;
};

class RandomTamperer : public LabelTamperer {
 public:
  explicit RandomTamperer(noise::NoiseConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
  }
  rm::LabelSet apply(rm::LabelSet label, Rng& rng) override {
    return noise::tamper_label(label, cfg_, rng);
  }

 private:
  noise::NoiseConfig cfg_;
};

// Greedy evaluation episode. The agent tracks its reward-machine state on
// (possibly tampered) labels and is clamped to its last non-terminal state if
// noise drives the machine into the terminal; success/failure accounting uses
// the environment's ground truth only. `tamperer` may be null (bypass).
EpisodeRecord run_episode(const grid::Env& env, const rm::RewardMachine& machine,
                          const qrm::QTables& q, LabelTamperer* tamperer,
                          int step_limit, Rng& env_rng, Rng& noise_rng,
                          std::ostream* trace = nullptr);

// Trains cfg.agents QRM agents with per-agent seeds derived from the master
// seed and persists each policy under cfg.out_dir. Non-convergent agents are
// flagged on the returned metadata (and stderr), not fatal.
std::vector<TrainedPolicy> run_training(const ExperimentConfig& cfg);

// agents x noise levels x episodes greedy evaluation sweep.
std::vector<EpisodeRecord> evaluate(const std::vector<TrainedPolicy>& policies,
                                    const ExperimentConfig& cfg);

// (environment seed, noise seed) for one evaluation episode. Streams are
// independent per (agent, level, episode) and per role, so noise never
// perturbs environment randomness.
std::pair<std::uint64_t, std::uint64_t> eval_episode_seeds(
    const ExperimentConfig& cfg, int agent_id, std::size_t level_index,
    int episode);

std::vector<MetricsRow> compute_metrics(const std::vector<EpisodeRecord>& records);
// Per-agent breakdown: one row per (agent, noise level), agent-major.
std::vector<std::pair<int, MetricsRow>> compute_metrics_by_agent(
    const std::vector<EpisodeRecord>& records);

void write_csv(const std::vector<MetricsRow>& rows, std::ostream& out);
void write_csv(const std::vector<MetricsRow>& rows, const std::string& path);
std::vector<MetricsRow> read_csv(std::istream& in);
std::vector<MetricsRow> read_csv_file(const std::string& path);
void write_markdown(const std::vector<MetricsRow>& rows, std::ostream& out);
void write_markdown(const std::vector<MetricsRow>& rows, const std::string& path);

// Policy file naming inside an output directory: agent_<id>.policy.
std::string policy_path(const std::string& dir, int agent_id);
std::vector<std::string> list_policy_files(const std::string& dir);

}  // namespace rmbench::harness
