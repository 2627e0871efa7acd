// Command-line front end: train / sweep / eval / show-rm.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "rmbench/harness.hpp"

namespace fs = std::filesystem;
using namespace rmbench;

namespace {

const char* outcome_name(grid::Status s) {
  switch (s) {
    case grid::Status::success: return "success";
    case grid::Status::failure: return "failure";
    case grid::Status::timeout: return "timeout";
    default: return "running";
  }
}

int cmd_train(const harness::ExperimentConfig& cfg) {
  const auto policies = harness::run_training(cfg);
  std::cout << "trained " << policies.size() << " agent(s)";
  if (cfg.hyper.convergence_episodes > 0) {
    int converged = 0;
    for (const auto& p : policies) converged += p.meta.converged ? 1 : 0;
    std::cout << ", " << converged << " probe-verified";
  }
  std::cout << "; policies in " << cfg.out_dir << '\n';
  return 0;
}

int cmd_sweep(const harness::ExperimentConfig& cfg, const std::string& policies_dir,
              const std::string& format) {
  const auto domain = harness::make_domain(cfg);
  std::vector<harness::TrainedPolicy> policies;
  for (const auto& path : harness::list_policy_files(policies_dir))
    policies.push_back(harness::load_policy(path, cfg.env, domain.map_digest,
                                            domain.rm_digest));
  if (policies.empty()) {
    std::cerr << "no policy files in " << policies_dir << '\n';
    return 1;
  }

  const auto records = harness::evaluate(policies, cfg);
  const auto rows = harness::compute_metrics(records);

  fs::create_directories(cfg.out_dir);
  if (format == "md") {
    harness::write_markdown(rows, (fs::path(cfg.out_dir) / "metrics.md").string());
    harness::write_markdown(rows, std::cout);
  } else {
    harness::write_csv(rows, (fs::path(cfg.out_dir) / "metrics.csv").string());
    harness::write_csv(rows, std::cout);
  }

  // Per-agent breakdown for inspection.
  const auto by_agent = harness::compute_metrics_by_agent(records);
  std::ofstream f(fs::path(cfg.out_dir) / "metrics_by_agent.csv",
                  std::ios::binary);
  f << "agent,noise_level_pct,episodes,n_success,n_failure,n_timeout,"
       "success_rate_pct,avg_steps_success,avg_steps_failure,"
       "avg_failure_reward\n";
  for (const auto& [agent, row] : by_agent) {
    std::ostringstream line;
    harness::write_csv({row}, line);
    const std::string text = line.str();
    f << agent << ',' << text.substr(text.find('\n') + 1);
  }
  return 0;
}

int cmd_eval(const harness::ExperimentConfig& cfg, const std::string& policy_file,
             bool trace) {
  const auto domain = harness::make_domain(cfg);
  const auto policy = harness::load_policy(policy_file, cfg.env,
                                           domain.map_digest, domain.rm_digest);
  const double pct = cfg.noise_levels.at(0);
  harness::RandomTamperer tamperer({pct / 100.0, domain.env->alphabet()});
  std::vector<harness::EpisodeRecord> records;
  for (int e = 0; e < cfg.episodes; ++e) {
    const auto [env_seed, noise_seed] =
        harness::eval_episode_seeds(cfg, policy.meta.agent_id, 0, e);
    Rng env_rng(env_seed);
    Rng noise_rng(noise_seed);
    if (trace) std::cout << "episode " << e << " (seed " << env_seed << ")\n";
    auto rec = harness::run_episode(*domain.env, domain.machine, policy.q,
                                    &tamperer, cfg.step_limit, env_rng,
                                    noise_rng, trace ? &std::cout : nullptr);
    rec.agent = policy.meta.agent_id;
    rec.noise_pct = pct;
    rec.seed = env_seed;
    std::cout << "episode " << e << ": " << outcome_name(rec.outcome)
              << " steps=" << rec.steps << " reward=" << rec.final_reward
              << '\n';
    records.push_back(rec);
  }
  harness::write_csv(harness::compute_metrics(records), std::cout);
  return 0;
}

int cmd_show_rm(const std::string& env) {
  if (env == "cookie") {
    std::cout << rm::render(rm::cookie_world_rm());
  } else if (env == "symbol") {
    std::cout << rm::render(rm::symbol_world_rm());
  } else {
    std::cerr << "unknown env: " << env << '\n';
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reward-machine RL robustness benchmark"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "config file (key=value lines)");

  harness::ExperimentConfig cfg;
  std::string env = cfg.env, map, out, policies_dir, policy_file;
  std::string format = "csv";
  int agents = -1, episodes = -1, step_limit = -1;
  std::uint64_t seed = 0;
  bool have_seed = false;
  std::vector<double> noise;
  bool trace = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--env", env, "environment id: cookie|symbol");
    sub->add_option("--map", map, "path to an ASCII map file");
    sub->add_option("--seed", seed, "master seed")->each([&](const std::string&) {
      have_seed = true;
    });
  };

  auto* train = app.add_subcommand("train", "train agents and save policies");
  add_common(train);
  train->add_option("--agents", agents, "number of agents");
  train->add_option("--out", out, "output directory");

  auto* sweep = app.add_subcommand("sweep", "noise sweep over trained policies");
  add_common(sweep);
  sweep->add_option("--policies", policies_dir, "directory of policy files")
      ->required();
  sweep->add_option("--noise", noise, "noise levels in percent")->delimiter(',');
  sweep->add_option("--episodes", episodes, "episodes per agent and level");
  sweep->add_option("--step-limit", step_limit, "episode step limit");
  sweep->add_option("--format", format, "csv|md")
      ->check(CLI::IsMember({"csv", "md"}));
  sweep->add_option("--out", out, "output directory");

  auto* eval = app.add_subcommand("eval", "evaluate one policy at one noise level");
  add_common(eval);
  eval->add_option("--policy", policy_file, "policy file")->required();
  eval->add_option("--noise", noise, "noise level in percent")->delimiter(',');
  eval->add_option("--episodes", episodes, "episodes to run");
  eval->add_option("--step-limit", step_limit, "episode step limit");
  eval->add_flag("--trace", trace, "verbose per-episode output");

  auto* show = app.add_subcommand("show-rm", "print a builtin reward machine");
  show->add_option("--env", env, "environment id: cookie|symbol")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_path.empty()) cfg = harness::load_config_file(config_path, cfg);
    if (!env.empty()) cfg.env = env;
    if (!map.empty()) cfg.map = map;
    if (agents > 0) cfg.agents = agents;
    if (episodes > 0) cfg.episodes = episodes;
    if (step_limit > 0) cfg.step_limit = step_limit;
    if (have_seed) cfg.seed = seed;
    if (!out.empty()) cfg.out_dir = out;
    if (!noise.empty()) cfg.noise_levels = noise;

    if (train->parsed()) return cmd_train(cfg);
    if (sweep->parsed()) return cmd_sweep(cfg, policies_dir, format);
    if (eval->parsed()) {
      if (cfg.noise_levels.size() != 1 && !noise.empty() && noise.size() != 1)
        throw harness::HarnessError("eval takes a single noise level");
      if (noise.empty()) cfg.noise_levels = {0.0};
      if (episodes <= 0) cfg.episodes = 100;
      return cmd_eval(cfg, policy_file, trace);
    }
    if (show->parsed()) return cmd_show_rm(env);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
