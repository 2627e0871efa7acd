#include "rmbench/harness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace rmbench::harness {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kRoleTrain = 0x524f4c455f545231ULL;
constexpr std::uint64_t kRoleEvalEnv = 0x524f4c455f455631ULL;
constexpr std::uint64_t kRoleEvalNoise = 0x524f4c455f4e4f31ULL;

double round2(double x) { return std::round(x * 100.0) / 100.0; }

std::string fmt2(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", x);
  return buf;
}

std::string fmt_hexfloat(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", x);
  return buf;
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
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

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw HarnessError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void ExperimentConfig::validate() const {
  if (env != "cookie" && env != "symbol")
    throw HarnessError("env must be 'cookie' or 'symbol'");
  if (agents < 1) throw HarnessError("agents must be >= 1");
  if (episodes < 1) throw HarnessError("episodes must be >= 1");
  if (step_limit < 1) throw HarnessError("step_limit must be >= 1");
  for (double k : noise_levels)
    if (!(k >= 0.0 && k <= 100.0))
      throw HarnessError("noise levels must be percentages in [0,100]");
  hyper.validate();
}

ExperimentConfig load_config_file(const std::string& path,
                                  const ExperimentConfig& base) {
  ExperimentConfig cfg = base;
  std::istringstream in(read_file(path));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw HarnessError(path + ":" + std::to_string(lineno) +
                         ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "env") cfg.env = value;
      else if (key == "map") cfg.map = value;
      else if (key == "agents") cfg.agents = std::stoi(value);
      else if (key == "episodes") cfg.episodes = std::stoi(value);
      else if (key == "step_limit") cfg.step_limit = std::stoi(value);
      else if (key == "noise_levels") {
        cfg.noise_levels.clear();
        for (auto& t : split(value, ',')) cfg.noise_levels.push_back(std::stod(trim(t)));
      } else if (key == "seed") cfg.seed = std::stoull(value);
      else if (key == "out_dir") cfg.out_dir = value;
      else if (key == "alpha") cfg.hyper.alpha = std::stod(value);
      else if (key == "gamma") cfg.hyper.gamma = std::stod(value);
      else if (key == "epsilon") cfg.hyper.epsilon = std::stod(value);
      else if (key == "train_steps") cfg.hyper.train_steps = std::stol(value);
      else if (key == "episode_cap") cfg.hyper.episode_cap = std::stoi(value);
      else if (key == "eval_every") cfg.hyper.eval_every = std::stol(value);
      else if (key == "convergence_episodes")
        cfg.hyper.convergence_episodes = std::stoi(value);
      else
        throw HarnessError(path + ":" + std::to_string(lineno) +
                           ": unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw HarnessError(path + ":" + std::to_string(lineno) +
                         ": bad value for '" + key + "'");
    }
  }
  return cfg;
}

Domain make_domain(const ExperimentConfig& cfg) {
  if (cfg.env != "cookie" && cfg.env != "symbol")
    throw HarnessError("unknown env id: " + cfg.env);
  const bool cookie = cfg.env == "cookie";
  std::string map_text =
      cfg.map.empty() ? (cookie ? grid::kDefaultCookieMap : grid::kDefaultSymbolMap)
                      : read_file(cfg.map);
  auto map = grid::parse_map(map_text);
  std::unique_ptr<grid::Env> env;
  if (cookie)
    env = std::make_unique<grid::CookieWorldEnv>(std::move(map), cfg.step_limit);
  else
    env = std::make_unique<grid::SymbolWorldEnv>(std::move(map), cfg.step_limit);
  rm::RewardMachine machine = cookie ? rm::cookie_world_rm()
                                     : rm::symbol_world_rm();
  const std::uint64_t map_digest = fnv1a64(map_text);
  const std::uint64_t rm_digest = rm::digest(machine);
  return {std::move(env), std::move(machine), std::move(map_text), map_digest,
          rm_digest};
}

// ---------------------------------------------------------------------------
// Policy persistence

void save_policy(const TrainedPolicy& policy, const std::string& path) {
  std::ostringstream out;
  const PolicyMeta& m = policy.meta;
  char hex[32];
  out << "rmbench-policy " << m.version << '\n';
  out << "env " << m.env << '\n';
  out << "agent " << m.agent_id << '\n';
  out << "seed " << m.seed << '\n';
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(m.map_digest));
  out << "map_digest " << hex << '\n';
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(m.rm_digest));
  out << "rm_digest " << hex << '\n';
  out << "converged " << (m.converged ? 1 : 0) << '\n';
  out << "alpha " << fmt_hexfloat(m.hyper.alpha) << '\n';
  out << "gamma " << fmt_hexfloat(m.hyper.gamma) << '\n';
  out << "epsilon " << fmt_hexfloat(m.hyper.epsilon) << '\n';
  out << "train_steps " << m.hyper.train_steps << '\n';
  out << "episode_cap " << m.hyper.episode_cap << '\n';
  out << "eval_every " << m.hyper.eval_every << '\n';
  out << "convergence_episodes " << m.hyper.convergence_episodes << '\n';
  out << "tables " << policy.q.num_rm_states() << '\n';
  for (int u = 0; u < policy.q.num_rm_states(); ++u) {
    const auto& t = policy.q.table(u);
    std::vector<std::pair<std::uint64_t, double>> entries(t.begin(), t.end());
    std::sort(entries.begin(), entries.end());
    out << "table " << u << ' ' << entries.size() << '\n';
    for (const auto& [k, v] : entries)
      out << k << ' ' << fmt_hexfloat(v) << '\n';
  }
  out << "end\n";

  std::ofstream f(path, std::ios::binary);
  if (!f) throw HarnessError("cannot write policy file: " + path);
  f << out.str();
}

TrainedPolicy load_policy(const std::string& path) {
  std::istringstream in(read_file(path));
  auto corrupt = [&](const std::string& what) {
    return HarnessError("corrupt policy file " + path + ": " + what);
  };
  std::string word;
  TrainedPolicy p;
  PolicyMeta& m = p.meta;
  if (!(in >> word) || word != "rmbench-policy") throw corrupt("bad magic");
  if (!(in >> m.version)) throw corrupt("missing version");
  if (m.version != 1)
    throw HarnessError("unsupported policy version in " + path);

  auto expect = [&](const char* key) {
    if (!(in >> word) || word != key)
      throw corrupt(std::string("expected '") + key + "'");
  };
  auto read_u64_hex = [&]() {
    if (!(in >> word) || word.size() != 16) throw corrupt("bad digest");
    return std::strtoull(word.c_str(), nullptr, 16);
  };
  auto read_double = [&]() {
    if (!(in >> word)) throw corrupt("missing number");
    char* endp = nullptr;
    const double v = std::strtod(word.c_str(), &endp);
    if (endp != word.c_str() + word.size()) throw corrupt("bad number");
    return v;
  };

  expect("env");
  if (!(in >> m.env)) throw corrupt("missing env");
  expect("agent");
  if (!(in >> m.agent_id)) throw corrupt("missing agent id");
  expect("seed");
  if (!(in >> m.seed)) throw corrupt("missing seed");
  expect("map_digest");
  m.map_digest = read_u64_hex();
  expect("rm_digest");
  m.rm_digest = read_u64_hex();
  expect("converged");
  int conv = 0;
  if (!(in >> conv)) throw corrupt("missing converged flag");
  m.converged = conv != 0;
  expect("alpha");
  m.hyper.alpha = read_double();
  expect("gamma");
  m.hyper.gamma = read_double();
  expect("epsilon");
  m.hyper.epsilon = read_double();
  expect("train_steps");
  if (!(in >> m.hyper.train_steps)) throw corrupt("missing train_steps");
  expect("episode_cap");
  if (!(in >> m.hyper.episode_cap)) throw corrupt("missing episode_cap");
  expect("eval_every");
  if (!(in >> m.hyper.eval_every)) throw corrupt("missing eval_every");
  expect("convergence_episodes");
  if (!(in >> m.hyper.convergence_episodes))
    throw corrupt("missing convergence_episodes");

  expect("tables");
  int num_states = 0;
  if (!(in >> num_states) || num_states < 1) throw corrupt("bad table count");
  p.q = qrm::QTables(num_states);
  for (int u = 0; u < num_states; ++u) {
    expect("table");
    int idx = 0;
    std::size_t count = 0;
    if (!(in >> idx >> count) || idx != u) throw corrupt("bad table header");
    for (std::size_t i = 0; i < count; ++i) {
      std::uint64_t key = 0;
      if (!(in >> key)) throw corrupt("truncated table");
      const double v = read_double();
      p.q.set(u, static_cast<std::uint32_t>(key >> 2),
              static_cast<int>(key & 3), v);
    }
  }
  if (!(in >> word) || word != "end") throw corrupt("missing end marker");
  return p;
}

TrainedPolicy load_policy(const std::string& path, const std::string& env_id,
                          std::uint64_t map_digest, std::uint64_t rm_digest) {
  TrainedPolicy p = load_policy(path);
  if (p.meta.env != env_id)
    throw HarnessError("policy " + path + " was trained for env '" +
                       p.meta.env + "', expected '" + env_id + "'");
  if (p.meta.map_digest != map_digest)
    throw HarnessError("policy " + path + " map digest mismatch");
  if (p.meta.rm_digest != rm_digest)
    throw HarnessError("policy " + path + " reward machine digest mismatch");
  return p;
}

std::string policy_path(const std::string& dir, int agent_id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "agent_%03d.policy", agent_id);
  return (fs::path(dir) / buf).string();
}

std::vector<std::string> list_policy_files(const std::string& dir) {
  std::vector<std::string> out;
  if (!fs::is_directory(dir))
    throw HarnessError("not a directory: " + dir);
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.rfind("agent_", 0) == 0 && e.path().extension() == ".policy")
      out.push_back(e.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Training and evaluation

std::vector<TrainedPolicy> run_training(const ExperimentConfig& cfg) {
  cfg.validate();
  const Domain domain = make_domain(cfg);
  fs::create_directories(cfg.out_dir);
  std::vector<TrainedPolicy> policies;
  policies.reserve(cfg.agents);
  for (int i = 0; i < cfg.agents; ++i) {
    const std::uint64_t agent_seed = derive_seed(cfg.seed, kRoleTrain, i);
    auto result = qrm::train(*domain.env, domain.machine, cfg.hyper, agent_seed);
    if (cfg.hyper.convergence_episodes > 0 && !result.converged)
      std::cerr << "warning: agent " << i
                << " exhausted its training budget without converging\n";
    TrainedPolicy p{std::move(result.q),
                    {1, cfg.env, domain.map_digest, domain.rm_digest, cfg.hyper,
                     agent_seed, i, result.converged}};
    save_policy(p, policy_path(cfg.out_dir, i));
    policies.push_back(std::move(p));
  }
  return policies;
}

EpisodeRecord run_episode(const grid::Env& env, const rm::RewardMachine& machine,
                          const qrm::QTables& q, LabelTamperer* tamperer,
                          int step_limit, Rng& env_rng, Rng& noise_rng,
                          std::ostream* trace) {
  const auto env2rm = qrm::alphabet_map(env.alphabet(), machine.alphabet());
  if (tamperer) tamperer->episode_start();
  auto cur = env.reset(env_rng);
  int u = machine.initial_state();
  bool clamped = false;
  int steps = 0;
  while (cur.status == grid::Status::running && steps < step_limit) {
    const auto a = qrm::greedy_action(q, u, cur.obs);
    const auto out = env.step(cur.state, a, env_rng);
    rm::LabelSet label = out.label;
    if (tamperer) label = tamperer->apply(label, noise_rng);
    if (!clamped) {
      const int next = machine.step(u, qrm::translate(label, env2rm)).next_state;
      if (machine.is_terminal(next))
        clamped = true;  // keep acting with the last non-terminal table
      else
        u = next;
    }
    ++steps;
    if (trace)
      *trace << "step " << steps << " action " << static_cast<int>(a)
             << " cell " << out.obs.cell << " label "
             << rm::label_to_string(label, env.alphabet()) << " rm "
             << machine.state_name(clamped ? machine.terminal_state() : u)
             << '\n';
    cur = out;
  }

  EpisodeRecord rec;
  switch (cur.status) {
    case grid::Status::success:
      rec.outcome = grid::Status::success;
      rec.steps = steps;
      rec.final_reward = 1.0;
      break;
    case grid::Status::failure:
      rec.outcome = grid::Status::failure;
      rec.steps = steps;
      rec.final_reward = -1.0;
      break;
    default:  // step limit reached: terminated with a null reward
      rec.outcome = grid::Status::timeout;
      rec.steps = step_limit;
      rec.final_reward = 0.0;
      break;
  }
  return rec;
}

std::pair<std::uint64_t, std::uint64_t> eval_episode_seeds(
    const ExperimentConfig& cfg, int agent_id, std::size_t level_index,
    int episode) {
  const std::uint64_t job =
      level_index * 1000000ULL + static_cast<std::uint64_t>(episode);
  return {derive_seed(cfg.seed, kRoleEvalEnv, agent_id, job),
          derive_seed(cfg.seed, kRoleEvalNoise, agent_id, job)};
}

std::vector<EpisodeRecord> evaluate(const std::vector<TrainedPolicy>& policies,
                                    const ExperimentConfig& cfg) {
  cfg.validate();
  if (policies.empty()) throw HarnessError("no policies to evaluate");
  const Domain domain = make_domain(cfg);
  for (const auto& p : policies) {
    if (p.meta.env != cfg.env)
      throw HarnessError("policy/env mismatch: policy trained for '" +
                         p.meta.env + "'");
    if (p.meta.map_digest != domain.map_digest)
      throw HarnessError("policy/map mismatch (digest)");
    if (p.meta.rm_digest != domain.rm_digest)
      throw HarnessError("policy/reward machine mismatch (digest)");
  }

  std::vector<EpisodeRecord> records;
  records.reserve(cfg.noise_levels.size() * policies.size() * cfg.episodes);
  for (std::size_t li = 0; li < cfg.noise_levels.size(); ++li) {
    const double pct = cfg.noise_levels[li];
    RandomTamperer tamperer({pct / 100.0, domain.env->alphabet()});
    for (const auto& p : policies) {
      for (int e = 0; e < cfg.episodes; ++e) {
        const auto [env_seed, noise_seed] =
            eval_episode_seeds(cfg, p.meta.agent_id, li, e);
        Rng env_rng(env_seed);
        Rng noise_rng(noise_seed);
        EpisodeRecord rec =
            run_episode(*domain.env, domain.machine, p.q, &tamperer,
                        cfg.step_limit, env_rng, noise_rng);
        rec.agent = p.meta.agent_id;
        rec.noise_pct = pct;
        rec.seed = env_seed;
        records.push_back(rec);
      }
    }
  }
  return records;
}

// ---------------------------------------------------------------------------
// Metrics and reporting

namespace {

struct Accumulator {
  double noise_pct = 0.0;
  long n_success = 0, n_failure = 0, n_timeout = 0;
  double steps_success = 0.0, steps_failure = 0.0, reward_failure = 0.0;

  void add(const EpisodeRecord& r) {
    switch (r.outcome) {
      case grid::Status::success:
        ++n_success;
        steps_success += r.steps;
        break;
      case grid::Status::failure:
        ++n_failure;
        steps_failure += r.steps;
        reward_failure += r.final_reward;
        break;
      default:
        ++n_timeout;
        steps_failure += r.steps;
        reward_failure += r.final_reward;
        break;
    }
  }

  MetricsRow row() const {
    MetricsRow m;
    m.noise_pct = noise_pct;
    m.n_success = n_success;
    m.n_failure = n_failure;
    m.n_timeout = n_timeout;
    m.episodes = n_success + n_failure + n_timeout;
    m.success_rate_pct = round2(100.0 * n_success / m.episodes);
    if (n_success > 0)
      m.avg_steps_success = round2(steps_success / n_success);
    const long n_fail = n_failure + n_timeout;  // pooled
    if (n_fail > 0) {
      m.avg_steps_failure = round2(steps_failure / n_fail);
      m.avg_failure_reward = round2(reward_failure / n_fail);
    }
    return m;
  }
};

}  // namespace

std::vector<MetricsRow> compute_metrics(
    const std::vector<EpisodeRecord>& records) {
  if (records.empty()) throw HarnessError("no episode records");
  std::vector<Accumulator> acc;
  for (const auto& r : records) {
    Accumulator* slot = nullptr;
    for (auto& a : acc)
      if (a.noise_pct == r.noise_pct) slot = &a;
    if (!slot) {
      acc.push_back({});
      acc.back().noise_pct = r.noise_pct;
      slot = &acc.back();
    }
    slot->add(r);
  }
  std::vector<MetricsRow> rows;
  rows.reserve(acc.size());
  for (const auto& a : acc) rows.push_back(a.row());
  return rows;
}

std::vector<std::pair<int, MetricsRow>> compute_metrics_by_agent(
    const std::vector<EpisodeRecord>& records) {
  if (records.empty()) throw HarnessError("no episode records");
  std::vector<int> agents;
  for (const auto& r : records)
    if (std::find(agents.begin(), agents.end(), r.agent) == agents.end())
      agents.push_back(r.agent);
  std::sort(agents.begin(), agents.end());

  std::vector<std::pair<int, MetricsRow>> out;
  for (int a : agents) {
    std::vector<EpisodeRecord> mine;
    for (const auto& r : records)
      if (r.agent == a) mine.push_back(r);
    for (const auto& row : compute_metrics(mine)) out.emplace_back(a, row);
  }
  return out;
}

void write_csv(const std::vector<MetricsRow>& rows, std::ostream& out) {
  out << "noise_level_pct,episodes,n_success,n_failure,n_timeout,"
         "success_rate_pct,avg_steps_success,avg_steps_failure,"
         "avg_failure_reward\n";
  for (const auto& r : rows) {
    out << fmt2(r.noise_pct) << ',' << r.episodes << ',' << r.n_success << ','
        << r.n_failure << ',' << r.n_timeout << ',' << fmt2(r.success_rate_pct)
        << ',';
    if (r.avg_steps_success) out << fmt2(*r.avg_steps_success);
    out << ',';
    if (r.avg_steps_failure) out << fmt2(*r.avg_steps_failure);
    out << ',';
    if (r.avg_failure_reward) out << fmt2(*r.avg_failure_reward);
    out << '\n';
  }
}

void write_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw HarnessError("cannot write csv: " + path);
  write_csv(rows, f);
}

std::vector<MetricsRow> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw HarnessError("empty csv");
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 9) throw HarnessError("bad csv row: " + line);
    MetricsRow r;
    r.noise_pct = std::stod(f[0]);
    r.episodes = std::stol(f[1]);
    r.n_success = std::stol(f[2]);
    r.n_failure = std::stol(f[3]);
    r.n_timeout = std::stol(f[4]);
    r.success_rate_pct = std::stod(f[5]);
    if (!f[6].empty()) r.avg_steps_success = std::stod(f[6]);
    if (!f[7].empty()) r.avg_steps_failure = std::stod(f[7]);
    if (!f[8].empty()) r.avg_failure_reward = std::stod(f[8]);
    rows.push_back(r);
  }
  return rows;
}

std::vector<MetricsRow> read_csv_file(const std::string& path) {
  std::istringstream in(read_file(path));
  return read_csv(in);
}

void write_markdown(const std::vector<MetricsRow>& rows, std::ostream& out) {
  out << "| Noise level (%) | Avg. Success Rate (%) | Avg. Steps to Success | "
         "Avg. Steps to Failure | Avg. Failure Reward |\n";
  out << "|---:|---:|---:|---:|---:|\n";
  for (const auto& r : rows) {
    out << "| " << fmt2(r.noise_pct) << " | " << fmt2(r.success_rate_pct)
        << " | " << (r.avg_steps_success ? fmt2(*r.avg_steps_success) : "")
        << " | " << (r.avg_steps_failure ? fmt2(*r.avg_steps_failure) : "")
        << " | " << (r.avg_failure_reward ? fmt2(*r.avg_failure_reward) : "")
        << " |\n";
  }
}

void write_markdown(const std::vector<MetricsRow>& rows,
                    const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw HarnessError("cannot write markdown: " + path);
  write_markdown(rows, f);
}

}  // namespace rmbench::harness
