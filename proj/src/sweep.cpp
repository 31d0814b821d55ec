#include "ddlab/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "ddlab/errors.hpp"

namespace ddlab {

using nlohmann::json;

namespace {

json env_to_json(const EnvConfig& env) {
  return {{"slippery", env.slippery}, {"max_steps", env.max_steps}, {"map", env.map.to_rows()}};
}

EnvConfig env_from_json(const json& j, EnvConfig env = {}) {
  env.slippery = j.value("slippery", env.slippery);
  env.max_steps = j.value("max_steps", env.max_steps);
  if (j.contains("map")) {
    env.map = GridMap::from_rows(j.at("map").get<std::vector<std::string>>());
  }
  return env;
}

json agent_to_json(const AgentConfig& a) {
  return {{"gamma", a.gamma},
          {"value_coef", a.value_coef},
          {"entropy_coef", a.entropy_coef},
          {"learning_rate", a.learning_rate},
          {"episodes", a.episodes}};
}

AgentConfig agent_from_json(const json& j, AgentConfig a = {}) {
  a.gamma = j.value("gamma", a.gamma);
  a.value_coef = j.value("value_coef", a.value_coef);
  a.entropy_coef = j.value("entropy_coef", a.entropy_coef);
  a.learning_rate = j.value("learning_rate", a.learning_rate);
  a.episodes = j.value("episodes", a.episodes);
  return a;
}

json run_config_to_json(const RunConfig& c) {
  return {{"arch",
           {{"hidden_widths", c.arch.hidden_widths},
            {"input_dim", c.arch.input_dim},
            {"action_dim", c.arch.action_dim}}},
          {"arch_index", c.arch_index},
          {"seed_index", c.seed_index},
          {"seed", c.seed},
          {"env", env_to_json(c.env)},
          {"agent", agent_to_json(c.agent)},
          {"optimizer", {{"beta1", c.adam_beta1}, {"beta2", c.adam_beta2}, {"epsilon", c.adam_epsilon}}},
          {"entropy_mode", std::string(to_string(c.entropy_mode))}};
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  const json& arch = j.at("arch");
  c.arch.hidden_widths = arch.at("hidden_widths").get<std::vector<int>>();
  c.arch.input_dim = arch.at("input_dim").get<int>();
  c.arch.action_dim = arch.at("action_dim").get<int>();
  c.arch_index = j.at("arch_index").get<int>();
  c.seed_index = j.at("seed_index").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.env = env_from_json(j.at("env"));
  c.agent = agent_from_json(j.at("agent"));
  const json& opt = j.at("optimizer");
  c.adam_beta1 = opt.at("beta1").get<double>();
  c.adam_beta2 = opt.at("beta2").get<double>();
  c.adam_epsilon = opt.at("epsilon").get<double>();
  c.entropy_mode = parse_entropy_mode(j.at("entropy_mode").get<std::string>());
  return c;
}

RunStatus parse_status(std::string_view s) {
  if (s == "running") return RunStatus::Running;
  if (s == "complete") return RunStatus::Complete;
  if (s == "aborted") return RunStatus::Aborted;
  throw FormatError("unknown run status '" + std::string(s) + "'");
}

}  // namespace

// ---------------------------------------------------------------------------
// Run configuration and manifest

AdamConfig RunConfig::optimizer() const {
  return {agent.learning_rate, adam_beta1, adam_beta2, adam_epsilon};
}

void RunConfig::validate() const {
  arch.validate();
  env.validate();
  agent.validate();
  optimizer().validate();
  if (arch.input_dim != env.map.size() || arch.action_dim != kNumActions) {
    throw UsageError("architecture input/action dimensions do not match the environment");
  }
}

std::string_view to_string(RunStatus status) {
  switch (status) {
    case RunStatus::Running: return "running";
    case RunStatus::Complete: return "complete";
    case RunStatus::Aborted: return "aborted";
  }
  return "?";
}

std::string manifest_to_text(const RunManifest& m) {
  json j = {{"config", run_config_to_json(m.config)},
            {"code_version", m.code_version},
            {"status", std::string(to_string(m.status))},
            {"episodes_completed", m.episodes_completed},
            {"message", m.message}};
  return j.dump(2) + "\n";
}

RunManifest manifest_from_text(std::string_view text) {
  try {
    const json j = json::parse(text);
    RunManifest m;
    m.config = run_config_from_json(j.at("config"));
    m.code_version = j.at("code_version").get<std::string>();
    m.status = parse_status(j.at("status").get<std::string>());
    m.episodes_completed = j.at("episodes_completed").get<int>();
    m.message = j.value("message", "");
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Training

RunResult train_run(const RunConfig& config) {
  config.validate();
  RunResult result;
  result.manifest.config = config;
  Rng rng(config.seed);
  result.params = init_params(config.arch, rng);
  OptimizerState opt = OptimizerState::for_params(result.params, config.optimizer());
  result.series.rows.reserve(static_cast<std::size_t>(config.agent.episodes));

  for (int episode = 1; episode <= config.agent.episodes; ++episode) {
    const EpisodeRecord record = collect_episode(result.params, config.env, rng);
    MetricRow row;
    row.episode = episode;
    row.entropy = config.entropy_mode == EntropyMode::Visited
                      ? episode_entropy(record)
                      : all_states_entropy(result.params, config.env.map);
    row.episode_return = record.total_reward();
    row.success = record.reached_goal();
    row.steps = static_cast<int>(record.size());
    try {
      const LossBreakdown loss =
          train_episode(result.params, opt, record, config.agent, config.env.map);
      row.value_loss = loss.value_loss;
      row.policy_loss = loss.policy_loss;
      row.total_loss = loss.total;
    } catch (const NumericError& e) {
      result.manifest.status = RunStatus::Aborted;
      result.manifest.message = "episode " + std::to_string(episode) + ": " + e.what();
      return result;
    }
    result.series.rows.push_back(row);
    result.manifest.episodes_completed = episode;
  }
  result.manifest.status = RunStatus::Complete;
  return result;
}

RunResult run_one(const RunConfig& config, const std::filesystem::path& dir) {
  config.validate();
  std::filesystem::create_directories(dir);
  RunManifest started;
  started.config = config;
  write_file_atomic(dir / "manifest.json", manifest_to_text(started));

  RunResult result = train_run(config);
  write_file_atomic(dir / "metrics.csv", metrics_to_csv(result.series));
  write_file_atomic(dir / "manifest.json", manifest_to_text(result.manifest));
  return result;
}

std::uint64_t derive_seed(std::uint64_t master, int arch_index, int seed_index) {
  if (arch_index < 0 || seed_index < 0) {
    throw UsageError("derive_seed: indices must be non-negative");
  }
  const std::uint64_t cell =
      (static_cast<std::uint64_t>(static_cast<std::uint32_t>(arch_index)) << 32) |
      static_cast<std::uint64_t>(static_cast<std::uint32_t>(seed_index));
  std::uint64_t z = (master ^ cell) + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Sweep configuration

void SweepConfig::validate() const {
  if (architectures.empty()) {
    throw UsageError("sweep needs at least one architecture");
  }
  if (seeds_per_arch < 2) {
    throw UsageError("seeds_per_arch must be >= 2 for confidence intervals");
  }
  if (smoothing_window < 1) {
    throw UsageError("smoothing_window must be >= 1");
  }
  if (!(prominence >= 0.0)) {
    throw UsageError("prominence must be >= 0");
  }
  env.validate();
  agent.validate();
  AdamConfig{agent.learning_rate, adam_beta1, adam_beta2, adam_epsilon}.validate();
  for (const auto& widths : architectures) {
    Architecture{widths, env.map.size(), kNumActions}.validate();
  }
}

SweepConfig sweep_config_from_text(std::string_view json_text) {
  SweepConfig c;
  try {
    const json j = json::parse(json_text);
    if (j.contains("architectures")) {
      c.architectures = j.at("architectures").get<std::vector<std::vector<int>>>();
    }
    c.seeds_per_arch = j.value("seeds_per_arch", c.seeds_per_arch);
    c.master_seed = j.value("master_seed", c.master_seed);
    if (j.contains("env")) c.env = env_from_json(j.at("env"), c.env);
    if (j.contains("agent")) c.agent = agent_from_json(j.at("agent"), c.agent);
    if (j.contains("optimizer")) {
      const json& opt = j.at("optimizer");
      c.adam_beta1 = opt.value("beta1", c.adam_beta1);
      c.adam_beta2 = opt.value("beta2", c.adam_beta2);
      c.adam_epsilon = opt.value("epsilon", c.adam_epsilon);
    }
    if (j.contains("entropy_mode")) {
      c.entropy_mode = parse_entropy_mode(j.at("entropy_mode").get<std::string>());
    }
    c.smoothing_window = j.value("smoothing_window", c.smoothing_window);
    c.prominence = j.value("prominence", c.prominence);
    c.output_dir = j.value("output_dir", c.output_dir.string());
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed sweep config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string sweep_config_to_text(const SweepConfig& c) {
  json j = {{"architectures", c.architectures},
            {"seeds_per_arch", c.seeds_per_arch},
            {"master_seed", c.master_seed},
            {"env", env_to_json(c.env)},
            {"agent", agent_to_json(c.agent)},
            {"optimizer", {{"beta1", c.adam_beta1}, {"beta2", c.adam_beta2}, {"epsilon", c.adam_epsilon}}},
            {"entropy_mode", std::string(to_string(c.entropy_mode))},
            {"smoothing_window", c.smoothing_window},
            {"prominence", c.prominence},
            {"output_dir", c.output_dir.string()}};
  return j.dump(2) + "\n";
}

SweepConfig load_sweep_config(const std::filesystem::path& path) {
  return sweep_config_from_text(read_file(path));
}

std::vector<Architecture> canonical_architectures(const SweepConfig& config) {
  std::vector<Architecture> archs;
  for (const auto& widths : config.architectures) {
    archs.push_back({widths, config.env.map.size(), kNumActions});
  }
  std::sort(archs.begin(), archs.end(), [](const Architecture& a, const Architecture& b) {
    const auto pa = a.parameter_count();
    const auto pb = b.parameter_count();
    return pa != pb ? pa < pb : a.hidden_widths < b.hidden_widths;
  });
  if (std::adjacent_find(archs.begin(), archs.end()) != archs.end()) {
    throw UsageError("sweep lists the same architecture twice");
  }
  return archs;
}

std::vector<RunConfig> expand_sweep(const SweepConfig& config) {
  config.validate();
  std::vector<RunConfig> runs;
  const auto archs = canonical_architectures(config);
  for (std::size_t a = 0; a < archs.size(); ++a) {
    for (int s = 0; s < config.seeds_per_arch; ++s) {
      RunConfig r;
      r.arch = archs[a];
      r.arch_index = static_cast<int>(a);
      r.seed_index = s;
      r.seed = derive_seed(config.master_seed, r.arch_index, s);
      r.env = config.env;
      r.agent = config.agent;
      r.adam_beta1 = config.adam_beta1;
      r.adam_beta2 = config.adam_beta2;
      r.adam_epsilon = config.adam_epsilon;
      r.entropy_mode = config.entropy_mode;
      runs.push_back(std::move(r));
    }
  }
  return runs;
}

std::filesystem::path run_directory(const std::filesystem::path& out, const RunConfig& run) {
  return out / run.arch.label() / ("seed-" + std::to_string(run.seed_index));
}

bool SweepResult::all_complete() const {
  return std::all_of(runs.begin(), runs.end(),
                     [](const RunOutcome& r) { return r.status == RunStatus::Complete; });
}

namespace {

// Returns the stored series when `dir` holds a completed run of exactly `config`.
std::optional<MetricSeries> load_completed(const std::filesystem::path& dir, const RunConfig& config) {
  const auto manifest_path = dir / "manifest.json";
  const auto metrics_path = dir / "metrics.csv";
  if (!std::filesystem::exists(manifest_path) || !std::filesystem::exists(metrics_path)) {
    return std::nullopt;
  }
  try {
    const RunManifest m = manifest_from_text(read_file(manifest_path));
    if (m.status != RunStatus::Complete || !(m.config == config)) {
      return std::nullopt;
    }
    MetricSeries series = metrics_from_csv(read_file(metrics_path));
    if (static_cast<int>(series.rows.size()) != config.agent.episodes) {
      return std::nullopt;
    }
    return series;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

SweepResult run_sweep(const SweepConfig& config, int parallelism, bool resume, std::ostream* progress) {
  if (parallelism < 1) {
    throw UsageError("parallelism must be >= 1");
  }
  const std::vector<RunConfig> runs = expand_sweep(config);
  const auto& out = config.output_dir;
  std::filesystem::create_directories(out);
  write_file_atomic(out / "sweep_config.json", sweep_config_to_text(config));

  std::vector<RunOutcome> outcomes(runs.size());
  std::vector<MetricSeries> series(runs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      const RunConfig& run = runs[i];
      const auto dir = run_directory(out, run);
      RunOutcome& outcome = outcomes[i];
      outcome.arch = run.arch.label();
      outcome.seed_index = run.seed_index;
      try {
        std::optional<MetricSeries> existing = resume ? load_completed(dir, run) : std::nullopt;
        if (existing) {
          series[i] = std::move(*existing);
          outcome.status = RunStatus::Complete;
          outcome.resumed = true;
        } else {
          RunResult result = run_one(run, dir);
          outcome.status = result.manifest.status;
          outcome.message = result.manifest.message;
          series[i] = std::move(result.series);
        }
      } catch (const std::exception& e) {
        outcome.status = RunStatus::Aborted;
        outcome.message = e.what();
      }
      if (progress != nullptr) {
        std::lock_guard lock(log_mutex);
        *progress << outcome.arch << " seed-" << outcome.seed_index << ": "
                  << to_string(outcome.status) << (outcome.resumed ? " (resumed)" : "")
                  << (outcome.message.empty() ? "" : " - " + outcome.message) << '\n';
      }
    }
  };

  const int workers = std::min<int>(parallelism, static_cast<int>(runs.size()));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  SweepResult result;
  result.runs = outcomes;
  // Aggregation in canonical (arch_index, seed_index) order after the barrier.
  std::size_t i = 0;
  while (i < runs.size()) {
    const std::string label = runs[i].arch.label();
    std::vector<std::vector<double>> completed;
    for (; i < runs.size() && runs[i].arch.label() == label; ++i) {
      if (outcomes[i].status == RunStatus::Complete) {
        completed.push_back(series[i].entropy());
      }
    }
    if (completed.size() < 2) {
      result.warnings.push_back(label + ": fewer than 2 completed runs, not aggregated");
      continue;
    }
    AggregateSeries agg = aggregate(label, completed, config.smoothing_window);
    write_file_atomic(out / "aggregate" / (label + ".csv"), aggregate_to_csv({agg}));
    result.aggregates.push_back(std::move(agg));
  }
  return result;
}

std::vector<AggregateSeries> aggregate_run_directory(const std::filesystem::path& runs_dir, int window,
                                                     Metric metric, std::vector<std::string>& warnings) {
  if (!std::filesystem::is_directory(runs_dir)) {
    throw UsageError("not a directory: " + runs_dir.string());
  }
  struct Group {
    Architecture arch;
    std::map<int, std::vector<double>> by_seed;
  };
  std::map<std::string, Group> groups;
  for (const auto& arch_entry : std::filesystem::directory_iterator(runs_dir)) {
    if (!arch_entry.is_directory()) continue;
    for (const auto& seed_entry : std::filesystem::directory_iterator(arch_entry.path())) {
      const auto manifest_path = seed_entry.path() / "manifest.json";
      const auto metrics_path = seed_entry.path() / "metrics.csv";
      if (!seed_entry.is_directory() || !std::filesystem::exists(manifest_path)) continue;
      RunManifest m;
      try {
        m = manifest_from_text(read_file(manifest_path));
      } catch (const FormatError& e) {
        warnings.push_back(seed_entry.path().string() + ": " + e.what());
        continue;
      }
      if (m.status != RunStatus::Complete || !std::filesystem::exists(metrics_path)) continue;
      const MetricSeries s = metrics_from_csv(read_file(metrics_path));
      Group& g = groups[m.config.arch.label()];
      g.arch = m.config.arch;
      g.by_seed[m.config.seed_index] = metric == Metric::Entropy ? s.entropy() : s.success();
    }
  }
  std::vector<const Group*> ordered;
  for (const auto& [label, g] : groups) ordered.push_back(&g);
  std::sort(ordered.begin(), ordered.end(), [](const Group* a, const Group* b) {
    const auto pa = a->arch.parameter_count();
    const auto pb = b->arch.parameter_count();
    return pa != pb ? pa < pb : a->arch.hidden_widths < b->arch.hidden_widths;
  });
  std::vector<AggregateSeries> out;
  for (const Group* g : ordered) {
    const std::string label = g->arch.label();
    if (g->by_seed.size() < 2) {
      warnings.push_back(label + ": fewer than 2 completed runs, skipped");
      continue;
    }
    std::vector<std::vector<double>> runs;
    for (const auto& [seed, values] : g->by_seed) runs.push_back(values);
    out.push_back(aggregate(label, runs, window));
  }
  return out;
}

}  // namespace ddlab
