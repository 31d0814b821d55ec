#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "ddlab/agent.hpp"
#include "ddlab/analysis.hpp"
#include "ddlab/csv.hpp"
#include "ddlab/gridworld.hpp"
#include "ddlab/neural.hpp"

namespace ddlab {

inline constexpr std::string_view kCodeVersion = "ddlab 0.1.0";

/// Fully resolved settings of a single training run.
struct RunConfig {
  Architecture arch;
  int arch_index = 0;
  int seed_index = 0;
  std::uint64_t seed = 0;
  EnvConfig env;
  AgentConfig agent;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  EntropyMode entropy_mode = EntropyMode::Visited;

  AdamConfig optimizer() const;
  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

enum class RunStatus { Running, Complete, Aborted };

std::string_view to_string(RunStatus status);

struct RunManifest {
  RunConfig config;
  std::string code_version{kCodeVersion};
  RunStatus status = RunStatus::Running;
  int episodes_completed = 0;
  std::string message;

  bool operator==(const RunManifest&) const = default;
};

std::string manifest_to_text(const RunManifest& manifest);
RunManifest manifest_from_text(std::string_view text);

struct RunResult {
  MetricSeries series;
  RunManifest manifest;
  NetworkParams params;
};

/// Trains one agent in memory. A non-finite loss ends the run early with
/// status Aborted; the rows logged before it are kept.
RunResult train_run(const RunConfig& config);

/// train_run() plus persistence into `dir`: manifest.json is written with status
/// "running" before training, metrics.csv is written atomically afterwards, and
/// only then is the manifest finalized.
RunResult run_one(const RunConfig& config, const std::filesystem::path& dir);

/// splitmix64 finalizer applied to master ^ (arch_index << 32 | seed_index).
/// The finalizer is a bijection, so distinct grid cells never collide.
std::uint64_t derive_seed(std::uint64_t master, int arch_index, int seed_index);

struct SweepConfig {
  std::vector<std::vector<int>> architectures = capacity_grid();
  int seeds_per_arch = 15;
  std::uint64_t master_seed = 20251016;
  EnvConfig env;
  AgentConfig agent;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  EntropyMode entropy_mode = EntropyMode::Visited;
  int smoothing_window = 50;
  double prominence = 0.1;
  std::filesystem::path output_dir = "runs";

  void validate() const;
};

SweepConfig sweep_config_from_text(std::string_view json_text);
std::string sweep_config_to_text(const SweepConfig& config);
SweepConfig load_sweep_config(const std::filesystem::path& path);

/// Architectures sorted canonically: ascending parameter count, ties broken by
/// the width list. The position in this order is the arch_index.
std::vector<Architecture> canonical_architectures(const SweepConfig& config);

/// Every (architecture, seed) cell of the sweep, ordered by (arch_index, seed_index).
std::vector<RunConfig> expand_sweep(const SweepConfig& config);

std::filesystem::path run_directory(const std::filesystem::path& out, const RunConfig& run);

struct RunOutcome {
  std::string arch;
  int seed_index = 0;
  RunStatus status = RunStatus::Running;
  bool resumed = false;
  std::string message;
};

struct SweepResult {
  std::vector<RunOutcome> runs;
  std::vector<AggregateSeries> aggregates;
  std::vector<std::string> warnings;

  bool all_complete() const;
};

/// Runs every cell on up to `parallelism` worker threads, then aggregates the
/// completed runs per architecture into <out>/aggregate/<label>.csv. With
/// `resume`, cells whose manifest is complete for the same resolved config are
/// loaded instead of retrained.
SweepResult run_sweep(const SweepConfig& config, int parallelism, bool resume,
                      std::ostream* progress = nullptr);

/// Scans <runs_dir>/<label>/seed-*/ for completed runs and aggregates one
/// metric per architecture. Architectures with fewer than 2 completed runs are
/// skipped with a warning.
enum class Metric { Entropy, Success };
std::vector<AggregateSeries> aggregate_run_directory(const std::filesystem::path& runs_dir,
                                                     int window, Metric metric,
                                                     std::vector<std::string>& warnings);

}  // namespace ddlab
