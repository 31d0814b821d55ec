#include "ddlab/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <numeric>

#include <CLI11.hpp>

#include "ddlab/checkpoint.hpp"
#include "ddlab/errors.hpp"
#include "ddlab/svg_plot.hpp"
#include "ddlab/sweep.hpp"

namespace ddlab {

namespace {

std::string fixed(double x, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
  return buf;
}

std::string scientific(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

double tail_mean(const std::vector<double>& values, std::size_t count) {
  if (values.empty()) return 0.0;
  const std::size_t n = std::min(count, values.size());
  return std::accumulate(values.end() - static_cast<std::ptrdiff_t>(n), values.end(), 0.0) /
         static_cast<double>(n);
}

std::string plural(int n, const std::string& word) {
  return std::to_string(n) + " " + word + (n == 1 ? "" : "s");
}

std::filesystem::path default_sweep_config() {
  return std::filesystem::path(DDLAB_SOURCE_DIR) / "configs" / "capacity_sweep.json";
}

// ---------------------------------------------------------------------------

struct RunFlags {
  std::string arch = "64,64";
  std::uint64_t seed = 1;
  int episodes = AgentConfig{}.episodes;
  bool slippery = EnvConfig{}.slippery;
  int max_steps = EnvConfig{}.max_steps;
  double entropy_coef = AgentConfig{}.entropy_coef;
  double value_coef = AgentConfig{}.value_coef;
  double lr = AgentConfig{}.learning_rate;
  double gamma = AgentConfig{}.gamma;
  std::string entropy_mode = "visited";
  std::string out = "run-out";
  std::string checkpoint;
};

int cmd_run(const RunFlags& f, std::ostream& out) {
  RunConfig rc;
  rc.env.slippery = f.slippery;
  rc.env.max_steps = f.max_steps;
  rc.arch = {parse_widths(f.arch), rc.env.map.size(), kNumActions};
  rc.seed = f.seed;
  rc.agent.episodes = f.episodes;
  rc.agent.entropy_coef = f.entropy_coef;
  rc.agent.value_coef = f.value_coef;
  rc.agent.learning_rate = f.lr;
  rc.agent.gamma = f.gamma;
  rc.entropy_mode = parse_entropy_mode(f.entropy_mode);
  rc.validate();

  const RunResult r = run_one(rc, f.out);
  if (!f.checkpoint.empty()) {
    save_checkpoint(f.checkpoint, r.params);
  }
  out << "run " << rc.arch.display() << " seed=" << rc.seed << " status=" << to_string(r.manifest.status)
      << " episodes=" << r.series.rows.size()
      << " mean_entropy_last100=" << fixed(tail_mean(r.series.entropy(), 100), 6)
      << " success_rate_last100=" << fixed(tail_mean(r.series.success(), 100), 4) << '\n';
  if (r.manifest.status != RunStatus::Complete) {
    out << "aborted: " << r.manifest.message << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

void print_phase_report(const std::string& arch, const PhaseReport& report, std::ostream& out) {
  out << legend_label(arch) << ": " << plural(report.descents(), "descent") << ", "
      << plural(report.reascents, "re-ascent") << '\n';
  char line[128];
  std::snprintf(line, sizeof line, "  %-8s %8s %8s %12s %12s\n", "kind", "start", "end", "from", "to");
  out << line;
  for (const auto& s : report.segments) {
    std::snprintf(line, sizeof line, "  %-8s %8d %8d %12.6f %12.6f\n", std::string(to_string(s.kind)).c_str(),
                  s.start_episode, s.end_episode, s.start_value, s.end_value);
    out << line;
  }
}

std::vector<LabeledReport> phase_reports(const std::vector<AggregateSeries>& series, double prominence) {
  std::vector<LabeledReport> reports;
  for (const auto& s : series) {
    if (s.points.size() < 2) {
      throw FormatError("series '" + s.arch + "' needs at least 2 episodes for phase segmentation");
    }
    std::vector<double> mean;
    for (const auto& p : s.points) mean.push_back(p.mean);
    // Episodes in aggregate files are contiguous; offset by the first one.
    reports.push_back({s.arch, segment_phases(mean, prominence, s.points.front().episode)});
  }
  return reports;
}

struct SweepFlags {
  std::string config;
  int jobs = 1;
  bool resume = false;
  std::string out;
  int episodes = 0;
  int seeds = 0;
};

int cmd_sweep(const SweepFlags& f, std::ostream& out, std::ostream& err) {
  SweepConfig cfg = load_sweep_config(f.config.empty() ? default_sweep_config() : std::filesystem::path(f.config));
  if (!f.out.empty()) cfg.output_dir = f.out;
  if (f.episodes > 0) cfg.agent.episodes = f.episodes;
  if (f.seeds > 0) cfg.seeds_per_arch = f.seeds;
  cfg.validate();

  const SweepResult result = run_sweep(cfg, f.jobs, f.resume, &out);
  for (const auto& w : result.warnings) err << "warning: " << w << '\n';

  const auto reports = phase_reports(result.aggregates, cfg.prominence);
  for (const auto& r : reports) print_phase_report(r.arch, r.report, out);
  if (!result.aggregates.empty()) {
    write_file_atomic(cfg.output_dir / "aggregate" / "phases.csv", segments_to_csv(reports));
    PlotSpec spec;
    spec.series = result.aggregates;
    spec.smoothing_window = cfg.smoothing_window;
    write_file_atomic(cfg.output_dir / "entropy.svg", render_svg(spec));
  }

  int complete = 0;
  int resumed = 0;
  for (const auto& r : result.runs) {
    complete += r.status == RunStatus::Complete ? 1 : 0;
    resumed += r.resumed ? 1 : 0;
  }
  out << result.runs.size() << " runs: " << complete << " complete (" << resumed << " resumed), "
      << result.runs.size() - static_cast<std::size_t>(complete) << " failed; "
      << result.aggregates.size() << " aggregate files in " << (cfg.output_dir / "aggregate").string() << '\n';
  if (!result.all_complete()) {
    for (const auto& r : result.runs) {
      if (r.status != RunStatus::Complete) {
        err << r.arch << " seed-" << r.seed_index << ": " << to_string(r.status) << " " << r.message << '\n';
      }
    }
    return kExitFailure;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct AggregateFlags {
  std::string runs;
  int window = SweepConfig{}.smoothing_window;
  std::string out = "aggregate.csv";
  std::string metric = "entropy";
};

int cmd_aggregate(const AggregateFlags& f, std::ostream& out, std::ostream& err) {
  Metric metric = Metric::Entropy;
  if (f.metric == "success") {
    metric = Metric::Success;
  } else if (f.metric != "entropy") {
    throw UsageError("--metric must be entropy or success");
  }
  std::vector<std::string> warnings;
  const auto series = aggregate_run_directory(f.runs, f.window, metric, warnings);
  for (const auto& w : warnings) err << "warning: " << w << '\n';
  if (series.empty()) {
    err << "no architecture had 2 or more completed runs\n";
    return kExitFailure;
  }
  write_file_atomic(f.out, aggregate_to_csv(series));
  out << "wrote " << series.size() << " architectures to " << f.out << '\n';
  return kExitOk;
}

struct PhasesFlags {
  std::string agg;
  double prominence = SweepConfig{}.prominence;
  std::string out;
};

int cmd_phases(const PhasesFlags& f, std::ostream& out) {
  const auto series = aggregate_from_csv(read_file(f.agg));
  if (series.empty()) {
    throw FormatError("aggregate file has no rows: " + f.agg);
  }
  const auto reports = phase_reports(series, f.prominence);
  for (const auto& r : reports) print_phase_report(r.arch, r.report, out);
  std::filesystem::path target = f.out;
  if (target.empty()) {
    target = f.agg;
    target.replace_extension(".segments.csv");
  }
  write_file_atomic(target, segments_to_csv(reports));
  return kExitOk;
}

struct PlotFlags {
  std::vector<std::string> inputs;
  std::string out = "entropy.svg";
  int window = 0;
  std::string title;
  std::string y_label;
};

int cmd_plot(const PlotFlags& f, std::ostream& out) {
  PlotSpec spec;
  for (const auto& path : f.inputs) {
    for (auto& s : aggregate_from_csv(read_file(path))) spec.series.push_back(std::move(s));
  }
  if (spec.series.empty()) {
    throw FormatError("plot inputs contain no aggregate rows");
  }
  spec.smoothing_window = f.window;
  if (!f.title.empty()) spec.title = f.title;
  if (!f.y_label.empty()) spec.y_label = f.y_label;
  write_file_atomic(f.out, render_svg(spec));
  out << "wrote " << spec.series.size() << " series to " << f.out << '\n';
  return kExitOk;
}

struct GradcheckFlags {
  int trials = 100;
  std::uint64_t seed = 7;
};

int cmd_gradcheck(const GradcheckFlags& f, std::ostream& out, std::ostream& err) {
  double worst = 0.0;
  std::string worst_where;
  const auto grid = capacity_grid();
  for (std::size_t a = 0; a < grid.size(); ++a) {
    const Architecture arch{grid[a], 16, kNumActions};
    Rng rng(derive_seed(f.seed, static_cast<int>(a), 0));
    const GradcheckReport r = gradcheck(arch, f.trials, rng);
    out << "arch " << arch.display() << ": max relative error " << scientific(r.max_relative_error)
        << " over " << r.checked << " coordinates (" << r.skipped_kinks << " skipped at ReLU kinks)\n";
    if (r.max_relative_error >= worst) {
      worst = r.max_relative_error;
      worst_where = arch.display() + " " + r.worst_block + "[" + std::to_string(r.worst_index) +
                    "] trial " + std::to_string(r.worst_trial);
    }
  }
  if (worst < kGradcheckTolerance) {
    out << "gradcheck passed: worst " << scientific(worst) << " < " << scientific(kGradcheckTolerance) << '\n';
    return kExitOk;
  }
  err << "gradcheck FAILED: worst " << scientific(worst) << " at " << worst_where << '\n';
  return kExitFailure;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"ddlab: capacity sweeps of actor-critic agents and their policy-entropy dynamics", "ddlab"};
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "Train one agent and write manifest.json + metrics.csv");
  run->add_option("--arch", run_flags.arch, "Hidden widths, comma separated (e.g. 64,64)");
  run->add_option("--seed", run_flags.seed, "RNG seed");
  run->add_option("--episodes", run_flags.episodes, "Training episodes")->check(CLI::PositiveNumber);
  run->add_option("--slippery", run_flags.slippery, "Slippery transitions (true|false)");
  run->add_option("--max-steps", run_flags.max_steps, "Episode horizon")->check(CLI::PositiveNumber);
  run->add_option("--entropy-coef", run_flags.entropy_coef, "Entropy bonus coefficient")
      ->check(CLI::NonNegativeNumber);
  run->add_option("--value-coef", run_flags.value_coef, "Value loss coefficient")->check(CLI::NonNegativeNumber);
  run->add_option("--lr", run_flags.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  run->add_option("--gamma", run_flags.gamma, "Discount factor in [0, 1]")->check(CLI::Range(0.0, 1.0));
  run->add_option("--entropy-mode", run_flags.entropy_mode, "visited | all-states")
      ->check(CLI::IsMember({"visited", "all-states"}));
  run->add_option("--out", run_flags.out, "Output directory");
  run->add_option("--checkpoint", run_flags.checkpoint, "Write final parameters to this file");

  SweepFlags sweep_flags;
  auto* sweep = app.add_subcommand("sweep", "Run the architecture x seed grid, aggregate, segment, plot");
  sweep->add_option("--config", sweep_flags.config, "Sweep config (JSON); defaults to the bundled capacity grid");
  sweep->add_option("--jobs", sweep_flags.jobs, "Concurrent training jobs")->check(CLI::PositiveNumber);
  sweep->add_flag("--resume", sweep_flags.resume, "Skip runs whose manifest is already complete");
  sweep->add_option("--out", sweep_flags.out, "Override output directory");
  sweep->add_option("--episodes", sweep_flags.episodes, "Override episodes per run")->check(CLI::PositiveNumber);
  sweep->add_option("--seeds", sweep_flags.seeds, "Override seeds per architecture")->check(CLI::Range(2, 1 << 20));

  AggregateFlags agg_flags;
  auto* agg = app.add_subcommand("aggregate", "Aggregate completed runs into a confidence-band CSV");
  agg->add_option("--runs", agg_flags.runs, "Sweep output directory")->required();
  agg->add_option("--window", agg_flags.window, "Smoothing window (episodes)")->check(CLI::PositiveNumber);
  agg->add_option("--out", agg_flags.out, "Aggregate CSV to write");
  agg->add_option("--metric", agg_flags.metric, "entropy | success")->check(CLI::IsMember({"entropy", "success"}));

  PhasesFlags phases_flags;
  auto* phases = app.add_subcommand("phases", "Segment aggregate curves into descent/ascent phases");
  phases->add_option("--agg", phases_flags.agg, "Aggregate CSV")->required();
  phases->add_option("--prominence", phases_flags.prominence, "Minimum reversal (nats)")
      ->check(CLI::NonNegativeNumber);
  phases->add_option("--out", phases_flags.out, "Segments CSV (default: <agg>.segments.csv)");

  PlotFlags plot_flags;
  auto* plot = app.add_subcommand("plot", "Render aggregate CSVs as an SVG line plot with CI bands");
  plot->add_option("--input", plot_flags.inputs, "Aggregate CSV files")->required()->expected(1, -1);
  plot->add_option("--out", plot_flags.out, "SVG file to write");
  plot->add_option("--window", plot_flags.window, "Smoothing window to echo in the subtitle");
  plot->add_option("--title", plot_flags.title, "Plot title");
  plot->add_option("--y-label", plot_flags.y_label, "Y axis label");

  GradcheckFlags gc_flags;
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of backprop on the five capacities");
  gc->add_option("--trials", gc_flags.trials, "Random trials per architecture")->check(CLI::PositiveNumber);
  gc->add_option("--seed", gc_flags.seed, "Master seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return kExitOk;
    CLI::App* target = &app;
    for (auto* sub : app.get_subcommands({})) {
      if (!args.empty() && sub->get_name() == args.front()) target = sub;
    }
    err << target->help();
    return kExitUsage;
  }

  try {
    if (run->parsed()) return cmd_run(run_flags, out);
    if (sweep->parsed()) return cmd_sweep(sweep_flags, out, err);
    if (agg->parsed()) return cmd_aggregate(agg_flags, out, err);
    if (phases->parsed()) return cmd_phases(phases_flags, out);
    if (plot->parsed()) return cmd_plot(plot_flags, out);
    if (gc->parsed()) return cmd_gradcheck(gc_flags, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    for (auto* sub : app.get_subcommands()) err << sub->help();
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace ddlab
