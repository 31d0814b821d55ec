#include <doctest.h>

#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "ddlab/errors.hpp"
#include "ddlab/sweep.hpp"

using namespace ddlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ddlab_sweep_" + name);
  fs::remove_all(dir);
  return dir;
}

// Relative path -> content for every regular file under `root`.
std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).generic_string()] = read_file(e.path());
  }
  return files;
}

SweepConfig small_sweep(const fs::path& out) {
  SweepConfig c;
  c.architectures = {{16, 16}, {8}};
  c.seeds_per_arch = 3;
  c.agent.episodes = 25;
  c.smoothing_window = 5;
  c.output_dir = out;
  return c;
}

RunConfig small_run() {
  RunConfig r;
  r.arch = {{8}, 16, 4};
  r.seed = 99;
  r.agent.episodes = 10;
  return r;
}

}  // namespace

TEST_CASE("derive_seed") {
  CHECK(derive_seed(20251016, 2, 7) == derive_seed(20251016, 2, 7));
  CHECK(derive_seed(20251016, 2, 7) != derive_seed(20251016, 7, 2));
  CHECK(derive_seed(1, 0, 0) != derive_seed(2, 0, 0));
  CHECK_THROWS_AS(derive_seed(1, -1, 0), UsageError);
  for (std::uint64_t master = 0; master < 10000; ++master) {
    std::set<std::uint64_t> seen;
    for (int a = 0; a < 5; ++a) {
      for (int s = 0; s < 15; ++s) seen.insert(derive_seed(master * 0x9E3779B97F4A7C15ULL, a, s));
    }
    REQUIRE(seen.size() == 75);
  }
}

TEST_CASE("manifest round trip") {
  RunManifest m;
  m.config = small_run();
  m.config.arch = {{64, 64, 64}, 16, 4};
  m.config.seed = 0xFFFFFFFFFFFFFFFFULL;
  m.config.env.slippery = false;
  m.config.agent.entropy_coef = 0.0;
  m.config.entropy_mode = EntropyMode::AllStates;
  m.status = RunStatus::Aborted;
  m.episodes_completed = 17;
  m.message = "episode 18: non-finite";
  const RunManifest back = manifest_from_text(manifest_to_text(m));
  CHECK(back == m);
  CHECK(manifest_to_text(back) == manifest_to_text(m));
  CHECK_THROWS_AS(manifest_from_text("{"), FormatError);
  CHECK_THROWS_AS(manifest_from_text("{}"), FormatError);
}

TEST_CASE("run_one writes a complete, reproducible run") {
  const fs::path a = scratch("run_a");
  const fs::path b = scratch("run_b");
  const RunResult r = run_one(small_run(), a);
  run_one(small_run(), b);
  CHECK(r.manifest.status == RunStatus::Complete);
  CHECK(r.manifest.episodes_completed == 10);
  REQUIRE(r.series.rows.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) CHECK(r.series.rows[i].episode == static_cast<int>(i) + 1);
  CHECK(r.series.rows[0].entropy == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(snapshot(a) == snapshot(b));
  CHECK(snapshot(a).size() == 2);
  CHECK(metrics_from_csv(read_file(a / "metrics.csv")) == r.series);
  CHECK(manifest_from_text(read_file(a / "manifest.json")) == r.manifest);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("all-states entropy mode starts at ln 4") {
  RunConfig c = small_run();
  c.entropy_mode = EntropyMode::AllStates;
  const RunResult r = train_run(c);
  CHECK(r.series.rows[0].entropy == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("a diverging run is marked aborted and keeps its rows") {
  RunConfig c = small_run();
  // Goal next to the start so rewards, and hence gradients, come early.
  c.env.map = GridMap::from_rows({"SG"});
  c.arch.input_dim = 2;
  c.agent.learning_rate = 1e300;
  c.agent.episodes = 50;
  const RunResult r = train_run(c);
  CHECK(r.manifest.status == RunStatus::Aborted);
  CHECK(r.manifest.episodes_completed == static_cast<int>(r.series.rows.size()));
  CHECK(r.series.rows.size() < 50);
  CHECK_FALSE(r.manifest.message.empty());
}

TEST_CASE("run config validation") {
  RunConfig c = small_run();
  c.arch.input_dim = 8;
  CHECK_THROWS_AS(c.validate(), UsageError);
  c = small_run();
  c.env.max_steps = 0;
  CHECK_THROWS_AS(c.validate(), UsageError);
}

TEST_CASE("expand_sweep on the default config") {
  SweepConfig c;
  const auto runs = expand_sweep(c);
  CHECK(runs.size() == 75);
  std::set<std::string> dirs;
  for (const auto& r : runs) dirs.insert(run_directory("out", r).generic_string());
  CHECK(dirs.size() == 75);
  CHECK(runs.front().arch.label() == "64");
  CHECK(runs[15].arch.label() == "64-64");
  CHECK(runs[30].arch.label() == "64-64-64");
  CHECK(runs[45].arch.label() == "128-128");
  CHECK(runs.back().arch.label() == "128-128-128");
  CHECK(runs.back().seed_index == 14);
  CHECK(runs.back().seed == derive_seed(c.master_seed, 4, 14));
  CHECK(run_directory("out", runs[16]) == fs::path("out") / "64-64" / "seed-1");

  SweepConfig dup;
  dup.architectures = {{64}, {64}};
  CHECK_THROWS_AS(expand_sweep(dup), UsageError);
  SweepConfig one;
  one.seeds_per_arch = 1;
  CHECK_THROWS_AS(expand_sweep(one), UsageError);
}

TEST_CASE("sweep config text round trip") {
  SweepConfig c = small_sweep("some/where");
  c.env.slippery = false;
  c.entropy_mode = EntropyMode::AllStates;
  const std::string text = sweep_config_to_text(c);
  const SweepConfig back = sweep_config_from_text(text);
  CHECK(sweep_config_to_text(back) == text);
  CHECK(back.architectures == c.architectures);
  CHECK_THROWS_AS(sweep_config_from_text("[1,2"), FormatError);
  CHECK_THROWS_AS(sweep_config_from_text(R"({"seeds_per_arch": "many"})"), FormatError);
  CHECK_THROWS_AS(sweep_config_from_text(R"({"architectures": [[0]]})"), UsageError);
  const SweepConfig bundled = load_sweep_config(fs::path(DDLAB_SOURCE_DIR) / "configs" / "capacity_sweep.json");
  CHECK(expand_sweep(bundled).size() == 75);
}

TEST_CASE("sweep output is independent of parallelism and list order") {
  const fs::path serial = scratch("serial");
  const fs::path parallel = scratch("parallel");
  const fs::path permuted = scratch("permuted");
  const SweepResult r1 = run_sweep(small_sweep(serial), 1, false);
  const SweepResult r4 = run_sweep(small_sweep(parallel), 4, false);
  SweepConfig p = small_sweep(permuted);
  std::swap(p.architectures[0], p.architectures[1]);
  run_sweep(p, 2, false);

  CHECK(r1.all_complete());
  CHECK(r4.all_complete());
  CHECK(r1.aggregates.size() == 2);
  CHECK(r1.aggregates[0].arch == "8");
  CHECK(r1.warnings.empty());

  auto s1 = snapshot(serial);
  auto s4 = snapshot(parallel);
  auto sp = snapshot(permuted);
  CHECK(s1.count("aggregate/8.csv") == 1);
  CHECK(s1.count("16-16/seed-2/metrics.csv") == 1);
  // sweep_config.json records the output dir; everything else must match byte for byte.
  for (auto* s : {&s1, &s4, &sp}) s->erase("sweep_config.json");
  CHECK(s1 == s4);
  // Manifests hold resolved per-run configs, so list order does not leak in.
  CHECK(s1 == sp);
  fs::remove_all(serial);
  fs::remove_all(parallel);
  fs::remove_all(permuted);
}

TEST_CASE("resume skips completed runs and redoes the rest") {
  const fs::path out = scratch("resume");
  const SweepConfig c = small_sweep(out);
  run_sweep(c, 1, false);
  const auto before = snapshot(out);

  // Simulate an interrupted run: manifest left "running", metrics missing.
  RunManifest interrupted = manifest_from_text(read_file(out / "8" / "seed-1" / "manifest.json"));
  interrupted.status = RunStatus::Running;
  write_file_atomic(out / "8" / "seed-1" / "manifest.json", manifest_to_text(interrupted));
  fs::remove(out / "8" / "seed-1" / "metrics.csv");

  std::ostringstream log;
  const SweepResult r = run_sweep(c, 2, true, &log);
  CHECK(r.all_complete());
  int resumed = 0;
  for (const auto& o : r.runs) {
    if (o.resumed) ++resumed;
    if (o.arch == "8" && o.seed_index == 1) CHECK_FALSE(o.resumed);
  }
  CHECK(resumed == 5);
  CHECK(snapshot(out) == before);
  CHECK(log.str().find("(resumed)") != std::string::npos);

  // A changed config invalidates every stored run.
  SweepConfig changed = c;
  changed.agent.entropy_coef = 0.02;
  const SweepResult r2 = run_sweep(changed, 1, true);
  for (const auto& o : r2.runs) CHECK_FALSE(o.resumed);
  fs::remove_all(out);
}

TEST_CASE("aggregate_run_directory over fabricated runs") {
  const fs::path root = scratch("fabricated");
  for (int k = 1; k <= 15; ++k) {
    RunManifest m;
    m.config = small_run();
    m.config.seed_index = k - 1;
    m.config.agent.episodes = 4;
    m.status = RunStatus::Complete;
    m.episodes_completed = 4;
    MetricSeries s;
    for (int e = 1; e <= 4; ++e) {
      MetricRow row;
      row.episode = e;
      row.entropy = static_cast<double>(k);
      row.success = k % 2 == 0;
      s.rows.push_back(row);
    }
    const fs::path dir = root / "8" / ("seed-" + std::to_string(k - 1));
    fs::create_directories(dir);
    write_file_atomic(dir / "manifest.json", manifest_to_text(m));
    write_file_atomic(dir / "metrics.csv", metrics_to_csv(s));
  }
  // One lone run of another architecture, and one unfinished run.
  RunManifest lone;
  lone.config = small_run();
  lone.config.arch = {{4}, 16, 4};
  lone.status = RunStatus::Complete;
  fs::create_directories(root / "4" / "seed-0");
  write_file_atomic(root / "4" / "seed-0" / "manifest.json", manifest_to_text(lone));
  write_file_atomic(root / "4" / "seed-0" / "metrics.csv", metrics_to_csv({}));
  RunManifest running;
  running.config = small_run();
  running.config.seed_index = 99;
  fs::create_directories(root / "8" / "seed-99");
  write_file_atomic(root / "8" / "seed-99" / "manifest.json", manifest_to_text(running));

  std::vector<std::string> warnings;
  const auto aggs = aggregate_run_directory(root, 3, Metric::Entropy, warnings);
  REQUIRE(aggs.size() == 1);
  CHECK(aggs[0].arch == "8");
  REQUIRE(aggs[0].points.size() == 4);
  for (const auto& pt : aggs[0].points) {
    CHECK(pt.mean == doctest::Approx(8.0).epsilon(1e-14));
    CHECK(pt.ci_low == doctest::Approx(5.5234).epsilon(1e-5));
    CHECK(pt.ci_high == doctest::Approx(10.4766).epsilon(1e-5));
    CHECK(pt.n_runs == 15);
  }
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("4:") == 0);

  const auto success = aggregate_run_directory(root, 1, Metric::Success, warnings);
  CHECK(success[0].points[0].mean == doctest::Approx(7.0 / 15.0));
  CHECK_THROWS_AS(aggregate_run_directory(root / "nope", 3, Metric::Entropy, warnings), UsageError);
  fs::remove_all(root);
}
