#include <doctest.h>

#include <filesystem>
#include <map>
#include <sstream>

#include "ddlab/cli.hpp"
#include "ddlab/csv.hpp"
#include "ddlab/sweep.hpp"

using namespace ddlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ddlab_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).generic_string()] = read_file(e.path());
  }
  return files;
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

// Fifteen completed runs of arch [8]; run k logs `value(k)` at every episode.
template <class F>
void fabricate_runs(const fs::path& root, int episodes, F value) {
  for (int k = 1; k <= 15; ++k) {
    RunManifest m;
    m.config.arch = {{8}, 16, 4};
    m.config.seed_index = k - 1;
    m.config.agent.episodes = episodes;
    m.status = RunStatus::Complete;
    m.episodes_completed = episodes;
    MetricSeries s;
    for (int e = 1; e <= episodes; ++e) {
      MetricRow row;
      row.episode = e;
      row.entropy = value(k, e);
      s.rows.push_back(row);
    }
    const fs::path dir = root / "8" / ("seed-" + std::to_string(k - 1));
    fs::create_directories(dir);
    write_file_atomic(dir / "manifest.json", manifest_to_text(m));
    write_file_atomic(dir / "metrics.csv", metrics_to_csv(s));
  }
}

void write_aggregate(const fs::path& path, const std::vector<std::pair<std::string, std::vector<double>>>& curves) {
  std::vector<AggregateSeries> all;
  for (const auto& [arch, values] : curves) {
    AggregateSeries s{arch, {}};
    for (std::size_t i = 0; i < values.size(); ++i) {
      s.points.push_back({static_cast<int>(i) + 1, values[i], values[i] - 0.05, values[i] + 0.05, 15});
    }
    all.push_back(s);
  }
  write_file_atomic(path, aggregate_to_csv(all));
}

}  // namespace

TEST_CASE("cli: top level") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"bogus"}).code == kExitUsage);
  const Outcome help = cli({"--help"});
  CHECK(help.code == kExitOk);
  CHECK(help.out.find("gradcheck") != std::string::npos);
  CHECK(cli({"run", "--help"}).code == kExitOk);
}

TEST_CASE("cli: run") {
  const fs::path dir = scratch("run");
  const Outcome o = cli({"run", "--arch", "64", "--seed", "1", "--episodes", "10", "--out", (dir / "d").string()});
  CHECK(o.code == kExitOk);
  CHECK(o.out.find("mean_entropy_last100=") != std::string::npos);
  CHECK(o.out.find("success_rate_last100=") != std::string::npos);
  CHECK(fs::exists(dir / "d" / "manifest.json"));
  CHECK(metrics_from_csv(read_file(dir / "d" / "metrics.csv")).rows.size() == 10);

  const Outcome ck = cli({"run", "--arch", "8,8", "--episodes", "3", "--slippery", "false", "--out",
                          (dir / "e").string(), "--checkpoint", (dir / "e.params").string()});
  CHECK(ck.code == kExitOk);
  CHECK(fs::exists(dir / "e.params"));

  const Outcome zero = cli({"run", "--arch", "0"});
  CHECK(zero.code == kExitUsage);
  CHECK(zero.err.find("--arch") != std::string::npos);
  CHECK(cli({"run", "--gamma", "1.5"}).code == kExitUsage);
  CHECK(cli({"run", "--episodes", "0"}).code == kExitUsage);
  CHECK(cli({"run", "--entropy-mode", "sometimes"}).code == kExitUsage);
  CHECK(cli({"run", "--frobnicate"}).code == kExitUsage);
  fs::remove_all(dir);
}

TEST_CASE("cli: sweep") {
  const fs::path dir = scratch("sweep");
  SweepConfig c;
  c.architectures = {{8}, {8, 8}};
  c.seeds_per_arch = 3;
  c.agent.episodes = 30;
  c.smoothing_window = 5;
  c.output_dir = dir / "unused";
  write_file_atomic(dir / "small.json", sweep_config_to_text(c));

  const Outcome one = cli({"sweep", "--config", (dir / "small.json").string(), "--jobs", "1", "--out",
                           (dir / "a").string()});
  CHECK(one.code == kExitOk);
  CHECK(one.out.find("6 runs: 6 complete (0 resumed), 0 failed; 2 aggregate files") != std::string::npos);
  CHECK(fs::exists(dir / "a" / "aggregate" / "8.csv"));
  CHECK(fs::exists(dir / "a" / "aggregate" / "8-8.csv"));
  CHECK(fs::exists(dir / "a" / "aggregate" / "phases.csv"));
  CHECK(fs::exists(dir / "a" / "entropy.svg"));

  const Outcome many = cli({"sweep", "--config", (dir / "small.json").string(), "--jobs", "8", "--out",
                            (dir / "b").string()});
  CHECK(many.code == kExitOk);
  auto a = snapshot(dir / "a");
  auto b = snapshot(dir / "b");
  a.erase("sweep_config.json");
  b.erase("sweep_config.json");
  CHECK(a == b);

  const Outcome again = cli({"sweep", "--config", (dir / "small.json").string(), "--resume", "--out",
                             (dir / "a").string()});
  CHECK(again.code == kExitOk);
  CHECK(again.out.find("6 complete (6 resumed)") != std::string::npos);
  auto a2 = snapshot(dir / "a");
  a2.erase("sweep_config.json");
  CHECK(a2 == a);

  // Every run diverges: partial failure is reported with exit 1.
  SweepConfig bad = c;
  bad.env.map = GridMap::from_rows({"SG"});
  bad.agent.learning_rate = 1e300;
  bad.agent.episodes = 40;
  write_file_atomic(dir / "bad.json", sweep_config_to_text(bad));
  const Outcome failed = cli({"sweep", "--config", (dir / "bad.json").string(), "--out", (dir / "c").string()});
  CHECK(failed.code == kExitFailure);
  CHECK(failed.err.find("aborted") != std::string::npos);

  CHECK(cli({"sweep", "--config", (dir / "missing.json").string()}).code == kExitFailure);
  write_file_atomic(dir / "broken.json", "{ not json");
  CHECK(cli({"sweep", "--config", (dir / "broken.json").string()}).code == kExitFailure);
  CHECK(cli({"sweep", "--jobs", "0"}).code == kExitUsage);
  fs::remove_all(dir);
}

TEST_CASE("cli: aggregate") {
  const fs::path dir = scratch("aggregate");
  fabricate_runs(dir / "ramp", 6, [](int k, int) { return static_cast<double>(k); });
  const Outcome o = cli({"aggregate", "--runs", (dir / "ramp").string(), "--window", "3", "--out",
                         (dir / "ramp.csv").string()});
  CHECK(o.code == kExitOk);
  const auto series = aggregate_from_csv(read_file(dir / "ramp.csv"));
  REQUIRE(series.size() == 1);
  REQUIRE(series[0].points.size() == 6);
  for (const auto& p : series[0].points) {
    CHECK(p.ci_low == doctest::Approx(5.5234).epsilon(1e-5));
    CHECK(p.ci_high == doctest::Approx(10.4766).epsilon(1e-5));
  }

  fabricate_runs(dir / "flat", 5, [](int, int) { return 0.7; });
  CHECK(cli({"aggregate", "--runs", (dir / "flat").string(), "--out", (dir / "flat.csv").string()}).code == kExitOk);
  for (const auto& p : aggregate_from_csv(read_file(dir / "flat.csv"))[0].points) {
    CHECK(p.ci_low == p.ci_high);
  }

  auto raw = [](int k, int e) { return 0.01 * k * e + (e % 2); };
  fabricate_runs(dir / "raw", 5, raw);
  CHECK(cli({"aggregate", "--runs", (dir / "raw").string(), "--window", "1", "--out", (dir / "raw.csv").string()})
            .code == kExitOk);
  const auto raw_series = aggregate_from_csv(read_file(dir / "raw.csv"));
  for (const auto& p : raw_series[0].points) {
    double sum = 0.0;
    for (int k = 1; k <= 15; ++k) sum += raw(k, p.episode);
    CHECK(p.mean == doctest::Approx(sum / 15.0).epsilon(1e-14));
  }

  fs::create_directories(dir / "empty");
  CHECK(cli({"aggregate", "--runs", (dir / "empty").string(), "--out", (dir / "e.csv").string()}).code ==
        kExitFailure);
  CHECK(cli({"aggregate"}).code == kExitUsage);
  CHECK(cli({"aggregate", "--runs", (dir / "nope").string()}).code == kExitUsage);
  fs::remove_all(dir);
}

TEST_CASE("cli: phases") {
  const fs::path dir = scratch("phases");
  std::vector<double> mono(40);
  for (std::size_t i = 0; i < mono.size(); ++i) mono[i] = 1.4 - 0.03 * static_cast<double>(i);
  write_aggregate(dir / "mono.csv", {{"64", mono}});
  const Outcome m = cli({"phases", "--agg", (dir / "mono.csv").string(), "--prominence", "0.1"});
  CHECK(m.code == kExitOk);
  CHECK(m.out.find("[64]: 1 descent, 0 re-ascents") != std::string::npos);
  CHECK(fs::exists(dir / "mono.segments.csv"));

  write_aggregate(dir / "v.csv", {{"64-64-64", {2.0, 1.5, 1.0, 0.5, 0.8, 1.1, 0.6, 0.2}}});
  const Outcome v = cli({"phases", "--agg", (dir / "v.csv").string(), "--prominence", "0.2", "--out",
                         (dir / "v-seg.csv").string()});
  CHECK(v.code == kExitOk);
  CHECK(v.out.find("[64, 64, 64]: 2 descents, 1 re-ascent") != std::string::npos);
  // Episodes in aggregate files start at 1.
  const std::string seg = read_file(dir / "v-seg.csv");
  CHECK(seg.find("64-64-64,0,descent,1,4,") != std::string::npos);
  CHECK(seg.find("64-64-64,1,ascent,4,6,") != std::string::npos);
  CHECK(seg.find("64-64-64,2,descent,6,8,") != std::string::npos);

  const Outcome wide = cli({"phases", "--agg", (dir / "v.csv").string(), "--prominence", "10"});
  CHECK(wide.code == kExitOk);
  CHECK(wide.out.find("1 descent, 0 re-ascents") != std::string::npos);

  write_file_atomic(dir / "bad.csv", "arch,episode,mean\n64,1,0.5\n");
  CHECK(cli({"phases", "--agg", (dir / "bad.csv").string()}).code == kExitFailure);
  CHECK(cli({"phases", "--agg", (dir / "v.csv").string(), "--prominence", "-1"}).code == kExitUsage);
  fs::remove_all(dir);
}

TEST_CASE("cli: plot") {
  const fs::path dir = scratch("plot");
  write_aggregate(dir / "one.csv", {{"64", {1.3, 1.1, 0.9, 0.4}}});
  CHECK(cli({"plot", "--input", (dir / "one.csv").string(), "--out", (dir / "one.svg").string()}).code == kExitOk);
  CHECK(count(read_file(dir / "one.svg"), "<path") == 2);

  std::vector<std::pair<std::string, std::vector<double>>> five;
  for (const char* a : {"64", "64-64", "64-64-64", "128-128", "128-128-128"}) {
    five.push_back({a, {1.3, 1.0, 0.7, 0.2, 0.1}});
  }
  write_aggregate(dir / "five.csv", five);
  CHECK(cli({"plot", "--input", (dir / "five.csv").string(), "--out", (dir / "a.svg").string()}).code == kExitOk);
  CHECK(cli({"plot", "--input", (dir / "five.csv").string(), "--out", (dir / "b.svg").string()}).code == kExitOk);
  const std::string svg = read_file(dir / "a.svg");
  CHECK(count(svg, "class=\"legend-entry\"") == 5);
  CHECK(svg == read_file(dir / "b.svg"));

  write_file_atomic(dir / "empty.csv", std::string(kAggregateHeader) + "\n");
  CHECK(cli({"plot", "--input", (dir / "empty.csv").string(), "--out", (dir / "e.svg").string()}).code ==
        kExitFailure);
  CHECK_FALSE(fs::exists(dir / "e.svg"));
  CHECK(cli({"plot"}).code == kExitUsage);
  fs::remove_all(dir);
}

TEST_CASE("cli: gradcheck") {
  const Outcome a = cli({"gradcheck", "--trials", "2"});
  const Outcome b = cli({"gradcheck", "--trials", "2"});
  CHECK(a.code == kExitOk);
  CHECK(a.out == b.out);
  CHECK(count(a.out, "arch [") == 5);
  CHECK(a.out.find("gradcheck passed") != std::string::npos);
  CHECK(cli({"gradcheck", "--trials", "0"}).code == kExitUsage);
}
