#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <random>

#include "ddlab/csv.hpp"
#include "ddlab/errors.hpp"

using namespace ddlab;

TEST_CASE("format_double round-trips binary64") {
  std::mt19937_64 gen(17);
  for (int i = 0; i < 20000; ++i) {
    double x;
    const std::uint64_t bits = gen();
    std::memcpy(&x, &bits, sizeof x);
    if (!std::isfinite(x)) continue;
    CHECK(parse_double(format_double(x)) == x);
  }
  CHECK(format_double(0.25) == "0.25");
  CHECK(parse_double(format_double(std::log(4.0))) == std::log(4.0));
  CHECK_THROWS_AS(parse_double("1.5x"), FormatError);
  CHECK_THROWS_AS(parse_double(""), FormatError);
}

TEST_CASE("metrics csv round trip") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  MetricSeries s;
  for (int e = 1; e <= 200; ++e) {
    MetricRow r;
    r.episode = e;
    r.entropy = std::abs(u(gen)) / 4.0;
    r.success = gen() % 2 == 0;
    r.episode_return = r.success ? 1.0 : 0.0;
    r.steps = static_cast<int>(gen() % 100) + 1;
    r.value_loss = u(gen) * u(gen);
    r.policy_loss = u(gen) * 1e-7;
    r.total_loss = u(gen);
    s.rows.push_back(r);
  }
  const std::string text = metrics_to_csv(s);
  CHECK(text.rfind(std::string(kMetricsHeader) + "\n", 0) == 0);
  CHECK(metrics_from_csv(text) == s);
  CHECK(metrics_to_csv(metrics_from_csv(text)) == text);
  CHECK(s.entropy().size() == 200);
  CHECK(s.success()[0] == (s.rows[0].success ? 1.0 : 0.0));
}

TEST_CASE("metrics csv rejects malformed input") {
  const std::string header(kMetricsHeader);
  CHECK_THROWS_AS(metrics_from_csv(""), FormatError);
  CHECK_THROWS_AS(metrics_from_csv("episode,entropy\n1,0.5\n"), FormatError);
  CHECK_THROWS_AS(metrics_from_csv(header + "\n1,0.5,0,0,3\n"), FormatError);
  CHECK_THROWS_AS(metrics_from_csv(header + "\n1,abc,0,0,3,0,0,0\n"), FormatError);
  CHECK_THROWS_AS(metrics_from_csv(header + "\nx,0.5,0,0,3,0,0,0\n"), FormatError);
  CHECK(metrics_from_csv(header + "\n").rows.empty());
}

TEST_CASE("aggregate csv round trip keeps arch order") {
  std::vector<AggregateSeries> in;
  for (const char* arch : {"64", "128-128", "64-64"}) {
    AggregateSeries a{arch, {}};
    for (int e = 1; e <= 30; ++e) {
      const double m = std::sin(e * 0.3) + static_cast<double>(a.arch.size());
      a.points.push_back({e, m, m - 0.1, m + 0.2, 15});
    }
    in.push_back(a);
  }
  const std::string text = aggregate_to_csv(in);
  const auto out = aggregate_from_csv(text);
  REQUIRE(out.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(out[k].arch == in[k].arch);
    REQUIRE(out[k].points.size() == in[k].points.size());
    for (std::size_t i = 0; i < out[k].points.size(); ++i) {
      CHECK(out[k].points[i].episode == in[k].points[i].episode);
      CHECK(out[k].points[i].mean == in[k].points[i].mean);
      CHECK(out[k].points[i].ci_low == in[k].points[i].ci_low);
      CHECK(out[k].points[i].ci_high == in[k].points[i].ci_high);
      CHECK(out[k].points[i].n_runs == 15);
    }
  }
  CHECK_THROWS_AS(aggregate_from_csv(std::string(kAggregateHeader) + "\n64,1,0.5\n"), FormatError);
}

TEST_CASE("segments csv") {
  PhaseReport r = segment_phases(std::vector<double>{2.0, 1.5, 1.0, 0.5, 0.8, 1.1, 0.6, 0.2}, 0.2, 1);
  const std::string text = segments_to_csv({{"64-64-64", r}});
  CHECK(text.rfind(std::string(kSegmentsHeader) + "\n", 0) == 0);
  CHECK(text.find("64-64-64,1,ascent,4,6,0.5,1.1000000000000001") != std::string::npos);
}

TEST_CASE("atomic file write") {
  const auto dir = std::filesystem::temp_directory_path() / "ddlab_csv_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto path = dir / "a.csv";
  write_file_atomic(path, "first\n");
  CHECK(read_file(path) == "first\n");
  write_file_atomic(path, "second\n");
  CHECK(read_file(path) == "second\n");
  int files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++files;
  CHECK(files == 1);
  CHECK_THROWS(read_file(dir / "missing.csv"));
  std::filesystem::remove_all(dir);
}
