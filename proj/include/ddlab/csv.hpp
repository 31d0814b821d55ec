#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ddlab/analysis.hpp"

namespace ddlab {

/// One training episode as logged to metrics.csv.
struct MetricRow {
  int episode = 0;  // 1-based
  double entropy = 0.0;
  double episode_return = 0.0;
  bool success = false;
  int steps = 0;
  double value_loss = 0.0;
  double policy_loss = 0.0;
  double total_loss = 0.0;

  bool operator==(const MetricRow&) const = default;
};

struct MetricSeries {
  std::vector<MetricRow> rows;

  std::vector<double> entropy() const;
  std::vector<double> success() const;
  bool operator==(const MetricSeries&) const = default;
};

/// 17 significant digits, enough to round-trip every binary64 value.
std::string format_double(double x);
double parse_double(std::string_view text);

inline constexpr std::string_view kMetricsHeader =
    "episode,entropy,return,success,steps,value_loss,policy_loss,total_loss";
inline constexpr std::string_view kAggregateHeader = "arch,episode,mean,ci_low,ci_high,n_runs";
inline constexpr std::string_view kSegmentsHeader =
    "arch,segment,kind,start_episode,end_episode,start_value,end_value";

std::string metrics_to_csv(const MetricSeries& series);
MetricSeries metrics_from_csv(std::string_view text);

std::string aggregate_to_csv(const std::vector<AggregateSeries>& series);
/// Groups rows by the arch column, in order of first appearance.
std::vector<AggregateSeries> aggregate_from_csv(std::string_view text);

struct LabeledReport {
  std::string arch;
  PhaseReport report;
};
std::string segments_to_csv(const std::vector<LabeledReport>& reports);

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it into place, so readers
/// see either the old content or the complete new content.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace ddlab
