#include "ddlab/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "ddlab/errors.hpp"

namespace ddlab {

namespace {

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t end = line.find(delim, pos);
    out.push_back(line.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos));
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return out;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  for (auto line : split(text, '\n')) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

int parse_int(std::string_view text) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw FormatError("expected integer, got '" + std::string(text) + "'");
  }
  return value;
}

void expect_header(const std::vector<std::string_view>& lines, std::string_view header) {
  if (lines.empty() || lines.front() != header) {
    throw FormatError("expected CSV header '" + std::string(header) + "'");
  }
}

}  // namespace

std::vector<double> MetricSeries::entropy() const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.entropy);
  return out;
}

std::vector<double> MetricSeries::success() const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.success ? 1.0 : 0.0);
  return out;
}

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  if (ec != std::errc()) {
    throw FormatError("cannot format number");
  }
  return {buf, ptr};
}

double parse_double(std::string_view text) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw FormatError("expected number, got '" + std::string(text) + "'");
  }
  return value;
}

std::string metrics_to_csv(const MetricSeries& series) {
  std::string out(kMetricsHeader);
  out += '\n';
  for (const auto& r : series.rows) {
    out += std::to_string(r.episode);
    out += ',' + format_double(r.entropy);
    out += ',' + format_double(r.episode_return);
    out += r.success ? ",1" : ",0";
    out += ',' + std::to_string(r.steps);
    out += ',' + format_double(r.value_loss);
    out += ',' + format_double(r.policy_loss);
    out += ',' + format_double(r.total_loss);
    out += '\n';
  }
  return out;
}

MetricSeries metrics_from_csv(std::string_view text) {
  const auto lines = lines_of(text);
  expect_header(lines, kMetricsHeader);
  MetricSeries series;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i], ',');
    if (f.size() != 8) {
      throw FormatError("metrics.csv line " + std::to_string(i + 1) + ": expected 8 columns");
    }
    MetricRow r;
    r.episode = parse_int(f[0]);
    r.entropy = parse_double(f[1]);
    r.episode_return = parse_double(f[2]);
    r.success = parse_int(f[3]) != 0;
    r.steps = parse_int(f[4]);
    r.value_loss = parse_double(f[5]);
    r.policy_loss = parse_double(f[6]);
    r.total_loss = parse_double(f[7]);
    series.rows.push_back(r);
  }
  return series;
}

std::string aggregate_to_csv(const std::vector<AggregateSeries>& series) {
  std::string out(kAggregateHeader);
  out += '\n';
  for (const auto& s : series) {
    for (const auto& p : s.points) {
      out += s.arch;
      out += ',' + std::to_string(p.episode);
      out += ',' + format_double(p.mean);
      out += ',' + format_double(p.ci_low);
      out += ',' + format_double(p.ci_high);
      out += ',' + std::to_string(p.n_runs);
      out += '\n';
    }
  }
  return out;
}

std::vector<AggregateSeries> aggregate_from_csv(std::string_view text) {
  const auto lines = lines_of(text);
  expect_header(lines, kAggregateHeader);
  std::vector<AggregateSeries> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i], ',');
    if (f.size() != 6) {
      throw FormatError("aggregate CSV line " + std::to_string(i + 1) + ": expected 6 columns");
    }
    AggregatePoint p;
    p.episode = parse_int(f[1]);
    p.mean = parse_double(f[2]);
    p.ci_low = parse_double(f[3]);
    p.ci_high = parse_double(f[4]);
    p.n_runs = parse_int(f[5]);
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& s) { return s.arch == f[0]; });
    if (it == out.end()) {
      out.push_back({std::string(f[0]), {}});
      it = std::prev(out.end());
    }
    it->points.push_back(p);
  }
  return out;
}

std::string segments_to_csv(const std::vector<LabeledReport>& reports) {
  std::string out(kSegmentsHeader);
  out += '\n';
  for (const auto& r : reports) {
    for (std::size_t k = 0; k < r.report.segments.size(); ++k) {
      const auto& s = r.report.segments[k];
      out += r.arch;
      out += ',' + std::to_string(k);
      out += ',' + std::string(to_string(s.kind));
      out += ',' + std::to_string(s.start_episode);
      out += ',' + std::to_string(s.end_episode);
      out += ',' + format_double(s.start_value);
      out += ',' + format_double(s.end_value);
      out += '\n';
    }
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      throw std::runtime_error("failed writing " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace ddlab
