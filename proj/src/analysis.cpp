#include "ddlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ddlab/errors.hpp"

namespace ddlab {

std::string_view to_string(EntropyMode mode) {
  return mode == EntropyMode::Visited ? "visited" : "all-states";
}

EntropyMode parse_entropy_mode(std::string_view text) {
  if (text == "visited") return EntropyMode::Visited;
  if (text == "all-states") return EntropyMode::AllStates;
  throw UsageError("unknown entropy mode '" + std::string(text) + "' (visited|all-states)");
}

double policy_entropy(std::span<const double> probs) {
  if (probs.empty()) {
    throw UsageError("policy_entropy: empty distribution");
  }
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw UsageError("policy_entropy: probabilities must be finite and non-negative");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw UsageError("policy_entropy: probabilities must sum to 1");
  }
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double policy_entropy(const Eigen::VectorXd& probs) {
  return policy_entropy(std::span<const double>(probs.data(), static_cast<std::size_t>(probs.size())));
}

double episode_entropy(const EpisodeRecord& record) {
  if (record.probabilities.empty()) {
    throw UsageError("episode_entropy: empty episode");
  }
  double sum = 0.0;
  for (const auto& p : record.probabilities) sum += policy_entropy(p);
  return sum / static_cast<double>(record.probabilities.size());
}

double all_states_entropy(const NetworkParams& params, const GridMap& map) {
  double sum = 0.0;
  int count = 0;
  for (int s = 0; s < map.size(); ++s) {
    if (map.is_terminal(s)) continue;
    sum += policy_entropy(softmax(forward(params, encode_state(s, map)).policy_logits));
    ++count;
  }
  return count > 0 ? sum / count : 0.0;
}

std::vector<double> smooth(std::span<const double> series, int window) {
  if (window < 1) {
    throw UsageError("smoothing window must be >= 1");
  }
  const auto n = static_cast<std::ptrdiff_t>(series.size());
  std::vector<double> out(series.size());
  if (window == 1) {
    std::copy(series.begin(), series.end(), out.begin());
    return out;
  }
  const std::ptrdiff_t left = (window - 1) / 2;
  const std::ptrdiff_t right = window - 1 - left;
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - left);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + right);
    double sum = 0.0;
    for (std::ptrdiff_t j = lo; j <= hi; ++j) sum += series[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Student-t

namespace {

// Continued fraction for the incomplete beta function (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 1000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return h;
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

}  // namespace

double student_t_cdf(double t, double dof) {
  if (!(dof > 0.0)) {
    throw UsageError("student_t_cdf: degrees of freedom must be positive");
  }
  if (t == 0.0) return 0.5;
  const double x = dof / (dof + t * t);
  const double tail = 0.5 * regularized_incomplete_beta(0.5 * dof, 0.5, x);
  return t > 0.0 ? 1.0 - tail : tail;
}

double student_t_quantile(double p, double dof) {
  if (!(p > 0.0 && p < 1.0)) {
    throw UsageError("student_t_quantile: p must lie in (0, 1)");
  }
  if (p == 0.5) return 0.0;
  if (p < 0.5) return -student_t_quantile(1.0 - p, dof);
  double lo = 0.0;
  double hi = 1.0;
  while (student_t_cdf(hi, dof) < p) {
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (student_t_cdf(mid, dof) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

namespace {

// Moments about the first value: identical samples give exactly (c, c, c).
Interval interval_with_quantile(std::span<const double> values, double t) {
  const double n = static_cast<double>(values.size());
  const double pivot = values[0];
  double shifted_sum = 0.0;
  for (double v : values) shifted_sum += v - pivot;
  const double shifted_mean = shifted_sum / n;
  const double mean = pivot + shifted_mean;
  double ss = 0.0;
  for (double v : values) ss += (v - pivot - shifted_mean) * (v - pivot - shifted_mean);
  const double half = t * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return {mean, mean - half, mean + half};
}

}  // namespace

Interval confidence_interval(std::span<const double> values, double level) {
  const std::size_t n = values.size();
  if (n < 2) {
    throw UsageError("confidence_interval needs at least 2 values");
  }
  if (!(level > 0.0 && level < 1.0)) {
    throw UsageError("confidence level must lie in (0, 1)");
  }
  return interval_with_quantile(values, student_t_quantile(0.5 * (1.0 + level), static_cast<double>(n - 1)));
}

AggregateSeries aggregate(std::string arch, const std::vector<std::vector<double>>& runs,
                          int window, double level, int first_episode) {
  if (runs.size() < 2) {
    throw UsageError("aggregate needs at least 2 runs");
  }
  const std::size_t length = runs.front().size();
  for (const auto& r : runs) {
    if (r.size() != length) {
      throw UsageError("aggregate: runs differ in length");
    }
  }
  std::vector<std::vector<double>> smoothed;
  smoothed.reserve(runs.size());
  for (const auto& r : runs) smoothed.push_back(smooth(r, window));

  AggregateSeries out;
  out.arch = std::move(arch);
  out.points.reserve(length);
  std::vector<double> column(runs.size());
  const double t = student_t_quantile(0.5 * (1.0 + level), static_cast<double>(runs.size() - 1));
  for (std::size_t e = 0; e < length; ++e) {
    for (std::size_t r = 0; r < runs.size(); ++r) column[r] = smoothed[r][e];
    const Interval ci = interval_with_quantile(column, t);
    out.points.push_back({first_episode + static_cast<int>(e), ci.mean, ci.low, ci.high,
                          static_cast<int>(runs.size())});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Phase segmentation

std::string_view to_string(SegmentKind kind) {
  return kind == SegmentKind::Descent ? "descent" : "ascent";
}

int PhaseReport::descents() const {
  return static_cast<int>(segments.size()) - reascents;
}

PhaseReport segment_phases(std::span<const double> series, double prominence, int first_episode) {
  if (series.size() < 2) {
    throw UsageError("segment_phases needs at least 2 points");
  }
  if (!(prominence >= 0.0)) {
    throw UsageError("prominence must be >= 0");
  }
  const std::size_t n = series.size();
  PhaseReport report;
  auto emit = [&](SegmentKind kind, std::size_t from, std::size_t to) {
    report.segments.push_back({kind, first_episode + static_cast<int>(from),
                               first_episode + static_cast<int>(to), series[from], series[to]});
    if (kind == SegmentKind::Ascent) ++report.reascents;
  };

  // Direction is 0 until the series first leaves the +/- prominence band around
  // its starting value.
  int direction = 0;
  std::size_t pivot = 0;
  std::size_t extreme = 0;
  for (std::size_t i = 1; i < n; ++i) {
    const double x = series[i];
    if (direction == 0) {
      if (x - series[0] > prominence) {
        direction = +1;
        extreme = i;
      } else if (series[0] - x > prominence) {
        direction = -1;
        extreme = i;
      }
    } else if (direction < 0) {
      if (x < series[extreme]) {
        extreme = i;
      } else if (x - series[extreme] > prominence) {
        emit(SegmentKind::Descent, pivot, extreme);
        pivot = extreme;
        extreme = i;
        direction = +1;
      }
    } else {
      if (x > series[extreme]) {
        extreme = i;
      } else if (series[extreme] - x > prominence) {
        emit(SegmentKind::Ascent, pivot, extreme);
        pivot = extreme;
        extreme = i;
        direction = -1;
      }
    }
  }
  if (direction == 0) {
    direction = series[n - 1] > series[0] ? +1 : -1;
  }
  emit(direction > 0 ? SegmentKind::Ascent : SegmentKind::Descent, pivot, n - 1);
  return report;
}

}  // namespace ddlab
