#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ddlab/agent.hpp"
#include "ddlab/gridworld.hpp"
#include "ddlab/neural.hpp"

namespace ddlab {

/// How a per-episode entropy value is formed.
///   Visited   - mean over the action distributions of the states visited in the episode
///   AllStates - mean over every non-terminal cell of the map, evaluated before the episode's update
enum class EntropyMode { Visited, AllStates };

std::string_view to_string(EntropyMode mode);
EntropyMode parse_entropy_mode(std::string_view text);

/// Shannon entropy in nats with 0 ln 0 = 0. Throws UsageError unless the input
/// is a probability vector (non-negative, sums to 1 within 1e-9).
double policy_entropy(std::span<const double> probs);
double policy_entropy(const Eigen::VectorXd& probs);

/// Mean step entropy over an episode's recorded policy distributions.
double episode_entropy(const EpisodeRecord& record);

/// Mean policy entropy over all non-terminal cells.
double all_states_entropy(const NetworkParams& params, const GridMap& map);

/// Centered rolling mean. A window of w covers (w-1)/2 points to the left and
/// the rest to the right; the window shrinks at the ends. window = 1 is identity.
std::vector<double> smooth(std::span<const double> series, int window);

struct Interval {
  double mean = 0.0;
  double low = 0.0;
  double high = 0.0;
};

/// Student-t CDF, via the regularized incomplete beta function.
double student_t_cdf(double t, double dof);

/// Student-t quantile, by bisection on student_t_cdf.
double student_t_quantile(double p, double dof);

/// mean +/- t((1+level)/2, n-1) * s / sqrt(n), s the unbiased sample deviation.
/// Throws UsageError for n < 2.
Interval confidence_interval(std::span<const double> values, double level = 0.95);

struct AggregatePoint {
  int episode = 0;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int n_runs = 0;
};

struct AggregateSeries {
  std::string arch;
  std::vector<AggregatePoint> points;
};

/// Smooths each run with `window`, then forms a per-episode confidence band
/// across runs. Episodes are numbered from `first_episode`.
AggregateSeries aggregate(std::string arch, const std::vector<std::vector<double>>& runs,
                          int window, double level = 0.95, int first_episode = 1);

enum class SegmentKind { Descent, Ascent };

std::string_view to_string(SegmentKind kind);

struct PhaseSegment {
  SegmentKind kind = SegmentKind::Descent;
  int start_episode = 0;
  int end_episode = 0;
  double start_value = 0.0;
  double end_value = 0.0;

  bool operator==(const PhaseSegment&) const = default;
};

struct PhaseReport {
  std::vector<PhaseSegment> segments;
  int reascents = 0;

  int descents() const;
  bool operator==(const PhaseReport&) const = default;
};

/// Zig-zag segmentation. A turning point is confirmed once the series retraces
/// from the running extreme by strictly more than `prominence`; the extreme
/// (earliest on ties) becomes a segment boundary. The first direction is set by
/// the first point that departs from the start by more than `prominence`. When
/// no point does, the result is one segment following the endpoint trend.
/// Episode numbers are index + first_episode.
PhaseReport segment_phases(std::span<const double> series, double prominence,
                           int first_episode = 0);

}  // namespace ddlab
