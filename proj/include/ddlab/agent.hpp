#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "ddlab/gridworld.hpp"
#include "ddlab/neural.hpp"
#include "ddlab/rng.hpp"

namespace ddlab {

/// Hyperparameters of the advantage actor-critic learner. Updates happen once
/// per episode on the episode-mean loss.
///
/// entropy_coef adds a bonus on the very quantity the lab measures (policy
/// entropy). It is recorded in every run manifest; compare curves only across
/// runs that share it.
struct AgentConfig {
  double gamma = 0.95;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double learning_rate = 1e-3;
  int episodes = 5000;

  void validate() const;
  bool operator==(const AgentConfig&) const = default;
};

struct EpisodeRecord {
  std::vector<Transition> transitions;
  std::vector<Eigen::VectorXd> probabilities;  // pi(.|s_t)
  std::vector<double> values;                  // V(s_t)
  std::vector<double> log_probs;               // log pi(a_t|s_t)
  double bootstrap_value = 0.0;                // V(s_T), only meaningful when truncated
  bool truncated = false;

  std::size_t size() const { return transitions.size(); }
  double total_reward() const;
  bool reached_goal() const;
};

struct LossBreakdown {
  double value_loss = 0.0;
  double policy_loss = 0.0;
  double entropy_term = 0.0;
  double total = 0.0;
};

/// r + gamma * V(s') - V(s), with the bootstrap dropped at terminal transitions.
/// The bootstrap is a constant target: callers never differentiate through it.
double td_error(double reward, double gamma, double v_next, double v_curr, bool terminal);

/// 0.5 * delta^2.
double value_loss(double delta);

/// -mean(log_probs * advantages). Advantages are constants.
double policy_loss(std::span<const double> log_probs, std::span<const double> advantages);

/// Inverse-CDF draw from a probability vector.
Action sample_action(const Eigen::VectorXd& probs, Rng& rng);

/// Rolls out one on-policy episode from the start cell until a hole, the goal, or
/// the horizon.
EpisodeRecord collect_episode(const NetworkParams& params, const EnvConfig& env, Rng& rng);

struct EpisodeGradients {
  LossBreakdown loss;
  std::vector<double> advantages;
  Gradients grads;
};

/// Loss terms and their parameter gradient for one episode:
///   total = policy_loss + value_coef * mean(0.5 delta^2) - entropy_coef * mean H(pi)
/// with advantage delta_t = td_error(...) held constant.
EpisodeGradients episode_gradients(const NetworkParams& params, const EpisodeRecord& record,
                                   const AgentConfig& config, const GridMap& map);

/// One optimizer step on the episode loss. Throws NumericError (params untouched)
/// when the loss or its gradient is not finite.
LossBreakdown train_episode(NetworkParams& params, OptimizerState& opt,
                            const EpisodeRecord& record, const AgentConfig& config,
                            const GridMap& map);

}  // namespace ddlab
