#include "ddlab/agent.hpp"

#include <cmath>

#include "ddlab/errors.hpp"

namespace ddlab {

void AgentConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw UsageError("gamma must lie in [0, 1]");
  }
  if (!(value_coef >= 0.0) || !std::isfinite(value_coef)) {
    throw UsageError("value_coef must be >= 0");
  }
  if (!(entropy_coef >= 0.0) || !std::isfinite(entropy_coef)) {
    throw UsageError("entropy_coef must be >= 0");
  }
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw UsageError("learning_rate must be > 0");
  }
  if (episodes < 1) {
    throw UsageError("episodes must be >= 1");
  }
}

double EpisodeRecord::total_reward() const {
  double sum = 0.0;
  for (const auto& t : transitions) sum += t.reward;
  return sum;
}

bool EpisodeRecord::reached_goal() const {
  return !transitions.empty() && transitions.back().terminal && transitions.back().reward > 0.0;
}

double td_error(double reward, double gamma, double v_next, double v_curr, bool terminal) {
  const double bootstrap = terminal ? 0.0 : v_next;
  return reward + gamma * bootstrap - v_curr;
}

double value_loss(double delta) { return 0.5 * delta * delta; }

double policy_loss(std::span<const double> log_probs, std::span<const double> advantages) {
  if (log_probs.size() != advantages.size()) {
    throw UsageError("policy_loss: log_probs and advantages differ in length");
  }
  if (log_probs.empty()) {
    return 0.0;
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < log_probs.size(); ++i) {
    sum += log_probs[i] * advantages[i];
  }
  return -sum / static_cast<double>(log_probs.size());
}

Action sample_action(const Eigen::VectorXd& probs, Rng& rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  for (Eigen::Index a = 0; a < probs.size(); ++a) {
    cumulative += probs[a];
    if (u < cumulative) {
      return static_cast<Action>(a);
    }
  }
  return static_cast<Action>(probs.size() - 1);
}

EpisodeRecord collect_episode(const NetworkParams& params, const EnvConfig& env, Rng& rng) {
  FrozenLake lake(env);
  EpisodeRecord record;
  int state = lake.reset();
  while (!lake.done()) {
    const ForwardPass pass = forward(params, encode_state(state, env.map));
    const Eigen::VectorXd log_probs = log_softmax(pass.policy_logits);
    Eigen::VectorXd probs = softmax(pass.policy_logits);
    const Action action = sample_action(probs, rng);
    const Transition t = lake.step(action, rng);

    record.transitions.push_back(t);
    record.probabilities.push_back(std::move(probs));
    record.values.push_back(pass.value);
    record.log_probs.push_back(log_probs[static_cast<int>(action)]);
    state = t.next_state;
    if (t.truncated) {
      record.truncated = true;
      record.bootstrap_value = forward(params, encode_state(state, env.map)).value;
    }
  }
  return record;
}

EpisodeGradients episode_gradients(const NetworkParams& params, const EpisodeRecord& record,
                                   const AgentConfig& config, const GridMap& map) {
  const std::size_t steps = record.size();
  if (steps == 0) {
    throw UsageError("cannot train on an empty episode");
  }
  std::vector<ForwardPass> passes;
  passes.reserve(steps);
  for (const auto& t : record.transitions) {
    passes.push_back(forward(params, encode_state(t.state, map)));
  }

  EpisodeGradients out;
  out.advantages.resize(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    const Transition& tr = record.transitions[t];
    double v_next = 0.0;
    if (t + 1 < steps) {
      v_next = passes[t + 1].value;
    } else if (record.truncated) {
      v_next = record.bootstrap_value;
    }
    out.advantages[t] = td_error(tr.reward, config.gamma, v_next, passes[t].value, tr.terminal);
  }

  const double inv_steps = 1.0 / static_cast<double>(steps);
  out.grads = Gradients::zeros_like(params);
  std::vector<double> chosen_log_probs(steps);
  double value_sum = 0.0;
  double entropy_sum = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    const double delta = out.advantages[t];
    const Eigen::VectorXd log_p = log_softmax(passes[t].policy_logits);
    const Eigen::VectorXd p = log_p.array().exp().matrix();
    const double entropy = -p.dot(log_p);
    const int action = static_cast<int>(record.transitions[t].action);
    chosen_log_probs[t] = log_p[action];
    value_sum += value_loss(delta);
    entropy_sum += entropy;

    // d/dz of -delta * log p_a is -delta (e_a - p);
    // d/dz of -beta * H is +beta * p (log p + H).
    Eigen::VectorXd d_logits = delta * p;
    d_logits[action] -= delta;
    d_logits += config.entropy_coef * (p.array() * (log_p.array() + entropy)).matrix();
    d_logits *= inv_steps;
    // d/dV of 0.5 (target - V)^2 is -(target - V) = -delta.
    const double d_value = -config.value_coef * delta * inv_steps;
    backward_accumulate(passes[t], params, d_logits, d_value, out.grads);
  }

  out.loss.value_loss = value_sum * inv_steps;
  out.loss.policy_loss = policy_loss(chosen_log_probs, out.advantages);
  out.loss.entropy_term = entropy_sum * inv_steps;
  out.loss.total = out.loss.policy_loss + config.value_coef * out.loss.value_loss -
                   config.entropy_coef * out.loss.entropy_term;
  return out;
}

LossBreakdown train_episode(NetworkParams& params, OptimizerState& opt, const EpisodeRecord& record,
                            const AgentConfig& config, const GridMap& map) {
  EpisodeGradients eg = episode_gradients(params, record, config, map);
  if (!std::isfinite(eg.loss.total)) {
    throw NumericError("non-finite episode loss");
  }
  optimizer_step(params, eg.grads, opt);
  return eg.loss;
}

}  // namespace ddlab
