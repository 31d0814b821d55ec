#include "ddlab/neural.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

#include "ddlab/errors.hpp"

namespace ddlab {

namespace {

bool finite(const Eigen::Ref<const Eigen::MatrixXd>& m) { return m.allFinite(); }

// Uniform draw per coefficient, in storage order.
void fill_uniform(Eigen::MatrixXd& m, double bound, Rng& rng) {
  double* data = m.data();
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    data[i] = rng.uniform(-bound, bound);
  }
}

void fill_uniform(Eigen::VectorXd& v, double bound, Rng& rng) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = rng.uniform(-bound, bound);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Architecture

void Architecture::validate() const {
  if (hidden_widths.empty()) {
    throw UsageError("architecture needs at least one hidden layer");
  }
  for (int w : hidden_widths) {
    if (w <= 0) {
      throw UsageError("hidden widths must be positive");
    }
  }
  if (input_dim <= 0 || action_dim <= 0) {
    throw UsageError("input_dim and action_dim must be positive");
  }
}

std::size_t Architecture::parameter_count() const {
  std::size_t count = 0;
  std::size_t fan_in = static_cast<std::size_t>(input_dim);
  for (int w : hidden_widths) {
    const auto width = static_cast<std::size_t>(w);
    count += width * fan_in + width;
    fan_in = width;
  }
  count += static_cast<std::size_t>(action_dim) * (fan_in + 1);
  count += fan_in + 1;
  return count;
}

std::string Architecture::label() const {
  std::string out;
  for (std::size_t i = 0; i < hidden_widths.size(); ++i) {
    if (i > 0) out += '-';
    out += std::to_string(hidden_widths[i]);
  }
  return out;
}

std::string Architecture::display() const {
  std::string out = "[";
  for (std::size_t i = 0; i < hidden_widths.size(); ++i) {
    if (i > 0) out += ", ";
    out += std::to_string(hidden_widths[i]);
  }
  return out + "]";
}

std::vector<int> parse_widths(std::string_view text) {
  std::vector<int> widths;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find_first_of(",-", pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view token = text.substr(pos, end - pos);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    int value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (token.empty() || ec != std::errc() || ptr != token.data() + token.size()) {
      throw UsageError("malformed width list '" + std::string(text) + "'");
    }
    if (value <= 0) {
      throw UsageError("hidden widths must be positive, got " + std::to_string(value));
    }
    widths.push_back(value);
    pos = end + 1;
  }
  return widths;
}

std::vector<std::vector<int>> capacity_grid() {
  return {{64}, {64, 64}, {128, 128}, {64, 64, 64}, {128, 128, 128}};
}

// ---------------------------------------------------------------------------
// ParameterBlocks

std::vector<std::span<double>> ParameterBlocks::blocks() {
  std::vector<std::span<double>> out;
  out.reserve(2 * hidden_weights.size() + 4);
  for (std::size_t l = 0; l < hidden_weights.size(); ++l) {
    out.emplace_back(hidden_weights[l].data(), static_cast<std::size_t>(hidden_weights[l].size()));
    out.emplace_back(hidden_biases[l].data(), static_cast<std::size_t>(hidden_biases[l].size()));
  }
  out.emplace_back(policy_weights.data(), static_cast<std::size_t>(policy_weights.size()));
  out.emplace_back(policy_bias.data(), static_cast<std::size_t>(policy_bias.size()));
  out.emplace_back(value_weights.data(), static_cast<std::size_t>(value_weights.size()));
  out.emplace_back(&value_bias, 1);
  return out;
}

std::vector<std::span<const double>> ParameterBlocks::blocks() const {
  auto mutable_blocks = const_cast<ParameterBlocks*>(this)->blocks();
  return {mutable_blocks.begin(), mutable_blocks.end()};
}

std::vector<std::string> ParameterBlocks::block_names() const {
  std::vector<std::string> names;
  for (std::size_t l = 0; l < hidden_weights.size(); ++l) {
    names.push_back("hidden[" + std::to_string(l) + "].weight");
    names.push_back("hidden[" + std::to_string(l) + "].bias");
  }
  names.insert(names.end(), {"policy.weight", "policy.bias", "value.weight", "value.bias"});
  return names;
}

std::size_t ParameterBlocks::size() const {
  std::size_t n = 0;
  for (auto b : blocks()) n += b.size();
  return n;
}

bool ParameterBlocks::same_shape(const ParameterBlocks& other) const {
  if (hidden_weights.size() != other.hidden_weights.size() ||
      hidden_biases.size() != other.hidden_biases.size()) {
    return false;
  }
  auto same = [](const auto& a, const auto& b) {
    return a.rows() == b.rows() && a.cols() == b.cols();
  };
  for (std::size_t l = 0; l < hidden_weights.size(); ++l) {
    if (!same(hidden_weights[l], other.hidden_weights[l]) ||
        !same(hidden_biases[l], other.hidden_biases[l])) {
      return false;
    }
  }
  return same(policy_weights, other.policy_weights) && same(policy_bias, other.policy_bias) &&
         same(value_weights, other.value_weights);
}

bool ParameterBlocks::all_finite() const {
  for (auto b : blocks()) {
    for (double x : b) {
      if (!std::isfinite(x)) return false;
    }
  }
  return true;
}

bool ParameterBlocks::equals(const ParameterBlocks& other) const {
  if (!same_shape(other)) return false;
  auto a = blocks();
  auto b = other.blocks();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::equal(a[i].begin(), a[i].end(), b[i].begin())) return false;
  }
  return true;
}

void ParameterBlocks::set_zero() {
  for (auto b : blocks()) std::fill(b.begin(), b.end(), 0.0);
}

void ParameterBlocks::shape_from(const Architecture& arch) {
  arch.validate();
  hidden_weights.clear();
  hidden_biases.clear();
  int fan_in = arch.input_dim;
  for (int w : arch.hidden_widths) {
    hidden_weights.push_back(Eigen::MatrixXd::Zero(w, fan_in));
    hidden_biases.push_back(Eigen::VectorXd::Zero(w));
    fan_in = w;
  }
  policy_weights = Eigen::MatrixXd::Zero(arch.action_dim, fan_in);
  policy_bias = Eigen::VectorXd::Zero(arch.action_dim);
  value_weights = Eigen::VectorXd::Zero(fan_in);
  value_bias = 0.0;
}

NetworkParams NetworkParams::zeros(const Architecture& arch) {
  NetworkParams p;
  p.shape_from(arch);
  return p;
}

Architecture NetworkParams::architecture() const {
  Architecture arch;
  for (const auto& b : hidden_biases) arch.hidden_widths.push_back(static_cast<int>(b.size()));
  arch.input_dim = hidden_weights.empty() ? 0 : static_cast<int>(hidden_weights.front().cols());
  arch.action_dim = static_cast<int>(policy_bias.size());
  return arch;
}

Gradients Gradients::zeros_like(const ParameterBlocks& shape) {
  Gradients g;
  g.hidden_weights.reserve(shape.hidden_weights.size());
  for (std::size_t l = 0; l < shape.hidden_weights.size(); ++l) {
    g.hidden_weights.push_back(Eigen::MatrixXd::Zero(shape.hidden_weights[l].rows(),
                                                     shape.hidden_weights[l].cols()));
    g.hidden_biases.push_back(Eigen::VectorXd::Zero(shape.hidden_biases[l].size()));
  }
  g.policy_weights = Eigen::MatrixXd::Zero(shape.policy_weights.rows(), shape.policy_weights.cols());
  g.policy_bias = Eigen::VectorXd::Zero(shape.policy_bias.size());
  g.value_weights = Eigen::VectorXd::Zero(shape.value_weights.size());
  g.value_bias = 0.0;
  return g;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  if (!same_shape(other)) {
    throw UsageError("gradient shapes differ");
  }
  for (std::size_t l = 0; l < hidden_weights.size(); ++l) {
    hidden_weights[l] += other.hidden_weights[l];
    hidden_biases[l] += other.hidden_biases[l];
  }
  policy_weights += other.policy_weights;
  policy_bias += other.policy_bias;
  value_weights += other.value_weights;
  value_bias += other.value_bias;
  return *this;
}

Gradients& Gradients::operator*=(double factor) {
  for (auto b : blocks()) {
    for (double& x : b) x *= factor;
  }
  return *this;
}

// ---------------------------------------------------------------------------
// Forward / backward

NetworkParams init_params(const Architecture& arch, Rng& rng) {
  NetworkParams p = NetworkParams::zeros(arch);
  for (auto& w : p.hidden_weights) {
    const double bound = std::sqrt(6.0 / static_cast<double>(w.cols()));
    fill_uniform(w, bound, rng);
  }
  return p;
}

ForwardPass forward(const NetworkParams& params, const Eigen::VectorXd& input) {
  if (params.hidden_weights.empty() || input.size() != params.hidden_weights.front().cols()) {
    throw UsageError("forward: input length " + std::to_string(input.size()) +
                     " does not match network input dimension");
  }
  if (!finite(input)) {
    throw NumericError("forward: non-finite input");
  }
  ForwardPass pass;
  pass.input = input;
  const std::size_t depth = params.hidden_weights.size();
  pass.pre_activations.reserve(depth);
  pass.activations.reserve(depth);
  const Eigen::VectorXd* h = &pass.input;
  for (std::size_t l = 0; l < depth; ++l) {
    pass.pre_activations.push_back(params.hidden_weights[l] * *h + params.hidden_biases[l]);
    pass.activations.push_back(pass.pre_activations.back().cwiseMax(0.0));
    h = &pass.activations.back();
  }
  pass.policy_logits = params.policy_weights * *h + params.policy_bias;
  pass.value = params.value_weights.dot(*h) + params.value_bias;
  return pass;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double max = logits.maxCoeff();
  Eigen::VectorXd p = (logits.array() - max).exp().matrix();
  p /= p.sum();
  return p.cwiseMax(std::numeric_limits<double>::min());
}

Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits) {
  const double max = logits.maxCoeff();
  const double lse = max + std::log((logits.array() - max).exp().sum());
  return (logits.array() - lse).matrix();
}

void backward_accumulate(const ForwardPass& pass, const NetworkParams& params,
                         const Eigen::VectorXd& d_logits, double d_value, Gradients& grads) {
  const std::size_t depth = params.hidden_weights.size();
  if (pass.activations.size() != depth || d_logits.size() != params.policy_bias.size() ||
      !grads.same_shape(params)) {
    throw UsageError("backward: shape mismatch between pass, params and upstream signal");
  }
  const Eigen::VectorXd& last = pass.activations.back();
  grads.policy_weights.noalias() += d_logits * last.transpose();
  grads.policy_bias += d_logits;
  grads.value_weights += d_value * last;
  grads.value_bias += d_value;

  Eigen::VectorXd upstream = params.policy_weights.transpose() * d_logits + d_value * params.value_weights;
  for (std::size_t l = depth; l-- > 0;) {
    const Eigen::VectorXd dz =
        (pass.pre_activations[l].array() > 0.0).select(upstream.array(), 0.0).matrix();
    const Eigen::VectorXd& below = l == 0 ? pass.input : pass.activations[l - 1];
    grads.hidden_weights[l].noalias() += dz * below.transpose();
    grads.hidden_biases[l] += dz;
    if (l > 0) {
      upstream.noalias() = params.hidden_weights[l].transpose() * dz;
    }
  }
}

Gradients backward(const ForwardPass& pass, const NetworkParams& params,
                   const Eigen::VectorXd& d_logits, double d_value) {
  Gradients grads = Gradients::zeros_like(params);
  backward_accumulate(pass, params, d_logits, d_value, grads);
  return grads;
}

// ---------------------------------------------------------------------------
// Optimizer

void AdamConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw UsageError("learning rate must be positive and finite");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw UsageError("Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) {
    throw UsageError("Adam epsilon must be positive");
  }
}

OptimizerState OptimizerState::for_params(const NetworkParams& params, const AdamConfig& config) {
  config.validate();
  OptimizerState s;
  s.config = config;
  s.first_moment = Gradients::zeros_like(params);
  s.second_moment = Gradients::zeros_like(params);
  return s;
}

void optimizer_step(NetworkParams& params, const Gradients& grads, OptimizerState& state) {
  if (!params.same_shape(grads) || !params.same_shape(state.first_moment) ||
      !params.same_shape(state.second_moment)) {
    throw UsageError("optimizer_step: shape mismatch");
  }
  if (!grads.all_finite()) {
    throw NumericError("optimizer_step: non-finite gradient");
  }
  const AdamConfig& c = state.config;
  const std::int64_t t = state.step + 1;
  const double correction1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
  const double correction2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));

  auto p = params.blocks();
  auto g = grads.blocks();
  auto m = state.first_moment.blocks();
  auto v = state.second_moment.blocks();
  for (std::size_t b = 0; b < p.size(); ++b) {
    for (std::size_t i = 0; i < p[b].size(); ++i) {
      const double gi = g[b][i];
      m[b][i] = c.beta1 * m[b][i] + (1.0 - c.beta1) * gi;
      v[b][i] = c.beta2 * v[b][i] + (1.0 - c.beta2) * gi * gi;
      const double m_hat = m[b][i] / correction1;
      const double v_hat = v[b][i] / correction2;
      p[b][i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
  state.step = t;
}

// ---------------------------------------------------------------------------
// Gradient check

namespace {

constexpr double kRelativeFloor = 1e-6;

double probe_objective(const ForwardPass& pass, const Eigen::VectorXd& d_logits, double d_value) {
  return d_logits.dot(pass.policy_logits) + d_value * pass.value;
}

bool same_relu_pattern(const ForwardPass& a, const ForwardPass& b) {
  for (std::size_t l = 0; l < a.pre_activations.size(); ++l) {
    const auto& za = a.pre_activations[l];
    const auto& zb = b.pre_activations[l];
    for (Eigen::Index i = 0; i < za.size(); ++i) {
      if ((za[i] > 0.0) != (zb[i] > 0.0)) return false;
    }
  }
  return true;
}

}  // namespace

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), kRelativeFloor});
  return std::abs(analytic - numeric) / denom;
}

GradcheckReport gradcheck(const Architecture& arch, int trials, Rng& rng,
                          std::size_t coords_per_block) {
  if (trials < 1) {
    throw UsageError("gradcheck needs at least one trial");
  }
  arch.validate();
  GradcheckReport report;
  for (int trial = 0; trial < trials; ++trial) {
    // Fully random parameters: the zero heads of init_params would hide most
    // of the backbone gradient.
    NetworkParams params = init_params(arch, rng);
    for (auto& b : params.hidden_biases) fill_uniform(b, 0.5, rng);
    const double head_bound = std::sqrt(6.0 / static_cast<double>(params.policy_weights.cols()));
    fill_uniform(params.policy_weights, head_bound, rng);
    fill_uniform(params.policy_bias, 0.5, rng);
    fill_uniform(params.value_weights, head_bound, rng);
    params.value_bias = rng.uniform(-0.5, 0.5);

    Eigen::VectorXd input(arch.input_dim);
    fill_uniform(input, 1.0, rng);
    Eigen::VectorXd d_logits(arch.action_dim);
    fill_uniform(d_logits, 1.0, rng);
    const double d_value = rng.uniform(-1.0, 1.0);

    const ForwardPass base = forward(params, input);
    const Gradients analytic = backward(base, params, d_logits, d_value);

    auto param_blocks = params.blocks();
    auto grad_blocks = analytic.blocks();
    const auto names = params.block_names();
    for (std::size_t b = 0; b < param_blocks.size(); ++b) {
      const std::size_t n = param_blocks[b].size();
      std::vector<std::size_t> coords;
      if (coords_per_block == 0 || n <= coords_per_block) {
        coords.resize(n);
        std::iota(coords.begin(), coords.end(), std::size_t{0});
      } else {
        for (std::size_t k = 0; k < coords_per_block; ++k) {
          coords.push_back(static_cast<std::size_t>(rng.below(n)));
        }
      }
      for (std::size_t i : coords) {
        double& theta = param_blocks[b][i];
        const double saved = theta;
        theta = saved + kGradcheckStep;
        const ForwardPass plus = forward(params, input);
        theta = saved - kGradcheckStep;
        const ForwardPass minus = forward(params, input);
        theta = saved;
        if (!same_relu_pattern(plus, base) || !same_relu_pattern(minus, base)) {
          ++report.skipped_kinks;
          continue;
        }
        const double numeric = (probe_objective(plus, d_logits, d_value) -
                                probe_objective(minus, d_logits, d_value)) /
                               (2.0 * kGradcheckStep);
        const double err = relative_error(grad_blocks[b][i], numeric);
        ++report.checked;
        if (report.worst_trial < 0 || err > report.max_relative_error) {
          report.max_relative_error = err;
          report.worst_block = names[b];
          report.worst_index = i;
          report.worst_trial = trial;
        }
      }
    }
  }
  return report;
}

}  // namespace ddlab
