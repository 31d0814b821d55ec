#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "ddlab/rng.hpp"

namespace ddlab {

/// Shape of a shared-backbone actor-critic network: input -> hidden layers (ReLU)
/// -> {policy logits, scalar value}.
struct Architecture {
  std::vector<int> hidden_widths;
  int input_dim = 16;
  int action_dim = 4;

  void validate() const;

  /// Parameter count of backbone plus both heads.
  std::size_t parameter_count() const;

  /// Filesystem-safe label, e.g. "64-64-64".
  std::string label() const;

  /// Human-readable width list, e.g. "[64, 64, 64]".
  std::string display() const;

  bool operator==(const Architecture&) const = default;
};

/// Parses "64,64,64" (or "64-64-64") into widths. Throws UsageError on
/// non-positive or malformed entries.
std::vector<int> parse_widths(std::string_view text);

/// The five capacities studied: [64], [64,64], [128,128], [64,64,64], [128,128,128].
std::vector<std::vector<int>> capacity_grid();

/// Storage shared by parameters, gradients and optimizer moments.
/// Weight matrices are (fan_out x fan_in).
struct ParameterBlocks {
  std::vector<Eigen::MatrixXd> hidden_weights;
  std::vector<Eigen::VectorXd> hidden_biases;
  Eigen::MatrixXd policy_weights;
  Eigen::VectorXd policy_bias;
  Eigen::VectorXd value_weights;
  double value_bias = 0.0;

  /// Flat views of every block in a fixed order: hidden layers (weight, bias)
  /// in depth order, then policy weight, policy bias, value weight, value bias.
  std::vector<std::span<double>> blocks();
  std::vector<std::span<const double>> blocks() const;
  std::vector<std::string> block_names() const;

  std::size_t size() const;
  bool same_shape(const ParameterBlocks& other) const;
  bool all_finite() const;
  bool equals(const ParameterBlocks& other) const;
  void set_zero();

 protected:
  void shape_from(const Architecture& arch);
};

struct NetworkParams : ParameterBlocks {
  static NetworkParams zeros(const Architecture& arch);
  Architecture architecture() const;
};

struct Gradients : ParameterBlocks {
  static Gradients zeros_like(const ParameterBlocks& shape);
  Gradients& operator+=(const Gradients& other);
  Gradients& operator*=(double factor);
};

/// Backbone weights ~ U(-sqrt(6/fan_in), +sqrt(6/fan_in)) drawn in storage order,
/// backbone biases zero, both heads exactly zero. The initial policy is
/// therefore exactly uniform and the initial value exactly 0.
NetworkParams init_params(const Architecture& arch, Rng& rng);

struct ForwardPass {
  Eigen::VectorXd input;
  std::vector<Eigen::VectorXd> pre_activations;
  std::vector<Eigen::VectorXd> activations;
  Eigen::VectorXd policy_logits;
  double value = 0.0;
};

/// Throws UsageError on an input of the wrong length and NumericError on non-finite input.
ForwardPass forward(const NetworkParams& params, const Eigen::VectorXd& input);

/// Max-shifted softmax. Components are floored at the smallest normal double
/// so they stay strictly positive even when exp underflows.
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits);

/// Gradient of (d_logits . logits + d_value * value) with respect to every parameter.
Gradients backward(const ForwardPass& pass, const NetworkParams& params,
                   const Eigen::VectorXd& d_logits, double d_value);

/// Same as backward() but adds into `grads`.
void backward_accumulate(const ForwardPass& pass, const NetworkParams& params,
                         const Eigen::VectorXd& d_logits, double d_value, Gradients& grads);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
  bool operator==(const AdamConfig&) const = default;
};

struct OptimizerState {
  AdamConfig config;
  Gradients first_moment;
  Gradients second_moment;
  std::int64_t step = 0;

  static OptimizerState for_params(const NetworkParams& params, const AdamConfig& config);
};

/// Bias-corrected adaptive-moment update. Throws NumericError (leaving params and
/// state untouched) if any gradient is non-finite.
void optimizer_step(NetworkParams& params, const Gradients& grads, OptimizerState& state);

struct GradcheckReport {
  double max_relative_error = 0.0;
  std::string worst_block;
  std::size_t worst_index = 0;
  int worst_trial = -1;
  std::size_t checked = 0;
  // Coordinates whose +/-h probes straddle a ReLU kink are not differentiable
  // at that resolution and are excluded.
  std::size_t skipped_kinks = 0;
};

inline constexpr double kGradcheckStep = 1e-5;
inline constexpr double kGradcheckTolerance = 1e-4;

/// |a - b| / max(|a|, |b|, floor). The floor keeps exact zeros comparable.
double relative_error(double analytic, double numeric);

/// Compares backward() against central differences on random parameters, inputs
/// and upstream signals. Each trial probes up to `coords_per_block` coordinates per
/// block (all of them when `coords_per_block` is 0).
GradcheckReport gradcheck(const Architecture& arch, int trials, Rng& rng,
                          std::size_t coords_per_block = 8);

}  // namespace ddlab
