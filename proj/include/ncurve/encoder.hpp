#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ncurve/gaussian.hpp"
#include "ncurve/rng.hpp"

namespace ncurve {

enum class Activation { Tanh, Relu };

std::string to_string(Activation act);
Activation activation_from_string(const std::string& name);

/// Shape of the conditioning input and of the hidden stack.
struct EncoderConfig {
  std::vector<std::size_t> hidden_sizes{64};
  Activation activation = Activation::Tanh;
  std::size_t observed_steps = 0;  // m: number of observed sequence steps
  Eigen::Index dim = 2;
  std::size_t control_length = 0;  // 0 when no control channel is used

  std::size_t input_size() const {
    return observed_steps * static_cast<std::size_t>(dim) + control_length;
  }
};

/// Feed-forward map from a flattened observation (plus optional control
/// channel) to the unconstrained mixture parameter vector. Inputs are
/// standardized with statistics fixed at training time. All weights live in
/// one flat vector so the optimizer can treat them like any other parameters.
class Encoder {
 public:
  Encoder(EncoderConfig config, std::size_t output_size);

  const EncoderConfig& config() const noexcept { return config_; }
  std::size_t output_size() const noexcept { return output_size_; }
  std::size_t input_size() const noexcept { return config_.input_size(); }

  Vector& params() noexcept { return params_; }
  const Vector& params() const noexcept { return params_; }

  Vector& input_mean() noexcept { return input_mean_; }
  const Vector& input_mean() const noexcept { return input_mean_; }
  Vector& input_scale() noexcept { return input_scale_; }
  const Vector& input_scale() const noexcept { return input_scale_; }

  /// Xavier-style random hidden weights, small output weights and the given output bias.
  void initialize(Rng& rng, const Vector& output_bias, double output_weight_scale = 1e-2);

  /// Flattened, step-major observation followed by the control channel.
  Vector input_vector(const Matrix& observed, std::span<const double> control) const;

  Vector forward(const Vector& input) const;

  /// Cached activations for one forward pass.
  struct Tape {
    std::vector<Vector> activations;  // standardized input, then each hidden layer output
    Vector output;
  };

  Vector forward(const Vector& input, Tape& tape) const;

  /// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output).
  void backward(const Tape& tape, const Vector& d_output, Vector& grad) const;

 private:
  struct LayerSlots {
    std::size_t in;
    std::size_t out;
    std::size_t weights;  // offset of out x in column-major weight block
    std::size_t bias;
  };

  EncoderConfig config_;
  std::size_t output_size_;
  std::vector<LayerSlots> layers_;
  Vector params_;
  Vector input_mean_;
  Vector input_scale_;
};

}  // namespace ncurve
