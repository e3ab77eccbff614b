#include "ncurve/encoder.hpp"

#include <cmath>

#include "ncurve/errors.hpp"

namespace ncurve {

std::string to_string(Activation act) { return act == Activation::Tanh ? "tanh" : "relu"; }

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  throw InvalidConfig("unknown activation '" + name + "'");
}

Encoder::Encoder(EncoderConfig config, std::size_t output_size)
    : config_(std::move(config)), output_size_(output_size) {
  if (config_.input_size() == 0) {
    throw InvalidConfig("encoder input is empty");
  }
  std::size_t offset = 0;
  std::size_t in = config_.input_size();
  auto add = [&](std::size_t out) {
    layers_.push_back({in, out, offset, offset + in * out});
    offset += in * out + out;
    in = out;
  };
  for (std::size_t h : config_.hidden_sizes) {
    if (h == 0) {
      throw InvalidConfig("hidden layer of size 0");
    }
    add(h);
  }
  add(output_size_);
  params_ = Vector::Zero(static_cast<Eigen::Index>(offset));
  input_mean_ = Vector::Zero(static_cast<Eigen::Index>(config_.input_size()));
  input_scale_ = Vector::Ones(static_cast<Eigen::Index>(config_.input_size()));
}

void Encoder::initialize(Rng& rng, const Vector& output_bias, double output_weight_scale) {
  if (output_bias.size() != static_cast<Eigen::Index>(output_size_)) {
    throw ShapeMismatch("encoder output bias has the wrong length");
  }
  params_.setZero();
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& L = layers_[l];
    const bool last = l + 1 == layers_.size();
    const double s = last ? output_weight_scale : 1.0 / std::sqrt(static_cast<double>(L.in));
    for (std::size_t i = 0; i < L.in * L.out; ++i) {
      params_(static_cast<Eigen::Index>(L.weights + i)) = s * rng.normal();
    }
  }
  const auto& out = layers_.back();
  params_.segment(static_cast<Eigen::Index>(out.bias), static_cast<Eigen::Index>(out.out)) =
      output_bias;
}

Vector Encoder::input_vector(const Matrix& observed, std::span<const double> control) const {
  if (observed.rows() != config_.dim ||
      static_cast<std::size_t>(observed.cols()) != config_.observed_steps) {
    throw ShapeMismatch("observation must have " + std::to_string(config_.observed_steps) +
                        " steps of dimension " + std::to_string(config_.dim) + " (got " +
                        std::to_string(observed.cols()) + " x " + std::to_string(observed.rows()) +
                        ")");
  }
  if (control.size() != config_.control_length) {
    throw ShapeMismatch("control channel must have " + std::to_string(config_.control_length) +
                        " values (got " + std::to_string(control.size()) + ")");
  }
  Vector v(static_cast<Eigen::Index>(input_size()));
  // column-major d x m storage is already step-major
  v.head(observed.size()) = Eigen::Map<const Vector>(observed.data(), observed.size());
  for (std::size_t i = 0; i < control.size(); ++i) {
    v(observed.size() + static_cast<Eigen::Index>(i)) = control[i];
  }
  return v;
}

Vector Encoder::forward(const Vector& input) const {
  Tape tape;
  return forward(input, tape);
}

Vector Encoder::forward(const Vector& input, Tape& tape) const {
  if (input.size() != static_cast<Eigen::Index>(input_size())) {
    throw ShapeMismatch("encoder input has length " + std::to_string(input.size()) +
                        ", expected " + std::to_string(input_size()));
  }
  tape.activations.clear();
  tape.activations.push_back(((input - input_mean_).array() / input_scale_.array()).matrix());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& L = layers_[l];
    const auto W = Eigen::Map<const Matrix>(params_.data() + L.weights,
                                            static_cast<Eigen::Index>(L.out),
                                            static_cast<Eigen::Index>(L.in));
    const auto b = Eigen::Map<const Vector>(params_.data() + L.bias, static_cast<Eigen::Index>(L.out));
    Vector z = W * tape.activations.back() + b;
    if (l + 1 == layers_.size()) {
      tape.output = std::move(z);
    } else {
      if (config_.activation == Activation::Tanh) {
        z = z.array().tanh().matrix();
      } else {
        z = z.cwiseMax(0.0);
      }
      tape.activations.push_back(std::move(z));
    }
  }
  return tape.output;
}

void Encoder::backward(const Tape& tape, const Vector& d_output, Vector& grad) const {
  if (grad.size() != params_.size()) {
    grad = Vector::Zero(params_.size());
  }
  Vector delta = d_output;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& L = layers_[l];
    const Vector& in = tape.activations[l];
    auto gW = Eigen::Map<Matrix>(grad.data() + L.weights, static_cast<Eigen::Index>(L.out),
                                 static_cast<Eigen::Index>(L.in));
    gW.noalias() += delta * in.transpose();
    grad.segment(static_cast<Eigen::Index>(L.bias), static_cast<Eigen::Index>(L.out)) += delta;
    if (l == 0) {
      break;
    }
    const auto W = Eigen::Map<const Matrix>(params_.data() + L.weights,
                                            static_cast<Eigen::Index>(L.out),
                                            static_cast<Eigen::Index>(L.in));
    Vector back = W.transpose() * delta;
    // `in` is the activation output of layer l-1
    if (config_.activation == Activation::Tanh) {
      delta = (back.array() * (1.0 - in.array().square())).matrix();
    } else {
      delta = (back.array() * (in.array() > 0.0).cast<double>()).matrix();
    }
  }
}

}  // namespace ncurve
