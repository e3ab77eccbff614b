#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ncurve/encoder.hpp"
#include "ncurve/loss.hpp"
#include "ncurve/params.hpp"

namespace ncurve {

struct AdamParams {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Parameters plus optimizer state; one owner, updated in place.
struct TrainState {
  Vector theta;
  Vector grad;
  Vector opt_m;
  Vector opt_v;
  std::size_t step = 0;

  explicit TrainState(Vector initial);
};

/// One bias-corrected Adam update of state.theta using state.grad.
void adam_step(TrainState& state, const AdamParams& params);

struct FitConfig {
  std::size_t components = 1;  // K
  int degree = 3;              // N; the curve has N + 1 control points
  Eigen::Index dim = 2;        // d
  std::size_t steps = 0;       // n, grid length; 0 takes it from the data
  double learning_rate = 1e-3;
  std::size_t max_iters = 1000;
  std::size_t batch_size = 1024;  // clamped to the dataset size
  std::uint64_t seed = 0;
  Reduction loss_reduction = Reduction::Mean;
  bool full_cov = true;
  double init_jitter = 0.05;  // fraction of the per-axis data range

  MixtureShape shape() const;
  /// Throws InvalidConfig for non-positive settings.
  void validate() const;
};

/// Starting parameters: uniform weights, control means on the straight line
/// from the mean first point to the mean last point plus seeded jitter,
/// log_sigma from the per-axis data spread, zero correlations.
Vector initial_theta(const ParamLayout& layout, std::span<const Sequence> data, double jitter,
                     Rng& rng);

struct FitResult {
  ParamLayout layout;
  Vector theta;
  NCurveMixture mixture;
  std::vector<double> loss_trace;  // batch NLL before each update
};

/// Maximum-likelihood fit of an unconditional N-Curve mixture with Adam.
/// Throws NonFiniteLoss with the failing iteration/component/step.
FitResult fit_unconditional(std::span<const Sequence> data, const IndexGrid& grid,
                            const FitConfig& config);

/// One training pair: the observed prefix (d x m), the optional control
/// channel (length m + n or empty) and the full target sequence (d x (m + n)).
struct ConditionalExample {
  Matrix observed;
  std::vector<double> control;
  Sequence target;
};

struct ConditionalModel {
  ParamLayout layout;
  Encoder encoder;
};

struct ConditionalFitResult {
  ConditionalModel model;
  std::vector<double> loss_trace;
};

/// End-to-end fit of the encoder so that realize(encoder(observation)) maximizes
/// the mixture likelihood of each full sequence.
ConditionalFitResult fit_conditional(std::span<const ConditionalExample> examples,
                                     const IndexGrid& grid, const FitConfig& config,
                                     const EncoderConfig& encoder_config);

/// Single forward pass: the predicted mixture over the whole m + n horizon.
NCurveMixture predict(const ConditionalModel& model, const Matrix& observed,
                      std::span<const double> control = {});

/// Mean NLL of the examples under the model's predictions.
double conditional_nll(const ConditionalModel& model, const IndexGrid& grid,
                       std::span<const ConditionalExample> examples,
                       Reduction reduction = Reduction::Sum);

}  // namespace ncurve
