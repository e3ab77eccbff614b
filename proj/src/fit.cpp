#include "ncurve/fit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ncurve/errors.hpp"

namespace ncurve {

namespace {

bool all_finite(const Vector& v) { return v.allFinite(); }

[[noreturn]] void throw_non_finite(std::size_t iter, const LossResult& r, const std::string& what) {
  const auto show = [](std::size_t v) {
    return v == kNoIndex ? std::string("?") : std::to_string(v);
  };
  throw NonFiniteLoss(iter, r.bad_component, r.bad_step,
                      what + " at iteration " + std::to_string(iter) + " (component " +
                          show(r.bad_component) + ", t index " + show(r.bad_step) + ")");
}

/// Epoch-shuffled mini-batch indices; full batches keep index order.
class BatchSampler {
 public:
  BatchSampler(std::size_t total, std::size_t batch, Rng rng)
      : order_(total), batch_(std::min(batch, total)), rng_(std::move(rng)) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    cursor_ = total;
  }

  std::span<const std::size_t> next() {
    if (batch_ == order_.size()) {
      return order_;
    }
    if (cursor_ + batch_ > order_.size()) {
      std::shuffle(order_.begin(), order_.end(), rng_.engine());
      cursor_ = 0;
    }
    std::span<const std::size_t> out(order_.data() + cursor_, batch_);
    cursor_ += batch_;
    return out;
  }

 private:
  std::vector<std::size_t> order_;
  std::size_t batch_;
  std::size_t cursor_;
  Rng rng_;
};

void check_data(std::span<const Sequence> data, const IndexGrid& grid, Eigen::Index dim) {
  if (data.empty()) {
    throw EmptyInput("fit: empty dataset");
  }
  for (std::size_t j = 0; j < data.size(); ++j) {
    if (static_cast<std::size_t>(data[j].cols()) != grid.size() || data[j].rows() != dim) {
      throw ShapeMismatch("sequence " + std::to_string(j) + " is " + std::to_string(data[j].rows()) +
                          "x" + std::to_string(data[j].cols()) + ", expected " +
                          std::to_string(dim) + "x" + std::to_string(grid.size()));
    }
  }
}

}  // namespace

TrainState::TrainState(Vector initial)
    : theta(std::move(initial)),
      grad(Vector::Zero(theta.size())),
      opt_m(Vector::Zero(theta.size())),
      opt_v(Vector::Zero(theta.size())) {}

void adam_step(TrainState& s, const AdamParams& p) {
  ++s.step;
  s.opt_m = p.beta1 * s.opt_m + (1.0 - p.beta1) * s.grad;
  s.opt_v = p.beta2 * s.opt_v + (1.0 - p.beta2) * s.grad.cwiseProduct(s.grad);
  const double c1 = 1.0 - std::pow(p.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(p.beta2, static_cast<double>(s.step));
  s.theta.array() -= p.learning_rate * (s.opt_m.array() / c1) /
                     ((s.opt_v.array() / c2).sqrt() + p.epsilon);
}

MixtureShape FitConfig::shape() const {
  return {components, degree, dim, resolve_covariance_mode(dim, full_cov)};
}

void FitConfig::validate() const {
  if (components < 1) throw InvalidConfig("K must be >= 1");
  if (degree < 1) throw InvalidConfig("curve needs at least 2 control points");
  if (dim < 1) throw InvalidConfig("dimension must be >= 1");
  if (!(learning_rate > 0.0)) throw InvalidConfig("learning rate must be positive");
  if (max_iters < 1) throw InvalidConfig("max_iters must be >= 1");
  if (batch_size < 1) throw InvalidConfig("batch_size must be >= 1");
  if (!(init_jitter >= 0.0)) throw InvalidConfig("init_jitter must be non-negative");
}

Vector initial_theta(const ParamLayout& layout, std::span<const Sequence> data, double jitter,
                     Rng& rng) {
  if (data.empty()) {
    throw EmptyInput("initialization needs data");
  }
  const Eigen::Index d = layout.dim();
  Vector start = Vector::Zero(d);
  Vector end = Vector::Zero(d);
  Vector lo = Vector::Constant(d, std::numeric_limits<double>::infinity());
  Vector hi = Vector::Constant(d, -std::numeric_limits<double>::infinity());
  Vector sum = Vector::Zero(d);
  Vector sum_sq = Vector::Zero(d);
  double count = 0.0;
  for (const auto& s : data) {
    start += s.col(0);
    end += s.col(s.cols() - 1);
    lo = lo.cwiseMin(s.rowwise().minCoeff());
    hi = hi.cwiseMax(s.rowwise().maxCoeff());
    sum += s.rowwise().sum();
    sum_sq += s.cwiseProduct(s).rowwise().sum();
    count += static_cast<double>(s.cols());
  }
  start /= static_cast<double>(data.size());
  end /= static_cast<double>(data.size());
  const Vector mean = sum / count;
  const Vector var = (sum_sq / count - mean.cwiseProduct(mean)).cwiseMax(0.0);
  const Vector range = hi - lo;

  Vector theta = Vector::Zero(static_cast<Eigen::Index>(layout.size()));
  const int N = layout.degree();
  for (std::size_t k = 0; k < layout.components(); ++k) {
    Rng local = rng.split(k);
    for (std::size_t p = 0; p < layout.controls(); ++p) {
      const double frac = N == 0 ? 0.5 : static_cast<double>(p) / static_cast<double>(N);
      for (Eigen::Index a = 0; a < d; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        theta(static_cast<Eigen::Index>(layout.mean(k, p) + ua)) =
            start(a) + frac * (end(a) - start(a)) + jitter * range(a) * local.normal();
        const double sd = std::max(std::sqrt(var(a)), 10.0 * kSigmaFloor);
        theta(static_cast<Eigen::Index>(layout.log_sigma(k, p) + ua)) = std::log(sd);
      }
    }
  }
  return theta;
}

FitResult fit_unconditional(std::span<const Sequence> data, const IndexGrid& grid,
                            const FitConfig& config) {
  config.validate();
  if (config.steps != 0 && config.steps != grid.size()) {
    throw ShapeMismatch("config expects " + std::to_string(config.steps) + " steps, grid has " +
                        std::to_string(grid.size()));
  }
  check_data(data, grid, config.dim);

  const ParamLayout layout(config.shape());
  const LossEvaluator evaluator(layout, grid, config.loss_reduction);
  Rng rng(config.seed);
  TrainState state(initial_theta(layout, data, config.init_jitter, rng));
  BatchSampler sampler(data.size(), config.batch_size, rng.split(0xba7c4));
  const AdamParams adam{config.learning_rate};

  std::vector<const Sequence*> batch;
  std::vector<double> trace;
  trace.reserve(config.max_iters);
  for (std::size_t it = 0; it < config.max_iters; ++it) {
    const auto idx = sampler.next();
    batch.clear();
    for (std::size_t j : idx) {
      batch.push_back(&data[j]);
    }
    const LossResult r = evaluator.loss_and_gradient(as_span(state.theta), batch, state.grad);
    if (!r.finite()) {
      throw_non_finite(it, r, "non-finite loss");
    }
    if (!all_finite(state.grad)) {
      throw_non_finite(it, r, "non-finite gradient");
    }
    trace.push_back(r.loss);
    adam_step(state, adam);
  }
  if (!all_finite(state.theta)) {
    throw NonFiniteLoss(config.max_iters, kNoIndex, kNoIndex, "parameters became non-finite");
  }
  NCurveMixture mixture = realize(layout, as_span(state.theta));
  return {layout, state.theta, std::move(mixture), std::move(trace)};
}

ConditionalFitResult fit_conditional(std::span<const ConditionalExample> examples,
                                     const IndexGrid& grid, const FitConfig& config,
                                     const EncoderConfig& encoder_config) {
  config.validate();
  if (examples.empty()) {
    throw EmptyInput("fit_conditional: no training pairs");
  }
  if (encoder_config.dim != config.dim) {
    throw InvalidConfig("encoder and mixture dimensions differ");
  }
  std::vector<Sequence> targets;
  targets.reserve(examples.size());
  for (const auto& ex : examples) {
    targets.push_back(ex.target);
  }
  check_data(targets, grid, config.dim);

  const ParamLayout layout(config.shape());
  const LossEvaluator evaluator(layout, grid, config.loss_reduction);
  Rng rng(config.seed);
  const Vector bias = initial_theta(layout, targets, config.init_jitter, rng);

  Encoder encoder(encoder_config, layout.size());
  std::vector<Vector> inputs;
  inputs.reserve(examples.size());
  for (const auto& ex : examples) {
    inputs.push_back(encoder.input_vector(ex.observed, ex.control));
  }
  {
    const auto width = static_cast<Eigen::Index>(encoder.input_size());
    Vector mean = Vector::Zero(width);
    Vector sq = Vector::Zero(width);
    for (const auto& v : inputs) {
      mean += v;
      sq += v.cwiseProduct(v);
    }
    mean /= static_cast<double>(inputs.size());
    Vector sd = (sq / static_cast<double>(inputs.size()) - mean.cwiseProduct(mean)).cwiseMax(0.0).cwiseSqrt();
    for (Eigen::Index i = 0; i < width; ++i) {
      if (sd(i) < 1e-12) sd(i) = 1.0;
    }
    encoder.input_mean() = mean;
    encoder.input_scale() = sd;
  }
  Rng init_rng = rng.split(0xe1c0de);
  encoder.initialize(init_rng, bias);

  TrainState state(encoder.params());
  BatchSampler sampler(examples.size(), config.batch_size, rng.split(0xba7c4));
  const AdamParams adam{config.learning_rate};

  std::vector<double> trace;
  trace.reserve(config.max_iters);
  Encoder::Tape tape;
  Vector g_theta;
  for (std::size_t it = 0; it < config.max_iters; ++it) {
    const auto idx = sampler.next();
    const double inv_b = 1.0 / static_cast<double>(idx.size());
    encoder.params() = state.theta;
    state.grad.setZero();
    double total = 0.0;
    for (std::size_t j : idx) {
      const Vector theta = encoder.forward(inputs[j], tape);
      const Sequence* one[] = {&examples[j].target};
      const LossResult r = evaluator.loss_and_gradient(as_span(theta), one, g_theta);
      if (!r.finite()) {
        throw_non_finite(it, r, "non-finite loss");
      }
      total += r.loss * inv_b;
      encoder.backward(tape, g_theta * inv_b, state.grad);
    }
    if (!all_finite(state.grad)) {
      throw_non_finite(it, LossResult{}, "non-finite gradient");
    }
    trace.push_back(total);
    adam_step(state, adam);
  }
  encoder.params() = state.theta;
  return {ConditionalModel{layout, std::move(encoder)}, std::move(trace)};
}

NCurveMixture predict(const ConditionalModel& model, const Matrix& observed,
                      std::span<const double> control) {
  const Vector theta = model.encoder.forward(model.encoder.input_vector(observed, control));
  return realize(model.layout, as_span(theta));
}

double conditional_nll(const ConditionalModel& model, const IndexGrid& grid,
                       std::span<const ConditionalExample> examples, Reduction reduction) {
  if (examples.empty()) {
    throw EmptyInput("conditional_nll: no examples");
  }
  double total = 0.0;
  for (const auto& ex : examples) {
    total += sequence_nll(predict(model, ex.observed, ex.control), grid, ex.target, reduction);
  }
  return total / static_cast<double>(examples.size());
}

}  // namespace ncurve
