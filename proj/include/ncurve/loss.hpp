#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "ncurve/bezier.hpp"
#include "ncurve/params.hpp"

namespace ncurve {

/// Sum: plain log-likelihood over steps. Mean: divided by the number of steps.
enum class Reduction { Sum, Mean };

/// Sum over steps of curve_log_density(curve, t_i, x_i), optionally averaged.
double sequence_loglik(const NCurve& curve, const IndexGrid& grid, const Sequence& seq,
                       Reduction reduction = Reduction::Sum);

/// Per-sequence negative log mixture likelihood, -logsumexp_k(log pi_k + loglik_k).
double sequence_nll(const NCurveMixture& mixture, const IndexGrid& grid, const Sequence& seq,
                    Reduction reduction = Reduction::Sum);

/// Mean over sequences of sequence_nll. Throws EmptyInput for an empty dataset.
double mixture_nll(const NCurveMixture& mixture, const IndexGrid& grid,
                   std::span<const Sequence> sequences, Reduction reduction = Reduction::Sum);

inline constexpr std::size_t kNoIndex = std::numeric_limits<std::size_t>::max();

struct LossResult {
  double loss = 0.0;
  /// First (component, step) whose curve-point Gaussian was degenerate or produced a
  /// non-finite term; kNoIndex when everything was finite.
  std::size_t bad_component = kNoIndex;
  std::size_t bad_step = kNoIndex;

  bool finite() const noexcept { return bad_component == kNoIndex && std::isfinite(loss); }
};

/// Mixture NLL and its exact gradient with respect to the unconstrained
/// parameters, evaluated directly on the parameter vector.
///
/// Curve-point Gaussians are factored once per call (K x n Cholesky factors);
/// per-sequence terms are then accumulated in index order, so results are
/// bit-stable for a given input.
class LossEvaluator {
 public:
  LossEvaluator(ParamLayout layout, IndexGrid grid, Reduction reduction);

  const ParamLayout& layout() const noexcept { return layout_; }
  const IndexGrid& grid() const noexcept { return grid_; }
  Reduction reduction() const noexcept { return reduction_; }

  LossResult loss(std::span<const double> theta, std::span<const Sequence* const> batch) const;

  /// Writes d(loss)/d(theta) into `grad` (resized as needed).
  LossResult loss_and_gradient(std::span<const double> theta,
                               std::span<const Sequence* const> batch, Vector& grad) const;

 private:
  LossResult run(std::span<const double> theta, std::span<const Sequence* const> batch,
                 Vector* grad) const;

  ParamLayout layout_;
  IndexGrid grid_;
  Reduction reduction_;
  Matrix basis_;  // n x (N+1) Bernstein weights
};

/// Pointer view over a contiguous dataset, for use as a batch.
std::vector<const Sequence*> as_batch(std::span<const Sequence> sequences);

}  // namespace ncurve
