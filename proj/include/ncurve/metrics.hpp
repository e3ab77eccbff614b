#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "ncurve/bezier.hpp"
#include "ncurve/loss.hpp"

namespace ncurve {

/// Root mean squared distance between each ground-truth endpoint and the
/// endpoint (t = 1) of the mean curve of the highest-weight component.
double fde(const NCurveMixture& prediction, std::span<const Sequence> ground_truth);

/// Mixture NLL summed over time steps, averaged over sequences.
double nll_metric(const NCurveMixture& prediction, const IndexGrid& grid,
                  std::span<const Sequence> ground_truth);

/// RMSE over steps [first_step, n), all dimensions and sequences, using the
/// highest-weight component's mean curve.
double rmse(const NCurveMixture& prediction, const IndexGrid& grid,
            std::span<const Sequence> ground_truth, std::size_t first_step = 0);

struct MomentEstimate {
  Vector mean;
  Matrix cov;
  Vector mean_se;  // standard error of each mean coordinate
  Matrix cov_se;   // standard error of each covariance entry
};

/// Empirical moments of sampled realizations at curve parameter t.
MomentEstimate mc_moments(const NCurve& curve, double t, std::size_t n_samples, Rng& rng);

/// Fraction of (sequence, step) pairs whose Mahalanobis distance under
/// curve_at(t_i) is at most n_sigma.
double coverage(const NCurve& curve, const IndexGrid& grid, std::span<const Sequence> sequences,
                double n_sigma);

struct SequenceScores {
  double fde = 0.0;   // endpoint distance
  double nll = 0.0;   // summed over steps
  double rmse = 0.0;  // over the predicted steps
};

struct EvalReport {
  double fde = 0.0;
  double nll = 0.0;
  double rmse = 0.0;
  std::vector<SequenceScores> per_sequence;
  nlohmann::json config = nlohmann::json::object();

  /// fde = sqrt(mean fde_j^2), nll = mean nll_j, rmse = sqrt(mean rmse_j^2).
  static EvalReport aggregate(std::vector<SequenceScores> scores, nlohmann::json config = {});

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
};

/// Scores each ground-truth sequence against its prediction. `predictions`
/// holds either one shared mixture or one per sequence.
EvalReport evaluate(std::span<const NCurveMixture> predictions, const IndexGrid& grid,
                    std::span<const Sequence> ground_truth, std::size_t first_predicted_step = 0);

}  // namespace ncurve
