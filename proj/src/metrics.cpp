#include "ncurve/metrics.hpp"

#include <cmath>
#include <string>

#include "ncurve/errors.hpp"

namespace ncurve {

namespace {

void require_nonempty(std::span<const Sequence> gt, const char* what) {
  if (gt.empty()) {
    throw EmptyInput(std::string(what) + ": no ground-truth sequences");
  }
}

Vector top_endpoint(const NCurveMixture& prediction) {
  return curve_at(prediction.component(prediction.top_component()), 1.0).mean();
}

Matrix top_mean_path(const NCurveMixture& prediction, const IndexGrid& grid) {
  const NCurve& c = prediction.component(prediction.top_component());
  Matrix path(c.dim(), static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    path.col(static_cast<Eigen::Index>(i)) = curve_at(c, grid[i]).mean();
  }
  return path;
}

void check_shape(const Sequence& s, const IndexGrid& grid, Eigen::Index dim) {
  if (static_cast<std::size_t>(s.cols()) != grid.size() || s.rows() != dim) {
    throw ShapeMismatch("ground-truth sequence is " + std::to_string(s.rows()) + "x" +
                        std::to_string(s.cols()) + ", expected " + std::to_string(dim) + "x" +
                        std::to_string(grid.size()));
  }
}

}  // namespace

double fde(const NCurveMixture& prediction, std::span<const Sequence> ground_truth) {
  require_nonempty(ground_truth, "fde");
  const Vector end = top_endpoint(prediction);
  double acc = 0.0;
  for (const auto& s : ground_truth) {
    if (s.rows() != end.size() || s.cols() == 0) {
      throw ShapeMismatch("fde: ground-truth dimension mismatch");
    }
    acc += (s.col(s.cols() - 1) - end).squaredNorm();
  }
  return std::sqrt(acc / static_cast<double>(ground_truth.size()));
}

double nll_metric(const NCurveMixture& prediction, const IndexGrid& grid,
                  std::span<const Sequence> ground_truth) {
  return mixture_nll(prediction, grid, ground_truth, Reduction::Sum);
}

double rmse(const NCurveMixture& prediction, const IndexGrid& grid,
            std::span<const Sequence> ground_truth, std::size_t first_step) {
  require_nonempty(ground_truth, "rmse");
  if (first_step >= grid.size()) {
    throw InvalidConfig("rmse: no predicted steps");
  }
  const Matrix path = top_mean_path(prediction, grid);
  const auto first = static_cast<Eigen::Index>(first_step);
  const Eigen::Index count = path.cols() - first;
  double acc = 0.0;
  for (const auto& s : ground_truth) {
    check_shape(s, grid, path.rows());
    acc += (s.rightCols(count) - path.rightCols(count)).squaredNorm();
  }
  const double total = static_cast<double>(ground_truth.size()) * static_cast<double>(count) *
                       static_cast<double>(path.rows());
  return std::sqrt(acc / total);
}

MomentEstimate mc_moments(const NCurve& curve, double t, std::size_t n_samples, Rng& rng) {
  if (n_samples < 2) {
    throw InvalidConfig("mc_moments needs at least 2 samples");
  }
  const IndexGrid at({t});
  const Eigen::Index d = curve.dim();
  Matrix xs(d, static_cast<Eigen::Index>(n_samples));
  for (std::size_t s = 0; s < n_samples; ++s) {
    xs.col(static_cast<Eigen::Index>(s)) = sample_realization(curve, at, rng).col(0);
  }
  const double n = static_cast<double>(n_samples);
  MomentEstimate est;
  est.mean = xs.rowwise().mean();
  const Matrix centered = xs.colwise() - est.mean;
  est.cov = centered * centered.transpose() / (n - 1.0);
  est.mean_se = (est.cov.diagonal() / n).cwiseSqrt();
  est.cov_se = Matrix::Zero(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) {
      const Eigen::ArrayXd prod = centered.row(a).array() * centered.row(b).array();
      const double m = prod.mean();
      const double var = (prod - m).square().sum() / (n - 1.0);
      est.cov_se(a, b) = std::sqrt(var / n);
    }
  }
  return est;
}

double coverage(const NCurve& curve, const IndexGrid& grid, std::span<const Sequence> sequences,
                double n_sigma) {
  require_nonempty(sequences, "coverage");
  std::vector<GaussianDist> points;
  points.reserve(grid.size());
  for (double t : grid.values()) {
    points.push_back(curve_at(curve, t));
  }
  const double limit = n_sigma * n_sigma;
  std::size_t inside = 0;
  for (const auto& s : sequences) {
    check_shape(s, grid, curve.dim());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (points[i].mahalanobis_sq(s.col(static_cast<Eigen::Index>(i))) <= limit) {
        ++inside;
      }
    }
  }
  return static_cast<double>(inside) /
         (static_cast<double>(sequences.size()) * static_cast<double>(grid.size()));
}

EvalReport EvalReport::aggregate(std::vector<SequenceScores> scores, nlohmann::json config) {
  if (scores.empty()) {
    throw EmptyInput("evaluation report without sequences");
  }
  EvalReport r;
  double f = 0.0;
  double l = 0.0;
  double e = 0.0;
  for (const auto& s : scores) {
    f += s.fde * s.fde;
    l += s.nll;
    e += s.rmse * s.rmse;
  }
  const double m = static_cast<double>(scores.size());
  r.fde = std::sqrt(f / m);
  r.nll = l / m;
  r.rmse = std::sqrt(e / m);
  r.per_sequence = std::move(scores);
  r.config = config.is_null() ? nlohmann::json::object() : std::move(config);
  return r;
}

nlohmann::json EvalReport::to_json() const {
  auto per = nlohmann::json::array();
  for (const auto& s : per_sequence) {
    per.push_back({{"fde", s.fde}, {"nll", s.nll}, {"rmse", s.rmse}});
  }
  return {{"fde", fde},
          {"nll", nll},
          {"rmse", rmse},
          {"per_sequence", per},
          {"config", config},
          {"meta",
           {{"fde", "sqrt(mean over sequences of squared endpoint distance), top-weight component"},
            {"nll", "per-sequence mixture NLL summed over time steps, averaged over sequences"},
            {"rmse", "sqrt(mean squared error over predicted steps and dimensions), top-weight "
                     "component"}}}};
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  std::vector<SequenceScores> scores;
  for (const auto& s : j.at("per_sequence")) {
    scores.push_back({s.at("fde").get<double>(), s.at("nll").get<double>(),
                      s.at("rmse").get<double>()});
  }
  EvalReport r = aggregate(std::move(scores), j.value("config", nlohmann::json::object()));
  return r;
}

EvalReport evaluate(std::span<const NCurveMixture> predictions, const IndexGrid& grid,
                    std::span<const Sequence> ground_truth, std::size_t first_predicted_step) {
  require_nonempty(ground_truth, "evaluate");
  if (predictions.size() != 1 && predictions.size() != ground_truth.size()) {
    throw ShapeMismatch("need one prediction, or one per ground-truth sequence");
  }
  std::vector<SequenceScores> scores;
  scores.reserve(ground_truth.size());
  for (std::size_t j = 0; j < ground_truth.size(); ++j) {
    const NCurveMixture& pred = predictions.size() == 1 ? predictions[0] : predictions[j];
    std::span<const Sequence> one(&ground_truth[j], 1);
    check_shape(ground_truth[j], grid, pred.dim());
    scores.push_back({fde(pred, one), sequence_nll(pred, grid, ground_truth[j], Reduction::Sum),
                      rmse(pred, grid, one, first_predicted_step)});
  }
  return EvalReport::aggregate(std::move(scores));
}

}  // namespace ncurve
