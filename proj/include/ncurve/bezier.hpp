#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "ncurve/gaussian.hpp"
#include "ncurve/rng.hpp"

namespace ncurve {

/// A discrete sequence: d x n, one column per step.
using Sequence = Matrix;

/// Bernstein basis polynomial C(N,i) (1-t)^(N-i) t^i.
double bernstein(int i, int degree, double t);

/// All N+1 Bernstein weights at t. Shares the cached binomial coefficients
/// with bernstein(); this is the only place curve weights are computed.
std::vector<double> bernstein_row(int degree, double t);

/// Bernstein rows for every value of `ts`, as a ts.size() x (N+1) matrix.
Matrix bernstein_matrix(int degree, std::span<const double> ts);

/// Sorted curve parameters in [0, 1]. Step i of a sequence corresponds to values()[i].
class IndexGrid {
 public:
  explicit IndexGrid(std::vector<double> values);

  /// {v / (n-1) | v = 0..n-1}. Throws InvalidConfig for n < 2.
  static IndexGrid uniform(std::size_t n);

  std::size_t size() const noexcept { return values_.size(); }
  const std::vector<double>& values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  std::vector<double> values_;
};

inline IndexGrid uniform_grid(std::size_t n) { return IndexGrid::uniform(n); }

/// Bezier curve of degree N whose N+1 control points are Gaussian.
class NCurve {
 public:
  explicit NCurve(std::vector<GaussianDist> controls);

  int degree() const noexcept { return static_cast<int>(controls_.size()) - 1; }
  Eigen::Index dim() const noexcept { return controls_.front().dim(); }
  const std::vector<GaussianDist>& controls() const noexcept { return controls_; }

  /// Control-point means as a d x (N+1) matrix.
  Matrix mean_polygon() const;

 private:
  std::vector<GaussianDist> controls_;
};

/// Gaussian at curve parameter t: mean sum b_i mu_i, covariance sum b_i^2 Sigma_i.
GaussianDist curve_at(const NCurve& curve, double t);

double curve_log_density(const NCurve& curve, double t, const Eigen::Ref<const Vector>& x);

/// K weighted N-Curves sharing d and N. Weights lie on the simplex (tolerance 1e-9).
class NCurveMixture {
 public:
  NCurveMixture(std::vector<double> weights, std::vector<NCurve> components);

  std::size_t size() const noexcept { return components_.size(); }
  int degree() const noexcept { return components_.front().degree(); }
  Eigen::Index dim() const noexcept { return components_.front().dim(); }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<NCurve>& components() const noexcept { return components_; }
  const NCurve& component(std::size_t k) const { return components_.at(k); }

  /// Index of the largest weight; ties go to the lowest index.
  std::size_t top_component() const;

 private:
  std::vector<double> weights_;
  std::vector<NCurve> components_;
};

/// Pointwise Gaussian mixture at t: the weights and the K component Gaussians.
struct PointMixture {
  std::vector<double> weights;
  std::vector<GaussianDist> components;
};

PointMixture mixture_at(const NCurveMixture& mixture, double t);

/// log sum_k pi_k N(x | mu_k(t), Sigma_k(t)); zero-weight components are skipped.
double mixture_log_density(const NCurveMixture& mixture, double t,
                           const Eigen::Ref<const Vector>& x);

/// One realization: sample every control point once, then evaluate the
/// resulting deterministic Bezier curve on the grid.
Sequence sample_realization(const NCurve& curve, const IndexGrid& grid, Rng& rng);

struct MixtureRealization {
  std::size_t component;
  Sequence sequence;
};

MixtureRealization sample_mixture_realization(const NCurveMixture& mixture,
                                              const IndexGrid& grid, Rng& rng);

struct EnvelopePoint {
  double t;
  Vector mean;
  Vector half_width;  // n_sigma * sqrt(diag(cov))
};

std::vector<EnvelopePoint> envelope(const NCurve& curve, const IndexGrid& grid, double n_sigma);

}  // namespace ncurve
