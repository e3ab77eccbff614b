#pragma once

#include <Eigen/Core>
#include <span>

#include "ncurve/rng.hpp"

namespace ncurve {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

/// Multivariate Gaussian with dense symmetric covariance.
///
/// Construction symmetrizes the covariance, so `cov(a, b) == cov(b, a)` holds
/// bit-exactly afterwards. Positive definiteness is checked lazily by the
/// operations that need it.
class GaussianDist {
 public:
  GaussianDist(Vector mean, Matrix cov);

  /// Zero-mean, identity-covariance Gaussian in `dim` dimensions.
  static GaussianDist standard(Eigen::Index dim);

  Eigen::Index dim() const noexcept { return mean_.size(); }
  const Vector& mean() const noexcept { return mean_; }
  const Matrix& cov() const noexcept { return cov_; }

  /// ln N(x | mean, cov), evaluated through a Cholesky factor.
  double log_density(const Eigen::Ref<const Vector>& x) const;

  /// Squared Mahalanobis distance of `x` from the mean.
  double mahalanobis_sq(const Eigen::Ref<const Vector>& x) const;

  /// mean + L z with L a pivoted, PSD-tolerant square root of cov.
  Vector sample(Rng& rng) const;

  /// Field-wise exact equality.
  bool operator==(const GaussianDist& other) const;

 private:
  Vector mean_;
  Matrix cov_;
};

/// Lower Cholesky factor of a symmetric positive definite matrix. If the plain
/// factorization fails, retries once with cov + eps*I, eps = 1e-9 * trace/d.
/// Throws NotPositiveDefinite when both attempts fail.
Matrix cholesky_lower(const Matrix& cov);

/// Square root S with S S^T = cov for positive semi-definite input
/// (LDL^T with pivoting; tiny negative pivots clamp to zero). Throws NotPSD.
Matrix psd_sqrt(const Matrix& cov);

/// Distribution of sum_i w_i X_i for independent X_i: mean sum w_i mu_i,
/// covariance sum w_i^2 Sigma_i.
GaussianDist affine_combine(std::span<const GaussianDist> gs, std::span<const double> weights);

}  // namespace ncurve
