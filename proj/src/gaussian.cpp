#include "ncurve/gaussian.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <numbers>
#include <string>

#include "ncurve/errors.hpp"

namespace ncurve {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void require_dim(const Vector& mean, const Matrix& cov) {
  if (cov.rows() != cov.cols() || cov.rows() != mean.size()) {
    throw DimensionMismatch("gaussian: mean has length " + std::to_string(mean.size()) +
                            " but covariance is " + std::to_string(cov.rows()) + "x" +
                            std::to_string(cov.cols()));
  }
  if (mean.size() == 0) {
    throw DimensionMismatch("gaussian: zero-dimensional distribution");
  }
}

}  // namespace

GaussianDist::GaussianDist(Vector mean, Matrix cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
  require_dim(mean_, cov_);
  Matrix sym = 0.5 * (cov_ + cov_.transpose());
  cov_ = std::move(sym);
}

GaussianDist GaussianDist::standard(Eigen::Index dim) {
  return GaussianDist(Vector::Zero(dim), Matrix::Identity(dim, dim));
}

bool GaussianDist::operator==(const GaussianDist& other) const {
  return dim() == other.dim() && mean_ == other.mean_ && cov_ == other.cov_;
}

Matrix cholesky_lower(const Matrix& cov) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() == Eigen::Success) {
    return llt.matrixL();
  }
  const double d = static_cast<double>(cov.rows());
  const double eps = 1e-9 * cov.trace() / d;
  if (eps > 0.0 && std::isfinite(eps)) {
    Matrix jittered = cov;
    jittered.diagonal().array() += eps;
    llt.compute(jittered);
    if (llt.info() == Eigen::Success) {
      return llt.matrixL();
    }
  }
  throw NotPositiveDefinite("covariance is not positive definite (Cholesky failed)");
}

Matrix psd_sqrt(const Matrix& cov) {
  const Eigen::Index d = cov.rows();
  Eigen::LDLT<Matrix> ldlt(cov);
  if (ldlt.info() != Eigen::Success) {
    throw NotPSD("covariance factorization failed");
  }
  Vector diag = ldlt.vectorD();
  const double scale = std::max(cov.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!std::isfinite(diag(i)) || diag(i) < -1e-10 * scale) {
      throw NotPSD("covariance has a negative pivot " + std::to_string(diag(i)));
    }
    diag(i) = diag(i) > 0.0 ? std::sqrt(diag(i)) : 0.0;
  }
  // cov = P^T L D L^T P
  Matrix lower = ldlt.matrixL();
  Matrix root = lower * diag.asDiagonal();
  return ldlt.transpositionsP().transpose() * root;
}

double GaussianDist::mahalanobis_sq(const Eigen::Ref<const Vector>& x) const {
  if (x.size() != dim()) {
    throw DimensionMismatch("gaussian: point has length " + std::to_string(x.size()) +
                            ", expected " + std::to_string(dim()));
  }
  const Matrix chol = cholesky_lower(cov_);
  const Vector z = chol.triangularView<Eigen::Lower>().solve(x - mean_);
  return z.squaredNorm();
}

double GaussianDist::log_density(const Eigen::Ref<const Vector>& x) const {
  if (x.size() != dim()) {
    throw DimensionMismatch("gaussian: point has length " + std::to_string(x.size()) +
                            ", expected " + std::to_string(dim()));
  }
  const Matrix chol = cholesky_lower(cov_);
  const Vector z = chol.triangularView<Eigen::Lower>().solve(x - mean_);
  const double log_det = 2.0 * chol.diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(dim()) * kLog2Pi + log_det + z.squaredNorm());
}

Vector GaussianDist::sample(Rng& rng) const {
  const Matrix root = psd_sqrt(cov_);
  Vector z(dim());
  for (Eigen::Index i = 0; i < dim(); ++i) {
    z(i) = rng.normal();
  }
  return mean_ + root * z;
}

GaussianDist affine_combine(std::span<const GaussianDist> gs, std::span<const double> weights) {
  if (gs.empty()) {
    throw EmptyInput("affine_combine: no input distributions");
  }
  if (gs.size() != weights.size()) {
    throw DimensionMismatch("affine_combine: " + std::to_string(gs.size()) +
                            " distributions but " + std::to_string(weights.size()) + " weights");
  }
  const Eigen::Index d = gs.front().dim();
  Vector mean = Vector::Zero(d);
  Matrix cov = Matrix::Zero(d, d);
  for (std::size_t i = 0; i < gs.size(); ++i) {
    if (gs[i].dim() != d) {
      throw DimensionMismatch("affine_combine: mixed dimensions");
    }
    const double w = weights[i];
    if (w == 0.0) {
      continue;
    }
    mean.noalias() += w * gs[i].mean();
    cov.noalias() += (w * w) * gs[i].cov();
  }
  return GaussianDist(std::move(mean), std::move(cov));
}

}  // namespace ncurve
