#pragma once

// Test-only reference computations. Nothing here calls into the loss
// evaluator or the analytic gradient.

#include <Eigen/LU>
#include <Eigen/QR>
#include <cmath>
#include <functional>
#include <vector>

#include "ncurve/ncurve.hpp"

namespace ncurve::testing {

/// Central finite differences of f at x with step h.
inline Vector central_difference(const std::function<double(const Vector&)>& f, const Vector& x,
                                 double h) {
  Vector g(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + h;
    const double up = f(probe);
    probe(i) = x(i) - h;
    const double down = f(probe);
    probe(i) = x(i);
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

/// Per-coordinate relative error |a - b| / max(|a|, |b|, floor).
inline double max_relative_error(const Vector& a, const Vector& b, double floor) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a(i)), std::abs(b(i)), floor});
    worst = std::max(worst, std::abs(a(i) - b(i)) / denom);
  }
  return worst;
}

/// Random symmetric positive definite matrix with eigenvalues in [lo, hi].
inline Matrix random_spd(Eigen::Index d, Rng& rng, double lo = 0.2, double hi = 2.0) {
  Matrix a(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) a(i, j) = rng.normal();
  // Gram-Schmidt via QR gives a random orthogonal basis
  Eigen::HouseholderQR<Matrix> qr(a);
  const Matrix q = qr.householderQ();
  Vector ev(d);
  for (Eigen::Index i = 0; i < d; ++i) ev(i) = rng.uniform(lo, hi);
  Matrix s = q * ev.asDiagonal() * q.transpose();
  return 0.5 * (s + s.transpose());
}

inline GaussianDist random_gaussian(Eigen::Index d, Rng& rng, double mean_scale = 2.0) {
  Vector m(d);
  for (Eigen::Index i = 0; i < d; ++i) m(i) = mean_scale * rng.normal();
  return GaussianDist(m, random_spd(d, rng));
}

inline NCurve random_curve(int degree, Eigen::Index d, Rng& rng) {
  std::vector<GaussianDist> ctrl;
  for (int i = 0; i <= degree; ++i) ctrl.push_back(random_gaussian(d, rng));
  return NCurve(std::move(ctrl));
}

inline NCurveMixture random_mixture(std::size_t K, int degree, Eigen::Index d, Rng& rng) {
  std::vector<double> w(K);
  double total = 0.0;
  for (auto& v : w) {
    v = rng.uniform(0.2, 1.0);
    total += v;
  }
  for (auto& v : w) v /= total;
  std::vector<NCurve> comps;
  for (std::size_t k = 0; k < K; ++k) comps.push_back(random_curve(degree, d, rng));
  return NCurveMixture(std::move(w), std::move(comps));
}

/// Closed-form log-density by explicit inverse and determinant (no Cholesky).
inline double log_density_direct(const Vector& mean, const Matrix& cov, const Vector& x) {
  const double d = static_cast<double>(mean.size());
  const Vector r = x - mean;
  return -0.5 * (d * std::log(2.0 * M_PI) + std::log(cov.determinant()) +
                 r.dot(cov.inverse() * r));
}

inline double log_density_direct(const GaussianDist& g, const Vector& x) {
  return log_density_direct(g.mean(), g.cov(), x);
}

}  // namespace ncurve::testing
