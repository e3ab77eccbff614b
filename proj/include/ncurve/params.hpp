#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "ncurve/bezier.hpp"

namespace ncurve {

/// Smallest realized standard deviation: sigma = exp(log_sigma) + kSigmaFloor.
inline constexpr double kSigmaFloor = 1e-4;

/// How a control point's covariance is parameterized.
///  - Diagonal: per-axis log_sigma only.
///  - Correlated: d == 2 only; log_sigma per axis plus rho = tanh(raw).
///  - CholeskyFactor: lower factor with diagonal exp(log_sigma) + floor and
///    free strictly-lower entries; covariance = L L^T.
enum class CovarianceMode { Diagonal, Correlated, CholeskyFactor };

/// Full-covariance mode picks Correlated for d == 2 and CholeskyFactor for d > 2.
CovarianceMode resolve_covariance_mode(Eigen::Index dim, bool full_cov);

std::string to_string(CovarianceMode mode);
CovarianceMode covariance_mode_from_string(const std::string& name);

struct MixtureShape {
  std::size_t components = 1;
  int degree = 1;
  Eigen::Index dim = 2;
  CovarianceMode cov_mode = CovarianceMode::Diagonal;
};

/// Offsets into the flat unconstrained parameter vector:
/// [K logits | for each component, for each control point: mean(d), log_sigma(d), raw(c)]
/// where c = d(d-1)/2 for the correlated modes and 0 for Diagonal.
class ParamLayout {
 public:
  explicit ParamLayout(MixtureShape shape);

  const MixtureShape& shape() const noexcept { return shape_; }
  std::size_t components() const noexcept { return shape_.components; }
  int degree() const noexcept { return shape_.degree; }
  std::size_t controls() const noexcept { return static_cast<std::size_t>(shape_.degree) + 1; }
  Eigen::Index dim() const noexcept { return shape_.dim; }
  CovarianceMode cov_mode() const noexcept { return shape_.cov_mode; }

  std::size_t size() const noexcept { return size_; }
  std::size_t raw_count() const noexcept { return raw_count_; }

  std::size_t logit(std::size_t k) const { return k; }
  std::size_t mean(std::size_t k, std::size_t p) const { return block(k, p); }
  std::size_t log_sigma(std::size_t k, std::size_t p) const { return block(k, p) + dim_u(); }
  std::size_t raw(std::size_t k, std::size_t p) const { return block(k, p) + 2 * dim_u(); }

 private:
  std::size_t dim_u() const { return static_cast<std::size_t>(shape_.dim); }
  std::size_t block(std::size_t k, std::size_t p) const {
    return shape_.components + (k * controls() + p) * per_control_;
  }

  MixtureShape shape_;
  std::size_t raw_count_;
  std::size_t per_control_;
  std::size_t size_;
};

/// Realized covariance of control point (k, p).
Matrix realize_covariance(const ParamLayout& layout, std::span<const double> theta, std::size_t k,
                          std::size_t p);

/// softmax(logits), computed stably.
std::vector<double> realize_weights(const ParamLayout& layout, std::span<const double> theta);

/// Transform an unconstrained parameter vector into a valid N-Curve mixture.
NCurveMixture realize(const ParamLayout& layout, std::span<const double> theta);

/// Inverse of realize() for mixtures representable under the layout. Weights
/// must be strictly positive and every sigma must exceed kSigmaFloor.
Vector encode_params(const ParamLayout& layout, const NCurveMixture& mixture);

}  // namespace ncurve
