#include "ncurve/params.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>

#include "ncurve/errors.hpp"

namespace ncurve {

CovarianceMode resolve_covariance_mode(Eigen::Index dim, bool full_cov) {
  if (!full_cov || dim == 1) {
    return CovarianceMode::Diagonal;
  }
  return dim == 2 ? CovarianceMode::Correlated : CovarianceMode::CholeskyFactor;
}

std::string to_string(CovarianceMode mode) {
  switch (mode) {
    case CovarianceMode::Diagonal:
      return "diagonal";
    case CovarianceMode::Correlated:
      return "correlated";
    case CovarianceMode::CholeskyFactor:
      return "cholesky";
  }
  return "diagonal";
}

CovarianceMode covariance_mode_from_string(const std::string& name) {
  if (name == "diagonal") return CovarianceMode::Diagonal;
  if (name == "correlated") return CovarianceMode::Correlated;
  if (name == "cholesky") return CovarianceMode::CholeskyFactor;
  throw InvalidConfig("unknown covariance mode '" + name + "'");
}

ParamLayout::ParamLayout(MixtureShape shape) : shape_(shape) {
  if (shape_.components == 0) {
    throw InvalidConfig("mixture needs K >= 1 components");
  }
  if (shape_.degree < 0) {
    throw InvalidConfig("negative curve degree");
  }
  if (shape_.dim < 1) {
    throw InvalidConfig("dimension must be >= 1");
  }
  if (shape_.cov_mode == CovarianceMode::Correlated && shape_.dim != 2) {
    throw InvalidConfig("correlated covariance mode requires d == 2");
  }
  const auto d = static_cast<std::size_t>(shape_.dim);
  raw_count_ = shape_.cov_mode == CovarianceMode::Diagonal ? 0 : d * (d - 1) / 2;
  per_control_ = 2 * d + raw_count_;
  size_ = shape_.components + shape_.components * controls() * per_control_;
}

Matrix realize_covariance(const ParamLayout& layout, std::span<const double> theta, std::size_t k,
                          std::size_t p) {
  const Eigen::Index d = layout.dim();
  const std::size_t ls = layout.log_sigma(k, p);
  Vector sigma(d);
  for (Eigen::Index a = 0; a < d; ++a) {
    sigma(a) = std::exp(theta[ls + static_cast<std::size_t>(a)]) + kSigmaFloor;
  }
  switch (layout.cov_mode()) {
    case CovarianceMode::Diagonal:
      return sigma.array().square().matrix().asDiagonal();
    case CovarianceMode::Correlated: {
      const double rho = std::tanh(theta[layout.raw(k, p)]);
      Matrix cov(2, 2);
      cov << sigma(0) * sigma(0), rho * sigma(0) * sigma(1), rho * sigma(0) * sigma(1),
          sigma(1) * sigma(1);
      return cov;
    }
    case CovarianceMode::CholeskyFactor: {
      Matrix lower = Matrix::Zero(d, d);
      std::size_t r = layout.raw(k, p);
      for (Eigen::Index a = 0; a < d; ++a) {
        for (Eigen::Index b = 0; b < a; ++b) {
          lower(a, b) = theta[r++];
        }
        lower(a, a) = sigma(a);
      }
      return lower * lower.transpose();
    }
  }
  return {};
}

std::vector<double> realize_weights(const ParamLayout& layout, std::span<const double> theta) {
  const std::size_t K = layout.components();
  double top = theta[0];
  for (std::size_t k = 1; k < K; ++k) {
    top = std::max(top, theta[k]);
  }
  std::vector<double> w(K);
  double total = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    w[k] = std::exp(theta[k] - top);
    total += w[k];
  }
  for (double& v : w) {
    v /= total;
  }
  return w;
}

NCurveMixture realize(const ParamLayout& layout, std::span<const double> theta) {
  if (theta.size() != layout.size()) {
    throw ShapeMismatch("parameter vector has " + std::to_string(theta.size()) +
                        " entries, layout expects " + std::to_string(layout.size()));
  }
  const Eigen::Index d = layout.dim();
  std::vector<NCurve> comps;
  comps.reserve(layout.components());
  for (std::size_t k = 0; k < layout.components(); ++k) {
    std::vector<GaussianDist> controls;
    controls.reserve(layout.controls());
    for (std::size_t p = 0; p < layout.controls(); ++p) {
      Vector mean(d);
      for (Eigen::Index a = 0; a < d; ++a) {
        mean(a) = theta[layout.mean(k, p) + static_cast<std::size_t>(a)];
      }
      controls.emplace_back(std::move(mean), realize_covariance(layout, theta, k, p));
    }
    comps.emplace_back(std::move(controls));
  }
  return NCurveMixture(realize_weights(layout, theta), std::move(comps));
}

Vector encode_params(const ParamLayout& layout, const NCurveMixture& mixture) {
  if (mixture.size() != layout.components() || mixture.degree() != layout.degree() ||
      mixture.dim() != layout.dim()) {
    throw ShapeMismatch("mixture does not match the parameter layout");
  }
  const Eigen::Index d = layout.dim();
  Vector theta = Vector::Zero(static_cast<Eigen::Index>(layout.size()));
  for (std::size_t k = 0; k < layout.components(); ++k) {
    const double w = mixture.weights()[k];
    if (!(w > 0.0)) {
      throw InvalidConfig("cannot encode a zero mixture weight");
    }
    theta(static_cast<Eigen::Index>(layout.logit(k))) = std::log(w);
    for (std::size_t p = 0; p < layout.controls(); ++p) {
      const auto& g = mixture.component(k).controls()[p];
      const auto at = [&](std::size_t i) -> double& {
        return theta(static_cast<Eigen::Index>(i));
      };
      Vector sigma(d);
      if (layout.cov_mode() == CovarianceMode::CholeskyFactor) {
        const Matrix lower = Eigen::LLT<Matrix>(g.cov()).matrixL();
        sigma = lower.diagonal();
        std::size_t r = layout.raw(k, p);
        for (Eigen::Index a = 0; a < d; ++a) {
          for (Eigen::Index b = 0; b < a; ++b) {
            at(r++) = lower(a, b);
          }
        }
      } else {
        sigma = g.cov().diagonal().cwiseSqrt();
      }
      for (Eigen::Index a = 0; a < d; ++a) {
        at(layout.mean(k, p) + static_cast<std::size_t>(a)) = g.mean()(a);
        if (!(sigma(a) > kSigmaFloor)) {
          throw InvalidConfig("standard deviation at or below the floor cannot be encoded");
        }
        at(layout.log_sigma(k, p) + static_cast<std::size_t>(a)) = std::log(sigma(a) - kSigmaFloor);
      }
      if (layout.cov_mode() == CovarianceMode::Correlated) {
        const double rho = g.cov()(0, 1) / (sigma(0) * sigma(1));
        at(layout.raw(k, p)) = std::atanh(std::clamp(rho, -1.0 + 1e-15, 1.0 - 1e-15));
      }
    }
  }
  return theta;
}

}  // namespace ncurve
