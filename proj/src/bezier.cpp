#include "ncurve/bezier.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <string>

#include "ncurve/errors.hpp"

namespace ncurve {

namespace {

constexpr int kDirectBinomialLimit = 30;

struct BinomialCache {
  std::mutex mutex;
  std::map<int, std::vector<double>> rows;  // degree -> C(N,i) or ln C(N,i)
};

/// C(N, i) for N <= 30, ln C(N, i) above.
const std::vector<double>& binomial_row(int degree) {
  static BinomialCache cache;
  std::lock_guard lock(cache.mutex);
  auto it = cache.rows.find(degree);
  if (it != cache.rows.end()) {
    return it->second;
  }
  std::vector<double> row(static_cast<std::size_t>(degree) + 1);
  if (degree <= kDirectBinomialLimit) {
    row[0] = 1.0;
    for (int i = 1; i <= degree; ++i) {
      row[i] = row[i - 1] * static_cast<double>(degree - i + 1) / static_cast<double>(i);
    }
    for (double& c : row) {
      c = std::round(c);
    }
  } else {
    const double lg = std::lgamma(degree + 1.0);
    for (int i = 0; i <= degree; ++i) {
      row[i] = lg - std::lgamma(i + 1.0) - std::lgamma(degree - i + 1.0);
    }
  }
  return cache.rows.emplace(degree, std::move(row)).first->second;
}

void check_t(double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw OutOfRange("curve parameter t=" + std::to_string(t) + " outside [0, 1]");
  }
}

double bernstein_cached(const std::vector<double>& binom, int i, int degree, double t) {
  if (degree <= kDirectBinomialLimit) {
    return binom[i] * std::pow(1.0 - t, degree - i) * std::pow(t, i);
  }
  // log form; exact zeros at the endpoints
  if (t == 0.0) {
    return i == 0 ? 1.0 : 0.0;
  }
  if (t == 1.0) {
    return i == degree ? 1.0 : 0.0;
  }
  return std::exp(binom[i] + (degree - i) * std::log1p(-t) + i * std::log(t));
}

}  // namespace

double bernstein(int i, int degree, double t) {
  if (degree < 0 || i < 0 || i > degree) {
    throw OutOfRange("bernstein index i=" + std::to_string(i) + " invalid for degree " +
                     std::to_string(degree));
  }
  check_t(t);
  return bernstein_cached(binomial_row(degree), i, degree, t);
}

std::vector<double> bernstein_row(int degree, double t) {
  if (degree < 0) {
    throw OutOfRange("negative Bezier degree");
  }
  check_t(t);
  const auto& binom = binomial_row(degree);
  std::vector<double> row(static_cast<std::size_t>(degree) + 1);
  for (int i = 0; i <= degree; ++i) {
    row[i] = bernstein_cached(binom, i, degree, t);
  }
  return row;
}

Matrix bernstein_matrix(int degree, std::span<const double> ts) {
  Matrix out(static_cast<Eigen::Index>(ts.size()), degree + 1);
  for (std::size_t r = 0; r < ts.size(); ++r) {
    const auto row = bernstein_row(degree, ts[r]);
    for (int c = 0; c <= degree; ++c) {
      out(static_cast<Eigen::Index>(r), c) = row[c];
    }
  }
  return out;
}

IndexGrid::IndexGrid(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) {
    throw InvalidConfig("index grid is empty");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    check_t(values_[i]);
    if (i > 0 && !(values_[i] > values_[i - 1])) {
      throw InvalidConfig("index grid must be strictly increasing");
    }
  }
}

IndexGrid IndexGrid::uniform(std::size_t n) {
  if (n < 2) {
    throw InvalidConfig("uniform grid needs n >= 2 (got " + std::to_string(n) + ")");
  }
  std::vector<double> values(n);
  const double denom = static_cast<double>(n - 1);
  for (std::size_t v = 0; v < n; ++v) {
    values[v] = static_cast<double>(v) / denom;
  }
  return IndexGrid(std::move(values));
}

NCurve::NCurve(std::vector<GaussianDist> controls) : controls_(std::move(controls)) {
  if (controls_.empty()) {
    throw InvalidConfig("an N-Curve needs at least one control point");
  }
  const auto d = controls_.front().dim();
  for (const auto& c : controls_) {
    if (c.dim() != d) {
      throw DimensionMismatch("N-Curve control points have mixed dimensions");
    }
  }
}

Matrix NCurve::mean_polygon() const {
  Matrix poly(dim(), static_cast<Eigen::Index>(controls_.size()));
  for (std::size_t i = 0; i < controls_.size(); ++i) {
    poly.col(static_cast<Eigen::Index>(i)) = controls_[i].mean();
  }
  return poly;
}

GaussianDist curve_at(const NCurve& curve, double t) {
  const auto row = bernstein_row(curve.degree(), t);
  return affine_combine(curve.controls(), row);
}

double curve_log_density(const NCurve& curve, double t, const Eigen::Ref<const Vector>& x) {
  return curve_at(curve, t).log_density(x);
}

NCurveMixture::NCurveMixture(std::vector<double> weights, std::vector<NCurve> components)
    : weights_(std::move(weights)), components_(std::move(components)) {
  if (components_.empty()) {
    throw InvalidConfig("mixture needs K >= 1 components");
  }
  if (weights_.size() != components_.size()) {
    throw DimensionMismatch("mixture has " + std::to_string(weights_.size()) + " weights for " +
                            std::to_string(components_.size()) + " components");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) {
      throw InvalidConfig("mixture weights must be non-negative");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw InvalidConfig("mixture weights sum to " + std::to_string(total) + ", expected 1");
  }
  for (const auto& c : components_) {
    if (c.dim() != components_.front().dim() || c.degree() != components_.front().degree()) {
      throw DimensionMismatch("mixture components must share dimension and degree");
    }
  }
}

std::size_t NCurveMixture::top_component() const {
  return static_cast<std::size_t>(std::max_element(weights_.begin(), weights_.end()) -
                                  weights_.begin());
}

PointMixture mixture_at(const NCurveMixture& mixture, double t) {
  PointMixture out;
  out.weights = mixture.weights();
  out.components.reserve(mixture.size());
  for (const auto& c : mixture.components()) {
    out.components.push_back(curve_at(c, t));
  }
  return out;
}

double mixture_log_density(const NCurveMixture& mixture, double t,
                           const Eigen::Ref<const Vector>& x) {
  std::vector<double> terms;
  terms.reserve(mixture.size());
  for (std::size_t k = 0; k < mixture.size(); ++k) {
    const double w = mixture.weights()[k];
    if (w <= 0.0) {
      continue;
    }
    terms.push_back(std::log(w) + curve_log_density(mixture.component(k), t, x));
  }
  const double top = *std::max_element(terms.begin(), terms.end());
  if (!std::isfinite(top)) {
    return top;
  }
  double acc = 0.0;
  for (double v : terms) {
    acc += std::exp(v - top);
  }
  return top + std::log(acc);
}

Sequence sample_realization(const NCurve& curve, const IndexGrid& grid, Rng& rng) {
  const auto& controls = curve.controls();
  Matrix points(curve.dim(), static_cast<Eigen::Index>(controls.size()));
  for (std::size_t i = 0; i < controls.size(); ++i) {
    points.col(static_cast<Eigen::Index>(i)) = controls[i].sample(rng);
  }
  Sequence seq = Sequence::Zero(curve.dim(), static_cast<Eigen::Index>(grid.size()));
  for (std::size_t s = 0; s < grid.size(); ++s) {
    const auto row = bernstein_row(curve.degree(), grid[s]);
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (row[i] != 0.0) {
        seq.col(static_cast<Eigen::Index>(s)) += row[i] * points.col(static_cast<Eigen::Index>(i));
      }
    }
  }
  return seq;
}

MixtureRealization sample_mixture_realization(const NCurveMixture& mixture, const IndexGrid& grid,
                                              Rng& rng) {
  const auto& w = mixture.weights();
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t chosen = mixture.size();
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (w[k] <= 0.0) {
      continue;
    }
    acc += w[k];
    if (u < acc) {
      chosen = k;
      break;
    }
  }
  if (chosen == mixture.size()) {
    // u landed in the rounding slack above the cumulative sum
    for (std::size_t k = w.size(); k-- > 0;) {
      if (w[k] > 0.0) {
        chosen = k;
        break;
      }
    }
  }
  return {chosen, sample_realization(mixture.component(chosen), grid, rng)};
}

std::vector<EnvelopePoint> envelope(const NCurve& curve, const IndexGrid& grid, double n_sigma) {
  std::vector<EnvelopePoint> out;
  out.reserve(grid.size());
  for (double t : grid.values()) {
    const auto g = curve_at(curve, t);
    out.push_back({t, g.mean(), n_sigma * g.cov().diagonal().cwiseMax(0.0).cwiseSqrt()});
  }
  return out;
}

}  // namespace ncurve
