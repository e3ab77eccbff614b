#include "ncurve/loss.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <string>

#include "ncurve/errors.hpp"

namespace ncurve {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void check_sequence(const Sequence& seq, const IndexGrid& grid, Eigen::Index dim) {
  if (static_cast<std::size_t>(seq.cols()) != grid.size()) {
    throw DimensionMismatch("sequence has " + std::to_string(seq.cols()) + " steps, grid has " +
                            std::to_string(grid.size()));
  }
  if (seq.rows() != dim) {
    throw DimensionMismatch("sequence dimension " + std::to_string(seq.rows()) +
                            " does not match model dimension " + std::to_string(dim));
  }
}

double log_sum_exp(std::span<const double> v) {
  double top = -std::numeric_limits<double>::infinity();
  for (double x : v) {
    top = std::max(top, x);
  }
  if (!std::isfinite(top)) {
    return top;
  }
  double acc = 0.0;
  for (double x : v) {
    acc += std::exp(x - top);
  }
  return top + std::log(acc);
}

}  // namespace

double sequence_loglik(const NCurve& curve, const IndexGrid& grid, const Sequence& seq,
                       Reduction reduction) {
  check_sequence(seq, grid, curve.dim());
  double total = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    total += curve_log_density(curve, grid[i], seq.col(static_cast<Eigen::Index>(i)));
  }
  return reduction == Reduction::Mean ? total / static_cast<double>(grid.size()) : total;
}

double sequence_nll(const NCurveMixture& mixture, const IndexGrid& grid, const Sequence& seq,
                    Reduction reduction) {
  std::vector<double> terms;
  terms.reserve(mixture.size());
  for (std::size_t k = 0; k < mixture.size(); ++k) {
    const double w = mixture.weights()[k];
    if (w <= 0.0) {
      continue;
    }
    terms.push_back(std::log(w) + sequence_loglik(mixture.component(k), grid, seq, reduction));
  }
  return -log_sum_exp(terms);
}

double mixture_nll(const NCurveMixture& mixture, const IndexGrid& grid,
                   std::span<const Sequence> sequences, Reduction reduction) {
  if (sequences.empty()) {
    throw EmptyInput("mixture_nll: empty dataset");
  }
  double total = 0.0;
  for (const auto& seq : sequences) {
    total += sequence_nll(mixture, grid, seq, reduction);
  }
  return total / static_cast<double>(sequences.size());
}

std::vector<const Sequence*> as_batch(std::span<const Sequence> sequences) {
  std::vector<const Sequence*> out;
  out.reserve(sequences.size());
  for (const auto& s : sequences) {
    out.push_back(&s);
  }
  return out;
}

LossEvaluator::LossEvaluator(ParamLayout layout, IndexGrid grid, Reduction reduction)
    : layout_(std::move(layout)),
      grid_(std::move(grid)),
      reduction_(reduction),
      basis_(bernstein_matrix(layout_.degree(), grid_.values())) {}

LossResult LossEvaluator::loss(std::span<const double> theta,
                               std::span<const Sequence* const> batch) const {
  return run(theta, batch, nullptr);
}

LossResult LossEvaluator::loss_and_gradient(std::span<const double> theta,
                                            std::span<const Sequence* const> batch,
                                            Vector& grad) const {
  return run(theta, batch, &grad);
}

LossResult LossEvaluator::run(std::span<const double> theta,
                              std::span<const Sequence* const> batch, Vector* grad) const {
  if (theta.size() != layout_.size()) {
    throw ShapeMismatch("parameter vector has " + std::to_string(theta.size()) +
                        " entries, layout expects " + std::to_string(layout_.size()));
  }
  if (batch.empty()) {
    throw EmptyInput("loss: empty batch");
  }
  const std::size_t K = layout_.components();
  const std::size_t P = layout_.controls();
  const std::size_t n = grid_.size();
  const auto d = static_cast<std::size_t>(layout_.dim());
  const Eigen::Index di = layout_.dim();
  const double M = static_cast<double>(batch.size());
  const double scale = reduction_ == Reduction::Mean ? 1.0 / static_cast<double>(n) : 1.0;

  for (const Sequence* s : batch) {
    check_sequence(*s, grid_, di);
  }

  LossResult result;

  // mixture weights in log space
  std::vector<double> log_w(K);
  {
    const double lse = log_sum_exp(theta.subspan(0, K));
    for (std::size_t k = 0; k < K; ++k) {
      log_w[k] = theta[k] - lse;
    }
  }

  // control covariances
  std::vector<Matrix> ctrl_cov(K * P);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t p = 0; p < P; ++p) {
      ctrl_cov[k * P + p] = realize_covariance(layout_, theta, k, p);
    }
  }

  // curve-point moments and precision for every (k, i); flat buffers
  std::vector<double> mu(K * n * d, 0.0);
  std::vector<double> prec(K * n * d * d, 0.0);
  std::vector<double> log_det(K * n, 0.0);
  Matrix cov(di, di);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      cov.setZero();
      double* m = &mu[(k * n + i) * d];
      for (std::size_t p = 0; p < P; ++p) {
        const double b = basis_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p));
        if (b == 0.0) {
          continue;
        }
        for (std::size_t a = 0; a < d; ++a) {
          m[a] += b * theta[layout_.mean(k, p) + a];
        }
        cov.noalias() += (b * b) * ctrl_cov[k * P + p];
      }
      Eigen::LLT<Matrix> llt(cov);
      bool ok = llt.info() == Eigen::Success;
      if (!ok) {
        Matrix jittered = cov;
        jittered.diagonal().array() += 1e-9 * cov.trace() / static_cast<double>(d);
        llt.compute(jittered);
        ok = llt.info() == Eigen::Success;
      }
      const Matrix lower = llt.matrixL();
      const double ld = 2.0 * lower.diagonal().array().log().sum();
      if (!ok || !std::isfinite(ld)) {
        result.bad_component = k;
        result.bad_step = i;
        result.loss = std::numeric_limits<double>::quiet_NaN();
        return result;
      }
      log_det[k * n + i] = ld;
      const Matrix inv = llt.solve(Matrix::Identity(di, di));
      std::copy(inv.data(), inv.data() + d * d, &prec[(k * n + i) * d * d]);
    }
  }

  // gradient accumulators w.r.t. curve-point mean and covariance
  std::vector<double> g_mu;
  std::vector<double> g_aa;   // sum_j w_jk a a^T
  std::vector<double> g_w(K * n, 0.0);  // sum_j w_jk
  std::vector<double> resp_sum(K, 0.0);
  if (grad != nullptr) {
    g_mu.assign(K * n * d, 0.0);
    g_aa.assign(K * n * d * d, 0.0);
  }

  std::vector<double> a_buf(K * n * d);
  std::vector<double> r(d);
  std::vector<double> terms(K);
  const double norm_const = static_cast<double>(d) * kLog2Pi;
  double total = 0.0;

  for (const Sequence* sp : batch) {
    const Sequence& seq = *sp;
    for (std::size_t k = 0; k < K; ++k) {
      double ll = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double* m = &mu[(k * n + i) * d];
        const double* pr = &prec[(k * n + i) * d * d];
        double* a = &a_buf[(k * n + i) * d];
        for (std::size_t c = 0; c < d; ++c) {
          r[c] = seq(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i)) - m[c];
        }
        double quad = 0.0;
        for (std::size_t row = 0; row < d; ++row) {
          double acc = 0.0;
          // column-major precision, symmetric
          for (std::size_t c = 0; c < d; ++c) {
            acc += pr[c * d + row] * r[c];
          }
          a[row] = acc;
          quad += acc * r[row];
        }
        ll += -0.5 * (norm_const + log_det[k * n + i] + quad);
      }
      terms[k] = log_w[k] + scale * ll;
    }
    const double lse = log_sum_exp(terms);
    if (!std::isfinite(lse)) {
      result.bad_component = 0;
      result.bad_step = 0;
      for (std::size_t k = 0; k < K; ++k) {
        if (!std::isfinite(terms[k]) && terms[k] != -std::numeric_limits<double>::infinity()) {
          result.bad_component = k;
          break;
        }
      }
      result.loss = std::numeric_limits<double>::quiet_NaN();
      return result;
    }
    total += -lse;

    if (grad == nullptr) {
      continue;
    }
    for (std::size_t k = 0; k < K; ++k) {
      const double gamma = std::exp(terms[k] - lse);
      resp_sum[k] += gamma;
      const double w = -gamma * scale / M;
      if (w == 0.0) {
        continue;
      }
      for (std::size_t i = 0; i < n; ++i) {
        const double* a = &a_buf[(k * n + i) * d];
        double* gm = &g_mu[(k * n + i) * d];
        double* ga = &g_aa[(k * n + i) * d * d];
        for (std::size_t c = 0; c < d; ++c) {
          gm[c] += w * a[c];
          const double wa = w * a[c];
          for (std::size_t row = 0; row < d; ++row) {
            ga[c * d + row] += wa * a[row];
          }
        }
        g_w[k * n + i] += w;
      }
    }
  }

  result.loss = total / M;
  if (grad == nullptr) {
    return result;
  }

  Vector& g = *grad;
  g.setZero(static_cast<Eigen::Index>(layout_.size()));

  const std::vector<double> weights = realize_weights(layout_, theta);
  for (std::size_t k = 0; k < K; ++k) {
    g(static_cast<Eigen::Index>(layout_.logit(k))) = weights[k] - resp_sum[k] / M;
  }

  Matrix g_cov(di, di);
  Matrix g_ctrl(di, di);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t p = 0; p < P; ++p) {
      g_ctrl.setZero();
      const std::size_t mo = layout_.mean(k, p);
      for (std::size_t i = 0; i < n; ++i) {
        const double b = basis_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p));
        if (b == 0.0) {
          continue;
        }
        const double* gm = &g_mu[(k * n + i) * d];
        for (std::size_t c = 0; c < d; ++c) {
          g(static_cast<Eigen::Index>(mo + c)) += b * gm[c];
        }
        // dL/dSigma(t_i) = 1/2 (sum_j w a a^T - (sum_j w) Sigma^-1)
        const double* ga = &g_aa[(k * n + i) * d * d];
        const double* pr = &prec[(k * n + i) * d * d];
        const double gw = g_w[k * n + i];
        for (std::size_t e = 0; e < d * d; ++e) {
          g_cov.data()[e] = 0.5 * (ga[e] - gw * pr[e]);
        }
        g_ctrl.noalias() += (b * b) * g_cov;
      }

      // chain through the covariance parameterization
      const std::size_t ls = layout_.log_sigma(k, p);
      Vector sigma(di);
      for (Eigen::Index a = 0; a < di; ++a) {
        sigma(a) = std::exp(theta[ls + static_cast<std::size_t>(a)]) + kSigmaFloor;
      }
      auto put_sigma = [&](Eigen::Index a, double d_sigma) {
        g(static_cast<Eigen::Index>(ls) + a) += d_sigma * (sigma(a) - kSigmaFloor);
      };
      switch (layout_.cov_mode()) {
        case CovarianceMode::Diagonal:
          for (Eigen::Index a = 0; a < di; ++a) {
            put_sigma(a, 2.0 * sigma(a) * g_ctrl(a, a));
          }
          break;
        case CovarianceMode::Correlated: {
          const std::size_t ro = layout_.raw(k, p);
          const double rho = std::tanh(theta[ro]);
          const double g01 = g_ctrl(0, 1) + g_ctrl(1, 0);
          put_sigma(0, 2.0 * sigma(0) * g_ctrl(0, 0) + g01 * rho * sigma(1));
          put_sigma(1, 2.0 * sigma(1) * g_ctrl(1, 1) + g01 * rho * sigma(0));
          g(static_cast<Eigen::Index>(ro)) += g01 * sigma(0) * sigma(1) * (1.0 - rho * rho);
          break;
        }
        case CovarianceMode::CholeskyFactor: {
          Matrix lower = Matrix::Zero(di, di);
          std::size_t ro = layout_.raw(k, p);
          for (Eigen::Index a = 0; a < di; ++a) {
            for (Eigen::Index b = 0; b < a; ++b) {
              lower(a, b) = theta[ro++];
            }
            lower(a, a) = sigma(a);
          }
          // Sigma = L L^T  =>  dL/dL = (G + G^T) L
          const Matrix g_lower = (g_ctrl + g_ctrl.transpose()) * lower;
          ro = layout_.raw(k, p);
          for (Eigen::Index a = 0; a < di; ++a) {
            for (Eigen::Index b = 0; b < a; ++b) {
              g(static_cast<Eigen::Index>(ro++)) += g_lower(a, b);
            }
            put_sigma(a, g_lower(a, a));
          }
          break;
        }
      }
    }
  }
  return result;
}

}  // namespace ncurve
