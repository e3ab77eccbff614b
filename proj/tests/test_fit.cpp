#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "ncurve/ncurve.hpp"
#include "oracles.hpp"

using namespace ncurve;
using namespace ncurve::testing;

namespace {

FitConfig recovery_config(std::size_t K, int degree, std::uint64_t seed) {
  FitConfig cfg;
  cfg.components = K;
  cfg.degree = degree;
  cfg.learning_rate = 0.02;
  cfg.max_iters = 3000;
  cfg.seed = seed;
  cfg.loss_reduction = Reduction::Sum;
  return cfg;
}

std::vector<ConditionalExample> fan_examples(const SequenceDataset& ds, Eigen::Index observed) {
  std::vector<ConditionalExample> ex;
  for (const auto& s : ds.sequences) ex.push_back({s.leftCols(observed), {}, s});
  return ex;
}

// Moments of the predicted point mixture at t.
std::pair<Vector, Matrix> point_moments(const NCurveMixture& m, double t) {
  const PointMixture pm = mixture_at(m, t);
  Vector mean = Vector::Zero(m.dim());
  for (std::size_t k = 0; k < pm.weights.size(); ++k) mean += pm.weights[k] * pm.components[k].mean();
  Matrix cov = Matrix::Zero(m.dim(), m.dim());
  for (std::size_t k = 0; k < pm.weights.size(); ++k) {
    const Vector r = pm.components[k].mean() - mean;
    cov += pm.weights[k] * (pm.components[k].cov() + r * r.transpose());
  }
  return {mean, cov};
}

}  // namespace

TEST_CASE("FitConfig validation") {
  const std::vector<Sequence> data{Matrix::Zero(2, 5)};
  const IndexGrid grid = uniform_grid(5);
  FitConfig cfg;
  cfg.max_iters = 1;
  CHECK_NOTHROW(fit_unconditional(data, grid, cfg));
  SUBCASE("K=0") {
    cfg.components = 0;
    CHECK_THROWS_AS(fit_unconditional(data, grid, cfg), InvalidConfig);
  }
  SUBCASE("non-positive learning rate") {
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(fit_unconditional(data, grid, cfg), InvalidConfig);
  }
  SUBCASE("negative degree") {
    cfg.degree = -1;
    CHECK_THROWS_AS(fit_unconditional(data, grid, cfg), InvalidConfig);
  }
  SUBCASE("grid and data disagree") {
    CHECK_THROWS_AS(fit_unconditional(data, uniform_grid(4), cfg), ShapeMismatch);
  }
  SUBCASE("dimension disagrees") {
    cfg.dim = 3;
    CHECK_THROWS_AS(fit_unconditional(data, grid, cfg), ShapeMismatch);
  }
  SUBCASE("no data") {
    CHECK_THROWS_AS(fit_unconditional(std::vector<Sequence>{}, grid, cfg), EmptyInput);
  }
}

TEST_CASE("identical constant sequences collapse onto the constant with sigma at the floor") {
  Sequence s(2, 6);
  s.row(0).setConstant(1.25);
  s.row(1).setConstant(-0.5);
  const std::vector<Sequence> data(20, s);
  FitConfig cfg;
  cfg.degree = 1;
  cfg.learning_rate = 0.05;
  cfg.max_iters = 1500;
  const auto fit = fit_unconditional(data, uniform_grid(6), cfg);
  for (const auto& g : fit.mixture.component(0).controls()) {
    CHECK((g.mean() - s.col(0)).norm() < 1e-3);
    CHECK(std::sqrt(g.cov()(0, 0)) < 2 * kSigmaFloor);
    CHECK(std::sqrt(g.cov()(1, 1)) < 2 * kSigmaFloor);
  }
}

TEST_CASE("fits are deterministic and the loss trace trends down") {
  const auto toy = gen_toy4(11);
  FitConfig cfg = recovery_config(2, 3, 11);
  cfg.max_iters = 800;
  cfg.batch_size = 256;
  const auto a = fit_unconditional(toy.data.sequences, uniform_grid(25), cfg);
  const auto b = fit_unconditional(toy.data.sequences, uniform_grid(25), cfg);
  CHECK(a.loss_trace == b.loss_trace);
  CHECK(a.theta == b.theta);
  REQUIRE(a.loss_trace.size() == 800);

  // 200-iteration moving average, compared at window boundaries
  std::vector<double> avg;
  for (std::size_t i = 0; i + 200 <= a.loss_trace.size(); i += 200)
    avg.push_back(std::accumulate(a.loss_trace.begin() + i, a.loss_trace.begin() + i + 200, 0.0) / 200);
  for (std::size_t i = 1; i < avg.size(); ++i) CHECK(avg[i] <= avg[i - 1] + 1e-6 * std::abs(avg[i - 1]));

  double total = 0.0;
  for (double w : a.mixture.weights()) {
    CHECK(w >= 0.0);
    total += w;
  }
  CHECK(std::abs(total - 1.0) < 1e-9);

  cfg.seed = 12;
  CHECK(fit_unconditional(toy.data.sequences, uniform_grid(25), cfg).loss_trace != a.loss_trace);
}

TEST_CASE("toy-4 weights are recovered after component matching") {
  const auto toy = gen_toy4(2);
  const auto fit = fit_unconditional(toy.data.sequences, uniform_grid(25), recovery_config(2, 3, 2));
  const auto perm = match_components(fit.mixture, toy.truth);
  for (std::size_t r = 0; r < 2; ++r)
    CHECK(std::abs(fit.mixture.weights()[perm[r]] - toy.truth.weights()[r]) <= 0.05);
}

TEST_CASE("unstructured toy-3 drives one weight towards zero") {
  Toy3Config tc;
  tc.structured = false;
  const auto ds = gen_toy3(4, tc);
  const auto fit = fit_unconditional(ds.sequences, uniform_grid(tc.steps), recovery_config(2, 3, 4));
  const auto& w = fit.mixture.weights();
  CHECK(std::min(w[0], w[1]) < 0.05);
}

TEST_CASE("non-finite loss aborts with diagnostics") {
  std::vector<Sequence> data(3, Matrix::Zero(2, 4));
  data[1](0, 2) = std::numeric_limits<double>::quiet_NaN();
  FitConfig cfg;
  cfg.max_iters = 10;
  try {
    fit_unconditional(data, uniform_grid(4), cfg);
    FAIL("expected NonFiniteLoss");
  } catch (const NonFiniteLoss& e) {
    CHECK(e.iteration() == 0);
    CHECK(e.category() == ErrorCategory::Numerical);
    CHECK(std::string(e.what()).find("iteration 0") != std::string::npos);
  }
}

TEST_CASE("conditional: a single pair is fit better than by the unconditional model") {
  const auto ds = gen_toy2(21);
  const IndexGrid grid = uniform_grid(5);
  const std::vector<Sequence> all = ds.sequences;
  FitConfig cfg;
  cfg.components = 1;
  cfg.degree = 3;
  cfg.learning_rate = 0.01;
  cfg.max_iters = 1000;
  cfg.loss_reduction = Reduction::Sum;
  const auto uncond = fit_unconditional(all, grid, cfg);
  const std::vector<ConditionalExample> one{{ds.sequences[0].leftCols(2), {}, ds.sequences[0]}};
  EncoderConfig enc;
  enc.observed_steps = 2;
  enc.dim = 2;
  const auto cond = fit_conditional(one, grid, cfg, enc);
  const double before = sequence_nll(uncond.mixture, grid, ds.sequences[0], Reduction::Sum);
  CHECK(conditional_nll(cond.model, grid, one) < before);
}

TEST_CASE("conditional toy-2 predictions match moments of matching trajectories") {
  const auto ds = gen_toy2(31);
  const IndexGrid grid = uniform_grid(5);
  const auto ex = fan_examples(ds, 2);
  FitConfig cfg;
  cfg.components = 1;
  cfg.degree = 3;
  cfg.learning_rate = 5e-3;
  cfg.max_iters = 2000;
  cfg.batch_size = 64;
  cfg.seed = 31;
  cfg.loss_reduction = Reduction::Sum;
  EncoderConfig enc;
  enc.observed_steps = 2;
  enc.dim = 2;
  const auto fit = fit_conditional(ex, grid, cfg, enc);

  // Reference pool from the same generator; "matching" means both observed
  // points lie close to the conditioning observation.
  Toy2Config pool_cfg;
  pool_cfg.sequences = 1000000;
  const auto pool = gen_toy2(32, pool_cfg);
  const auto probes = gen_toy2(33, Toy2Config{.sequences = 4});
  for (const auto& probe : probes.sequences) {
    std::vector<const Sequence*> matches;
    for (const auto& s : pool.sequences)
      if ((s.col(1) - probe.col(1)).norm() < 0.02 && (s.col(0) - probe.col(0)).norm() < 0.05)
        matches.push_back(&s);
    REQUIRE(matches.size() > 500);
    const NCurveMixture pred = predict(fit.model, probe.leftCols(2));
    for (Eigen::Index i = 2; i < 5; ++i) {
      Vector mean = Vector::Zero(2);
      for (const auto* s : matches) mean += s->col(i);
      mean /= static_cast<double>(matches.size());
      double trace = 0.0;
      for (const auto* s : matches) trace += (s->col(i) - mean).squaredNorm();
      trace /= static_cast<double>(matches.size() - 1);
      const auto [pm, pc] = point_moments(pred, grid[static_cast<std::size_t>(i)]);
      CHECK((pm - mean).norm() / mean.norm() < 0.25);
      const double ratio = pc.trace() / trace;
      if (i == 4) {
        CHECK(std::abs(ratio - 1.0) < 0.25);
      } else {
        // The observed steps sit in the target and are predicted almost
        // exactly; the shared Bernstein weights drag the next steps' variance
        // down with them.
        CHECK(ratio > 0.4);
        CHECK(ratio < 1.25);
      }
    }
  }
}

TEST_CASE("conditional: spread continuations give a wider final prediction than a single one") {
  const IndexGrid grid = uniform_grid(5);
  Rng rng(41);
  auto make = [&](bool spread) {
    std::vector<ConditionalExample> ex;
    for (int j = 0; j < 200; ++j) {
      Sequence s(2, 5);
      const double angle = spread ? rng.uniform(1.0, 2.1) : 1.55;
      for (int i = 0; i < 5; ++i) {
        const double r = i;
        s.col(i) = Vector{{r * std::cos(angle), r * std::sin(angle)}};
        s.col(i) += 0.02 * Vector{{rng.normal(), rng.normal()}};
      }
      s.leftCols(2) = Matrix{{0.0, 0.0}, {0.0, 1.0}};
      ex.push_back({s.leftCols(2), {}, s});
    }
    return ex;
  };
  FitConfig cfg;
  cfg.components = 1;
  cfg.degree = 3;
  cfg.learning_rate = 0.02;
  cfg.max_iters = 600;
  cfg.loss_reduction = Reduction::Sum;
  EncoderConfig enc;
  enc.hidden_sizes = {16};
  enc.observed_steps = 2;
  enc.dim = 2;
  const auto wide = fit_conditional(make(true), grid, cfg, enc);
  const auto narrow = fit_conditional(make(false), grid, cfg, enc);
  const Matrix obs{{0.0, 0.0}, {0.0, 1.0}};
  const double w = curve_at(predict(wide.model, obs).component(0), 1.0).cov().trace();
  const double n = curve_at(predict(narrow.model, obs).component(0), 1.0).cov().trace();
  CHECK(w > n);
}

TEST_CASE("conditional prediction spans the full observed plus predicted horizon") {
  Toy2Config tc;
  tc.sequences = 8;
  tc.steps = 60;
  tc.step_length = 0.1;
  const auto ds = gen_toy2(5, tc);
  const IndexGrid grid = uniform_grid(60);
  FitConfig cfg;
  cfg.components = 2;
  cfg.degree = 5;
  cfg.max_iters = 2;
  EncoderConfig enc;
  enc.observed_steps = 20;
  enc.dim = 2;
  const auto fit = fit_conditional(fan_examples(ds, 20), grid, cfg, enc);
  const NCurveMixture pred = predict(fit.model, ds.sequences[0].leftCols(20));
  CHECK(pred.size() == 2);
  const auto env = envelope(pred.component(0), grid, 3.0);
  CHECK(env.size() == 60);
  // an untrained-seed repeat is bit-identical
  const auto again = fit_conditional(fan_examples(ds, 20), grid, cfg, enc);
  CHECK(again.model.encoder.params() == fit.model.encoder.params());
  CHECK_THROWS_AS(predict(fit.model, ds.sequences[0].leftCols(19)), ShapeMismatch);
}
