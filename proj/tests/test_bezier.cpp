#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "ncurve/ncurve.hpp"
#include "oracles.hpp"

using namespace ncurve;
using namespace ncurve::testing;

namespace {

// Bernstein value by Pascal's triangle in long double, independent of the
// library's binomial cache and log form.
double bernstein_pascal(int i, int n, double t) {
  std::vector<long double> row{1.0L};
  for (int k = 1; k <= n; ++k) {
    std::vector<long double> next(k + 1, 0.0L);
    for (int j = 0; j <= k; ++j) {
      if (j < k) next[j] += (1.0L - t) * row[j];
      if (j > 0) next[j] += static_cast<long double>(t) * row[j - 1];
    }
    row = std::move(next);
  }
  return static_cast<double>(row[i]);
}

NCurve constant_cov_curve(int degree, const Matrix& cov, Rng& rng) {
  std::vector<GaussianDist> ctrl;
  for (int i = 0; i <= degree; ++i) {
    Vector m(cov.rows());
    for (Eigen::Index a = 0; a < m.size(); ++a) m(a) = 3.0 * rng.normal();
    ctrl.emplace_back(m, cov);
  }
  return NCurve(std::move(ctrl));
}

}  // namespace

TEST_CASE("bernstein examples") {
  CHECK(bernstein(0, 1, 0.0) == 1.0);
  CHECK(bernstein(1, 3, 0.5) == doctest::Approx(0.375).epsilon(1e-15));
  CHECK(bernstein(2, 4, 0.3) == doctest::Approx(6 * 0.09 * 0.49).epsilon(1e-14));
  CHECK_THROWS_AS(bernstein(4, 3, 0.5), OutOfRange);
  CHECK_THROWS_AS(bernstein(-1, 3, 0.5), OutOfRange);
  CHECK_THROWS_AS(bernstein(0, 3, 1.5), OutOfRange);
  CHECK_THROWS_AS(bernstein(0, 3, -0.1), OutOfRange);
}

TEST_CASE("bernstein agrees with de Casteljau-style recursion, including the log form") {
  Rng rng(8);
  for (int n : {1, 5, 20, 31, 45, 60}) {
    for (int trial = 0; trial < 20; ++trial) {
      const double t = rng.uniform();
      const int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(n + 1)));
      const double ref = bernstein_pascal(i, n, t);
      CHECK(std::abs(bernstein(i, n, t) - ref) <= 1e-12 * std::max(1.0, std::abs(ref)) + 1e-300);
    }
    CHECK(bernstein(0, n, 0.0) == 1.0);
    CHECK(bernstein(n, n, 1.0) == 1.0);
  }
}

TEST_CASE("bernstein_row examples") {
  const auto r2 = bernstein_row(2, 0.5);
  REQUIRE(r2.size() == 3);
  CHECK(r2[0] == 0.25);
  CHECK(r2[1] == 0.5);
  CHECK(r2[2] == 0.25);
  const auto r5 = bernstein_row(5, 0.0);
  CHECK(r5 == std::vector<double>{1, 0, 0, 0, 0, 0});
  Rng rng(37);
  for (int k = 0; k < 1000; ++k) {
    const auto r = bernstein_row(7, rng.uniform());
    double s = 0.0;
    for (double v : r) s += v;
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
  CHECK(bernstein_row(7, 0.37).size() == 8);
}

TEST_CASE("partition of unity for random degree up to 20") {
  Rng rng(101);
  for (int k = 0; k < 1000; ++k) {
    const int n = static_cast<int>(rng.below(21));
    const double t = rng.uniform();
    double s = 0.0;
    for (int i = 0; i <= n; ++i) s += bernstein(i, n, t);
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
}

TEST_CASE("bernstein_matrix rows equal bernstein_row") {
  const std::vector<double> ts{0.0, 0.2, 0.9, 1.0};
  const Matrix b = bernstein_matrix(4, ts);
  REQUIRE(b.rows() == 4);
  REQUIRE(b.cols() == 5);
  for (std::size_t r = 0; r < ts.size(); ++r) {
    const auto row = bernstein_row(4, ts[r]);
    for (int i = 0; i <= 4; ++i) CHECK(b(static_cast<Eigen::Index>(r), i) == row[i]);
  }
}

TEST_CASE("curve_at endpoints are exact") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const int degree = 1 + static_cast<int>(rng.below(8));
    const NCurve c = random_curve(degree, 3, rng);
    CHECK(curve_at(c, 0.0) == c.controls().front());
    CHECK(curve_at(c, 1.0) == c.controls().back());
  }
}

TEST_CASE("curve_at on a linear curve") {
  Vector m0 = Vector::Zero(2), m1(2);
  m1 << 2.0, 0.0;
  const NCurve c({GaussianDist(m0, Matrix::Identity(2, 2)), GaussianDist(m1, Matrix::Identity(2, 2))});
  const GaussianDist g = curve_at(c, 0.5);
  CHECK(g.mean()(0) == 1.0);
  CHECK(g.mean()(1) == 0.0);
  CHECK(g.cov().isApprox(0.5 * Matrix::Identity(2, 2), 1e-15));
  CHECK_THROWS_AS(curve_at(c, 1.01), OutOfRange);
}

TEST_CASE("curve_at covariance is the explicit Bernstein-squared sum") {
  Rng rng(12);
  const NCurve c = random_curve(5, 2, rng);
  const double t = 0.31;
  Vector mean = Vector::Zero(2);
  Matrix cov = Matrix::Zero(2, 2);
  for (int i = 0; i <= 5; ++i) {
    const double b = bernstein_pascal(i, 5, t);
    mean += b * c.controls()[i].mean();
    cov += b * b * c.controls()[i].cov();
  }
  const GaussianDist g = curve_at(c, t);
  CHECK((g.mean() - mean).norm() < 1e-12);
  CHECK((g.cov() - cov).norm() < 1e-12);
}

TEST_CASE("NCurve construction errors") {
  CHECK_THROWS_AS(NCurve({}), InvalidConfig);
  CHECK_THROWS_AS(NCurve({GaussianDist::standard(2), GaussianDist::standard(3)}), DimensionMismatch);
}

TEST_CASE("curve_log_density") {
  const NCurve constant({GaussianDist::standard(3)});
  CHECK(constant.degree() == 0);
  CHECK(curve_log_density(constant, 0.42, Vector::Zero(3)) ==
        doctest::Approx(-1.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-14));
  Rng rng(6);
  const NCurve c = random_curve(4, 2, rng);
  Vector x(2);
  x << 0.3, -0.7;
  CHECK(curve_log_density(c, 0.6, x) == curve_at(c, 0.6).log_density(x));
  // Against the explicit-inverse density with the pointwise moments.
  CHECK(curve_log_density(c, 0.5, x) ==
        doctest::Approx(log_density_direct(curve_at(c, 0.5), x)).epsilon(1e-12));
}

TEST_CASE("PSD closure of curve_at on a 101-point grid") {
  Rng rng(15);
  for (int trial = 0; trial < 5; ++trial) {
    const NCurve c = random_curve(6, 4, rng);
    for (int j = 0; j <= 100; ++j) CHECK_NOTHROW(cholesky_lower(curve_at(c, j / 100.0).cov()));
  }
}

TEST_CASE("interior covariance shrinks for a constant-covariance curve") {
  Rng rng(19);
  const Matrix s = random_spd(2, rng);
  const NCurve c = constant_cov_curve(4, s, rng);
  for (int j = 1; j < 20; ++j) {
    const Matrix cov = curve_at(c, j / 20.0).cov();
    CHECK(cov.trace() < s.trace());
    // Loewner order: s - cov is positive definite
    CHECK_NOTHROW(cholesky_lower(s - cov));
  }
}

TEST_CASE("mixture_at and mixture_log_density") {
  Rng rng(21);
  const NCurve a = random_curve(3, 2, rng);
  const NCurve b = random_curve(3, 2, rng);
  Vector x(2);
  x << 0.1, 0.4;

  SUBCASE("K=1") {
    const NCurveMixture m({1.0}, {a});
    const auto pm = mixture_at(m, 0.3);
    REQUIRE(pm.components.size() == 1);
    CHECK(pm.weights[0] == 1.0);
    CHECK(pm.components[0] == curve_at(a, 0.3));
    CHECK(mixture_log_density(m, 0.3, x) == doctest::Approx(curve_log_density(a, 0.3, x)).epsilon(1e-14));
  }
  SUBCASE("two identical components") {
    const NCurveMixture m({0.5, 0.5}, {a, a});
    CHECK(mixture_log_density(m, 0.7, x) == doctest::Approx(curve_log_density(a, 0.7, x)).epsilon(1e-14));
  }
  SUBCASE("weights (1, 0) ignore the second component") {
    const NCurveMixture m({1.0, 0.0}, {a, b});
    CHECK(mixture_log_density(m, 0.2, x) == curve_log_density(a, 0.2, x));
  }
  SUBCASE("matches the naive sum when nothing underflows") {
    const NCurveMixture m({0.35, 0.65}, {a, b});
    for (double t : {0.0, 0.25, 0.5, 1.0}) {
      const double naive = std::log(0.35 * std::exp(log_density_direct(curve_at(a, t), x)) +
                                    0.65 * std::exp(log_density_direct(curve_at(b, t), x)));
      CHECK(std::abs(mixture_log_density(m, t, x) - naive) < 1e-9);
    }
  }
}

TEST_CASE("NCurveMixture validation") {
  Rng rng(2);
  const NCurve a = random_curve(2, 2, rng);
  const NCurve b3 = random_curve(3, 2, rng);
  CHECK_THROWS_AS(NCurveMixture({}, {}), InvalidConfig);
  CHECK_THROWS_AS(NCurveMixture({0.5, 0.6}, {a, a}), InvalidConfig);
  CHECK_THROWS_AS(NCurveMixture({1.2, -0.2}, {a, a}), InvalidConfig);
  CHECK_THROWS_AS(NCurveMixture({1.0}, {a, a}), DimensionMismatch);
  CHECK_THROWS_AS(NCurveMixture({0.5, 0.5}, {a, b3}), DimensionMismatch);
  CHECK(NCurveMixture({0.5, 0.5}, {a, a}).top_component() == 0);
  CHECK(NCurveMixture({0.25, 0.75}, {a, a}).top_component() == 1);
}

TEST_CASE("toy-4 ground truth starts both components at (-5, 0)") {
  const auto truth = toy4_ground_truth();
  const auto pm = mixture_at(truth, 0.0);
  for (const auto& g : pm.components) {
    CHECK(g.mean()(0) == -5.0);
    CHECK(g.mean()(1) == 0.0);
  }
}

TEST_CASE("uniform grids") {
  CHECK(uniform_grid(2).values() == std::vector<double>{0.0, 1.0});
  CHECK(uniform_grid(3).values() == std::vector<double>{0.0, 0.5, 1.0});
  const IndexGrid g = uniform_grid(25);
  REQUIRE(g.size() == 25);
  CHECK(g[0] == 0.0);
  CHECK(g[24] == 1.0);
  for (std::size_t i = 1; i < 25; ++i) CHECK(g[i] - g[i - 1] == doctest::Approx(1.0 / 24.0));
  CHECK_THROWS_AS(uniform_grid(1), InvalidConfig);
  CHECK_THROWS_AS(IndexGrid({0.0, 0.5, 0.5}), InvalidConfig);
  CHECK_THROWS_AS(IndexGrid({0.0, 1.5}), OutOfRange);
}

TEST_CASE("sample_realization with zero covariances is the mean curve") {
  Rng rng(30);
  std::vector<GaussianDist> ctrl;
  for (int i = 0; i < 4; ++i) ctrl.emplace_back(random_gaussian(2, rng).mean(), Matrix::Zero(2, 2));
  const NCurve c(ctrl);
  const IndexGrid grid = uniform_grid(9);
  const Sequence s = sample_realization(c, grid, rng);
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK((s.col(static_cast<Eigen::Index>(i)) - curve_at(c, grid[i]).mean()).norm() < 1e-12);
}

TEST_CASE("sample_realization is deterministic and smooth") {
  Rng init(31);
  const NCurve c = random_curve(3, 2, init);
  const IndexGrid grid = uniform_grid(30);
  Rng a(5), b(5);
  const Sequence sa = sample_realization(c, grid, a);
  CHECK(sa == sample_realization(c, grid, b));
  // One realization is an ordinary cubic: its fourth finite difference vanishes.
  for (Eigen::Index i = 0; i + 4 < sa.cols(); ++i) {
    const Vector d4 = sa.col(i) - 4 * sa.col(i + 1) + 6 * sa.col(i + 2) - 4 * sa.col(i + 3) + sa.col(i + 4);
    CHECK(d4.norm() < 1e-10);
  }
}

TEST_CASE("realization marginals match curve_at moments within 4 standard errors") {
  Rng rng(41);
  const NCurve c = random_curve(4, 2, rng);
  const IndexGrid grid = uniform_grid(5);
  const int n = 100000;
  std::vector<Vector> sum(grid.size(), Vector::Zero(2));
  std::vector<Matrix> sq(grid.size(), Matrix::Zero(2, 2));
  for (int j = 0; j < n; ++j) {
    const Sequence s = sample_realization(c, grid, rng);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Vector x = s.col(static_cast<Eigen::Index>(i));
      sum[i] += x;
      sq[i] += x * x.transpose();
    }
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const GaussianDist g = curve_at(c, grid[i]);
    const Vector mean = sum[i] / n;
    const Matrix cov = (sq[i] - n * mean * mean.transpose()) / (n - 1.0);
    for (int a = 0; a < 2; ++a) {
      CHECK(std::abs(mean(a) - g.mean()(a)) <= 4 * std::sqrt(g.cov()(a, a) / n));
      for (int b = 0; b < 2; ++b) {
        const double se = std::sqrt((g.cov()(a, a) * g.cov()(b, b) + g.cov()(a, b) * g.cov()(a, b)) / n);
        CHECK(std::abs(cov(a, b) - g.cov()(a, b)) <= 4 * se);
      }
    }
  }
}

TEST_CASE("mixture realization component frequencies") {
  Rng rng(43);
  const NCurve a = random_curve(2, 2, rng);
  const IndexGrid grid = uniform_grid(3);
  SUBCASE("K=1") {
    const NCurveMixture m({1.0}, {a});
    for (int j = 0; j < 100; ++j) CHECK(sample_mixture_realization(m, grid, rng).component == 0);
  }
  SUBCASE("0.25/0.75") {
    const NCurveMixture m({0.25, 0.75}, {a, a});
    int ones = 0;
    for (int j = 0; j < 10000; ++j) ones += sample_mixture_realization(m, grid, rng).component == 1;
    CHECK(std::abs(ones / 10000.0 - 0.75) <= 0.013);
  }
  SUBCASE("degenerate weights") {
    const NCurveMixture m({1.0, 0.0}, {a, a});
    for (int j = 0; j < 2000; ++j) CHECK(sample_mixture_realization(m, grid, rng).component == 0);
  }
}

TEST_CASE("envelope examples") {
  const IndexGrid grid = uniform_grid(4);
  const NCurve zero({GaussianDist(Vector::Ones(2), Matrix::Zero(2, 2)),
                     GaussianDist(Vector::Zero(2), Matrix::Zero(2, 2))});
  for (const auto& p : envelope(zero, grid, 3.0)) CHECK(p.half_width.isZero());
  const NCurve std2({GaussianDist::standard(2)});
  const auto env = envelope(std2, grid, 3.0);
  REQUIRE(env.size() == 4);
  for (std::size_t i = 0; i < env.size(); ++i) {
    CHECK(env[i].t == grid[i]);
    CHECK(env[i].half_width(0) == 3.0);
    CHECK(env[i].half_width(1) == 3.0);
  }
}

TEST_CASE("envelope widens where toy-1 noise is larger") {
  const Toy1Config cfg;
  const auto ds = gen_toy1(3, cfg);
  const IndexGrid grid = uniform_grid(cfg.steps());
  FitConfig fc;
  fc.components = 1;
  fc.degree = 6;
  fc.learning_rate = 0.02;
  fc.max_iters = 1500;
  fc.seed = 3;
  fc.loss_reduction = Reduction::Sum;
  const auto fit = fit_unconditional(ds.sequences, grid, fc);
  const auto env = envelope(fit.mixture.component(0), grid, 3.0);
  auto width = [&](std::size_t i) { return env[i].half_width.norm(); };
  // schedule peaks at step 4 (0.60) and is smallest at the ends (0.10)
  CHECK(width(4) > width(0));
  CHECK(width(4) > width(10));
  CHECK(width(3) > width(1));
}

TEST_CASE("3-sigma Mahalanobis coverage of self-samples is the chi-square(2) value") {
  Rng rng(47);
  const NCurve c = random_curve(3, 2, rng);
  int inside = 0;
  const int n = 10000;
  for (int j = 0; j < n; ++j) {
    const double t = rng.uniform();
    const GaussianDist g = curve_at(c, t);
    const Sequence s = sample_realization(c, IndexGrid({t}), rng);
    inside += g.mahalanobis_sq(s.col(0)) <= 9.0;
  }
  CHECK(std::abs(inside / double(n) - (1.0 - std::exp(-4.5))) <= 0.01);
}
