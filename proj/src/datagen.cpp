#include "ncurve/datagen.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "ncurve/errors.hpp"

namespace ncurve {

double MinMaxScaler::forward(double v, Eigen::Index axis) const {
  const double span = hi(axis) - lo(axis);
  if (span <= 0.0) {
    return 0.0;
  }
  return 2.0 * (v - lo(axis)) / span - 1.0;
}

double MinMaxScaler::inverse(double v, Eigen::Index axis) const {
  const double span = hi(axis) - lo(axis);
  return lo(axis) + (v + 1.0) * 0.5 * span;
}

void SequenceDataset::validate() const {
  if (!ids.empty() && ids.size() != sequences.size()) {
    throw ShapeMismatch("dataset ids and sequences differ in count");
  }
  if (!controls.empty() && controls.size() != sequences.size()) {
    throw ShapeMismatch("dataset controls and sequences differ in count");
  }
  for (std::size_t j = 0; j < sequences.size(); ++j) {
    if (sequences[j].cols() != sequences.front().cols() ||
        sequences[j].rows() != sequences.front().rows()) {
      throw RaggedSequence(j + 1, "sequence shape differs from the first sequence");
    }
    if (!controls.empty() && controls[j].size() != static_cast<std::size_t>(sequences[j].cols())) {
      throw RaggedSequence(j + 1, "control length does not match sequence length");
    }
  }
}

namespace {

std::vector<std::string> default_ids(std::size_t m) {
  std::vector<std::string> ids(m);
  for (std::size_t j = 0; j < m; ++j) {
    ids[j] = std::to_string(j);
  }
  return ids;
}

nlohmann::json polygon_json(const Matrix& poly) {
  auto out = nlohmann::json::array();
  for (Eigen::Index c = 0; c < poly.cols(); ++c) {
    out.push_back({poly(0, c), poly(1, c)});
  }
  return out;
}

GaussianDist control(double x, double y, double sx, double sy, double rho) {
  Vector m(2);
  m << x, y;
  Matrix c(2, 2);
  c << sx * sx, rho * sx * sy, rho * sx * sy, sy * sy;
  return GaussianDist(m, c);
}

}  // namespace

Vector Toy1Config::mean_at(std::size_t step) const {
  const double t = static_cast<double>(step) / static_cast<double>(steps() - 1);
  Vector m(2);
  m << -5.0 + 10.0 * t, 3.0 * std::sin(std::numbers::pi * t);
  return m;
}

SequenceDataset gen_toy1(std::uint64_t seed, const Toy1Config& config) {
  if (config.steps() < 2) {
    throw InvalidConfig("toy1 needs at least 2 steps");
  }
  Rng rng(seed);
  SequenceDataset ds;
  ds.sequences.reserve(config.sequences);
  for (std::size_t j = 0; j < config.sequences; ++j) {
    Sequence s(2, static_cast<Eigen::Index>(config.steps()));
    for (std::size_t i = 0; i < config.steps(); ++i) {
      const double sd = config.noise_scale * config.sigma[i];
      const Vector m = config.mean_at(i);
      for (Eigen::Index a = 0; a < 2; ++a) {
        s(a, static_cast<Eigen::Index>(i)) = m(a) + sd * rng.normal();
      }
    }
    ds.sequences.push_back(std::move(s));
  }
  ds.ids = default_ids(config.sequences);
  ds.meta = {{"name", "toy1"},
             {"seed", seed},
             {"generator",
              {{"sequences", config.sequences},
               {"sigma", config.sigma},
               {"noise_scale", config.noise_scale},
               {"mean_path", "x = -5 + 10 t, y = 3 sin(pi t)"}}}};
  return ds;
}

SequenceDataset gen_toy2(std::uint64_t seed, const Toy2Config& config) {
  if (config.steps < 2) {
    throw InvalidConfig("toy2 needs at least 2 steps");
  }
  Rng rng(seed);
  SequenceDataset ds;
  ds.sequences.reserve(config.sequences);
  const double lo = config.angle_min_deg * std::numbers::pi / 180.0;
  const double hi = config.angle_max_deg * std::numbers::pi / 180.0;
  for (std::size_t j = 0; j < config.sequences; ++j) {
    const double angle = lo == hi ? lo : rng.uniform(lo, hi);
    Sequence s(2, static_cast<Eigen::Index>(config.steps));
    for (std::size_t i = 0; i < config.steps; ++i) {
      const double r = config.step_length * static_cast<double>(i);
      const double ex = config.noise_sigma * rng.normal();
      const double ey = config.noise_sigma * rng.normal();
      s(0, static_cast<Eigen::Index>(i)) = r * std::cos(angle) + ex;
      s(1, static_cast<Eigen::Index>(i)) = r * std::sin(angle) + ey;
    }
    ds.sequences.push_back(std::move(s));
  }
  ds.ids = default_ids(config.sequences);
  ds.meta = {{"name", "toy2"},
             {"seed", seed},
             {"generator",
              {{"sequences", config.sequences},
               {"steps", config.steps},
               {"angle_min_deg", config.angle_min_deg},
               {"angle_max_deg", config.angle_max_deg},
               {"step_length", config.step_length},
               {"noise_sigma", config.noise_sigma}}}};
  return ds;
}

Matrix Toy3Config::default_curve(double sign) {
  Matrix poly(2, 4);
  poly << 0.0, 3.0, 7.0, 10.0,  //
      0.0, sign * 4.0, sign * 4.0, 0.0;
  return poly;
}

Vector Toy3Config::mean_at(int which, std::size_t step) const {
  const Matrix& poly = which == 0 ? curve_a : curve_b;
  const double t = static_cast<double>(step) / static_cast<double>(steps - 1);
  const auto row = bernstein_row(static_cast<int>(poly.cols()) - 1, t);
  Vector m = Vector::Zero(poly.rows());
  for (std::size_t i = 0; i < row.size(); ++i) {
    m += row[i] * poly.col(static_cast<Eigen::Index>(i));
  }
  return m;
}

SequenceDataset gen_toy3(std::uint64_t seed, const Toy3Config& config) {
  if (config.steps < 2) {
    throw InvalidConfig("toy3 needs at least 2 steps");
  }
  if (config.curve_a.rows() != 2 || config.curve_b.rows() != 2) {
    throw InvalidConfig("toy3 curves must be 2D control polygons");
  }
  Rng rng(seed);
  std::vector<Vector> means[2];
  for (int c = 0; c < 2; ++c) {
    for (std::size_t i = 0; i < config.steps; ++i) {
      means[c].push_back(config.mean_at(c, i));
    }
  }
  SequenceDataset ds;
  ds.sequences.reserve(config.sequences);
  std::vector<int> labels;
  for (std::size_t j = 0; j < config.sequences; ++j) {
    const int chosen = rng.uniform() < 0.5 ? 0 : 1;
    labels.push_back(chosen);
    Sequence s(2, static_cast<Eigen::Index>(config.steps));
    for (std::size_t i = 0; i < config.steps; ++i) {
      const int c = config.structured ? chosen : (rng.uniform() < 0.5 ? 0 : 1);
      for (Eigen::Index a = 0; a < 2; ++a) {
        s(a, static_cast<Eigen::Index>(i)) = means[c][i](a) + config.noise_sigma * rng.normal();
      }
    }
    ds.sequences.push_back(std::move(s));
  }
  ds.ids = default_ids(config.sequences);
  ds.meta = {{"name", "toy3"},
             {"seed", seed},
             {"structured", config.structured},
             {"generator",
              {{"sequences", config.sequences},
               {"steps", config.steps},
               {"noise_sigma", config.noise_sigma},
               {"curve_a", polygon_json(config.curve_a)},
               {"curve_b", polygon_json(config.curve_b)}}}};
  if (config.structured) {
    ds.meta["labels"] = labels;
  }
  return ds;
}

NCurveMixture toy4_ground_truth() {
  NCurve blue({control(-5.0, 0.0, 0.2, 0.2, 0.0), control(-3.0, 6.0, 0.6, 0.4, 0.3),
               control(3.0, 6.0, 0.5, 0.7, -0.2), control(6.0, 0.0, 0.4, 0.4, 0.0)});
  NCurve green({control(-5.0, 0.0, 0.2, 0.2, 0.0), control(-8.0, -5.0, 0.5, 0.8, 0.25),
                control(-13.0, -4.0, 0.7, 0.5, -0.3), control(-15.0, 0.0, 0.4, 0.4, 0.0)});
  return NCurveMixture({0.25, 0.75}, {std::move(blue), std::move(green)});
}

Toy4Data gen_toy4(std::uint64_t seed, const Toy4Config& config) {
  NCurveMixture truth = toy4_ground_truth();
  const IndexGrid grid = IndexGrid::uniform(config.steps);
  Rng rng(seed);
  Toy4Data out{truth, {}, {}};
  out.data.sequences.reserve(config.sequences);
  for (std::size_t j = 0; j < config.sequences; ++j) {
    auto r = sample_mixture_realization(truth, grid, rng);
    out.labels.push_back(r.component);
    out.data.sequences.push_back(std::move(r.sequence));
  }
  out.data.ids = default_ids(config.sequences);
  out.data.meta = {{"name", "toy4"},
                   {"seed", seed},
                   {"labels", out.labels},
                   {"generator",
                    {{"sequences", config.sequences},
                     {"steps", config.steps},
                     {"weights", truth.weights()},
                     {"ground_truth", "toy4_ground_truth()"}}}};
  return out;
}

SequenceDataset gen_toy5(std::uint64_t seed, const Toy3Config& config) {
  Toy3Config structured = config;
  structured.structured = true;
  SequenceDataset ds = gen_toy3(seed, structured);
  ds.meta["name"] = "toy5";
  return ds;
}

}  // namespace ncurve
