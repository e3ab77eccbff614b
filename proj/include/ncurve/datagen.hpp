#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ncurve/bezier.hpp"

namespace ncurve {

/// Per-axis min-max map of every point onto [-1, 1].
struct MinMaxScaler {
  Vector lo;
  Vector hi;

  double forward(double v, Eigen::Index axis) const;
  double inverse(double v, Eigen::Index axis) const;
};

/// M sequences of n steps in d dimensions, optionally with a per-sequence
/// control channel.
struct SequenceDataset {
  std::vector<Sequence> sequences;
  std::vector<std::string> ids;
  std::vector<std::vector<double>> controls;  // empty, or one entry per sequence
  nlohmann::json meta = nlohmann::json::object();
  std::optional<MinMaxScaler> scaler;

  std::size_t size() const noexcept { return sequences.size(); }
  std::size_t steps() const { return sequences.empty() ? 0 : static_cast<std::size_t>(sequences.front().cols()); }
  Eigen::Index dim() const { return sequences.empty() ? 0 : sequences.front().rows(); }
  bool has_control() const noexcept { return !controls.empty(); }

  /// Throws RaggedSequence if n, d or control lengths disagree.
  void validate() const;
};

// Toy generator configs. The defaults are this library's reference
// settings; shapes beyond what is fixed in the generator docs are free choices.

/// 11-step 2D process: smooth mean path with a per-step noise schedule.
struct Toy1Config {
  std::size_t sequences = 200;
  std::vector<double> sigma{0.10, 0.15, 0.30, 0.50, 0.60, 0.45, 0.25, 0.20, 0.35, 0.20, 0.10};
  double noise_scale = 1.0;

  /// Noise-free mean path at step i (x = -5 + 10 t, y = 3 sin(pi t)).
  Vector mean_at(std::size_t step) const;
  std::size_t steps() const { return sigma.size(); }
};

/// 5-step fan: straight rays from the origin at uniform angles plus i.i.d. noise.
struct Toy2Config {
  std::size_t sequences = 1000;
  std::size_t steps = 5;
  double angle_min_deg = 60.0;
  double angle_max_deg = 120.0;
  double step_length = 1.0;
  double noise_sigma = 0.05;
};

/// Two fixed cubic mean curves with constant isotropic noise.
struct Toy3Config {
  std::size_t sequences = 1000;
  std::size_t steps = 20;
  double noise_sigma = 0.3;
  bool structured = true;
  Matrix curve_a = default_curve(+1.0);  // 2 x 4 Bezier control polygon
  Matrix curve_b = default_curve(-1.0);

  /// Noise-free mean of curve `which` (0 = a, 1 = b) at step i.
  Vector mean_at(int which, std::size_t step) const;

  static Matrix default_curve(double sign);
};

struct Toy4Config {
  std::size_t sequences = 1000;
  std::size_t steps = 25;
};

SequenceDataset gen_toy1(std::uint64_t seed, const Toy1Config& config = {});
SequenceDataset gen_toy2(std::uint64_t seed, const Toy2Config& config = {});
SequenceDataset gen_toy3(std::uint64_t seed, const Toy3Config& config = {});

/// Ground-truth mixture of the curve-learning experiment: two cubic N-Curves
/// from (-5, 0) to (6, 0) (weight 0.25) and to (-15, 0) (weight 0.75).
NCurveMixture toy4_ground_truth();

struct Toy4Data {
  NCurveMixture truth;
  SequenceDataset data;
  std::vector<std::size_t> labels;  // generating component per sequence
};

Toy4Data gen_toy4(std::uint64_t seed, const Toy4Config& config = {});

/// The structured two-curve data, relabeled for the superfluous-components experiment.
SequenceDataset gen_toy5(std::uint64_t seed, const Toy3Config& config = {});

inline constexpr std::uint64_t kToy5DefaultSeed = 5;

}  // namespace ncurve
