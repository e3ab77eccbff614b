#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ncurve/bezier.hpp"

namespace ncurve {

/// Optimal one-to-one assignment of fitted components to reference
/// components (exhaustive search, K <= 9). Returns perm with perm[r] the
/// fitted index matched to reference r, minimizing the summed L2 distance
/// between mean control polygons. Requires fitted.size() >= reference.size()
/// and equal degree and dimension.
std::vector<std::size_t> match_components(const NCurveMixture& fitted,
                                          const NCurveMixture& reference);

/// Index of the nearest reference path (d x n) for every fitted component,
/// by L2 distance between the component's mean curve on `grid` and the path.
std::vector<std::size_t> assign_to_paths(const NCurveMixture& fitted, const IndexGrid& grid,
                                         std::span<const Matrix> paths);

/// Mean curve of a component on the grid (d x n).
Matrix mean_path(const NCurve& curve, const IndexGrid& grid);

}  // namespace ncurve
