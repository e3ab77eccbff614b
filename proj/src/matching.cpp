#include "ncurve/matching.hpp"

#include <limits>

#include "ncurve/errors.hpp"

namespace ncurve {

namespace {

void search(const Matrix& cost, std::size_t row, std::vector<bool>& used,
            std::vector<std::size_t>& current, double acc, double& best,
            std::vector<std::size_t>& best_perm) {
  if (acc >= best) {
    return;
  }
  if (row == static_cast<std::size_t>(cost.rows())) {
    best = acc;
    best_perm = current;
    return;
  }
  for (std::size_t c = 0; c < used.size(); ++c) {
    if (used[c]) {
      continue;
    }
    used[c] = true;
    current[row] = c;
    search(cost, row + 1, used, current,
           acc + cost(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(c)), best,
           best_perm);
    used[c] = false;
  }
}

}  // namespace

std::vector<std::size_t> match_components(const NCurveMixture& fitted,
                                          const NCurveMixture& reference) {
  if (fitted.size() < reference.size()) {
    throw ShapeMismatch("fewer fitted components than reference components");
  }
  if (fitted.size() > 9) {
    throw InvalidConfig("exhaustive matching limited to K <= 9");
  }
  if (fitted.degree() != reference.degree() || fitted.dim() != reference.dim()) {
    throw ShapeMismatch("matching needs equal degree and dimension");
  }
  Matrix cost(static_cast<Eigen::Index>(reference.size()), static_cast<Eigen::Index>(fitted.size()));
  for (std::size_t r = 0; r < reference.size(); ++r) {
    const Matrix ref = reference.component(r).mean_polygon();
    for (std::size_t f = 0; f < fitted.size(); ++f) {
      cost(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f)) =
          (fitted.component(f).mean_polygon() - ref).norm();
    }
  }
  std::vector<bool> used(fitted.size(), false);
  std::vector<std::size_t> current(reference.size());
  std::vector<std::size_t> best_perm(reference.size());
  double best = std::numeric_limits<double>::infinity();
  search(cost, 0, used, current, 0.0, best, best_perm);
  return best_perm;
}

Matrix mean_path(const NCurve& curve, const IndexGrid& grid) {
  Matrix path(curve.dim(), static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    path.col(static_cast<Eigen::Index>(i)) = curve_at(curve, grid[i]).mean();
  }
  return path;
}

std::vector<std::size_t> assign_to_paths(const NCurveMixture& fitted, const IndexGrid& grid,
                                         std::span<const Matrix> paths) {
  if (paths.empty()) {
    throw EmptyInput("no reference paths");
  }
  std::vector<std::size_t> out;
  out.reserve(fitted.size());
  for (const auto& c : fitted.components()) {
    const Matrix path = mean_path(c, grid);
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < paths.size(); ++r) {
      if (paths[r].rows() != path.rows() || paths[r].cols() != path.cols()) {
        throw ShapeMismatch("reference path shape differs from the grid");
      }
      const double dist = (paths[r] - path).norm();
      if (dist < best_d) {
        best_d = dist;
        best = r;
      }
    }
    out.push_back(best);
  }
  return out;
}

}  // namespace ncurve
