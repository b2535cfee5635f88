#pragma once

#include "icsatk/pareto.hpp"

#include <span>
#include <vector>

namespace icsatk::metrics {

using emo::Point;

/// Measure of the region dominated by `front` and bounded by `reference`.
/// Exact sweep in 2-D, slicing in 3-D. Throws ContractError when some point
/// exceeds the reference in any coordinate, or on other dimensions.
double hypervolume(std::span<const Point> front, std::span<const double> reference);

/// Aggregated non-dominated set of several runs plus the boundary members
/// used as spread anchors (first and last in ascending first-objective
/// order, ties by the second objective).
struct ReferenceFront {
  std::vector<Point> points;
  Point first_extreme;
  Point last_extreme;
};

/// Non-dominated filter of the union of `runs` (duplicates collapsed).
ReferenceFront aggregate_reference_front(std::span<const std::vector<Point>> runs);

/// Diversity Delta of a front against the reference extremes. Throws
/// MetricError for fewer than 2 points. A zero denominator yields 0.
double spread(std::span<const Point> front, const ReferenceFront& reference);

/// sqrt(sum of nearest distances) / |reference|. Throws MetricError on an
/// empty front or reference.
double igd(std::span<const Point> front, const ReferenceFront& reference);

/// Conventional variant: mean nearest distance.
double igd_mean(std::span<const Point> front, const ReferenceFront& reference);

/// Worst value of every objective across `fronts`, shifted outward by
/// `shift` times that objective's observed range (by `shift` when the range
/// is zero).
Point reference_point(std::span<const std::vector<Point>> fronts, double shift = 0.01);

/// Element-wise series / best_known clamped to [0, 1]. Throws ContractError
/// when best_known <= 0.
std::vector<double> normalize_hypervolume(std::span<const double> series, double best_known);

/// Min-max rescaling of every point using per-objective bounds.
std::vector<Point> rescale(std::span<const Point> points, const Point& low, const Point& high);

struct KruskalWallisResult {
  double h = 0.0;
  double p = 1.0;
};

/// Rank test with mid-ranks and tie correction; p from the chi-square
/// approximation with k-1 degrees of freedom. Throws MetricError when a group
/// is empty, N < 3, or every value is identical.
KruskalWallisResult kruskal_wallis(std::span<const std::vector<double>> groups);

} // namespace icsatk::metrics
