#pragma once

#include "icsatk/rng.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace icsatk::emo {

/// Objective vector in minimization orientation.
using Point = std::vector<double>;

/// a <= b everywhere and a < b somewhere. Throws ContractError on a length
/// mismatch.
bool dominates(std::span<const double> a, std::span<const double> b);

/// Fronts of increasing rank; each front lists indices into `points` in
/// ascending order.
std::vector<std::vector<std::size_t>> non_dominated_sort(std::span<const Point> points);

/// Indices of the members of `points` no other member dominates.
std::vector<std::size_t> non_dominated_indices(std::span<const Point> points);

/// Crowding distance of each member of `front` (indices into `points`),
/// returned in `front` order. Boundary members of every objective get +inf;
/// an objective with zero range adds nothing to interior members.
std::vector<double> crowding_distance(std::span<const Point> points, std::span<const std::size_t> front);

/// Front rank (0 = non-dominated) and crowding distance of every point.
struct RankCrowding {
  std::vector<std::size_t> rank;
  std::vector<double> crowding;
};
RankCrowding rank_and_crowding(std::span<const Point> points);

/// Indices of the `mu` survivors by front rank, splitting the last admitted
/// front by descending crowding distance (stable on input order).
std::vector<std::size_t> select_nsga2(std::span<const Point> points, std::size_t mu);

/// Strength-Pareto fitness: raw fitness (sum of dominators' strengths) plus
/// density 1/(sigma_k + 2), k = floor(sqrt(N)). Non-dominated members score < 1.
std::vector<double> spea2_fitness(std::span<const Point> points);

/// SPEA2 environmental selection of `mu` indices: the non-dominated members,
/// truncated by nearest-neighbour distance or filled by ascending fitness.
std::vector<std::size_t> select_spea2(std::span<const Point> points, std::size_t mu);

/// Best of `k` uniform draws (with replacement) from [0, n), where
/// better(a, b) says a beats b. Ties keep the earlier draw.
template <typename Better>
std::size_t tournament_select(std::size_t n, std::size_t k, Rng& rng, Better better) {
  std::size_t best = static_cast<std::size_t>(rng.below(n));
  for (std::size_t draw = 1; draw < k; ++draw) {
    const auto candidate = static_cast<std::size_t>(rng.below(n));
    if (better(candidate, best)) best = candidate;
  }
  return best;
}

} // namespace icsatk::emo
