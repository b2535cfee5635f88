#include "icsatk/pareto.hpp"

#include "icsatk/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace icsatk::emo {
namespace {

double distance(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

void check_dims(std::span<const Point> points) {
  for (const auto& p : points) {
    if (p.size() != points.front().size()) throw ContractError("objective vectors differ in length");
  }
}

} // namespace

bool dominates(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractError("dominance between vectors of different length");
  bool strictly = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) return false;
    if (a[i] < b[i]) strictly = true;
  }
  return strictly;
}

std::vector<std::vector<std::size_t>> non_dominated_sort(std::span<const Point> points) {
  const std::size_t n = points.size();
  if (n == 0) return {};
  check_dims(points);
  std::vector<std::vector<std::size_t>> dominated_by_me(n);
  std::vector<std::size_t> dominator_count(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (dominates(points[i], points[j])) {
        dominated_by_me[i].push_back(j);
        ++dominator_count[j];
      } else if (dominates(points[j], points[i])) {
        dominated_by_me[j].push_back(i);
        ++dominator_count[i];
      }
    }
  }
  std::vector<std::vector<std::size_t>> fronts;
  std::vector<std::size_t> current;
  for (std::size_t i = 0; i < n; ++i) {
    if (dominator_count[i] == 0) current.push_back(i);
  }
  while (!current.empty()) {
    std::vector<std::size_t> next;
    for (const std::size_t i : current) {
      for (const std::size_t j : dominated_by_me[i]) {
        if (--dominator_count[j] == 0) next.push_back(j);
      }
    }
    std::sort(next.begin(), next.end());
    fronts.push_back(std::move(current));
    current = std::move(next);
  }
  return fronts;
}

std::vector<std::size_t> non_dominated_indices(std::span<const Point> points) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < points.size() && !dominated; ++j) dominated = j != i && dominates(points[j], points[i]);
    if (!dominated) out.push_back(i);
  }
  return out;
}

std::vector<double> crowding_distance(std::span<const Point> points, std::span<const std::size_t> front) {
  const std::size_t m = front.size();
  std::vector<double> dist(m, 0.0);
  if (m == 0) return dist;
  const std::size_t dims = points[front[0]].size();
  std::vector<std::size_t> order(m);
  for (std::size_t obj = 0; obj < dims; ++obj) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return points[front[a]][obj] < points[front[b]][obj]; });
    const double lo = points[front[order.front()]][obj];
    const double hi = points[front[order.back()]][obj];
    dist[order.front()] = std::numeric_limits<double>::infinity();
    dist[order.back()] = std::numeric_limits<double>::infinity();
    if (hi - lo <= 0.0) continue;
    for (std::size_t r = 1; r + 1 < m; ++r) {
      dist[order[r]] += (points[front[order[r + 1]]][obj] - points[front[order[r - 1]]][obj]) / (hi - lo);
    }
  }
  return dist;
}

RankCrowding rank_and_crowding(std::span<const Point> points) {
  RankCrowding rc;
  rc.rank.assign(points.size(), 0);
  rc.crowding.assign(points.size(), 0.0);
  const auto fronts = non_dominated_sort(points);
  for (std::size_t r = 0; r < fronts.size(); ++r) {
    const auto d = crowding_distance(points, fronts[r]);
    for (std::size_t i = 0; i < fronts[r].size(); ++i) {
      rc.rank[fronts[r][i]] = r;
      rc.crowding[fronts[r][i]] = d[i];
    }
  }
  return rc;
}

std::vector<std::size_t> select_nsga2(std::span<const Point> points, std::size_t mu) {
  if (mu > points.size()) throw ContractError("select_nsga2 needs at least mu candidates");
  std::vector<std::size_t> chosen;
  chosen.reserve(mu);
  for (const auto& front : non_dominated_sort(points)) {
    if (chosen.size() == mu) break;
    if (chosen.size() + front.size() <= mu) {
      chosen.insert(chosen.end(), front.begin(), front.end());
      continue;
    }
    const auto dist = crowding_distance(points, front);
    std::vector<std::size_t> order(front.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] > dist[b]; });
    for (std::size_t r = 0; chosen.size() < mu; ++r) chosen.push_back(front[order[r]]);
  }
  return chosen;
}

namespace {

std::vector<std::vector<double>> distance_matrix(std::span<const Point> points) {
  const std::size_t n = points.size();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) d[i][j] = d[j][i] = distance(points[i], points[j]);
  }
  return d;
}

} // namespace

std::vector<double> spea2_fitness(std::span<const Point> points) {
  const std::size_t n = points.size();
  if (n == 0) return {};
  check_dims(points);
  std::vector<std::size_t> strength(n, 0);
  std::vector<std::vector<char>> dom(n, std::vector<char>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && dominates(points[i], points[j])) {
        dom[i][j] = 1;
        ++strength[i];
      }
    }
  }
  const auto d = distance_matrix(points);
  const auto k = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
  std::vector<double> fitness(n, 0.0);
  std::vector<double> others;
  for (std::size_t i = 0; i < n; ++i) {
    double raw = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (dom[j][i]) raw += static_cast<double>(strength[j]);
    }
    others.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) others.push_back(d[i][j]);
    }
    double sigma = 0.0;
    if (!others.empty()) {
      const std::size_t kth = std::min(k, others.size()) - 1;
      std::nth_element(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(kth), others.end());
      sigma = others[kth];
    }
    fitness[i] = raw + 1.0 / (sigma + 2.0);
  }
  return fitness;
}

std::vector<std::size_t> select_spea2(std::span<const Point> points, std::size_t mu) {
  if (mu > points.size()) throw ContractError("select_spea2 needs at least mu candidates");
  const auto fitness = spea2_fitness(points);
  std::vector<std::size_t> chosen;
  std::vector<std::size_t> dominated;
  for (std::size_t i = 0; i < points.size(); ++i) (fitness[i] < 1.0 ? chosen : dominated).push_back(i);

  if (chosen.size() < mu) {
    std::stable_sort(dominated.begin(), dominated.end(),
                     [&](std::size_t a, std::size_t b) { return fitness[a] < fitness[b]; });
    for (std::size_t r = 0; chosen.size() < mu; ++r) chosen.push_back(dominated[r]);
    return chosen;
  }

  if (chosen.size() > mu) {
    const auto d = distance_matrix(points);
    // Each remaining member's distances to the others, ascending. The member
    // with the lexicographically smallest profile is removed each round.
    std::vector<std::vector<double>> profile(chosen.size());
    for (std::size_t a = 0; a < chosen.size(); ++a) {
      for (std::size_t b = 0; b < chosen.size(); ++b) {
        if (b != a) profile[a].push_back(d[chosen[a]][chosen[b]]);
      }
      std::sort(profile[a].begin(), profile[a].end());
    }
    while (chosen.size() > mu) {
      std::size_t victim = 0;
      for (std::size_t a = 1; a < chosen.size(); ++a) {
        if (profile[a] < profile[victim]) victim = a;
      }
      const std::size_t gone = chosen[victim];
      chosen.erase(chosen.begin() + static_cast<std::ptrdiff_t>(victim));
      profile.erase(profile.begin() + static_cast<std::ptrdiff_t>(victim));
      for (std::size_t a = 0; a < chosen.size(); ++a) {
        auto& p = profile[a];
        p.erase(std::lower_bound(p.begin(), p.end(), d[chosen[a]][gone]));
      }
    }
  }
  return chosen;
}

} // namespace icsatk::emo
