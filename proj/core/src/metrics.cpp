#include "icsatk/metrics.hpp"

#include "icsatk/errors.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace icsatk::metrics {
namespace {

double distance(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

bool first_objective_order(const Point& a, const Point& b) {
  if (a[0] != b[0]) return a[0] < b[0];
  return a.size() > 1 && a[1] < b[1];
}

// 2-D sweep over points sorted by ascending x.
double sweep_2d(std::vector<std::pair<double, double>> pts, double rx, double ry) {
  std::sort(pts.begin(), pts.end());
  double volume = 0.0;
  double ceiling = ry;
  for (const auto& [x, y] : pts) {
    if (y < ceiling) {
      volume += (rx - x) * (ceiling - y);
      ceiling = y;
    }
  }
  return volume;
}

double nearest(const Point& p, std::span<const Point> set) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& q : set) best = std::min(best, distance(p, q));
  return best;
}

} // namespace

double hypervolume(std::span<const Point> front, std::span<const double> reference) {
  const std::size_t dims = reference.size();
  if (dims != 2 && dims != 3) throw ContractError("hypervolume supports 2 or 3 objectives");
  for (const auto& p : front) {
    if (p.size() != dims) throw ContractError("hypervolume point and reference differ in length");
    for (std::size_t i = 0; i < dims; ++i) {
      if (!(p[i] <= reference[i])) throw ContractError("reference point does not bound the front");
    }
  }
  if (front.empty()) return 0.0;

  if (dims == 2) {
    std::vector<std::pair<double, double>> pts;
    pts.reserve(front.size());
    for (const auto& p : front) pts.emplace_back(p[0], p[1]);
    return sweep_2d(std::move(pts), reference[0], reference[1]);
  }

  // Slice along z: between consecutive z levels the dominated cross-section
  // is the 2-D volume of every point at or below the lower level.
  std::vector<const Point*> by_z;
  for (const auto& p : front) by_z.push_back(&p);
  std::stable_sort(by_z.begin(), by_z.end(), [](const Point* a, const Point* b) { return (*a)[2] < (*b)[2]; });
  double volume = 0.0;
  std::vector<std::pair<double, double>> slice;
  for (std::size_t i = 0; i < by_z.size(); ++i) {
    slice.emplace_back((*by_z[i])[0], (*by_z[i])[1]);
    const double z_next = i + 1 < by_z.size() ? (*by_z[i + 1])[2] : reference[2];
    const double depth = z_next - (*by_z[i])[2];
    if (depth > 0.0) volume += depth * sweep_2d(slice, reference[0], reference[1]);
  }
  return volume;
}

ReferenceFront aggregate_reference_front(std::span<const std::vector<Point>> runs) {
  std::vector<Point> all;
  for (const auto& run : runs) all.insert(all.end(), run.begin(), run.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  ReferenceFront ref;
  for (const std::size_t i : emo::non_dominated_indices(all)) ref.points.push_back(all[i]);
  std::stable_sort(ref.points.begin(), ref.points.end(), first_objective_order);
  if (!ref.points.empty()) {
    ref.first_extreme = ref.points.front();
    ref.last_extreme = ref.points.back();
  }
  return ref;
}

double spread(std::span<const Point> front, const ReferenceFront& reference) {
  if (front.size() < 2) throw MetricError("spread needs at least two points");
  if (reference.first_extreme.empty() || reference.last_extreme.empty()) {
    throw MetricError("spread needs reference extremes");
  }
  std::vector<Point> sorted(front.begin(), front.end());
  std::stable_sort(sorted.begin(), sorted.end(), first_objective_order);
  const std::size_t n = sorted.size();
  std::vector<double> gaps(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) gaps[i] = distance(sorted[i], sorted[i + 1]);
  const double mean = std::accumulate(gaps.begin(), gaps.end(), 0.0) / static_cast<double>(gaps.size());
  double deviation = 0.0;
  for (const double g : gaps) deviation += std::abs(g - mean);
  const double df = distance(reference.first_extreme, sorted.front());
  const double dl = distance(reference.last_extreme, sorted.back());
  const double denominator = df + dl + static_cast<double>(n - 1) * mean;
  if (denominator == 0.0) return 0.0;
  return (df + dl + deviation) / denominator;
}

double igd(std::span<const Point> front, const ReferenceFront& reference) {
  if (front.empty() || reference.points.empty()) throw MetricError("igd needs non-empty fronts");
  double total = 0.0;
  for (const auto& r : reference.points) total += nearest(r, front);
  return std::sqrt(total) / static_cast<double>(reference.points.size());
}

double igd_mean(std::span<const Point> front, const ReferenceFront& reference) {
  if (front.empty() || reference.points.empty()) throw MetricError("igd needs non-empty fronts");
  double total = 0.0;
  for (const auto& r : reference.points) total += nearest(r, front);
  return total / static_cast<double>(reference.points.size());
}

Point reference_point(std::span<const std::vector<Point>> fronts, double shift) {
  Point worst;
  Point best;
  for (const auto& front : fronts) {
    for (const auto& p : front) {
      if (worst.empty()) {
        worst = best = p;
        continue;
      }
      if (p.size() != worst.size()) throw ContractError("fronts differ in dimension");
      for (std::size_t i = 0; i < p.size(); ++i) {
        worst[i] = std::max(worst[i], p[i]);
        best[i] = std::min(best[i], p[i]);
      }
    }
  }
  if (worst.empty()) throw MetricError("reference point of empty fronts");
  for (std::size_t i = 0; i < worst.size(); ++i) {
    const double range = worst[i] - best[i];
    worst[i] += range > 0.0 ? shift * range : shift;
  }
  return worst;
}

std::vector<double> normalize_hypervolume(std::span<const double> series, double best_known) {
  if (!(best_known > 0.0)) throw ContractError("best-known hypervolume must be positive");
  std::vector<double> out;
  out.reserve(series.size());
  for (const double v : series) out.push_back(std::clamp(v / best_known, 0.0, 1.0));
  return out;
}

std::vector<Point> rescale(std::span<const Point> points, const Point& low, const Point& high) {
  std::vector<Point> out(points.begin(), points.end());
  for (auto& p : out) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double range = high[i] - low[i];
      p[i] = range > 0.0 ? (p[i] - low[i]) / range : 0.0;
    }
  }
  return out;
}

KruskalWallisResult kruskal_wallis(std::span<const std::vector<double>> groups) {
  if (groups.size() < 2) throw MetricError("kruskal-wallis needs at least two groups");
  std::vector<std::pair<double, std::size_t>> values;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) throw MetricError("kruskal-wallis group is empty");
    for (const double v : groups[g]) values.emplace_back(v, g);
  }
  const std::size_t n = values.size();
  if (n < 3) throw MetricError("kruskal-wallis needs at least three observations");
  std::sort(values.begin(), values.end());
  if (values.front().first == values.back().first) throw MetricError("kruskal-wallis on identical data");

  std::vector<double> rank_sum(groups.size(), 0.0);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && values[j].first == values[i].first) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) rank_sum[values[t].second] += mid_rank;
    const auto ties = static_cast<double>(j - i);
    tie_term += ties * ties * ties - ties;
    i = j;
  }
  const auto nd = static_cast<double>(n);
  double h = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    h += rank_sum[g] * rank_sum[g] / static_cast<double>(groups[g].size());
  }
  h = 12.0 / (nd * (nd + 1.0)) * h - 3.0 * (nd + 1.0);
  h /= 1.0 - tie_term / (nd * nd * nd - nd);
  h = std::max(h, 0.0);
  const double dof = static_cast<double>(groups.size() - 1);
  return {h, boost::math::gamma_q(dof / 2.0, h / 2.0)};
}

} // namespace icsatk::metrics
