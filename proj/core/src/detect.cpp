#include "icsatk/detect.hpp"

#include "icsatk/errors.hpp"
#include "icsatk/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace icsatk::detect {
namespace {

constexpr int kFormatVersion = 1;
constexpr std::uint64_t kDataStream = 0x64617461;
constexpr std::uint64_t kSplitStream = 0x73706c74;

using Order = std::array<std::vector<std::uint32_t>, kFeatureCount>;

Order presort(const LabeledDataset& data) {
  Order order;
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    auto& o = order[f];
    o.resize(data.size());
    std::iota(o.begin(), o.end(), 0U);
    std::stable_sort(o.begin(), o.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return data.rows[a][f] < data.rows[b][f]; });
  }
  return order;
}

// Grows one tree over per-feature sorted index segments. Every node owns the
// same [begin, end) slice in all feature orders; a split partitions each
// slice stably.
class TreeBuilder {
public:
  TreeBuilder(const LabeledDataset& data, std::span<const double> weights, const Order& global,
              const TreeParams& params)
      : data_(data), weights_(weights), params_(params), rng_(params.seed) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      order_[f].reserve(data.size());
      for (const auto i : global[f]) {
        if (weights[i] > 0.0) order_[f].push_back(i);
      }
    }
    goes_left_.assign(data.size(), 0);
    scratch_.resize(order_[0].size());
  }

  Tree build() {
    double w0 = 0.0;
    double w1 = 0.0;
    for (const auto i : order_[0]) (data_.labels[i] == kAttack ? w1 : w0) += weights_[i];
    if (w0 <= 0.0 || w1 <= 0.0) throw TrainingError("training data holds a single class");
    grow(0, order_[0].size(), 0);
    return std::move(tree_);
  }

private:
  struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;
    double score = -1.0;
  };

  std::int32_t grow(std::size_t begin, std::size_t end, std::size_t depth) {
    double w0 = 0.0;
    double w1 = 0.0;
    for (std::size_t p = begin; p < end; ++p) {
      const auto i = order_[0][p];
      (data_.labels[i] == kAttack ? w1 : w0) += weights_[i];
    }
    const auto id = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.push_back({});
    tree_.nodes[id].label = w1 > w0 ? kAttack : kNormal;
    if (depth >= params_.max_depth || w0 <= 0.0 || w1 <= 0.0) return id;

    const Split split = best_split(begin, end, w0, w1);
    if (split.score < 0.0) return id;

    for (std::size_t p = begin; p < end; ++p) {
      const auto i = order_[split.feature][p];
      goes_left_[i] = data_.rows[i][split.feature] <= split.threshold ? 1 : 0;
    }
    std::size_t n_left = 0;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      auto& o = order_[f];
      std::size_t l = begin;
      std::size_t r = 0;
      for (std::size_t p = begin; p < end; ++p) {
        if (goes_left_[o[p]]) {
          o[l++] = o[p];
        } else {
          scratch_[r++] = o[p];
        }
      }
      std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(r), o.begin() + static_cast<std::ptrdiff_t>(l));
      n_left = l - begin;
    }

    tree_.nodes[id].feature = static_cast<std::int32_t>(split.feature);
    tree_.nodes[id].threshold = split.threshold;
    const auto left = grow(begin, begin + n_left, depth + 1);
    const auto right = grow(begin + n_left, end, depth + 1);
    tree_.nodes[id].left = left;
    tree_.nodes[id].right = right;
    return id;
  }

  Split best_split(std::size_t begin, std::size_t end, double w0, double w1) {
    std::array<std::size_t, kFeatureCount> features{};
    std::iota(features.begin(), features.end(), std::size_t{0});
    std::size_t examine = kFeatureCount;
    if (params_.max_features > 0 && params_.max_features < kFeatureCount) {
      for (std::size_t a = 0; a + 1 < kFeatureCount; ++a) {
        const auto b = a + static_cast<std::size_t>(rng_.below(kFeatureCount - a));
        std::swap(features[a], features[b]);
      }
      examine = params_.max_features;
    }
    Split best;
    // With a feature subset that cannot split, keep looking at the rest.
    for (std::size_t n = 0; n < kFeatureCount; ++n) {
      if (n >= examine && best.score >= 0.0) break;
      scan(features[n], begin, end, w0, w1, best);
    }
    return best;
  }

  void scan(std::size_t f, std::size_t begin, std::size_t end, double w0, double w1, Split& best) const {
    const auto& o = order_[f];
    double l0 = 0.0;
    double l1 = 0.0;
    for (std::size_t p = begin; p + 1 < end; ++p) {
      const auto i = o[p];
      (data_.labels[i] == kAttack ? l1 : l0) += weights_[i];
      const double x = data_.rows[i][f];
      const double x_next = data_.rows[o[p + 1]][f];
      if (!(x < x_next)) continue;
      const double wl = l0 + l1;
      const double r0 = w0 - l0;
      const double r1 = w1 - l1;
      const double wr = r0 + r1;
      if (wl <= 0.0 || wr <= 0.0) continue;
      // Maximizing this is minimizing the weighted Gini impurity of the children.
      const double score = (l0 * l0 + l1 * l1) / wl + (r0 * r0 + r1 * r1) / wr;
      if (score > best.score) {
        double mid = x + (x_next - x) / 2.0;
        if (!(mid < x_next)) mid = x;
        best = {f, mid, score};
      }
    }
  }

  const LabeledDataset& data_;
  std::span<const double> weights_;
  TreeParams params_;
  Rng rng_;
  Order order_;
  std::vector<std::uint8_t> goes_left_;
  std::vector<std::uint32_t> scratch_;
  Tree tree_;
};

std::uint8_t majority(const LabeledDataset& data) {
  const std::size_t attacks = data.attack_count();
  return attacks * 2 > data.size() ? kAttack : kNormal;
}

void check_width(std::span<const double> x) {
  if (x.size() != kFeatureCount) throw ContractError("detector input must hold 25 values");
}

} // namespace

std::size_t LabeledDataset::attack_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), kAttack));
}

void LabeledDataset::append(const Features& row, std::uint8_t label, std::uint32_t run) {
  rows.push_back(row);
  labels.push_back(label);
  run_ids.push_back(run);
}

LabeledDataset generate_training_data(const plant::PlantConfig& config, const attack::SignalRanges& ranges,
                                      const TrainingGrid& grid) {
  if (grid.stride == 0) throw ConfigError("training stride must be positive");
  if (!(grid.min_duration > 0.0) || grid.max_duration < grid.min_duration || grid.max_duration >= grid.run_hours) {
    throw ConfigError("attack durations must satisfy 0 < min <= max < run_hours");
  }
  LabeledDataset data;
  plant::SimulationOptions options;
  options.record_rates = false;
  const std::size_t total = grid.attack_runs + grid.normal_runs;
  for (std::size_t run = 0; run < total; ++run) {
    plant::PlantConfig cfg = config;
    cfg.horizon_hours = grid.run_hours;
    cfg.seed = derive_seed(config.seed, kDataStream, derive_seed(grid.seed, run));

    attack::AttackSchedule schedule({}, ranges);
    std::size_t k_start = 0;
    std::size_t k_end = 0;
    if (run < grid.attack_runs) {
      Rng rng(derive_seed(grid.seed, kDataStream, run));
      const std::size_t sensor = (run / 2) % kSensorCount;
      const auto kind = run % 2 == 0 ? attack::AttackKind::IntegrityMin : attack::AttackKind::IntegrityMax;
      const double duration = grid.min_duration + rng.uniform() * (grid.max_duration - grid.min_duration);
      const double earliest = std::min(0.5, grid.run_hours - duration);
      const double start = earliest + rng.uniform() * (grid.run_hours - duration - earliest);
      schedule.add({sensor, kind, start, start + duration, std::nullopt});
      k_start = attack::sample_index(start, cfg.samples_per_hour);
      k_end = attack::sample_index(start + duration, cfg.samples_per_hour);
      if (grid.stop_at_attack_end) cfg.horizon_hours = start + duration;
    }
    const auto trace = plant::simulate(schedule, cfg, options);
    for (std::size_t k = 0; k < trace.frames.size(); k += grid.stride) {
      Features row{};
      for (std::size_t i = 0; i < kFeatureCount; ++i) row[i] = trace.frames[k].signal(i);
      const std::uint8_t label = k >= k_start && k < k_end ? kAttack : kNormal;
      data.append(row, label, static_cast<std::uint32_t>(run));
    }
  }
  return data;
}

std::pair<LabeledDataset, LabeledDataset> split_by_run(const LabeledDataset& data, double test_fraction,
                                                       std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test fraction must lie in (0, 1)");
  std::vector<std::uint32_t> runs(data.run_ids.begin(), data.run_ids.end());
  std::sort(runs.begin(), runs.end());
  runs.erase(std::unique(runs.begin(), runs.end()), runs.end());
  Rng rng(derive_seed(seed, kSplitStream));
  std::vector<char> is_test(runs.empty() ? 0 : runs.back() + 1, 0);
  std::size_t n_test = 0;
  for (const auto r : runs) {
    is_test[r] = rng.bernoulli(test_fraction) ? 1 : 0;
    n_test += is_test[r];
  }
  if (runs.size() >= 2 && n_test == 0) is_test[runs.back()] = 1;
  if (runs.size() >= 2 && n_test == runs.size()) is_test[runs.front()] = 0;
  std::pair<LabeledDataset, LabeledDataset> out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto& side = is_test[data.run_ids[i]] ? out.second : out.first;
    side.append(data.rows[i], data.labels[i], data.run_ids[i]);
  }
  return out;
}

std::uint8_t Tree::predict(std::span<const double> x) const {
  std::size_t n = 0;
  while (nodes[n].feature >= 0) {
    n = static_cast<std::size_t>(x[static_cast<std::size_t>(nodes[n].feature)] <= nodes[n].threshold ? nodes[n].left
                                                                                                        : nodes[n].right);
  }
  return nodes[n].label;
}

std::size_t Tree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  std::size_t deepest = 0;
  while (!stack.empty()) {
    const auto [n, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (nodes[n].feature >= 0) {
      stack.emplace_back(static_cast<std::size_t>(nodes[n].left), d + 1);
      stack.emplace_back(static_cast<std::size_t>(nodes[n].right), d + 1);
    }
  }
  return deepest;
}

Tree fit_tree(const LabeledDataset& data, std::span<const double> weights, const TreeParams& params) {
  if (weights.size() != data.size()) throw ContractError("one weight per row required");
  const Order order = presort(data);
  return TreeBuilder(data, weights, order, params).build();
}

std::string_view to_string(DetectorKind kind) {
  switch (kind) {
  case DetectorKind::CART: return "cart";
  case DetectorKind::RandomForest: return "random-forest";
  case DetectorKind::AdaBoost: return "adaboost";
  }
  return "unknown";
}

DetectorKind detector_kind_from_string(std::string_view name) {
  for (const auto k : {DetectorKind::CART, DetectorKind::RandomForest, DetectorKind::AdaBoost}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown detector '" + std::string(name) + "'");
}

DetectorScores scores_from_confusion(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  DetectorScores s;
  s.tp = tp;
  s.fp = fp;
  s.fn = fn;
  s.tn = tn;
  s.fpr = fp + tn > 0 ? static_cast<double>(fp) / static_cast<double>(fp + tn) : 0.0;
  if (tp == 0) {
    s.f1 = 0.0;
    s.degenerate = fp == 0 && fn == 0;
    return s;
  }
  const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  s.f1 = 2.0 * precision * recall / (precision + recall);
  return s;
}

DetectorModel::DetectorModel(DetectorKind kind, std::vector<Tree> trees, std::vector<double> weights,
                             std::uint8_t fallback)
    : kind_(kind), trees_(std::move(trees)), weights_(std::move(weights)), fallback_(fallback) {}

std::uint8_t DetectorModel::classify(std::span<const double> x) const {
  check_width(x);
  if (trees_.empty()) return fallback_;
  switch (kind_) {
  case DetectorKind::CART: return trees_.front().predict(x);
  case DetectorKind::RandomForest: {
    std::size_t votes = 0;
    for (const auto& t : trees_) votes += t.predict(x);
    return votes * 2 > trees_.size() ? kAttack : kNormal;
  }
  case DetectorKind::AdaBoost: {
    double margin = 0.0;
    for (std::size_t m = 0; m < trees_.size(); ++m) margin += trees_[m].predict(x) == kAttack ? weights_[m] : -weights_[m];
    return margin > 0.0 ? kAttack : kNormal;
  }
  }
  return fallback_;
}

nlohmann::json DetectorModel::to_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : trees_) {
    nlohmann::json feature = nlohmann::json::array();
    nlohmann::json threshold = nlohmann::json::array();
    nlohmann::json left = nlohmann::json::array();
    nlohmann::json right = nlohmann::json::array();
    nlohmann::json label = nlohmann::json::array();
    for (const auto& n : t.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      label.push_back(n.label);
    }
    trees.push_back({{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"label", label}});
  }
  return {{"format", "icsatk-detector"},
          {"version", kFormatVersion},
          {"kind", to_string(kind_)},
          {"fallback", fallback_},
          {"learner_weights", weights_},
          {"trees", trees},
          {"report", {{"f1", report.f1}, {"fpr", report.fpr}, {"tp", report.tp}, {"fp", report.fp},
                      {"fn", report.fn}, {"tn", report.tn}, {"degenerate", report.degenerate}}}};
}

DetectorModel DetectorModel::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "icsatk-detector") throw IoError("not a detector model");
    if (j.at("version").get<int>() != kFormatVersion) throw IoError("unsupported detector model version");
    std::vector<Tree> trees;
    for (const auto& jt : j.at("trees")) {
      Tree t;
      const auto feature = jt.at("feature").get<std::vector<std::int32_t>>();
      const auto threshold = jt.at("threshold").get<std::vector<double>>();
      const auto left = jt.at("left").get<std::vector<std::int32_t>>();
      const auto right = jt.at("right").get<std::vector<std::int32_t>>();
      const auto label = jt.at("label").get<std::vector<std::uint8_t>>();
      const std::size_t n = feature.size();
      if (threshold.size() != n || left.size() != n || right.size() != n || label.size() != n || n == 0) {
        throw IoError("malformed tree arrays");
      }
      for (std::size_t i = 0; i < n; ++i) {
        const bool leaf = feature[i] < 0;
        if (!leaf && (feature[i] >= static_cast<std::int32_t>(kFeatureCount) || left[i] <= static_cast<std::int32_t>(i) ||
                      right[i] <= static_cast<std::int32_t>(i) || left[i] >= static_cast<std::int32_t>(n) ||
                      right[i] >= static_cast<std::int32_t>(n))) {
          throw IoError("malformed tree node");
        }
        t.nodes.push_back({feature[i], threshold[i], left[i], right[i], label[i]});
      }
      trees.push_back(std::move(t));
    }
    DetectorModel m(detector_kind_from_string(j.at("kind").get<std::string>()), std::move(trees),
                    j.at("learner_weights").get<std::vector<double>>(), j.at("fallback").get<std::uint8_t>());
    if (m.kind_ == DetectorKind::AdaBoost && m.weights_.size() != m.trees_.size()) {
      throw IoError("one learner weight per tree required");
    }
    if (j.contains("report")) {
      const auto& r = j.at("report");
      m.report.f1 = r.at("f1").get<double>();
      m.report.fpr = r.at("fpr").get<double>();
      m.report.tp = r.at("tp").get<std::size_t>();
      m.report.fp = r.at("fp").get<std::size_t>();
      m.report.fn = r.at("fn").get<std::size_t>();
      m.report.tn = r.at("tn").get<std::size_t>();
      m.report.degenerate = r.at("degenerate").get<bool>();
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("detector model: ") + e.what());
  } catch (const ConfigError& e) {
    throw IoError(std::string("detector model: ") + e.what());
  }
}

DetectorModel train_cart(const LabeledDataset& data, std::size_t max_depth) {
  const std::vector<double> weights(data.size(), 1.0);
  TreeParams params;
  params.max_depth = max_depth;
  std::vector<Tree> trees{fit_tree(data, weights, params)};
  return DetectorModel(DetectorKind::CART, std::move(trees), {}, majority(data));
}

DetectorModel train_random_forest(const LabeledDataset& data, const ForestParams& params) {
  if (params.n_trees == 0) throw ConfigError("forest needs at least one tree");
  if (data.attack_count() == 0 || data.attack_count() == data.size()) {
    throw TrainingError("training data holds a single class");
  }
  const Order order = presort(data);
  Rng rng(derive_seed(params.seed, 0x666f72));
  std::vector<Tree> trees;
  std::vector<double> weights(data.size());
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    if (params.bootstrap) {
      std::fill(weights.begin(), weights.end(), 0.0);
      for (std::size_t draw = 0; draw < data.size(); ++draw) weights[rng.below(data.size())] += 1.0;
    } else {
      std::fill(weights.begin(), weights.end(), 1.0);
    }
    TreeParams tp;
    tp.max_depth = params.max_depth;
    tp.max_features = params.max_features;
    tp.seed = derive_seed(params.seed, 0x74726565, t);
    try {
      trees.push_back(TreeBuilder(data, weights, order, tp).build());
    } catch (const TrainingError&) {
      // A bootstrap sample that drew one class only; predict that class.
      Tree leaf;
      leaf.nodes.push_back({});
      double attack = 0.0;
      for (std::size_t i = 0; i < data.size(); ++i) attack += data.labels[i] == kAttack ? weights[i] : 0.0;
      leaf.nodes[0].label = attack > 0.0 ? kAttack : kNormal;
      trees.push_back(std::move(leaf));
    }
  }
  return DetectorModel(DetectorKind::RandomForest, std::move(trees), {}, majority(data));
}

DetectorModel train_adaboost(const LabeledDataset& data, const BoostParams& params,
                             std::vector<std::vector<double>>* weight_log) {
  if (data.attack_count() == 0 || data.attack_count() == data.size()) {
    throw TrainingError("training data holds a single class");
  }
  const Order order = presort(data);
  const std::size_t n = data.size();
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  std::vector<Tree> learners;
  std::vector<double> alphas;
  TreeParams tp;
  tp.max_depth = params.learner_depth;
  for (std::size_t m = 0; m < params.n_estimators; ++m) {
    Tree tree = TreeBuilder(data, w, order, tp).build();
    double err = 0.0;
    std::vector<char> wrong(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      wrong[i] = tree.predict(data.rows[i]) != data.labels[i] ? 1 : 0;
      if (wrong[i]) err += w[i];
    }
    if (err >= 0.5) break;
    if (err <= 0.0) {
      learners.push_back(std::move(tree));
      alphas.push_back(1.0);
      break;
    }
    const double alpha = 0.5 * std::log((1.0 - err) / err);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] *= std::exp(wrong[i] ? alpha : -alpha);
      total += w[i];
    }
    for (auto& v : w) v /= total;
    if (weight_log) weight_log->push_back(w);
    learners.push_back(std::move(tree));
    alphas.push_back(alpha);
  }
  return DetectorModel(DetectorKind::AdaBoost, std::move(learners), std::move(alphas), majority(data));
}

DetectorScores evaluate_detector(const DetectorModel& model, const LabeledDataset& test) {
  if (test.size() == 0) throw ContractError("evaluation needs a non-empty test set");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const bool predicted = model.classify(test.rows[i]) == kAttack;
    const bool actual = test.labels[i] == kAttack;
    if (predicted && actual) ++tp;
    else if (predicted) ++fp;
    else if (actual) ++fn;
    else ++tn;
  }
  return scores_from_confusion(tp, fp, fn, tn);
}

std::vector<double> window_fractions(std::span<const std::uint8_t> labels, std::size_t window) {
  if (window == 0) throw ContractError("window must be positive");
  if (labels.empty()) return {};
  if (labels.size() < window) {
    const auto hits = std::count(labels.begin(), labels.end(), kAttack);
    return {static_cast<double>(hits) / static_cast<double>(labels.size())};
  }
  std::vector<double> out;
  out.reserve(labels.size() - window + 1);
  std::size_t hits = static_cast<std::size_t>(std::count(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(window), kAttack));
  out.push_back(static_cast<double>(hits) / static_cast<double>(window));
  for (std::size_t p = window; p < labels.size(); ++p) {
    hits += labels[p] == kAttack;
    hits -= labels[p - window] == kAttack;
    out.push_back(static_cast<double>(hits) / static_cast<double>(window));
  }
  return out;
}

WindowScanner::WindowScanner(std::size_t window) : window_(window), ring_(window, kNormal) {
  if (window == 0) throw ContractError("window must be positive");
}

void WindowScanner::push(std::uint8_t label) {
  const std::size_t slot = count_ % window_;
  if (count_ >= window_) in_window_ -= ring_[slot] == kAttack;
  ring_[slot] = label;
  in_window_ += label == kAttack;
  ++count_;
  if (count_ >= window_) {
    best_full_ = std::max(best_full_, in_window_);
    sum_full_ += static_cast<double>(in_window_);
  }
}

double WindowScanner::max_fraction() const {
  if (count_ == 0) return 0.0;
  if (count_ < window_) return static_cast<double>(in_window_) / static_cast<double>(count_);
  return static_cast<double>(best_full_) / static_cast<double>(window_);
}

double WindowScanner::mean_fraction() const {
  if (count_ == 0) return 0.0;
  if (count_ < window_) return static_cast<double>(in_window_) / static_cast<double>(count_);
  return sum_full_ / static_cast<double>(window_) / static_cast<double>(count_ - window_ + 1);
}

double percentile(std::vector<double> values, double pct) {
  if (values.empty()) throw ContractError("percentile of an empty sample");
  if (!(pct >= 0.0 && pct <= 100.0)) throw ConfigError("percentile must lie in [0, 100]");
  std::sort(values.begin(), values.end());
  const double pos = pct / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

AlarmPolicy calibrate_threshold(std::span<const std::vector<std::uint8_t>> normal_run_labels, std::size_t window,
                                double pct) {
  if (normal_run_labels.size() < 10) throw ContractError("calibration needs at least 10 normal runs");
  std::vector<double> maxima;
  for (const auto& labels : normal_run_labels) {
    const auto f = window_fractions(labels, window);
    maxima.push_back(f.empty() ? 0.0 : *std::max_element(f.begin(), f.end()));
  }
  AlarmPolicy policy;
  policy.window = window;
  policy.percentile = pct;
  policy.runs = normal_run_labels.size();
  policy.threshold = percentile(std::move(maxima), pct);
  return policy;
}

std::vector<double> normal_run_maxima(const DetectorModel& model, const plant::PlantConfig& config,
                                      std::size_t n_runs, std::size_t window) {
  std::vector<double> maxima;
  maxima.reserve(n_runs);
  for (std::size_t run = 0; run < n_runs; ++run) {
    plant::PlantConfig cfg = config;
    cfg.seed = plant::run_seed(config.seed, run);
    WindowScanner scanner(window);
    plant::SimulationOptions options;
    options.record_frames = false;
    options.record_rates = false;
    Features x{};
    options.on_frame = [&](const plant::SignalFrame& f) {
      std::copy(f.sensors.begin(), f.sensors.end(), x.begin());
      std::copy(f.actuators.begin(), f.actuators.end(), x.begin() + kSensorCount);
      scanner.push(model.classify(x));
    };
    plant::simulate(attack::AttackSchedule{}, cfg, options);
    maxima.push_back(scanner.max_fraction());
  }
  return maxima;
}

AlarmPolicy calibrate_detector(const DetectorModel& model, const plant::PlantConfig& config, std::size_t n_runs,
                               std::size_t window, double pct) {
  if (n_runs < 10) throw ContractError("calibration needs at least 10 normal runs");
  AlarmPolicy policy;
  policy.window = window;
  policy.percentile = pct;
  policy.runs = n_runs;
  policy.detector = model.kind();
  policy.threshold = percentile(normal_run_maxima(model, config, n_runs, window), pct);
  return policy;
}

double detection_probability(const plant::SimulationTrace& trace, const DetectorModel& model,
                             const AlarmPolicy& policy, WindowAggregate aggregate) {
  if (trace.frames.empty()) throw ContractError("detection probability of an empty trace");
  WindowScanner scanner(policy.window);
  Features x{};
  for (const auto& f : trace.frames) {
    std::copy(f.sensors.begin(), f.sensors.end(), x.begin());
    std::copy(f.actuators.begin(), f.actuators.end(), x.begin() + kSensorCount);
    scanner.push(model.classify(x));
  }
  return aggregate == WindowAggregate::Max ? scanner.max_fraction() : scanner.mean_fraction();
}

nlohmann::json calibration_report(const AlarmPolicy& p) {
  return {{"detector", to_string(p.detector)},
          {"window", p.window},
          {"percentile", p.percentile},
          {"threshold", p.threshold},
          {"runs", p.runs}};
}

AlarmPolicy policy_from_json(const nlohmann::json& j) {
  try {
    AlarmPolicy p;
    p.detector = detector_kind_from_string(j.at("detector").get<std::string>());
    p.window = j.at("window").get<std::size_t>();
    p.percentile = j.at("percentile").get<double>();
    p.threshold = j.at("threshold").get<double>();
    p.runs = j.at("runs").get<std::size_t>();
    if (p.window == 0) throw ConfigError("calibration window must be positive");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("calibration report: ") + e.what());
  }
}

} // namespace icsatk::detect
