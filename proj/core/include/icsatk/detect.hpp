#pragma once

#include "icsatk/attack.hpp"
#include "icsatk/plant.hpp"

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace icsatk::detect {

inline constexpr std::size_t kFeatureCount = kSignalCount;
inline constexpr std::uint8_t kNormal = 0;
inline constexpr std::uint8_t kAttack = 1;

using Features = std::array<double, kFeatureCount>;

/// One row per retained sample: the frame's 25 signal values, its label and
/// the run it came from.
struct LabeledDataset {
  std::vector<Features> rows;
  std::vector<std::uint8_t> labels;
  std::vector<std::uint32_t> run_ids;

  [[nodiscard]] std::size_t size() const { return rows.size(); }
  [[nodiscard]] std::size_t attack_count() const;
  void append(const Features& row, std::uint8_t label, std::uint32_t run);
};

/// How the labelled corpus is generated.
struct TrainingGrid {
  /// Integrity runs, cycling over (sensor, min/max).
  std::size_t attack_runs = 160;
  std::size_t normal_runs = 64;
  double run_hours = 24.0;
  double min_duration = 1.0 / 3.0;
  double max_duration = 3.0;
  /// Keep every stride-th sample.
  std::size_t stride = 20;
  /// End attack runs when the attack window closes, leaving the post-attack
  /// recovery transient out of the "normal" class.
  bool stop_at_attack_end = true;
  std::uint64_t seed = 1;
};

/// Runs integrity-min/max attacks on sensor channels and attack-free runs;
/// labels samples inside an attack window as attack. Run ids are 0-based in
/// generation order (attack runs first).
LabeledDataset generate_training_data(const plant::PlantConfig& config, const attack::SignalRanges& ranges,
                                      const TrainingGrid& grid);

/// Assigns whole runs to the test side with probability `test_fraction`
/// (at least one run per side when possible).
std::pair<LabeledDataset, LabeledDataset> split_by_run(const LabeledDataset& data, double test_fraction,
                                                       std::uint64_t seed);

/// Binary decision tree; internal nodes send x[feature] <= threshold left.
struct Tree {
  struct Node {
    std::int32_t feature = -1;
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint8_t label = kNormal;
  };
  std::vector<Node> nodes;

  [[nodiscard]] std::uint8_t predict(std::span<const double> x) const;
  [[nodiscard]] std::size_t depth() const;
};

struct TreeParams {
  std::size_t max_depth = 50;
  /// Features examined per split; 0 examines all.
  std::size_t max_features = 0;
  std::uint64_t seed = 0;
};

/// Weighted Gini tree. Rows with zero weight are ignored. Throws
/// TrainingError when the weighted rows hold a single class.
Tree fit_tree(const LabeledDataset& data, std::span<const double> weights, const TreeParams& params);

enum class DetectorKind : std::uint8_t { CART, RandomForest, AdaBoost };

std::string_view to_string(DetectorKind kind);
DetectorKind detector_kind_from_string(std::string_view name);

struct DetectorScores {
  double f1 = 0.0;
  double fpr = 0.0;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  /// No positives predicted or present.
  bool degenerate = false;
};

DetectorScores scores_from_confusion(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);

class DetectorModel {
public:
  DetectorModel() = default;
  DetectorModel(DetectorKind kind, std::vector<Tree> trees, std::vector<double> weights, std::uint8_t fallback);

  /// Throws ContractError unless x holds 25 values.
  [[nodiscard]] std::uint8_t classify(std::span<const double> x) const;
  [[nodiscard]] DetectorKind kind() const { return kind_; }
  [[nodiscard]] const std::vector<Tree>& trees() const { return trees_; }
  [[nodiscard]] const std::vector<double>& learner_weights() const { return weights_; }

  DetectorScores report{};

  [[nodiscard]] nlohmann::json to_json() const;
  /// Throws IoError on an unknown format version or malformed content.
  static DetectorModel from_json(const nlohmann::json& j);

private:
  DetectorKind kind_ = DetectorKind::CART;
  std::vector<Tree> trees_;
  std::vector<double> weights_;
  std::uint8_t fallback_ = kNormal;
};

DetectorModel train_cart(const LabeledDataset& data, std::size_t max_depth = 50);

struct ForestParams {
  std::size_t n_trees = 25;
  std::size_t max_features = 5;
  std::size_t max_depth = 50;
  bool bootstrap = true;
  std::uint64_t seed = 1;
};
DetectorModel train_random_forest(const LabeledDataset& data, const ForestParams& params = {});

struct BoostParams {
  std::size_t n_estimators = 100;
  std::size_t learner_depth = 3;
};
/// Discrete AdaBoost. Stops at a learner with weighted error >= 0.5 (not
/// kept) or = 0 (kept). Records each round's normalized sample weights when
/// `weight_log` is given.
DetectorModel train_adaboost(const LabeledDataset& data, const BoostParams& params = {},
                             std::vector<std::vector<double>>* weight_log = nullptr);

/// Attack is the positive class.
DetectorScores evaluate_detector(const DetectorModel& model, const LabeledDataset& test);

/// Fraction of attack labels in every window position (stride 1). A sequence
/// shorter than the window is one window. Empty input gives no positions.
std::vector<double> window_fractions(std::span<const std::uint8_t> labels, std::size_t window = 100);

/// Streaming form of window_fractions.
class WindowScanner {
public:
  explicit WindowScanner(std::size_t window = 100);
  void push(std::uint8_t label);
  /// Largest window fraction so far; a short stream counts as one window.
  [[nodiscard]] double max_fraction() const;
  [[nodiscard]] double mean_fraction() const;
  [[nodiscard]] std::size_t count() const { return count_; }

private:
  std::size_t window_;
  std::vector<std::uint8_t> ring_;
  std::size_t count_ = 0;
  std::size_t in_window_ = 0;
  std::size_t best_full_ = 0;
  double sum_full_ = 0.0;
};

struct AlarmPolicy {
  std::size_t window = 100;
  double threshold = 0.0;
  double percentile = 99.0;
  std::size_t runs = 0;
  DetectorKind detector = DetectorKind::CART;

  /// Strict comparison.
  [[nodiscard]] bool alarms(double fraction) const { return fraction > threshold; }
};

/// Linear-interpolation percentile (0-100) of `values`.
double percentile(std::vector<double> values, double pct);

/// Threshold = percentile of the per-run maximum window fraction. Throws
/// ContractError with fewer than 10 runs.
AlarmPolicy calibrate_threshold(std::span<const std::vector<std::uint8_t>> normal_run_labels, std::size_t window = 100,
                                double pct = 99.0);

/// Classifies every sample of `n_runs` attack-free runs (seeds
/// run_seed(config.seed, i)) and calibrates on them.
AlarmPolicy calibrate_detector(const DetectorModel& model, const plant::PlantConfig& config, std::size_t n_runs,
                               std::size_t window = 100, double pct = 99.0);

/// Per-run maximum window fraction of `n_runs` attack-free runs.
std::vector<double> normal_run_maxima(const DetectorModel& model, const plant::PlantConfig& config,
                                      std::size_t n_runs, std::size_t window = 100);

enum class WindowAggregate : std::uint8_t { Max, Mean };

/// Maximum (or mean) window fraction of the trace's classified frames.
/// Throws ContractError on an empty trace.
double detection_probability(const plant::SimulationTrace& trace, const DetectorModel& model,
                             const AlarmPolicy& policy, WindowAggregate aggregate = WindowAggregate::Max);

/// `{detector, window, percentile, threshold, runs}`
nlohmann::json calibration_report(const AlarmPolicy& policy);
AlarmPolicy policy_from_json(const nlohmann::json& j);

} // namespace icsatk::detect
