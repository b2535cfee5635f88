#include "icsatk/detect.hpp"
#include "icsatk/errors.hpp"
#include "icsatk/rng.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>

namespace icsatk::detect {
namespace {

constexpr std::size_t kUnmonitored = static_cast<std::size_t>(plant::Sensor::SeparatorTemperature);

Features row_with(double first) {
  Features f{};
  f[0] = first;
  return f;
}

/// Separable on feature 0: values below 5 are normal.
LabeledDataset separable_1d() {
  LabeledDataset d;
  for (int i = 0; i < 10; ++i) d.append(row_with(i), i < 5 ? kNormal : kAttack, static_cast<std::uint32_t>(i));
  return d;
}

/// Tree sending feature `f` <= t to normal and the rest to attack.
Tree stump(std::int32_t feature, double threshold) {
  Tree t;
  t.nodes.push_back({feature, threshold, 1, 2, kNormal});
  t.nodes.push_back({-1, 0.0, -1, -1, kNormal});
  t.nodes.push_back({-1, 0.0, -1, -1, kAttack});
  return t;
}

DetectorModel constant_model(std::uint8_t label) {
  Tree leaf;
  leaf.nodes.push_back({-1, 0.0, -1, -1, label});
  return DetectorModel(DetectorKind::CART, {leaf}, {1.0}, label);
}

TEST(Dataset, NoAttackRunsGiveAllNormalRows) {
  plant::PlantConfig cfg;
  cfg.samples_per_hour = 50;
  TrainingGrid grid;
  grid.attack_runs = 0;
  grid.normal_runs = 3;
  grid.run_hours = 4.0;
  const auto d = generate_training_data(cfg, {}, grid);
  EXPECT_GT(d.size(), 0u);
  EXPECT_EQ(d.attack_count(), 0u);
  EXPECT_EQ(d.labels.size(), d.size());
  EXPECT_EQ(d.run_ids.size(), d.size());
}

TEST(Dataset, OneAttackLabelsItsWindow) {
  plant::PlantConfig cfg;
  cfg.samples_per_hour = 100;
  const auto ranges = plant::record_signal_ranges(2, cfg);
  TrainingGrid grid;
  grid.attack_runs = 1;
  grid.normal_runs = 0;
  grid.run_hours = 6.0;
  grid.min_duration = grid.max_duration = 1.5;
  grid.stride = 1;
  const auto d = generate_training_data(cfg, ranges, grid);
  EXPECT_NEAR(static_cast<double>(d.attack_count()), 1.5 * 100, 1.0);
}

TEST(Dataset, RejectsBadGrid) {
  TrainingGrid grid;
  grid.stride = 0;
  EXPECT_THROW(generate_training_data({}, {}, grid), ConfigError);
  grid = {};
  grid.max_duration = grid.run_hours;
  EXPECT_THROW(generate_training_data({}, {}, grid), ConfigError);
}

TEST(Split, KeepsRunsWhole) {
  LabeledDataset d;
  for (std::uint32_t run = 0; run < 20; ++run) {
    for (int i = 0; i < 5; ++i) d.append(row_with(run), run % 2 ? kAttack : kNormal, run);
  }
  const auto [train, test] = split_by_run(d, 0.3, 4);
  EXPECT_EQ(train.size() + test.size(), d.size());
  EXPECT_GT(train.size(), 0u);
  EXPECT_GT(test.size(), 0u);
  for (auto r : train.run_ids) {
    EXPECT_EQ(std::count(test.run_ids.begin(), test.run_ids.end(), r), 0);
  }
  EXPECT_THROW(split_by_run(d, 1.0, 4), ConfigError);
}

TEST(Cart, SeparableDataNeedsOneSplit) {
  const auto m = train_cart(separable_1d());
  ASSERT_EQ(m.trees().size(), 1u);
  EXPECT_EQ(m.trees()[0].depth(), 1u);
  const auto s = evaluate_detector(m, separable_1d());
  EXPECT_EQ(s.f1, 1.0);
  EXPECT_EQ(s.fpr, 0.0);
}

TEST(Cart, ContradictoryRowsPredictMajority) {
  LabeledDataset d;
  for (int i = 0; i < 3; ++i) d.append(row_with(1.0), kAttack, 0);
  d.append(row_with(1.0), kNormal, 0);
  d.append(row_with(9.0), kNormal, 1);
  d.append(row_with(9.0), kNormal, 1);
  const auto m = train_cart(d);
  EXPECT_EQ(m.classify(row_with(1.0)), kAttack);
  EXPECT_EQ(m.classify(row_with(9.0)), kNormal);
}

TEST(Cart, MemorizesConsistentTrainingSet) {
  Rng rng(1);
  LabeledDataset d;
  for (std::uint32_t i = 0; i < 300; ++i) {
    Features f{};
    for (auto& v : f) v = rng.uniform();
    d.append(f, rng.bernoulli(0.3) ? kAttack : kNormal, i);
  }
  const auto m = train_cart(d);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(m.classify(d.rows[i]), d.labels[i]);
}

TEST(Cart, SingleClassIsATrainingError) {
  LabeledDataset d;
  d.append(row_with(1.0), kNormal, 0);
  d.append(row_with(2.0), kNormal, 0);
  EXPECT_THROW(train_cart(d), TrainingError);
  EXPECT_THROW(train_random_forest(d), TrainingError);
  EXPECT_THROW(train_adaboost(d), TrainingError);
}

TEST(Forest, SingleTreeWithoutBootstrapIsSeededAndReproducible) {
  ForestParams p;
  p.n_trees = 1;
  p.bootstrap = false;
  p.max_features = 25;
  const auto a = train_random_forest(separable_1d(), p);
  const auto b = train_random_forest(separable_1d(), p);
  EXPECT_EQ(a.to_json(), b.to_json());
  EXPECT_EQ(evaluate_detector(a, separable_1d()).f1, 1.0);
  p.n_trees = 0;
  EXPECT_THROW(train_random_forest(separable_1d(), p), ConfigError);
}

TEST(Forest, VotesOverTrees) {
  ForestParams p;
  p.n_trees = 15;
  const auto m = train_random_forest(separable_1d(), p);
  EXPECT_EQ(m.trees().size(), 15u);
  EXPECT_EQ(m.classify(row_with(0.0)), kNormal);
  EXPECT_EQ(m.classify(row_with(9.0)), kAttack);
}

TEST(AdaBoost, PerfectFirstLearnerStopsEnsemble) {
  const auto m = train_adaboost(separable_1d());
  EXPECT_EQ(m.trees().size(), 1u);
  EXPECT_EQ(m.classify(row_with(8.0)), kAttack);
}

TEST(AdaBoost, WeightsStayNormalizedAndFocusOnErrors) {
  Rng rng(2);
  LabeledDataset d;
  for (std::uint32_t i = 0; i < 200; ++i) {
    Features f{};
    f[0] = rng.uniform();
    f[1] = rng.uniform();
    const bool attack = (f[0] - 0.5) * (f[1] - 0.5) > 0.0;
    d.append(f, (attack != rng.bernoulli(0.05)) ? kAttack : kNormal, i);
  }
  BoostParams bp;
  bp.n_estimators = 20;
  bp.learner_depth = 1;
  std::vector<std::vector<double>> log;
  const auto m = train_adaboost(d, bp, &log);
  ASSERT_FALSE(log.empty());
  for (const auto& w : log) EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-12);
  EXPECT_EQ(m.learner_weights().size(), m.trees().size());
  for (double a : m.learner_weights()) EXPECT_GT(a, 0.0);
}

TEST(Classify, WidthAndDeterminism) {
  const auto m = train_cart(separable_1d());
  const std::vector<double> narrow(24, 0.0);
  EXPECT_THROW((void)m.classify(narrow), ContractError);
  const auto f = row_with(3.3);
  EXPECT_EQ(m.classify(f), m.classify(f));
}

TEST(Scores, ConfusionArithmetic) {
  const auto s = scores_from_confusion(8, 2, 2, 88);
  EXPECT_NEAR(s.f1, 0.8, 1e-12);
  EXPECT_NEAR(s.fpr, 2.0 / 90.0, 1e-12);
  EXPECT_FALSE(s.degenerate);
  const auto perfect = scores_from_confusion(10, 0, 0, 90);
  EXPECT_EQ(perfect.f1, 1.0);
  EXPECT_EQ(perfect.fpr, 0.0);
  const auto blind = scores_from_confusion(0, 0, 10, 90);
  EXPECT_EQ(blind.f1, 0.0);
  const auto none = scores_from_confusion(0, 0, 0, 100);
  EXPECT_EQ(none.f1, 0.0);
  EXPECT_TRUE(none.degenerate);
}

TEST(Scores, AllNormalPredictionsOnMixedTruth) {
  LabeledDataset d = separable_1d();
  const auto s = evaluate_detector(constant_model(kNormal), d);
  EXPECT_EQ(s.f1, 0.0);
  EXPECT_EQ(s.tp, 0u);
  EXPECT_EQ(s.fn, 5u);
}

TEST(Windows, ConstantLabels) {
  const std::vector<std::uint8_t> zeros(250, kNormal);
  for (double f : window_fractions(zeros)) EXPECT_EQ(f, 0.0);
  const std::vector<std::uint8_t> ones(250, kAttack);
  const auto w = window_fractions(ones);
  EXPECT_EQ(w.size(), 151u);
  for (double f : w) EXPECT_EQ(f, 1.0);
}

TEST(Windows, FiftyAttacksThenNormals) {
  std::vector<std::uint8_t> labels(200, kNormal);
  std::fill(labels.begin(), labels.begin() + 50, kAttack);
  const auto w = window_fractions(labels, 100);
  EXPECT_EQ(*std::max_element(w.begin(), w.end()), 0.5);
  EXPECT_EQ(w.back(), 0.0);
  // Direct sliding count.
  for (std::size_t s = 0; s + 100 <= labels.size(); ++s) {
    const auto hits = std::count(labels.begin() + static_cast<std::ptrdiff_t>(s),
                                 labels.begin() + static_cast<std::ptrdiff_t>(s + 100), kAttack);
    EXPECT_EQ(w[s], static_cast<double>(hits) / 100.0);
  }
}

TEST(Windows, ShortTraceIsOneWindow) {
  const std::vector<std::uint8_t> labels{1, 0, 0, 1};
  EXPECT_EQ(window_fractions(labels, 100), (std::vector<double>{0.5}));
  EXPECT_TRUE(window_fractions(std::vector<std::uint8_t>{}, 100).empty());
}

TEST(Windows, ScannerMatchesBatch) {
  Rng rng(3);
  std::vector<std::uint8_t> labels;
  for (int i = 0; i < 700; ++i) labels.push_back(rng.bernoulli(0.2) ? kAttack : kNormal);
  WindowScanner scan(100);
  for (auto l : labels) scan.push(l);
  const auto w = window_fractions(labels, 100);
  EXPECT_DOUBLE_EQ(scan.max_fraction(), *std::max_element(w.begin(), w.end()));
  EXPECT_NEAR(scan.mean_fraction(), std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size()), 1e-12);
}

TEST(Calibration, NeverFlaggingModelGivesZeroThreshold) {
  const std::vector<std::vector<std::uint8_t>> runs(12, std::vector<std::uint8_t>(300, kNormal));
  const auto policy = calibrate_threshold(runs, 100, 99.0);
  EXPECT_EQ(policy.threshold, 0.0);
  EXPECT_EQ(policy.runs, 12u);
}

TEST(Calibration, EqualMaximaGiveThatThreshold) {
  std::vector<std::vector<std::uint8_t>> runs;
  for (int r = 0; r < 15; ++r) {
    std::vector<std::uint8_t> labels(400, kNormal);
    std::fill(labels.begin() + 10 * r, labels.begin() + 10 * r + 7, kAttack);
    runs.push_back(labels);
  }
  for (double pct : {50.0, 90.0, 99.0}) EXPECT_DOUBLE_EQ(calibrate_threshold(runs, 100, pct).threshold, 0.07);
}

TEST(Calibration, RefusesFewerThanTenRuns) {
  const std::vector<std::vector<std::uint8_t>> runs(9, std::vector<std::uint8_t>(300, kNormal));
  EXPECT_THROW(calibrate_threshold(runs), ContractError);
}

TEST(Calibration, PercentileInterpolates) {
  EXPECT_DOUBLE_EQ(percentile({1, 2, 3, 4}, 50.0), 2.5);
  EXPECT_DOUBLE_EQ(percentile({4, 1, 3, 2}, 100.0), 4.0);
  EXPECT_DOUBLE_EQ(percentile({4, 1, 3, 2}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(percentile({0, 10}, 99.0), 9.9);
}

TEST(Calibration, PolicyComparesStrictly) {
  AlarmPolicy p;
  p.threshold = 0.2;
  EXPECT_FALSE(p.alarms(0.2));
  EXPECT_TRUE(p.alarms(0.21));
  const auto back = policy_from_json(calibration_report(p));
  EXPECT_EQ(back.threshold, p.threshold);
  EXPECT_EQ(back.window, p.window);
}

TEST(DetectionProbability, PerfectModelOnNormalTrace) {
  plant::PlantConfig cfg;
  cfg.horizon_hours = 6.0;
  const auto t = plant::simulate({}, cfg);
  EXPECT_EQ(detection_probability(t, constant_model(kNormal), AlarmPolicy{}), 0.0);
  EXPECT_EQ(detection_probability(t, constant_model(kAttack), AlarmPolicy{}), 1.0);
  EXPECT_THROW(detection_probability(plant::SimulationTrace{}, constant_model(kNormal), AlarmPolicy{}), ContractError);
}

TEST(DetectionProbability, TwoHourFlaggedAttackSaturatesWindow) {
  plant::PlantConfig cfg;
  cfg.horizon_hours = 12.0;
  attack::SignalRanges ranges;
  ranges.set(kUnmonitored, {1e6, 1e6});
  attack::AttackSchedule s({}, ranges);
  s.add({kUnmonitored, attack::AttackKind::IntegrityMax, 5.0, 7.0, std::nullopt});
  const auto t = plant::simulate(s, cfg);
  ASSERT_FALSE(t.shut_down());
  const DetectorModel m(DetectorKind::CART, {stump(static_cast<std::int32_t>(kUnmonitored), 1e5)}, {1.0}, kNormal);
  EXPECT_EQ(detection_probability(t, m, AlarmPolicy{}), 1.0);
  EXPECT_LT(detection_probability(t, m, AlarmPolicy{}, WindowAggregate::Mean), 0.25);
}

TEST(Models, JsonRoundTripPreservesPredictions) {
  Rng rng(4);
  LabeledDataset d;
  for (std::uint32_t i = 0; i < 200; ++i) {
    Features f{};
    for (auto& v : f) v = rng.normal();
    d.append(f, f[3] + f[7] > 0.5 ? kAttack : kNormal, i);
  }
  ForestParams fp;
  fp.n_trees = 5;
  BoostParams bp;
  bp.n_estimators = 10;
  for (const auto& m : {train_cart(d), train_random_forest(d, fp), train_adaboost(d, bp)}) {
    const auto back = DetectorModel::from_json(nlohmann::json::parse(m.to_json().dump()));
    EXPECT_EQ(back.kind(), m.kind());
    for (const auto& row : d.rows) EXPECT_EQ(back.classify(row), m.classify(row));
  }
  EXPECT_THROW(DetectorModel::from_json(nlohmann::json{{"format", 999}}), IoError);
}

TEST(Models, KindNames) {
  for (auto k : {DetectorKind::CART, DetectorKind::RandomForest, DetectorKind::AdaBoost}) {
    EXPECT_EQ(detector_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(detector_kind_from_string("svm"), ConfigError);
}

} // namespace
} // namespace icsatk::detect
