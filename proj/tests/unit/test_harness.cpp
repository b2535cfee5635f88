#include "icsatk/errors.hpp"
#include "icsatk/harness.hpp"
#include "icsatk/plant_io.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace icsatk::harness {
namespace {

using emo::Algorithm;

/// Fresh directory under the system temp dir, removed afterwards.
class TempDir {
public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() / ("icsatk_" + std::string(info->test_suite_name()) + "_" + info->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  [[nodiscard]] const fs::path& path() const { return path_; }

private:
  fs::path path_;
};

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

plant::PlantConfig fast_plant() {
  plant::PlantConfig p;
  p.samples_per_hour = 20;
  p.seed = 7;
  return p;
}

ExperimentConfig small_campaign(const fs::path& out) {
  ExperimentConfig cfg;
  cfg.algorithms = {Algorithm::NSGA2, Algorithm::SPEA2, Algorithm::Random};
  cfg.evolution.mu = 8;
  cfg.evolution.ngens = 3;
  cfg.evolution.rng_seed = 11;
  cfg.plant = fast_plant();
  cfg.replicates = 2;
  cfg.range_runs = 2;
  cfg.output_dir = out;
  cfg.workers = 2;
  return cfg;
}

TEST(Config, JsonRoundTrip) {
  auto cfg = small_campaign("out");
  cfg.problem = emo::ProblemVariant::OpCost;
  cfg.seed_count = 3;
  cfg.evolution.two_child_vary = true;
  const auto j = experiment_to_json(cfg);
  const auto back = experiment_from_json(j);
  EXPECT_EQ(experiment_to_json(back), j);
  EXPECT_FALSE(experiment_to_json(cfg, false).contains("output_dir"));
}

TEST(Config, AcceptsSingleAlgorithmAndResolvesRelativePaths) {
  const nlohmann::json j = {{"algorithm", "nsga2"},
                            {"problem", "evasion3"},
                            {"detector", {{"model", "det.json"}, {"calibration", "cal.json"}}},
                            {"ranges_file", "ranges.json"},
                            {"output_dir", "/abs/out"}};
  const auto cfg = experiment_from_json(j, "/base");
  EXPECT_EQ(cfg.algorithms, std::vector<Algorithm>{Algorithm::NSGA2});
  ASSERT_TRUE(cfg.detector);
  EXPECT_EQ(cfg.detector->model, fs::path("/base/det.json"));
  EXPECT_EQ(*cfg.ranges_file, fs::path("/base/ranges.json"));
  EXPECT_EQ(cfg.output_dir, fs::path("/abs/out"));
}

TEST(Config, RejectsInvalidExperiments) {
  EXPECT_THROW(experiment_from_json({{"algorithms", {"moead"}}}), ConfigError);
  EXPECT_THROW(experiment_from_json({{"replicates", 0}}), ConfigError);
  EXPECT_THROW(experiment_from_json({{"problem", "evasion2"}}), ConfigError);
  EXPECT_THROW(experiment_from_json({{"seed_count", 500}, {"seed_file", "a.jsonl"}}), ConfigError);
  EXPECT_THROW(experiment_from_json({{"algorithms", {"spea2", "spea2"}}}), ConfigError);
  EXPECT_THROW(experiment_from_json({{"evolution", {{"mu", "many"}}}}), ConfigError);
  EXPECT_THROW(experiment_from_json({{"evolution", {{"cxpb", 0.9}, {"mutpb", 0.2}}}}), ConfigError);
  EXPECT_THROW(experiment_from_json({{"plant", {{"horizon_hours", -1}}}}), ConfigError);
  EXPECT_THROW(load_experiment_config("/nonexistent/icsatk.json"), IoError);
}

TEST(Baseline, SingleRunSummaryIsThatRun) {
  auto p = fast_plant();
  const auto s = run_baseline(1, p);
  auto one = p;
  one.seed = plant::run_seed(p.seed, 0);
  const double cost = plant::simulate({}, one).operating_cost;
  EXPECT_EQ(s.runs, 1u);
  EXPECT_EQ(s.cost_mean, cost);
  EXPECT_EQ(s.cost_max, cost);
  EXPECT_EQ(s.cost_min, cost);
  EXPECT_EQ(s.ranges, plant::record_signal_ranges(1, p));
  EXPECT_THROW(run_baseline(0, p), ContractError);
}

TEST(Baseline, WorkerCountDoesNotChangeSummary) {
  const auto a = run_baseline(6, fast_plant(), 1);
  const auto b = run_baseline(6, fast_plant(), 3);
  EXPECT_EQ(a.costs, b.costs);
  EXPECT_EQ(a.ranges, b.ranges);
  EXPECT_EQ(baseline_to_json(a), baseline_to_json(b));
}

TEST(Sweep, NoneRowMatchesBaseline) {
  auto p = fast_plant();
  p.horizon_hours = 8.0;
  const auto ranges = plant::record_signal_ranges(2, p);
  const auto rows = run_single_attack_sweep(2, p, ranges, 2);
  ASSERT_EQ(rows.size(), 1u + 25u * 4u);
  EXPECT_FALSE(rows.front().signal);
  const auto base = run_baseline(2, p);
  EXPECT_DOUBLE_EQ(rows.front().cost_mean, base.cost_mean);
  EXPECT_DOUBLE_EQ(rows.front().cost_max, base.cost_max);
  EXPECT_EQ(rows.front().shutdowns, 0u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.runs, 2u);
    EXPECT_LE(r.shutdowns, r.runs);
    EXPECT_EQ(r.shutdown_min.has_value(), r.shutdowns > 0);
    if (r.shutdown_min) {
      EXPECT_LE(*r.shutdown_min, *r.shutdown_max);
    }
  }
  std::ostringstream csv;
  write_sweep_csv(csv, rows);
  std::istringstream in(csv.str());
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "signal,kind,runs,cost_mean,cost_max,shutdowns,shutdown_min,shutdown_max");
}

TEST(RandomSearch, NoActiveSignalsNeverShutDown) {
  auto p = fast_plant();
  p.horizon_hours = 6.0;
  RandomSearchSettings s;
  s.sets = 2;
  s.per_set = 5;
  s.max_active = 0;
  const auto r = run_random_combined(s, p, plant::record_signal_ranges(1, p));
  EXPECT_EQ(r.drawn, 10u);
  EXPECT_EQ(r.unique, 1u);
  EXPECT_EQ(r.shutdowns, 0u);
}

TEST(RandomSearch, RespectsAttackLimitAndDeduplicates) {
  auto p = fast_plant();
  RandomSearchSettings s;
  s.sets = 2;
  s.per_set = 30;
  s.max_active = 3;
  const auto ranges = plant::record_signal_ranges(2, p);
  const auto r = run_random_combined(s, p, ranges, 2);
  EXPECT_EQ(r.drawn, 60u);
  EXPECT_LE(r.unique, r.drawn);
  for (const auto& m : r.archive.members()) EXPECT_LE(m.genome.active(), 3u);
  if (r.best) {
    EXPECT_LE(r.best->genome.active(), 3u);
  }
  std::size_t histogram_total = 0;
  for (auto c : r.histogram) histogram_total += c;
  EXPECT_EQ(histogram_total, r.shutdowns);
  const auto j = random_search_to_json(r, ranges, p.horizon_hours);
  EXPECT_EQ(j.at("unique").get<std::size_t>(), r.unique);
  const auto again = run_random_combined(s, p, ranges, 1);
  EXPECT_EQ(random_search_to_json(again, ranges, p.horizon_hours), j);
}

TEST(SeedPopulation, TakesBestArchiveMembersThenRandomFill) {
  TempDir dir;
  emo::ParetoArchive archive;
  for (std::uint32_t i = 0; i < 5; ++i) {
    emo::Individual ind;
    ind.genome.genes[i] = 1;
    ind.fitness.values = ind.fitness.raw = {10.0 - static_cast<double>(i), static_cast<double>(i)};
    ind.evaluated = true;
    archive.update(ind);
  }
  const auto file = dir.path() / "archive.jsonl";
  {
    std::ofstream out(file);
    emo::write_archive_jsonl(out, archive);
  }
  const auto none = seed_population(file, 0, attack::Problem::Shutdown, 6, 3);
  EXPECT_EQ(none, emo::random_population(attack::Problem::Shutdown, 6, 3));
  const auto all = seed_population(file, 5, attack::Problem::Shutdown, 5, 3);
  ASSERT_EQ(all.size(), 5u);
  for (std::uint32_t i = 0; i < 5; ++i) EXPECT_EQ(all[i].genes[4 - i], 1u);
  const auto some = seed_population(file, 2, attack::Problem::Shutdown, 6, 3);
  EXPECT_EQ(some[0].genes[4], 1u);
  EXPECT_EQ(some[1].genes[3], 1u);
  EXPECT_THROW(seed_population(file, 7, attack::Problem::Shutdown, 6, 3), ContractError);
  try {
    seed_population(dir.path() / "missing.jsonl", 1, attack::Problem::Shutdown, 6, 3);
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("missing.jsonl"), std::string::npos);
  }
}

class CampaignTest : public ::testing::Test {
protected:
  static void SetUpTestSuite() {
    root_ = new fs::path(fs::temp_directory_path() / "icsatk_campaign_suite");
    fs::remove_all(*root_);
    config_ = new ExperimentConfig(small_campaign(*root_ / "a"));
    result_ = new CampaignResult(run_campaign(*config_));
  }
  static void TearDownTestSuite() {
    fs::remove_all(*root_);
    delete result_;
    delete config_;
    delete root_;
  }
  static fs::path* root_;
  static ExperimentConfig* config_;
  static CampaignResult* result_;
};
fs::path* CampaignTest::root_ = nullptr;
ExperimentConfig* CampaignTest::config_ = nullptr;
CampaignResult* CampaignTest::result_ = nullptr;

TEST_F(CampaignTest, RunsEveryPairSuccessfully) {
  ASSERT_EQ(result_->runs.size(), 6u);
  std::set<std::string> ids;
  for (const auto& r : result_->runs) {
    EXPECT_TRUE(r.ok()) << r.error;
    ids.insert(r.run_id);
    EXPECT_EQ(r.hypervolume.size(), config_->evolution.ngens + 1);
    EXPECT_EQ(r.evaluations, config_->evolution.mu * (config_->evolution.ngens + 1));
    EXPECT_TRUE(r.metrics.hypervolume.has_value());
  }
  EXPECT_TRUE(ids.count("nsga2_0") && ids.count("spea2_1") && ids.count("random_1"));
}

TEST_F(CampaignTest, ReplicatesArePairedAcrossAlgorithms) {
  for (std::size_t rep = 0; rep < config_->replicates; ++rep) {
    std::vector<const RunRecord*> same;
    for (const auto& r : result_->runs) {
      if (r.replicate == rep) same.push_back(&r);
    }
    ASSERT_EQ(same.size(), 3u);
    auto sorted = [](std::vector<attack::Genome> g) {
      std::sort(g.begin(), g.end());
      return g;
    };
    for (const auto* r : same) {
      EXPECT_EQ(sorted(r->initial_population), sorted(same[0]->initial_population));
      EXPECT_EQ(r->plant_seed, same[0]->plant_seed);
      EXPECT_EQ(r->rng_seed, same[0]->rng_seed);
    }
  }
  EXPECT_NE(replicate_plant_seed(*config_, 0), replicate_plant_seed(*config_, 1));
}

TEST_F(CampaignTest, WritesCampaignLayout) {
  const auto dir = *root_ / "a";
  for (const char* f : {"config.json", "ranges.json", "reference_front.json", "metrics.csv", "significance.json"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  for (const auto& r : result_->runs) {
    for (const char* f : {"archive.jsonl", "convergence.csv", "run.json", "initial_population.jsonl"}) {
      EXPECT_TRUE(fs::exists(dir / r.run_id / f)) << r.run_id << "/" << f;
    }
    EXPECT_EQ(line_count(dir / r.run_id / "archive.jsonl"), r.archive.size());
    EXPECT_EQ(line_count(dir / r.run_id / "convergence.csv"), r.hypervolume.size() + 1);
  }
  EXPECT_EQ(line_count(dir / "metrics.csv"), 7u);
}

TEST_F(CampaignTest, PersistedArchivesRecomputeIdenticalMetrics) {
  const auto dir = *root_ / "a";
  const auto loaded = load_campaign(dir);
  ASSERT_EQ(loaded.runs.size(), 6u);
  const auto again = recompute_metrics(loaded);
  std::ostringstream csv;
  write_metrics_csv(csv, again.runs);
  EXPECT_EQ(csv.str(), read_file(dir / "metrics.csv"));
  EXPECT_EQ(again.significance, result_->significance);
  EXPECT_EQ(experiment_to_json(loaded.config, false), experiment_to_json(*config_, false));
}

TEST_F(CampaignTest, ReplayReproducesEveryRun) {
  const auto dir = *root_ / "a";
  for (const auto& r : result_->runs) {
    const auto replay = replay_run(dir, r.run_id);
    ASSERT_TRUE(replay.ok()) << replay.error;
    ASSERT_EQ(replay.archive.size(), r.archive.size());
    for (std::size_t i = 0; i < r.archive.size(); ++i) {
      EXPECT_EQ(replay.archive[i].genome, r.archive[i].genome);
      EXPECT_EQ(replay.archive[i].fitness, r.archive[i].fitness);
    }
    EXPECT_EQ(replay.hypervolume, r.hypervolume);
    EXPECT_EQ(replay.metrics.hypervolume, r.metrics.hypervolume);
    EXPECT_EQ(replay.metrics.spread, r.metrics.spread);
    EXPECT_EQ(replay.metrics.igd, r.metrics.igd);
  }
  EXPECT_THROW(replay_run(dir, "moead_0"), Error);
}

TEST_F(CampaignTest, SecondCampaignWritesIdenticalFiles) {
  auto cfg = *config_;
  cfg.output_dir = *root_ / "b";
  cfg.workers = 1;
  run_campaign(cfg);
  for (const auto& entry : fs::recursive_directory_iterator(*root_ / "a")) {
    const auto name = entry.path().filename();
    // The snapshot records the worker count, which is all that differs.
    if (!entry.is_regular_file() || name == "timing.json" || name == "config.json") continue;
    const auto rel = fs::relative(entry.path(), *root_ / "a");
    EXPECT_EQ(read_file(entry.path()), read_file(*root_ / "b" / rel)) << rel;
  }
}

TEST_F(CampaignTest, ExportedPlotDataHasOneRowPerMember) {
  const auto out = *root_ / "plots_export";
  export_plots(result_->runs, config_->problem, out);
  for (const auto& r : result_->runs) {
    const auto front = out / "plots" / ("front_" + r.run_id + ".csv");
    EXPECT_EQ(line_count(front), r.archive.size() + 1);
    EXPECT_EQ(line_count(out / "plots" / ("hypervolume_" + r.run_id + ".csv")), config_->evolution.ngens + 2);
  }
  std::ifstream in(out / "plots" / "metrics_boxplot.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "algorithm,run_id,metric,value");
}

TEST(Export, EmptyArchiveGivesHeaderOnly) {
  TempDir dir;
  RunRecord r;
  r.run_id = "spea2_0";
  r.hypervolume = {0.0};
  export_plots({r}, emo::ProblemVariant::Shutdown, dir.path());
  EXPECT_EQ(read_file(dir.path() / "plots" / "front_spea2_0.csv"), "hours_to_shutdown,effort\n");
  EXPECT_THROW(export_plots({}, emo::ProblemVariant::Shutdown, dir.path()), ContractError);
}

TEST(Significance, ReportsOverallAndPairwiseTests) {
  std::vector<RunRecord> runs;
  for (int i = 0; i < 6; ++i) {
    RunRecord r;
    r.algorithm = i < 3 ? Algorithm::NSGA2 : Algorithm::SPEA2;
    r.metrics.hypervolume = i < 3 ? 1.0 + i : 101.0 + i;
    runs.push_back(r);
  }
  const auto j = significance_report(runs);
  const auto& hv = j.at("metrics").at("hypervolume");
  EXPECT_NEAR(hv.at("all").at("h").get<double>(), 27.0 / 7.0, 1e-12);
  EXPECT_TRUE(hv.at("all").at("significant").get<bool>());
}

TEST(Files, AtomicWriteAndReadErrors) {
  TempDir dir;
  const auto p = dir.path() / "sub" / "x.txt";
  write_file_atomic(p, "hello");
  EXPECT_EQ(read_file(p), "hello");
  write_file_atomic(p, "again");
  EXPECT_EQ(read_file(p), "again");
  try {
    read_file(dir.path() / "nope.txt");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("nope.txt"), std::string::npos);
  }
}

#ifdef ICSATK_CLI_PATH
int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + ICSATK_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  const auto out = dir.path().string();
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("--workers 0 baseline --runs 1"), 2);
  EXPECT_EQ(run_cli("--config " + out + "/missing.json evolve"), 2);
  {
    std::ofstream bad(dir.path() / "bad.json");
    bad << R"({"problem": "evasion3"})";
  }
  EXPECT_EQ(run_cli("--config " + out + "/bad.json evolve"), 2);
  {
    std::ofstream broken(dir.path() / "broken.json");
    broken << "{ not json";
  }
  EXPECT_EQ(run_cli("--config " + out + "/broken.json evolve"), 2);
  EXPECT_EQ(run_cli("metrics --campaign " + out + "/no_campaign"), 3);
  EXPECT_EQ(run_cli("--out " + out + " --seed 3 baseline --runs 2"), 0);
  EXPECT_TRUE(fs::exists(dir.path() / "baseline.json"));
  EXPECT_TRUE(fs::exists(dir.path() / "ranges.json"));
}

TEST(Cli, EvolveThenMetricsAndPlots) {
  TempDir dir;
  auto cfg = small_campaign(dir.path() / "camp");
  cfg.algorithms = {Algorithm::SPEA2};
  cfg.replicates = 1;
  {
    std::ofstream f(dir.path() / "cfg.json");
    f << experiment_to_json(cfg).dump(2);
  }
  const auto d = dir.path().string();
  ASSERT_EQ(run_cli("--config " + d + "/cfg.json evolve"), 0);
  EXPECT_EQ(run_cli("metrics --campaign " + d + "/camp"), 0);
  EXPECT_EQ(run_cli("export-plots --campaign " + d + "/camp"), 0);
  EXPECT_TRUE(fs::exists(dir.path() / "camp" / "plots" / "front_spea2_0.csv"));
}
#endif

} // namespace
} // namespace icsatk::harness
