#include "icsatk/detect.hpp"
#include "icsatk/errors.hpp"
#include "icsatk/harness.hpp"
#include "icsatk/plant_io.hpp"
#include "icsatk/text.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;
namespace harness = icsatk::harness;
namespace detect = icsatk::detect;

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::optional<std::size_t> workers;
};

/// Configuration errors surface with exit code 2.
harness::ExperimentConfig load_config(const GlobalOptions& g) {
  harness::ExperimentConfig cfg;
  if (!g.config.empty()) {
    try {
      cfg = harness::load_experiment_config(g.config);
    } catch (const icsatk::IoError& e) {
      throw icsatk::ConfigError(e.what());
    }
  }
  if (g.seed) {
    cfg.plant.seed = *g.seed;
    cfg.evolution.rng_seed = *g.seed;
  }
  if (g.workers) cfg.workers = *g.workers;
  return cfg;
}

icsatk::attack::SignalRanges ranges_for(const std::string& ranges_file, std::size_t range_runs,
                                         const icsatk::plant::PlantConfig& plant) {
  if (!ranges_file.empty()) {
    try {
      return icsatk::attack::ranges_from_json(nlohmann::json::parse(harness::read_file(ranges_file)));
    } catch (const nlohmann::json::exception& e) {
      throw icsatk::ConfigError(ranges_file + ": " + e.what());
    }
  }
  return icsatk::plant::record_signal_ranges(range_runs, plant);
}

nlohmann::json parse_file(const fs::path& path) {
  try {
    return nlohmann::json::parse(harness::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw icsatk::IoError(path.string() + ": " + e.what());
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attack-strategy search on a simulated chemical plant"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config, "Experiment configuration (JSON)");
  app.add_option("--seed", g.seed, "Base seed for plant noise and evolution");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--workers", g.workers, "Worker threads")->check(CLI::PositiveNumber);

  auto* baseline = app.add_subcommand("baseline", "Attack-free runs: cost summary and signal ranges");
  std::size_t baseline_runs = 1000;
  baseline->add_option("--runs", baseline_runs, "Number of runs")->check(CLI::PositiveNumber);

  std::string ranges_file;
  std::size_t range_runs = 10;
  auto add_range_options = [&](CLI::App* cmd) {
    cmd->add_option("--ranges", ranges_file, "Signal ranges JSON (as written by baseline)");
    cmd->add_option("--range-runs", range_runs, "Attack-free runs used when no ranges file is given")
        ->check(CLI::PositiveNumber);
  };

  auto* sweep = app.add_subcommand("sweep", "Single-signal attacks from hour 2 to the horizon");
  std::size_t per_cell = 500;
  sweep->add_option("--per-cell", per_cell, "Runs per (signal, attack kind)")->check(CLI::PositiveNumber);
  add_range_options(sweep);

  auto* random = app.add_subcommand("random-search", "Uniformly sampled combined attacks");
  harness::RandomSearchSettings rs;
  random->add_option("--sets", rs.sets, "Independent sets (one plant seed each)");
  random->add_option("--per-set", rs.per_set, "Schedules drawn per set");
  random->add_option("--max-active", rs.max_active, "Largest number of attacked signals");
  random->add_option("--bin-hours", rs.bin_hours, "Histogram bin width (hours)")->check(CLI::PositiveNumber);
  add_range_options(random);

  auto* train = app.add_subcommand("train-detector", "Train and score an attack detector");
  std::string kind_name = "cart";
  detect::TrainingGrid grid;
  double test_fraction = 0.3;
  detect::ForestParams forest;
  detect::BoostParams boost;
  train->add_option("--kind", kind_name, "cart, random-forest or adaboost");
  train->add_option("--attack-runs", grid.attack_runs, "Integrity-attack runs");
  train->add_option("--normal-runs", grid.normal_runs, "Attack-free runs");
  train->add_option("--run-hours", grid.run_hours, "Length of each training run");
  train->add_option("--stride", grid.stride, "Keep every n-th sample")->check(CLI::PositiveNumber);
  train->add_option("--test-fraction", test_fraction, "Share of runs held out")->check(CLI::Range(0.0, 1.0));
  train->add_option("--trees", forest.n_trees, "Random-forest size");
  train->add_option("--estimators", boost.n_estimators, "AdaBoost rounds");
  add_range_options(train);

  auto* calibrate = app.add_subcommand("calibrate", "Calibrate the sliding-window alarm threshold");
  std::string detector_file;
  std::size_t calibration_runs = 1000;
  std::size_t window = 100;
  double pct = 99.0;
  calibrate->add_option("--detector", detector_file, "Detector model JSON")->required();
  calibrate->add_option("--runs", calibration_runs, "Attack-free runs")->check(CLI::PositiveNumber);
  calibrate->add_option("--window", window, "Window length (samples)")->check(CLI::PositiveNumber);
  calibrate->add_option("--percentile", pct, "Percentile of per-run maxima")->check(CLI::Range(0.0, 100.0));

  auto* evolve = app.add_subcommand("evolve", "Run an evolution campaign");
  std::optional<std::size_t> replicates;
  std::optional<std::size_t> generations;
  evolve->add_option("--replicates", replicates, "Override the replicate count");
  evolve->add_option("--generations", generations, "Override ngens");

  std::string campaign_dir;
  auto* metrics = app.add_subcommand("metrics", "Recompute campaign metrics from persisted archives");
  metrics->add_option("--campaign", campaign_dir, "Campaign directory")->required();
  auto* plots = app.add_subcommand("export-plots", "Write plot-ready CSV data for a campaign");
  plots->add_option("--campaign", campaign_dir, "Campaign directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const fs::path out = g.out;
    if (baseline->parsed()) {
      const auto cfg = load_config(g);
      const auto s = harness::run_baseline(baseline_runs, cfg.plant, cfg.workers);
      harness::write_file_atomic(out / "baseline.json", harness::baseline_to_json(s).dump(2) + '\n');
      harness::write_file_atomic(out / "ranges.json", icsatk::attack::ranges_to_json(s.ranges).dump(2) + '\n');
      std::ostringstream csv;
      csv << "run,seed,operating_cost\n";
      for (std::size_t i = 0; i < s.costs.size(); ++i) {
        csv << i << ',' << icsatk::plant::run_seed(cfg.plant.seed, i) << ',' << icsatk::shortest(s.costs[i]) << '\n';
      }
      harness::write_file_atomic(out / "baseline_costs.csv", csv.str());
      std::cout << "runs " << s.runs << ", shutdowns " << s.shutdowns << ", cost mean " << s.cost_mean << ", max "
                << s.cost_max << '\n';
    } else if (sweep->parsed()) {
      const auto cfg = load_config(g);
      const auto ranges = ranges_for(ranges_file, range_runs, cfg.plant);
      const auto rows = harness::run_single_attack_sweep(per_cell, cfg.plant, ranges, cfg.workers);
      std::ostringstream csv;
      harness::write_sweep_csv(csv, rows);
      harness::write_file_atomic(out / "sweep.csv", csv.str());
      std::cout << "wrote " << (out / "sweep.csv").string() << " (" << rows.size() << " rows)\n";
    } else if (random->parsed()) {
      const auto cfg = load_config(g);
      rs.seed = cfg.evolution.rng_seed;
      const auto ranges = ranges_for(ranges_file, range_runs, cfg.plant);
      const auto r = harness::run_random_combined(rs, cfg.plant, ranges, cfg.workers);
      harness::write_file_atomic(out / "random_search.json",
                                 harness::random_search_to_json(r, ranges, cfg.plant.horizon_hours).dump(2) + '\n');
      std::cout << "drawn " << r.drawn << ", unique " << r.unique << ", shutdowns " << r.shutdowns << '\n';
    } else if (train->parsed()) {
      const auto cfg = load_config(g);
      const auto kind = detect::detector_kind_from_string(kind_name);
      grid.seed = cfg.plant.seed;
      forest.seed = cfg.plant.seed;
      const auto ranges = ranges_for(ranges_file, range_runs, cfg.plant);
      const auto data = detect::generate_training_data(cfg.plant, ranges, grid);
      const auto [train_set, test_set] = detect::split_by_run(data, test_fraction, cfg.plant.seed);
      detect::DetectorModel model;
      switch (kind) {
      case detect::DetectorKind::CART: model = detect::train_cart(train_set); break;
      case detect::DetectorKind::RandomForest: model = detect::train_random_forest(train_set, forest); break;
      case detect::DetectorKind::AdaBoost: model = detect::train_adaboost(train_set, boost); break;
      }
      model.report = detect::evaluate_detector(model, test_set);
      harness::write_file_atomic(out / "detector.json", model.to_json().dump() + '\n');
      std::cout << detect::to_string(kind) << ": held-out F1 " << model.report.f1 << ", FPR " << model.report.fpr
                << '\n';
    } else if (calibrate->parsed()) {
      const auto cfg = load_config(g);
      const auto model = detect::DetectorModel::from_json(parse_file(detector_file));
      const auto policy = detect::calibrate_detector(model, cfg.plant, calibration_runs, window, pct);
      harness::write_file_atomic(out / "calibration.json", detect::calibration_report(policy).dump(2) + '\n');
      std::cout << "threshold " << policy.threshold << " (" << policy.percentile << "th percentile of "
                << policy.runs << " runs)\n";
    } else if (evolve->parsed()) {
      auto cfg = load_config(g);
      if (replicates) cfg.replicates = *replicates;
      if (generations) cfg.evolution.ngens = *generations;
      if (app.get_option("--out")->count() > 0) cfg.output_dir = out;
      cfg.validate();
      const auto result = harness::run_campaign(cfg);
      std::size_t failed = 0;
      for (const auto& r : result.runs) {
        if (!r.ok()) {
          ++failed;
          std::cerr << r.run_id << " failed: " << r.error << '\n';
        }
      }
      std::cout << result.runs.size() - failed << " of " << result.runs.size() << " runs completed in "
                << cfg.output_dir.string() << '\n';
      if (failed == result.runs.size()) return kExitRuntime;
    } else if (metrics->parsed()) {
      const fs::path dir = campaign_dir;
      const auto campaign = harness::load_campaign(dir);
      const auto result = harness::recompute_metrics(campaign);
      std::ostringstream csv;
      harness::write_metrics_csv(csv, result.runs);
      const fs::path target = app.get_option("--out")->count() > 0 ? out : dir;
      const bool same = harness::read_file(dir / "metrics.csv") == csv.str();
      if (target != dir) {
        harness::write_file_atomic(target / "metrics.csv", csv.str());
        harness::write_file_atomic(target / "significance.json", result.significance.dump(2) + '\n');
      }
      std::cout << csv.str();
      if (!same) {
        std::cerr << "recomputed metrics differ from " << (dir / "metrics.csv").string() << '\n';
        return kExitRuntime;
      }
    } else if (plots->parsed()) {
      const fs::path dir = campaign_dir;
      const auto campaign = harness::load_campaign(dir);
      const fs::path target = app.get_option("--out")->count() > 0 ? out : dir;
      harness::export_plots(campaign.runs, campaign.config.problem, target);
      std::cout << "wrote " << (target / "plots").string() << '\n';
    }
  } catch (const icsatk::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
