#pragma once

#include "icsatk/attack.hpp"
#include "icsatk/detect.hpp"
#include "icsatk/evolution.hpp"
#include "icsatk/fitness.hpp"
#include "icsatk/metrics.hpp"
#include "icsatk/plant.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

/// Experiment orchestration: baselines, attack sweeps, random search,
/// evolution campaigns and their on-disk artifacts.
namespace icsatk::harness {

namespace fs = std::filesystem;

/// Trained detector and its calibrated alarm policy, as written by the
/// train-detector and calibrate commands.
struct DetectorReference {
  fs::path model;
  fs::path calibration;
};

struct ExperimentConfig {
  emo::ProblemVariant problem = emo::ProblemVariant::Shutdown;
  /// Algorithms compared in a campaign; each runs every replicate.
  std::vector<emo::Algorithm> algorithms{emo::Algorithm::SPEA2};
  emo::EvolutionConfig evolution{};
  plant::PlantConfig plant{};
  std::optional<DetectorReference> detector;
  std::size_t replicates = 1;
  /// Archive whose best members seed every initial population.
  std::optional<fs::path> seed_file;
  std::size_t seed_count = 10;
  /// Attack-free runs behind the integrity ranges, unless `ranges_file` is set.
  std::size_t range_runs = 10;
  std::optional<fs::path> ranges_file;
  fs::path output_dir = "results";
  std::size_t workers = 1;

  /// Throws ConfigError on an empty algorithm list, zero replicates, an
  /// evasion problem without a detector, seed_count > mu or an invalid
  /// plant or evolution block.
  void validate() const;
};

/// Relative paths in `j` resolve against `base_dir`. Missing keys keep their
/// defaults. Throws ConfigError on unknown names or ill-typed values.
ExperimentConfig experiment_from_json(const nlohmann::json& j, const fs::path& base_dir = {});
/// `with_output` false drops output_dir (campaign snapshots omit it).
nlohmann::json experiment_to_json(const ExperimentConfig& cfg, bool with_output = true);
/// Throws IoError when the file is unreadable, ConfigError when invalid.
ExperimentConfig load_experiment_config(const fs::path& path);

nlohmann::json evolution_to_json(const emo::EvolutionConfig& cfg);
emo::EvolutionConfig evolution_from_json(const nlohmann::json& j, emo::EvolutionConfig base = {});

struct BaselineSummary {
  std::size_t runs = 0;
  std::size_t shutdowns = 0;
  double cost_mean = 0.0;
  double cost_max = 0.0;
  double cost_min = 0.0;
  std::vector<double> costs;
  attack::SignalRanges ranges;
};

/// Attack-free runs with seeds run_seed(plant.seed, i). Throws ContractError
/// when n_runs is zero.
BaselineSummary run_baseline(std::size_t n_runs, const plant::PlantConfig& plant, std::size_t workers = 1);
nlohmann::json baseline_to_json(const BaselineSummary& summary);

/// Start hour of sweep and random-search attacks.
inline constexpr double kAttackStartHour = 2.0;

struct SweepRow {
  /// nullopt for the attack-free row.
  std::optional<std::size_t> signal;
  attack::AttackKind kind = attack::AttackKind::None;
  std::size_t runs = 0;
  double cost_mean = 0.0;
  double cost_max = 0.0;
  std::size_t shutdowns = 0;
  /// Hours from attack start to the trip, over runs that tripped.
  std::optional<double> shutdown_min;
  std::optional<double> shutdown_max;
};

/// One row per (signal, kind) plus an attack-free row first; every cell runs
/// its attack from hour 2 to the horizon under seeds run_seed(plant.seed, i).
std::vector<SweepRow> run_single_attack_sweep(std::size_t per_cell, const plant::PlantConfig& plant,
                                              const attack::SignalRanges& ranges, std::size_t workers = 1);
/// `signal,kind,runs,cost_mean,cost_max,shutdowns,shutdown_min,shutdown_max`
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

struct RandomSearchSettings {
  std::size_t sets = 10;
  std::size_t per_set = 50000;
  std::size_t max_active = 7;
  std::uint64_t seed = 1;
  double bin_hours = 1.0;
};

struct RandomSearchResult {
  std::size_t drawn = 0;
  /// Distinct genomes simulated; repeats across sets are dropped.
  std::size_t unique = 0;
  std::size_t shutdowns = 0;
  /// Counts of hours-to-trip in [i * bin_hours, (i + 1) * bin_hours).
  std::vector<std::size_t> histogram;
  double bin_hours = 1.0;
  std::optional<emo::Individual> best;
  std::size_t best_set = 0;
  /// Non-dominated (time to trip, effort) members over all sets.
  emo::ParetoArchive archive;
};

/// Set s draws `per_set` Shutdown genomes with random_combined_genome and
/// simulates them under plant seed run_seed(plant.seed, s).
RandomSearchResult run_random_combined(const RandomSearchSettings& settings, const plant::PlantConfig& plant,
                                       const attack::SignalRanges& ranges, std::size_t workers = 1);
nlohmann::json random_search_to_json(const RandomSearchResult& result, const attack::SignalRanges& ranges,
                                     double horizon_hours);

struct RunMetrics {
  std::optional<double> hypervolume;
  std::optional<double> spread;
  std::optional<double> igd;
};

struct RunRecord {
  std::string run_id;
  emo::Algorithm algorithm = emo::Algorithm::SPEA2;
  std::size_t replicate = 0;
  std::uint64_t rng_seed = 0;
  std::uint64_t plant_seed = 0;
  std::vector<attack::Genome> initial_population;
  std::vector<emo::Individual> archive;
  std::vector<double> hypervolume;
  std::size_t evaluations = 0;
  std::size_t simulations = 0;
  RunMetrics metrics;
  double wall_seconds = 0.0;
  /// Empty unless the run failed.
  std::string error;

  [[nodiscard]] bool ok() const { return error.empty(); }
};

/// Evolution seed of replicate r; shared by every algorithm.
std::uint64_t replicate_rng_seed(const ExperimentConfig& cfg, std::size_t replicate);
/// Plant seed of replicate r; shared by every algorithm.
std::uint64_t replicate_plant_seed(const ExperimentConfig& cfg, std::size_t replicate);
std::string run_id(emo::Algorithm algorithm, std::size_t replicate);

/// k best members of an archive file by first minimized objective, then
/// mu - k random genomes. Throws IoError naming the path when unreadable and
/// ContractError when k > mu.
std::vector<attack::Genome> seed_population(const fs::path& archive_file, std::size_t k, attack::Problem problem,
                                            std::size_t mu, std::uint64_t seed);

/// Initial population of replicate r (seeded when cfg.seed_file is set).
std::vector<attack::Genome> initial_population(const ExperimentConfig& cfg, std::size_t replicate);

struct CampaignResult {
  std::vector<RunRecord> runs;
  metrics::ReferenceFront reference;
  nlohmann::json significance;
};

/// Runs every (algorithm, replicate) pair, concurrently up to cfg.workers,
/// scores each final archive against the aggregated front of all runs and
/// writes the campaign directory. A failing run is recorded and the others
/// continue.
CampaignResult run_campaign(const ExperimentConfig& cfg);

/// Simulation context of replicate r (ranges, detector and plant seed).
struct CampaignContext {
  attack::SignalRanges ranges;
  std::shared_ptr<const detect::DetectorModel> detector;
  detect::AlarmPolicy policy{};
};
CampaignContext load_campaign_context(const ExperimentConfig& cfg);

/// Executes one run without scoring it; `workers` threads evaluate each
/// generation. Failures are caught into RunRecord::error.
RunRecord execute_run(const ExperimentConfig& cfg, const CampaignContext& context, emo::Algorithm algorithm,
                      std::size_t replicate, std::size_t workers = 1);

/// Hypervolume against the fixed convergence reference; spread and IGD on
/// points rescaled to the bounds of the aggregated front. Undefined metrics
/// stay empty.
RunMetrics score_run(const std::vector<emo::Individual>& archive, const metrics::ReferenceFront& reference,
                     emo::ProblemVariant problem, const plant::PlantConfig& plant);

/// Kruskal-Wallis per metric across algorithms, overall and per pair.
nlohmann::json significance_report(const std::vector<RunRecord>& runs);

/// `run_id,algorithm,hypervolume,spread,igd`
void write_metrics_csv(std::ostream& out, const std::vector<RunRecord>& runs);

/// Reads a campaign directory back: config snapshot, archives, convergence
/// series and run metadata. Runs without an archive are marked failed.
struct LoadedCampaign {
  ExperimentConfig config;
  std::vector<RunRecord> runs;
};
LoadedCampaign load_campaign(const fs::path& dir);

/// Recomputes reference front, metrics and significance from persisted
/// archives.
CampaignResult recompute_metrics(const LoadedCampaign& campaign);

/// Re-executes one persisted run from the campaign snapshot and scores it
/// against the persisted reference front.
RunRecord replay_run(const fs::path& campaign_dir, const std::string& run_id);

/// Writes plots/ under `dir`: front_<run>.csv (raw objectives, one row per
/// archive member), hypervolume_<run>.csv (one row per generation) and
/// metrics_boxplot.csv. Throws ContractError when `runs` is empty.
void export_plots(const std::vector<RunRecord>& runs, emo::ProblemVariant problem, const fs::path& dir);

/// Column names of the raw objectives.
std::vector<std::string> objective_names(emo::ProblemVariant problem);

/// Writes `content` to `path` through a temporary file and a rename.
void write_file_atomic(const fs::path& path, const std::string& content);
/// Throws IoError naming the path.
std::string read_file(const fs::path& path);

} // namespace icsatk::harness
