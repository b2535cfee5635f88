#include "icsatk/harness.hpp"

#include "icsatk/errors.hpp"
#include "icsatk/genome.hpp"
#include "icsatk/parallel.hpp"
#include "icsatk/plant_io.hpp"
#include "icsatk/text.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace icsatk::harness {
namespace {

constexpr std::uint64_t kReplicateStream = 0x726570;
constexpr std::uint64_t kRandomSearchStream = 0x726e64;

fs::path resolve(const fs::path& p, const fs::path& base) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

nlohmann::json parse_json_file(const fs::path& path) {
  const auto text = read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::string optional_cell(const std::optional<double>& v) { return v ? shortest(*v) : std::string(); }

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::optional<double> optional_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

std::vector<emo::Point> values_of(const std::vector<emo::Individual>& members) {
  std::vector<emo::Point> pts;
  pts.reserve(members.size());
  for (const auto& m : members) pts.push_back(m.fitness.values);
  return pts;
}

std::string genomes_jsonl(const std::vector<attack::Genome>& genomes) {
  std::string out;
  for (const auto& g : genomes) {
    nlohmann::json j = g;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<attack::Genome> genomes_from_jsonl(const std::string& text, const fs::path& path) {
  std::vector<attack::Genome> genomes;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      genomes.push_back(nlohmann::json::parse(line).get<attack::Genome>());
    } catch (const std::exception& e) {
      throw IoError(path.string() + ": " + e.what());
    }
  }
  return genomes;
}

std::vector<double> convergence_from_csv(const std::string& text, const fs::path& path) {
  std::vector<double> series;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw IoError(path.string() + ": malformed convergence row");
    try {
      series.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw IoError(path.string() + ": malformed convergence value");
    }
  }
  return series;
}

std::string archive_text(const std::vector<emo::Individual>& members) {
  emo::ParetoArchive archive;
  std::ostringstream out;
  // Members are already mutually non-dominated, so re-inserting keeps order.
  for (const auto& m : members) archive.update(m);
  emo::write_archive_jsonl(out, archive);
  return out.str();
}

nlohmann::json reference_to_json(const metrics::ReferenceFront& ref) {
  return {{"points", ref.points}, {"first_extreme", ref.first_extreme}, {"last_extreme", ref.last_extreme}};
}

metrics::ReferenceFront reference_from_json(const nlohmann::json& j) {
  metrics::ReferenceFront ref;
  ref.points = j.at("points").get<std::vector<emo::Point>>();
  ref.first_extreme = j.at("first_extreme").get<emo::Point>();
  ref.last_extreme = j.at("last_extreme").get<emo::Point>();
  return ref;
}

metrics::ReferenceFront campaign_reference(const std::vector<RunRecord>& runs) {
  std::vector<std::vector<emo::Point>> fronts;
  for (const auto& r : runs) {
    if (r.ok() && !r.archive.empty()) fronts.push_back(values_of(r.archive));
  }
  if (fronts.empty()) return {};
  return metrics::aggregate_reference_front(fronts);
}

nlohmann::json run_json(const RunRecord& r) {
  return {{"run_id", r.run_id},
          {"algorithm", emo::to_string(r.algorithm)},
          {"replicate", r.replicate},
          {"rng_seed", r.rng_seed},
          {"plant_seed", r.plant_seed},
          {"evaluations", r.evaluations},
          {"simulations", r.simulations},
          {"archive_size", r.archive.size()},
          {"status", r.ok() ? "ok" : "failed"},
          {"error", r.error},
          {"metrics",
           {{"hypervolume", optional_json(r.metrics.hypervolume)},
            {"spread", optional_json(r.metrics.spread)},
            {"igd", optional_json(r.metrics.igd)}}}};
}

void write_campaign_files(const fs::path& dir, const ExperimentConfig& cfg, const CampaignResult& result,
                          const attack::SignalRanges& ranges) {
  write_file_atomic(dir / "config.json", experiment_to_json(cfg, false).dump(2) + '\n');
  write_file_atomic(dir / "ranges.json", attack::ranges_to_json(ranges).dump(2) + '\n');
  write_file_atomic(dir / "reference_front.json", reference_to_json(result.reference).dump() + '\n');
  std::ostringstream csv;
  write_metrics_csv(csv, result.runs);
  write_file_atomic(dir / "metrics.csv", csv.str());
  write_file_atomic(dir / "significance.json", result.significance.dump(2) + '\n');

  nlohmann::json timing;
  double total = 0.0;
  for (const auto& r : result.runs) {
    timing["runs"][r.run_id] = r.wall_seconds;
    total += r.wall_seconds;
  }
  timing["total_run_seconds"] = total;
  write_file_atomic(dir / "timing.json", timing.dump(2) + '\n');
  export_plots(result.runs, cfg.problem, dir);
}

void write_run_files(const fs::path& dir, const RunRecord& r) {
  const auto run_dir = dir / r.run_id;
  write_file_atomic(run_dir / "initial_population.jsonl", genomes_jsonl(r.initial_population));
  write_file_atomic(run_dir / "archive.jsonl", archive_text(r.archive));
  std::ostringstream conv;
  emo::write_convergence_csv(conv, r.hypervolume);
  write_file_atomic(run_dir / "convergence.csv", conv.str());
  write_file_atomic(run_dir / "run.json", run_json(r).dump(2) + '\n');
}

std::pair<emo::Algorithm, std::size_t> parse_run_id(const std::string& id) {
  const auto sep = id.rfind('_');
  if (sep == std::string::npos) throw ConfigError("malformed run id '" + id + "'");
  try {
    return {emo::algorithm_from_string(id.substr(0, sep)), std::stoul(id.substr(sep + 1))};
  } catch (const std::invalid_argument&) {
    throw ConfigError("malformed run id '" + id + "'");
  }
}

template <class T>
void read_key(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

} // namespace

// ---------------------------------------------------------------- files

void write_file_atomic(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError(path.parent_path().string() + ": " + ec.message());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(tmp.string() + ": cannot open for writing");
    out << content;
    if (!out.flush()) throw IoError(tmp.string() + ": write failed");
  }
  fs::rename(tmp, path, ec);
  if (ec) throw IoError(path.string() + ": " + ec.message());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// --------------------------------------------------------------- config

nlohmann::json evolution_to_json(const emo::EvolutionConfig& c) {
  return {{"mu", c.mu},
          {"ngens", c.ngens},
          {"cxpb", c.cxpb},
          {"mutpb", c.mutpb},
          {"gene_mut_p", c.gene_mut_p},
          {"tournament_size", c.tournament_size},
          {"rng_seed", c.rng_seed},
          {"two_child_vary", c.two_child_vary},
          {"max_active", c.max_active}};
}

emo::EvolutionConfig evolution_from_json(const nlohmann::json& j, emo::EvolutionConfig c) {
  try {
    read_key(j, "mu", c.mu);
    read_key(j, "ngens", c.ngens);
    read_key(j, "cxpb", c.cxpb);
    read_key(j, "mutpb", c.mutpb);
    read_key(j, "gene_mut_p", c.gene_mut_p);
    read_key(j, "tournament_size", c.tournament_size);
    read_key(j, "rng_seed", c.rng_seed);
    read_key(j, "two_child_vary", c.two_child_vary);
    read_key(j, "max_active", c.max_active);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("evolution: ") + e.what());
  }
  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  if (algorithms.empty()) throw ConfigError("at least one algorithm is required");
  if (replicates == 0) throw ConfigError("replicates must be at least 1");
  if (emo::is_evasion(problem) && !detector) throw ConfigError("evasion problems need a detector reference");
  if (seed_file && seed_count > evolution.mu) throw ConfigError("seed_count must not exceed mu");
  if (!ranges_file && range_runs == 0) throw ConfigError("range_runs must be positive");
  std::set<emo::Algorithm> seen(algorithms.begin(), algorithms.end());
  if (seen.size() != algorithms.size()) throw ConfigError("algorithms must be distinct");
  evolution.validate();
  plant.validate();
}

ExperimentConfig experiment_from_json(const nlohmann::json& j, const fs::path& base_dir) {
  ExperimentConfig c;
  try {
    if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
    if (j.contains("problem")) c.problem = emo::problem_variant_from_string(j.at("problem").get<std::string>());
    if (j.contains("algorithms")) {
      c.algorithms.clear();
      for (const auto& a : j.at("algorithms")) c.algorithms.push_back(emo::algorithm_from_string(a.get<std::string>()));
    } else if (j.contains("algorithm")) {
      c.algorithms = {emo::algorithm_from_string(j.at("algorithm").get<std::string>())};
    }
    if (j.contains("evolution")) c.evolution = evolution_from_json(j.at("evolution"));
    if (j.contains("plant")) c.plant = j.at("plant").get<plant::PlantConfig>();
    if (j.contains("detector") && !j.at("detector").is_null()) {
      const auto& d = j.at("detector");
      c.detector = DetectorReference{resolve(d.at("model").get<std::string>(), base_dir),
                                     resolve(d.at("calibration").get<std::string>(), base_dir)};
    }
    read_key(j, "replicates", c.replicates);
    if (j.contains("seed_file") && !j.at("seed_file").is_null()) {
      c.seed_file = resolve(j.at("seed_file").get<std::string>(), base_dir);
    }
    read_key(j, "seed_count", c.seed_count);
    read_key(j, "range_runs", c.range_runs);
    if (j.contains("ranges_file") && !j.at("ranges_file").is_null()) {
      c.ranges_file = resolve(j.at("ranges_file").get<std::string>(), base_dir);
    }
    if (j.contains("output_dir")) c.output_dir = resolve(j.at("output_dir").get<std::string>(), base_dir);
    read_key(j, "workers", c.workers);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json experiment_to_json(const ExperimentConfig& c, bool with_output) {
  nlohmann::json j;
  j["problem"] = emo::to_string(c.problem);
  j["algorithms"] = nlohmann::json::array();
  for (const auto a : c.algorithms) j["algorithms"].push_back(emo::to_string(a));
  j["evolution"] = evolution_to_json(c.evolution);
  j["plant"] = c.plant;
  j["detector"] = c.detector ? nlohmann::json{{"model", c.detector->model.string()},
                                              {"calibration", c.detector->calibration.string()}}
                             : nlohmann::json(nullptr);
  j["replicates"] = c.replicates;
  j["seed_file"] = c.seed_file ? nlohmann::json(c.seed_file->string()) : nlohmann::json(nullptr);
  j["seed_count"] = c.seed_count;
  j["range_runs"] = c.range_runs;
  j["ranges_file"] = c.ranges_file ? nlohmann::json(c.ranges_file->string()) : nlohmann::json(nullptr);
  if (with_output) j["output_dir"] = c.output_dir.string();
  j["workers"] = c.workers;
  return j;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  const auto text = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return experiment_from_json(j, fs::absolute(path).parent_path());
}

// ------------------------------------------------------------- baseline

BaselineSummary run_baseline(std::size_t n_runs, const plant::PlantConfig& config, std::size_t workers) {
  if (n_runs == 0) throw ContractError("baseline needs at least one run");
  config.validate();
  std::vector<double> costs(n_runs);
  std::vector<char> tripped(n_runs);
  std::vector<std::array<attack::Range, kSignalCount>> extrema(n_runs);

  parallel_for(n_runs, workers, [&](std::size_t i) {
    auto cfg = config;
    cfg.seed = plant::run_seed(config.seed, i);
    auto& ext = extrema[i];
    for (auto& r : ext) r = {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    plant::SimulationOptions options;
    options.record_frames = false;
    options.record_rates = false;
    options.on_frame = [&](const plant::SignalFrame& f) {
      for (std::size_t s = 0; s < kSignalCount; ++s) {
        ext[s].min = std::min(ext[s].min, f.signal(s));
        ext[s].max = std::max(ext[s].max, f.signal(s));
      }
    };
    const auto trace = plant::simulate(attack::AttackSchedule{}, cfg, options);
    costs[i] = trace.operating_cost;
    tripped[i] = trace.shut_down();
  });

  BaselineSummary s;
  s.runs = n_runs;
  s.costs = costs;
  s.shutdowns = static_cast<std::size_t>(std::count(tripped.begin(), tripped.end(), 1));
  s.cost_max = *std::max_element(costs.begin(), costs.end());
  s.cost_min = *std::min_element(costs.begin(), costs.end());
  double sum = 0.0;
  for (const double c : costs) sum += c;
  s.cost_mean = sum / static_cast<double>(n_runs);
  for (std::size_t sig = 0; sig < kSignalCount; ++sig) {
    attack::Range r = extrema[0][sig];
    for (const auto& e : extrema) r = {std::min(r.min, e[sig].min), std::max(r.max, e[sig].max)};
    s.ranges.set(sig, r);
  }
  return s;
}

nlohmann::json baseline_to_json(const BaselineSummary& s) {
  return {{"runs", s.runs},
          {"shutdowns", s.shutdowns},
          {"cost_mean", s.cost_mean},
          {"cost_max", s.cost_max},
          {"cost_min", s.cost_min}};
}

// ---------------------------------------------------------------- sweep

std::vector<SweepRow> run_single_attack_sweep(std::size_t per_cell, const plant::PlantConfig& config,
                                              const attack::SignalRanges& ranges, std::size_t workers) {
  config.validate();
  if (config.horizon_hours <= kAttackStartHour) throw ConfigError("horizon must extend past the attack start hour");
  using attack::AttackKind;
  std::vector<SweepRow> rows(1);
  for (std::size_t sig = 0; sig < kSignalCount; ++sig) {
    for (const auto kind : {AttackKind::DoS, AttackKind::IntegrityMin, AttackKind::IntegrityMax, AttackKind::Replay}) {
      if ((kind == AttackKind::IntegrityMin || kind == AttackKind::IntegrityMax) && !ranges.has(sig)) {
        throw ConfigError("no range recorded for " + signal_name(sig));
      }
      auto& row = rows.emplace_back();
      row.signal = sig;
      row.kind = kind;
    }
  }

  const std::size_t n = rows.size() * per_cell;
  std::vector<double> cost(n);
  std::vector<std::optional<double>> trip(n);
  parallel_for(n, workers, [&](std::size_t task) {
    const auto& row = rows[task / per_cell];
    auto cfg = config;
    cfg.seed = plant::run_seed(config.seed, task % per_cell);
    attack::AttackSchedule schedule({}, ranges);
    if (row.signal) {
      attack::AttackDirective d{*row.signal, row.kind, kAttackStartHour, config.horizon_hours, std::nullopt};
      if (row.kind == AttackKind::Replay) d.replay_src = attack::default_replay_source(kAttackStartHour);
      schedule.add(d);
    }
    plant::SimulationOptions options;
    options.record_frames = false;
    options.record_rates = false;
    const auto trace = plant::simulate(schedule, cfg, options);
    cost[task] = trace.operating_cost;
    if (trace.shutdown_time) trip[task] = *trace.shutdown_time - kAttackStartHour;
  });

  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto& row = rows[r];
    row.runs = per_cell;
    double sum = 0.0;
    for (std::size_t i = r * per_cell; i < (r + 1) * per_cell; ++i) {
      sum += cost[i];
      row.cost_max = i == r * per_cell ? cost[i] : std::max(row.cost_max, cost[i]);
      if (trip[i]) {
        ++row.shutdowns;
        row.shutdown_min = row.shutdown_min ? std::min(*row.shutdown_min, *trip[i]) : *trip[i];
        row.shutdown_max = row.shutdown_max ? std::max(*row.shutdown_max, *trip[i]) : *trip[i];
      }
    }
    row.cost_mean = per_cell > 0 ? sum / static_cast<double>(per_cell) : 0.0;
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "signal,kind,runs,cost_mean,cost_max,shutdowns,shutdown_min,shutdown_max\n";
  for (const auto& r : rows) {
    out << (r.signal ? signal_name(*r.signal) : std::string("none")) << ',' << attack::to_string(r.kind) << ','
        << r.runs << ',' << shortest(r.cost_mean) << ',' << shortest(r.cost_max) << ',' << r.shutdowns << ','
        << optional_cell(r.shutdown_min) << ',' << optional_cell(r.shutdown_max) << '\n';
  }
}

// -------------------------------------------------------- random search

RandomSearchResult run_random_combined(const RandomSearchSettings& settings, const plant::PlantConfig& config,
                                       const attack::SignalRanges& ranges, std::size_t workers) {
  config.validate();
  if (!(settings.bin_hours > 0.0)) throw ConfigError("histogram bin width must be positive");
  RandomSearchResult result;
  result.bin_hours = settings.bin_hours;

  std::set<attack::Genome> seen;
  std::vector<std::pair<attack::Genome, std::size_t>> unique;
  for (std::size_t set = 0; set < settings.sets; ++set) {
    Rng rng(derive_seed(settings.seed, kRandomSearchStream, set));
    for (std::size_t i = 0; i < settings.per_set; ++i) {
      auto g = emo::random_combined_genome(attack::Problem::Shutdown, settings.max_active, rng);
      ++result.drawn;
      if (seen.insert(g).second) unique.emplace_back(std::move(g), set);
    }
  }
  result.unique = unique.size();

  std::vector<emo::ProblemContext> contexts;
  for (std::size_t set = 0; set < settings.sets; ++set) {
    auto cfg = config;
    cfg.seed = plant::run_seed(config.seed, set);
    contexts.push_back(emo::make_context(emo::ProblemVariant::Shutdown, cfg, ranges));
  }
  std::vector<emo::Evaluation> evals(unique.size());
  parallel_for(unique.size(), workers,
               [&](std::size_t i) { evals[i] = emo::evaluate_fitness(unique[i].first, contexts[unique[i].second]); });

  const auto bins = static_cast<std::size_t>(std::ceil(config.horizon_hours / settings.bin_hours));
  result.histogram.assign(std::max<std::size_t>(bins, 1), 0);
  for (std::size_t i = 0; i < unique.size(); ++i) {
    emo::Individual ind;
    ind.genome = unique[i].first;
    ind.fitness = evals[i];
    ind.eval_seed = contexts[unique[i].second].plant.seed;
    ind.evaluated = true;
    result.archive.update(ind);

    const double hours = evals[i].raw[0];
    if (hours >= config.horizon_hours) continue;
    ++result.shutdowns;
    const auto bin = static_cast<std::size_t>(std::max(0.0, hours) / settings.bin_hours);
    ++result.histogram[std::min(bin, result.histogram.size() - 1)];
    const bool better = !result.best || hours < result.best->fitness.raw[0] ||
                        (hours == result.best->fitness.raw[0] && evals[i].raw[1] < result.best->fitness.raw[1]);
    if (better) {
      result.best = ind;
      result.best_set = unique[i].second;
    }
  }
  return result;
}

nlohmann::json random_search_to_json(const RandomSearchResult& r, const attack::SignalRanges& ranges,
                                     double horizon_hours) {
  nlohmann::json j{{"drawn", r.drawn},
                   {"unique", r.unique},
                   {"shutdowns", r.shutdowns},
                   {"bin_hours", r.bin_hours},
                   {"histogram", r.histogram}};
  if (r.best) {
    j["best"] = {{"set", r.best_set},
                 {"plant_seed", r.best->eval_seed},
                 {"genome", r.best->genome},
                 {"hours_to_shutdown", r.best->fitness.raw[0]},
                 {"effort", r.best->fitness.raw[1]},
                 {"schedule", attack::schedule_to_json(attack::decode_genome(r.best->genome, ranges, horizon_hours))}};
  } else {
    j["best"] = nullptr;
  }
  j["archive"] = nlohmann::json::array();
  for (const auto& m : r.archive.members()) {
    j["archive"].push_back({{"genome", m.genome}, {"hours_to_shutdown", m.fitness.raw[0]}, {"effort", m.fitness.raw[1]}});
  }
  return j;
}

// ------------------------------------------------------------- campaign

std::uint64_t replicate_rng_seed(const ExperimentConfig& cfg, std::size_t replicate) {
  return derive_seed(cfg.evolution.rng_seed, kReplicateStream, replicate);
}

std::uint64_t replicate_plant_seed(const ExperimentConfig& cfg, std::size_t replicate) {
  return plant::run_seed(cfg.plant.seed, replicate);
}

std::string run_id(emo::Algorithm algorithm, std::size_t replicate) {
  return std::string(emo::to_string(algorithm)) + "_" + std::to_string(replicate);
}

std::vector<attack::Genome> seed_population(const fs::path& archive_file, std::size_t k, attack::Problem problem,
                                            std::size_t mu, std::uint64_t seed) {
  if (k > mu) throw ContractError("seed count exceeds the population size");
  std::vector<emo::Individual> members;
  {
    std::ifstream in(archive_file);
    if (!in) throw IoError(archive_file.string() + ": cannot open archive");
    try {
      members = emo::read_archive_jsonl(in);
    } catch (const IoError& e) {
      throw IoError(archive_file.string() + ": " + e.what());
    }
  }
  for (const auto& m : members) {
    if (m.genome.problem != problem) throw ConfigError(archive_file.string() + ": archive holds another problem");
    if (m.fitness.values.empty()) throw IoError(archive_file.string() + ": member without objectives");
  }
  std::stable_sort(members.begin(), members.end(), [](const emo::Individual& a, const emo::Individual& b) {
    return a.fitness.values[0] < b.fitness.values[0];
  });
  std::vector<attack::Genome> pop;
  for (std::size_t i = 0; i < std::min(k, members.size()); ++i) pop.push_back(members[i].genome);
  for (auto& g : emo::random_population(problem, mu - pop.size(), seed)) pop.push_back(std::move(g));
  return pop;
}

std::vector<attack::Genome> initial_population(const ExperimentConfig& cfg, std::size_t replicate) {
  const auto problem = emo::genome_problem(cfg.problem);
  const auto seed = emo::initial_population_seed(replicate_rng_seed(cfg, replicate));
  if (cfg.seed_file) return seed_population(*cfg.seed_file, cfg.seed_count, problem, cfg.evolution.mu, seed);
  return emo::random_population(problem, cfg.evolution.mu, seed);
}

CampaignContext load_campaign_context(const ExperimentConfig& cfg) {
  CampaignContext ctx;
  if (cfg.ranges_file) {
    try {
      ctx.ranges = attack::ranges_from_json(parse_json_file(*cfg.ranges_file));
    } catch (const ConfigError& e) {
      throw ConfigError(cfg.ranges_file->string() + ": " + e.what());
    }
  } else {
    ctx.ranges = plant::record_signal_ranges(cfg.range_runs, cfg.plant);
  }
  if (cfg.detector) {
    ctx.detector = std::make_shared<const detect::DetectorModel>(
        detect::DetectorModel::from_json(parse_json_file(cfg.detector->model)));
    ctx.policy = detect::policy_from_json(parse_json_file(cfg.detector->calibration));
  }
  return ctx;
}

RunRecord execute_run(const ExperimentConfig& cfg, const CampaignContext& context, emo::Algorithm algorithm,
                      std::size_t replicate, std::size_t workers) {
  const auto start = std::chrono::steady_clock::now();
  RunRecord r;
  r.run_id = run_id(algorithm, replicate);
  r.algorithm = algorithm;
  r.replicate = replicate;
  r.rng_seed = replicate_rng_seed(cfg, replicate);
  r.plant_seed = replicate_plant_seed(cfg, replicate);
  try {
    auto plant_cfg = cfg.plant;
    plant_cfg.seed = r.plant_seed;
    auto ctx = std::make_shared<const emo::ProblemContext>(
        emo::make_context(cfg.problem, plant_cfg, context.ranges, context.detector, context.policy));
    emo::Evaluator evaluator(emo::make_fitness(ctx), r.plant_seed, workers);
    auto evo = cfg.evolution;
    evo.algorithm = algorithm;
    evo.rng_seed = r.rng_seed;
    r.initial_population = initial_population(cfg, replicate);
    auto result = emo::run_evolution(evo, emo::genome_problem(cfg.problem), evaluator,
                                     emo::convergence_reference(cfg.problem, plant_cfg), r.initial_population);
    r.archive = result.archive.members();
    r.hypervolume = std::move(result.hypervolume);
    r.evaluations = result.evaluations;
    r.simulations = evaluator.computed();
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

RunMetrics score_run(const std::vector<emo::Individual>& archive, const metrics::ReferenceFront& reference,
                     emo::ProblemVariant problem, const plant::PlantConfig& plant) {
  RunMetrics m;
  const auto ref_point = emo::convergence_reference(problem, plant);
  std::vector<emo::Point> inside;
  for (const auto& member : archive) {
    const auto& v = member.fitness.values;
    bool bounded = v.size() == ref_point.size();
    for (std::size_t i = 0; bounded && i < v.size(); ++i) bounded = v[i] <= ref_point[i];
    if (bounded) inside.push_back(v);
  }
  m.hypervolume = metrics::hypervolume(inside, ref_point);
  if (archive.empty() || reference.points.empty()) return m;

  const std::size_t dims = reference.points.front().size();
  emo::Point low(dims, std::numeric_limits<double>::infinity());
  emo::Point high(dims, -std::numeric_limits<double>::infinity());
  for (const auto& p : reference.points) {
    for (std::size_t i = 0; i < dims; ++i) {
      low[i] = std::min(low[i], p[i]);
      high[i] = std::max(high[i], p[i]);
    }
  }
  metrics::ReferenceFront scaled;
  scaled.points = metrics::rescale(reference.points, low, high);
  scaled.first_extreme = metrics::rescale(std::vector<emo::Point>{reference.first_extreme}, low, high).front();
  scaled.last_extreme = metrics::rescale(std::vector<emo::Point>{reference.last_extreme}, low, high).front();
  const auto front = metrics::rescale(values_of(archive), low, high);
  try {
    m.spread = metrics::spread(front, scaled);
  } catch (const MetricError&) {
  }
  try {
    m.igd = metrics::igd(front, scaled);
  } catch (const MetricError&) {
  }
  return m;
}

nlohmann::json significance_report(const std::vector<RunRecord>& runs) {
  std::vector<emo::Algorithm> order;
  for (const auto& r : runs) {
    if (std::find(order.begin(), order.end(), r.algorithm) == order.end()) order.push_back(r.algorithm);
  }
  auto test = [](const std::vector<std::vector<double>>& groups) -> nlohmann::json {
    try {
      const auto kw = metrics::kruskal_wallis(groups);
      return {{"h", kw.h}, {"p", kw.p}, {"significant", kw.p < 0.05}};
    } catch (const MetricError& e) {
      return {{"h", nullptr}, {"p", nullptr}, {"significant", false}, {"note", e.what()}};
    }
  };

  nlohmann::json report{{"confidence", 0.95}, {"metrics", nlohmann::json::object()}};
  const std::pair<const char*, std::optional<double> RunMetrics::*> fields[] = {
      {"hypervolume", &RunMetrics::hypervolume}, {"spread", &RunMetrics::spread}, {"igd", &RunMetrics::igd}};
  for (const auto& [name, field] : fields) {
    std::map<emo::Algorithm, std::vector<double>> values;
    for (const auto a : order) values[a];
    for (const auto& r : runs) {
      if (r.ok() && r.metrics.*field) values[r.algorithm].push_back(*(r.metrics.*field));
    }
    nlohmann::json entry;
    std::vector<std::vector<double>> all;
    for (const auto a : order) all.push_back(values[a]);
    entry["all"] = test(all);
    entry["pairs"] = nlohmann::json::array();
    for (std::size_t i = 0; i < order.size(); ++i) {
      for (std::size_t k = i + 1; k < order.size(); ++k) {
        auto t = test({values[order[i]], values[order[k]]});
        t["a"] = emo::to_string(order[i]);
        t["b"] = emo::to_string(order[k]);
        entry["pairs"].push_back(std::move(t));
      }
    }
    report["metrics"][name] = std::move(entry);
  }
  return report;
}

void write_metrics_csv(std::ostream& out, const std::vector<RunRecord>& runs) {
  out << "run_id,algorithm,hypervolume,spread,igd\n";
  for (const auto& r : runs) {
    out << r.run_id << ',' << emo::to_string(r.algorithm) << ',' << optional_cell(r.metrics.hypervolume) << ','
        << optional_cell(r.metrics.spread) << ',' << optional_cell(r.metrics.igd) << '\n';
  }
}

CampaignResult run_campaign(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto context = load_campaign_context(cfg);

  std::vector<std::pair<emo::Algorithm, std::size_t>> tasks;
  for (std::size_t rep = 0; rep < cfg.replicates; ++rep) {
    for (const auto a : cfg.algorithms) tasks.emplace_back(a, rep);
  }
  const std::size_t outer = std::min(std::max<std::size_t>(cfg.workers, 1), tasks.size());
  const std::size_t inner = std::max<std::size_t>(cfg.workers, 1) / outer;

  CampaignResult result;
  result.runs.resize(tasks.size());
  parallel_for(tasks.size(), outer, [&](std::size_t i) {
    result.runs[i] = execute_run(cfg, context, tasks[i].first, tasks[i].second, inner);
    write_run_files(cfg.output_dir, result.runs[i]);
  });

  result.reference = campaign_reference(result.runs);
  for (auto& r : result.runs) {
    if (!r.ok()) continue;
    auto plant_cfg = cfg.plant;
    plant_cfg.seed = r.plant_seed;
    r.metrics = score_run(r.archive, result.reference, cfg.problem, plant_cfg);
    write_file_atomic(cfg.output_dir / r.run_id / "run.json", run_json(r).dump(2) + '\n');
  }
  result.significance = significance_report(result.runs);
  write_campaign_files(cfg.output_dir, cfg, result, context.ranges);
  return result;
}

LoadedCampaign load_campaign(const fs::path& dir) {
  LoadedCampaign c;
  c.config = experiment_from_json(parse_json_file(dir / "config.json"), dir);
  c.config.output_dir = dir;
  for (std::size_t rep = 0; rep < c.config.replicates; ++rep) {
    for (const auto a : c.config.algorithms) {
      RunRecord r;
      r.run_id = run_id(a, rep);
      r.algorithm = a;
      r.replicate = rep;
      const auto run_dir = dir / r.run_id;
      const auto meta = parse_json_file(run_dir / "run.json");
      r.rng_seed = meta.at("rng_seed").get<std::uint64_t>();
      r.plant_seed = meta.at("plant_seed").get<std::uint64_t>();
      r.evaluations = meta.at("evaluations").get<std::size_t>();
      r.simulations = meta.at("simulations").get<std::size_t>();
      r.error = meta.at("error").get<std::string>();
      const auto& m = meta.at("metrics");
      r.metrics = {optional_from(m, "hypervolume"), optional_from(m, "spread"), optional_from(m, "igd")};
      if (r.ok()) {
        std::istringstream archive(read_file(run_dir / "archive.jsonl"));
        try {
          r.archive = emo::read_archive_jsonl(archive);
        } catch (const IoError& e) {
          throw IoError((run_dir / "archive.jsonl").string() + ": " + e.what());
        }
        r.hypervolume = convergence_from_csv(read_file(run_dir / "convergence.csv"), run_dir / "convergence.csv");
        r.initial_population = genomes_from_jsonl(read_file(run_dir / "initial_population.jsonl"),
                                                  run_dir / "initial_population.jsonl");
      }
      c.runs.push_back(std::move(r));
    }
  }
  return c;
}

CampaignResult recompute_metrics(const LoadedCampaign& campaign) {
  CampaignResult result;
  result.runs = campaign.runs;
  result.reference = campaign_reference(result.runs);
  for (auto& r : result.runs) {
    r.metrics = {};
    if (!r.ok()) continue;
    auto plant_cfg = campaign.config.plant;
    plant_cfg.seed = r.plant_seed;
    r.metrics = score_run(r.archive, result.reference, campaign.config.problem, plant_cfg);
  }
  result.significance = significance_report(result.runs);
  return result;
}

RunRecord replay_run(const fs::path& campaign_dir, const std::string& id) {
  auto cfg = experiment_from_json(parse_json_file(campaign_dir / "config.json"), campaign_dir);
  const auto [algorithm, replicate] = parse_run_id(id);
  if (replicate >= cfg.replicates ||
      std::find(cfg.algorithms.begin(), cfg.algorithms.end(), algorithm) == cfg.algorithms.end()) {
    throw ConfigError("run '" + id + "' is not part of the campaign");
  }
  cfg.ranges_file = campaign_dir / "ranges.json";
  const auto context = load_campaign_context(cfg);
  auto r = execute_run(cfg, context, algorithm, replicate, std::max<std::size_t>(cfg.workers, 1));
  if (r.ok()) {
    const auto reference = reference_from_json(parse_json_file(campaign_dir / "reference_front.json"));
    auto plant_cfg = cfg.plant;
    plant_cfg.seed = r.plant_seed;
    r.metrics = score_run(r.archive, reference, cfg.problem, plant_cfg);
  }
  return r;
}

// ---------------------------------------------------------------- plots

std::vector<std::string> objective_names(emo::ProblemVariant problem) {
  switch (problem) {
  case emo::ProblemVariant::Shutdown: return {"hours_to_shutdown", "effort"};
  case emo::ProblemVariant::OpCost: return {"operating_cost", "effort"};
  case emo::ProblemVariant::Evasion2: return {"damage", "detection_probability"};
  case emo::ProblemVariant::Evasion3: return {"damage", "detection_probability", "effort"};
  }
  return {};
}

void export_plots(const std::vector<RunRecord>& runs, emo::ProblemVariant problem, const fs::path& dir) {
  if (runs.empty()) throw ContractError("export_plots needs at least one run");
  const auto plots = dir / "plots";
  const auto names = objective_names(problem);
  std::string header;
  for (std::size_t i = 0; i < names.size(); ++i) header += (i ? "," : "") + names[i];

  std::ostringstream box;
  box << "algorithm,run_id,metric,value\n";
  for (const auto& r : runs) {
    std::ostringstream front;
    front << header << '\n';
    for (const auto& m : r.archive) {
      for (std::size_t i = 0; i < m.fitness.raw.size(); ++i) front << (i ? "," : "") << shortest(m.fitness.raw[i]);
      front << '\n';
    }
    write_file_atomic(plots / ("front_" + r.run_id + ".csv"), front.str());

    std::ostringstream series;
    emo::write_convergence_csv(series, r.hypervolume);
    write_file_atomic(plots / ("hypervolume_" + r.run_id + ".csv"), series.str());

    const std::pair<const char*, const std::optional<double>*> values[] = {
        {"hypervolume", &r.metrics.hypervolume}, {"spread", &r.metrics.spread}, {"igd", &r.metrics.igd}};
    for (const auto& [name, v] : values) {
      if (*v) box << emo::to_string(r.algorithm) << ',' << r.run_id << ',' << name << ',' << shortest(**v) << '\n';
    }
  }
  write_file_atomic(plots / "metrics_boxplot.csv", box.str());
}

} // namespace icsatk::harness
