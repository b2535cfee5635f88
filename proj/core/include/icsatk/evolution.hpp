#pragma once

#include "icsatk/genome.hpp"
#include "icsatk/pareto.hpp"
#include "icsatk/rng.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <mutex>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace icsatk::emo {

/// Objectives of one genome: `values` are minimized, `raw` are reported.
struct Evaluation {
  Point values;
  Point raw;
  /// Shutdown sentinel of the evasion problems; never archived.
  bool penalized = false;

  friend bool operator==(const Evaluation&, const Evaluation&) = default;
};

struct Individual {
  attack::Genome genome;
  Evaluation fitness;
  std::uint64_t eval_seed = 0;
  bool evaluated = false;
};

using FitnessFunction = std::function<Evaluation(const attack::Genome&)>;

/// Evaluates populations through a (genome, eval_seed) cache, spreading
/// cache misses over worker threads. Results are written back in population
/// order, so the worker count never changes outcomes.
class Evaluator {
public:
  Evaluator(FitnessFunction fitness, std::uint64_t eval_seed, std::size_t workers = 1);

  /// Throws EvaluationError (with the genome position) when a fitness call fails.
  void evaluate(std::vector<Individual>& population);
  Evaluation evaluate(const attack::Genome& genome);

  /// Fitness requests, including cache hits.
  [[nodiscard]] std::size_t requests() const { return requests_; }
  /// Fitness function calls.
  [[nodiscard]] std::size_t computed() const { return computed_; }
  [[nodiscard]] std::uint64_t eval_seed() const { return eval_seed_; }

private:
  struct Key {
    attack::Genome genome;
    std::uint64_t seed;
    friend bool operator==(const Key&, const Key&) = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept;
  };

  FitnessFunction fitness_;
  std::uint64_t eval_seed_;
  std::size_t workers_;
  std::unordered_map<Key, Evaluation, KeyHash> cache_;
  std::size_t requests_ = 0;
  std::size_t computed_ = 0;
};

/// Non-dominated set of every individual ever offered, without duplicate
/// genomes or penalized members. Members keep insertion order.
class ParetoArchive {
public:
  /// Returns true when `candidate` was inserted.
  bool update(const Individual& candidate);
  void update(const std::vector<Individual>& population);

  [[nodiscard]] const std::vector<Individual>& members() const { return members_; }
  [[nodiscard]] std::vector<Point> points() const;
  [[nodiscard]] std::size_t size() const { return members_.size(); }

private:
  std::vector<Individual> members_;
};

enum class Algorithm : std::uint8_t { NSGA2, SPEA2, Random };

std::string_view to_string(Algorithm algorithm);
Algorithm algorithm_from_string(std::string_view name);

struct EvolutionConfig {
  std::size_t mu = 100;
  std::size_t ngens = 500;
  double cxpb = 0.9;
  double mutpb = 0.05;
  double gene_mut_p = 0.05;
  std::size_t tournament_size = 2;
  Algorithm algorithm = Algorithm::SPEA2;
  std::uint64_t rng_seed = 1;
  /// vary() appends both crossover children instead of the first only.
  bool two_child_vary = false;
  /// Largest attack count drawn by the Random algorithm.
  std::size_t max_active = 7;

  /// Throws ConfigError on mu < 2, probabilities outside [0, 1],
  /// cxpb + mutpb > 1 or a zero tournament size.
  void validate() const;
};

/// Random genome: a density d ~ U(0,1) is drawn, then each gene is active with
/// probability d and uniform over the nonzero codes.
attack::Genome random_genome(attack::Problem problem, Rng& rng);

/// mu random genomes from a seed. Identical seeds give identical populations.
std::vector<attack::Genome> random_population(attack::Problem problem, std::size_t mu, std::uint64_t seed);

/// A schedule drawn uniformly from all genomes with at most `max_active`
/// attacked signals whose codes start at the earliest start hour.
attack::Genome random_combined_genome(attack::Problem problem, std::size_t max_active, Rng& rng);

/// Swaps genes [p, q) between the parents.
std::pair<attack::Genome, attack::Genome> two_point_crossover_at(const attack::Genome& a, const attack::Genome& b,
                                                                 std::size_t p, std::size_t q);
/// Cut points 1 <= p < q <= 25 drawn uniformly.
std::pair<attack::Genome, attack::Genome> two_point_crossover(const attack::Genome& a, const attack::Genome& b,
                                                              Rng& rng);
/// Each gene is redrawn from the full alphabet with probability `gene_mut_p`.
attack::Genome uniform_mutate(const attack::Genome& genome, double gene_mut_p, Rng& rng);

enum class VaryBranch : std::uint8_t { Crossover, Mutation, Reproduction };

/// Offspring of one vary() call and the branch taken by each iteration.
struct VaryResult {
  std::vector<Individual> offspring;
  std::vector<VaryBranch> branches;
};

/// mu iterations; each picks crossover (prob cxpb), mutation (mutpb) or
/// reproduction of tournament-selected parents, with `better` ordering the
/// tournament.
VaryResult vary(const std::vector<Individual>& population, const EvolutionConfig& cfg, Rng& rng,
                const std::function<bool(std::size_t, std::size_t)>& better);

struct GenerationLog {
  std::size_t generation = 0;
  double hypervolume = 0.0;
  std::size_t archive_size = 0;
};

struct EvolutionResult {
  ParetoArchive archive;
  /// Archive hypervolume after each generation, generation 0 included.
  std::vector<double> hypervolume;
  std::vector<attack::Genome> initial_population;
  std::vector<Individual> final_population;
  std::size_t evaluations = 0;
};

/// Runs the chosen algorithm: evaluate the initial population, then per
/// generation vary, evaluate offspring, select mu from parents + offspring and
/// update the archive. Random replaces variation and selection by fresh
/// random_combined_genome batches of mu. When `initial` is empty the initial
/// population is random_population(problem, mu, derived from rng_seed).
EvolutionResult run_evolution(const EvolutionConfig& cfg, attack::Problem problem, Evaluator& evaluator,
                              const Point& reference, std::vector<attack::Genome> initial = {},
                              const std::function<void(const GenerationLog&)>& on_generation = {});

/// Seed stream of the initial population of a run seed.
std::uint64_t initial_population_seed(std::uint64_t rng_seed);

/// One JSON line per member: `{genome, problem, objectives_raw, objectives,
/// eval_seed}` where `objectives` holds the minimized form.
void write_archive_jsonl(std::ostream& out, const ParetoArchive& archive);
/// Throws IoError on a malformed line.
std::vector<Individual> read_archive_jsonl(std::istream& in);
/// `generation,hypervolume`
void write_convergence_csv(std::ostream& out, const std::vector<double>& hypervolume);

} // namespace icsatk::emo
