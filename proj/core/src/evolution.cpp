#include "icsatk/evolution.hpp"

#include "icsatk/errors.hpp"
#include "icsatk/metrics.hpp"
#include "icsatk/parallel.hpp"
#include "icsatk/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <exception>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>

namespace icsatk::emo {
namespace {

constexpr std::uint64_t kVaryStream = 0x76617279;
constexpr std::uint64_t kInitStream = 0x696e6974;

std::vector<Point> points_of(const std::vector<Individual>& pop) {
  std::vector<Point> pts;
  pts.reserve(pop.size());
  for (const auto& ind : pop) pts.push_back(ind.fitness.values);
  return pts;
}

double archive_hypervolume(const ParetoArchive& archive, const Point& reference) {
  std::vector<Point> inside;
  for (auto& p : archive.points()) {
    bool bounded = p.size() == reference.size();
    for (std::size_t i = 0; bounded && i < p.size(); ++i) bounded = p[i] <= reference[i];
    if (bounded) inside.push_back(std::move(p));
  }
  return metrics::hypervolume(inside, reference);
}

Individual fresh(const attack::Genome& g) {
  Individual ind;
  ind.genome = g;
  return ind;
}

} // namespace

std::size_t Evaluator::KeyHash::operator()(const Key& k) const noexcept {
  return std::hash<attack::Genome>{}(k.genome) ^ static_cast<std::size_t>(mix64(k.seed));
}

Evaluator::Evaluator(FitnessFunction fitness, std::uint64_t eval_seed, std::size_t workers)
    : fitness_(std::move(fitness)), eval_seed_(eval_seed), workers_(std::max<std::size_t>(workers, 1)) {
  if (!fitness_) throw ContractError("evaluator needs a fitness function");
}

Evaluation Evaluator::evaluate(const attack::Genome& genome) {
  std::vector<Individual> one{fresh(genome)};
  evaluate(one);
  return one.front().fitness;
}

void Evaluator::evaluate(std::vector<Individual>& population) {
  std::vector<Key> misses;
  for (const auto& ind : population) {
    Key key{ind.genome, eval_seed_};
    if (!cache_.contains(key) && std::find(misses.begin(), misses.end(), key) == misses.end()) {
      misses.push_back(std::move(key));
    }
  }

  std::vector<std::optional<Evaluation>> results(misses.size());
  std::vector<std::exception_ptr> failures(misses.size());
  parallel_for(misses.size(), workers_, [&](std::size_t i) {
    try {
      results[i] = fitness_(misses[i].genome);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  });

  for (std::size_t i = 0; i < misses.size(); ++i) {
    if (failures[i]) {
      try {
        std::rethrow_exception(failures[i]);
      } catch (const std::exception& e) {
        throw EvaluationError(std::string("fitness evaluation failed: ") + e.what());
      }
    }
    cache_.emplace(misses[i], std::move(*results[i]));
  }
  computed_ += misses.size();
  requests_ += population.size();
  for (auto& ind : population) {
    ind.fitness = cache_.at(Key{ind.genome, eval_seed_});
    ind.eval_seed = eval_seed_;
    ind.evaluated = true;
  }
}

bool ParetoArchive::update(const Individual& candidate) {
  if (candidate.fitness.penalized || !candidate.evaluated) return false;
  const auto& v = candidate.fitness.values;
  for (const auto& m : members_) {
    if (m.genome == candidate.genome || dominates(m.fitness.values, v)) return false;
  }
  std::erase_if(members_, [&](const Individual& m) { return dominates(v, m.fitness.values); });
  members_.push_back(candidate);
  return true;
}

void ParetoArchive::update(const std::vector<Individual>& population) {
  for (const auto& ind : population) update(ind);
}

std::vector<Point> ParetoArchive::points() const { return points_of(members_); }

std::string_view to_string(Algorithm algorithm) {
  switch (algorithm) {
  case Algorithm::NSGA2: return "nsga2";
  case Algorithm::SPEA2: return "spea2";
  case Algorithm::Random: return "random";
  }
  return "unknown";
}

Algorithm algorithm_from_string(std::string_view name) {
  for (const auto a : {Algorithm::NSGA2, Algorithm::SPEA2, Algorithm::Random}) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

void EvolutionConfig::validate() const {
  const auto probability = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (mu < 2) throw ConfigError("mu must be at least 2");
  if (!probability(cxpb) || !probability(mutpb) || !probability(gene_mut_p)) {
    throw ConfigError("cxpb, mutpb and gene_mut_p must lie in [0, 1]");
  }
  if (cxpb + mutpb > 1.0) throw ConfigError("cxpb + mutpb must not exceed 1");
  if (tournament_size == 0) throw ConfigError("tournament size must be positive");
}

attack::Genome random_genome(attack::Problem problem, Rng& rng) {
  attack::Genome g;
  g.problem = problem;
  const std::uint32_t codes = attack::alphabet_size(problem) - 1;
  const double density = rng.uniform();
  for (auto& gene : g.genes) {
    if (rng.bernoulli(density)) gene = 1 + static_cast<std::uint32_t>(rng.below(codes));
  }
  return g;
}

std::uint64_t initial_population_seed(std::uint64_t rng_seed) { return derive_seed(rng_seed, kInitStream); }

std::vector<attack::Genome> random_population(attack::Problem problem, std::size_t mu, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<attack::Genome> pop;
  pop.reserve(mu);
  for (std::size_t i = 0; i < mu; ++i) pop.push_back(random_genome(problem, rng));
  return pop;
}

attack::Genome random_combined_genome(attack::Problem problem, std::size_t max_active, Rng& rng) {
  const auto& table = attack::encoding_table(problem);
  double earliest = table.front().t_start;
  for (const auto& c : table) earliest = std::min(earliest, c.t_start);
  std::vector<std::uint32_t> early;
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (table[i].t_start == earliest) early.push_back(static_cast<std::uint32_t>(i + 1));
  }
  max_active = std::min(max_active, kSignalCount);

  // Uniform over the schedule set: k attacked signals admit C(25, k) * codes^k schedules.
  std::vector<double> weight(max_active + 1);
  double count = 1.0;
  for (std::size_t k = 0; k <= max_active; ++k) {
    weight[k] = count;
    count *= static_cast<double>(kSignalCount - k) / static_cast<double>(k + 1) * static_cast<double>(early.size());
  }
  double u = rng.uniform() * std::accumulate(weight.begin(), weight.end(), 0.0);
  std::size_t k = max_active;
  for (std::size_t i = 0; i <= max_active; ++i) {
    if (u < weight[i]) {
      k = i;
      break;
    }
    u -= weight[i];
  }

  std::array<std::size_t, kSignalCount> positions{};
  for (std::size_t i = 0; i < kSignalCount; ++i) positions[i] = i;
  attack::Genome g;
  g.problem = problem;
  for (std::size_t a = 0; a < k; ++a) {
    const auto b = a + static_cast<std::size_t>(rng.below(kSignalCount - a));
    std::swap(positions[a], positions[b]);
    g.genes[positions[a]] = early[rng.below(early.size())];
  }
  return g;
}

std::pair<attack::Genome, attack::Genome> two_point_crossover_at(const attack::Genome& a, const attack::Genome& b,
                                                                 std::size_t p, std::size_t q) {
  if (p > q || q > kSignalCount) throw ContractError("crossover cut points must satisfy p <= q <= 25");
  auto c1 = a;
  auto c2 = b;
  for (std::size_t i = p; i < q; ++i) std::swap(c1.genes[i], c2.genes[i]);
  return {c1, c2};
}

std::pair<attack::Genome, attack::Genome> two_point_crossover(const attack::Genome& a, const attack::Genome& b,
                                                              Rng& rng) {
  auto p = static_cast<std::size_t>(rng.between(1, kSignalCount));
  auto q = static_cast<std::size_t>(rng.between(1, kSignalCount - 1));
  if (q >= p) {
    ++q;
  } else {
    std::swap(p, q);
  }
  return two_point_crossover_at(a, b, p, q);
}

attack::Genome uniform_mutate(const attack::Genome& genome, double gene_mut_p, Rng& rng) {
  auto g = genome;
  const std::uint32_t n = attack::alphabet_size(g.problem);
  for (auto& gene : g.genes) {
    if (rng.bernoulli(gene_mut_p)) gene = static_cast<std::uint32_t>(rng.below(n));
  }
  return g;
}

VaryResult vary(const std::vector<Individual>& population, const EvolutionConfig& cfg, Rng& rng,
                const std::function<bool(std::size_t, std::size_t)>& better) {
  VaryResult out;
  const std::size_t n = population.size();
  auto pick = [&]() -> const Individual& { return population[tournament_select(n, cfg.tournament_size, rng, better)]; };
  while (out.offspring.size() < cfg.mu) {
    const double u = rng.uniform();
    if (u < cfg.cxpb) {
      const auto& a = pick();
      const auto& b = pick();
      auto [c1, c2] = two_point_crossover(a.genome, b.genome, rng);
      out.offspring.push_back(fresh(c1));
      if (cfg.two_child_vary && out.offspring.size() < cfg.mu) out.offspring.push_back(fresh(c2));
      out.branches.push_back(VaryBranch::Crossover);
    } else if (u < cfg.cxpb + cfg.mutpb) {
      out.offspring.push_back(fresh(uniform_mutate(pick().genome, cfg.gene_mut_p, rng)));
      out.branches.push_back(VaryBranch::Mutation);
    } else {
      out.offspring.push_back(pick());
      out.branches.push_back(VaryBranch::Reproduction);
    }
  }
  return out;
}

EvolutionResult run_evolution(const EvolutionConfig& cfg, attack::Problem problem, Evaluator& evaluator,
                              const Point& reference, std::vector<attack::Genome> initial,
                              const std::function<void(const GenerationLog&)>& on_generation) {
  cfg.validate();
  if (initial.empty()) initial = random_population(problem, cfg.mu, initial_population_seed(cfg.rng_seed));
  if (initial.size() != cfg.mu) throw ContractError("initial population must hold mu genomes");
  for (const auto& g : initial) {
    if (g.problem != problem) throw ContractError("initial genome belongs to another problem");
    g.validate();
  }

  EvolutionResult result;
  result.initial_population = initial;
  Rng rng(derive_seed(cfg.rng_seed, kVaryStream));

  std::vector<Individual> pop;
  pop.reserve(cfg.mu);
  for (const auto& g : initial) pop.push_back(fresh(g));
  const std::size_t requests_before = evaluator.requests();
  evaluator.evaluate(pop);
  result.archive.update(pop);

  auto log = [&](std::size_t gen) {
    result.hypervolume.push_back(archive_hypervolume(result.archive, reference));
    if (on_generation) on_generation({gen, result.hypervolume.back(), result.archive.size()});
  };
  log(0);

  for (std::size_t gen = 1; gen <= cfg.ngens; ++gen) {
    std::vector<Individual> offspring;
    if (cfg.algorithm == Algorithm::Random) {
      for (std::size_t i = 0; i < cfg.mu; ++i) offspring.push_back(fresh(random_combined_genome(problem, cfg.max_active, rng)));
      evaluator.evaluate(offspring);
      pop = offspring;
    } else {
      const auto pts = points_of(pop);
      if (cfg.algorithm == Algorithm::NSGA2) {
        const auto rc = rank_and_crowding(pts);
        auto better = [&](std::size_t a, std::size_t b) {
          return rc.rank[a] < rc.rank[b] || (rc.rank[a] == rc.rank[b] && rc.crowding[a] > rc.crowding[b]);
        };
        for (std::size_t i = 0; i < cfg.mu; ++i) {
          offspring.push_back(pop[tournament_select(pop.size(), cfg.tournament_size, rng, better)]);
        }
        for (std::size_t i = 1; i < offspring.size(); i += 2) {
          if (rng.bernoulli(cfg.cxpb)) {
            auto [c1, c2] = two_point_crossover(offspring[i - 1].genome, offspring[i].genome, rng);
            offspring[i - 1] = fresh(c1);
            offspring[i] = fresh(c2);
          }
        }
        for (auto& child : offspring) {
          if (rng.bernoulli(cfg.mutpb)) child = fresh(uniform_mutate(child.genome, cfg.gene_mut_p, rng));
        }
      } else {
        const auto fit = spea2_fitness(pts);
        offspring = vary(pop, cfg, rng, [&](std::size_t a, std::size_t b) { return fit[a] < fit[b]; }).offspring;
      }
      evaluator.evaluate(offspring);

      std::vector<Individual> combined = pop;
      combined.insert(combined.end(), offspring.begin(), offspring.end());
      const auto combined_pts = points_of(combined);
      const auto survivors = cfg.algorithm == Algorithm::NSGA2 ? select_nsga2(combined_pts, cfg.mu)
                                                               : select_spea2(combined_pts, cfg.mu);
      std::vector<Individual> next;
      next.reserve(cfg.mu);
      for (const auto i : survivors) next.push_back(combined[i]);
      pop = std::move(next);
    }
    result.archive.update(offspring);
    log(gen);
  }
  result.final_population = std::move(pop);
  result.evaluations = evaluator.requests() - requests_before;
  return result;
}

void write_archive_jsonl(std::ostream& out, const ParetoArchive& archive) {
  for (const auto& m : archive.members()) {
    nlohmann::json j;
    j["genome"] = m.genome.genes;
    j["problem"] = attack::to_string(m.genome.problem);
    j["objectives_raw"] = m.fitness.raw;
    j["objectives"] = m.fitness.values;
    j["eval_seed"] = m.eval_seed;
    out << j.dump() << '\n';
  }
}

std::vector<Individual> read_archive_jsonl(std::istream& in) {
  std::vector<Individual> members;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Individual ind;
      attack::from_json(nlohmann::json{{"problem", j.at("problem")}, {"genes", j.at("genome")}}, ind.genome);
      ind.fitness.raw = j.at("objectives_raw").get<Point>();
      ind.fitness.values = j.at("objectives").get<Point>();
      ind.eval_seed = j.at("eval_seed").get<std::uint64_t>();
      ind.evaluated = true;
      members.push_back(std::move(ind));
    } catch (const std::exception& e) {
      throw IoError("archive line " + std::to_string(number) + ": " + e.what());
    }
  }
  return members;
}

void write_convergence_csv(std::ostream& out, const std::vector<double>& hypervolume) {
  out << "generation,hypervolume\n";
  for (std::size_t g = 0; g < hypervolume.size(); ++g) out << g << ',' << shortest(hypervolume[g]) << '\n';
}

} // namespace icsatk::emo
