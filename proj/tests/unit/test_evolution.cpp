#include "icsatk/errors.hpp"
#include "icsatk/evolution.hpp"
#include "icsatk/genome.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <sstream>

namespace icsatk::emo {
namespace {

using attack::Genome;
using attack::Problem;

/// Cheap two-objective stand-in for the plant: a weighted gene sum and the
/// number of attacked signals, both minimized.
Evaluation toy_fitness(const Genome& g) {
  double score = 0.0;
  for (std::size_t i = 0; i < g.genes.size(); ++i) {
    score += g.genes[i] == 0 ? 1.0 : static_cast<double>((g.genes[i] * 7 + i) % 11) / 11.0;
  }
  const auto effort = static_cast<double>(g.active());
  return {{score, effort}, {score, effort}, false};
}

const Point kToyReference{26.0, 26.0};

Individual evaluated(const Genome& g) {
  Individual ind;
  ind.genome = g;
  ind.fitness = toy_fitness(g);
  ind.evaluated = true;
  return ind;
}

Genome genome_with(std::initializer_list<std::pair<std::size_t, std::uint32_t>> genes,
                   Problem p = Problem::Shutdown) {
  Genome g;
  g.problem = p;
  for (auto [i, v] : genes) g.genes[i] = v;
  return g;
}

TEST(Crossover, ExchangesSegmentBetweenCuts) {
  Rng rng(1);
  const auto a = random_genome(Problem::Shutdown, rng);
  const auto b = random_genome(Problem::Shutdown, rng);
  const auto [c1, c2] = two_point_crossover_at(a, b, 5, 12);
  for (std::size_t i = 0; i < kSignalCount; ++i) {
    const bool inside = i >= 5 && i < 12;
    EXPECT_EQ(c1.genes[i], inside ? b.genes[i] : a.genes[i]);
    EXPECT_EQ(c2.genes[i], inside ? a.genes[i] : b.genes[i]);
  }
  EXPECT_THROW(two_point_crossover_at(a, b, 6, 5), ContractError);
  EXPECT_THROW(two_point_crossover_at(a, b, 0, 26), ContractError);
}

TEST(Crossover, EmptySegmentOrEqualParentsGiveParents) {
  Rng rng(2);
  const auto a = random_genome(Problem::OpCost, rng);
  const auto b = random_genome(Problem::OpCost, rng);
  const auto [c1, c2] = two_point_crossover_at(a, b, 7, 7);
  EXPECT_EQ(c1, a);
  EXPECT_EQ(c2, b);
  for (int i = 0; i < 50; ++i) {
    const auto [d1, d2] = two_point_crossover(a, a, rng);
    EXPECT_EQ(d1, a);
    EXPECT_EQ(d2, a);
  }
}

TEST(Crossover, PreservesGenesPerPositionAndSwapsOneContiguousSegment) {
  Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    auto a = genome_with({});
    auto b = genome_with({});
    for (std::size_t i = 0; i < kSignalCount; ++i) {
      a.genes[i] = static_cast<std::uint32_t>(1 + i);
      b.genes[i] = static_cast<std::uint32_t>(100 + i);
    }
    const auto [c1, c2] = two_point_crossover(a, b, rng);
    std::vector<std::size_t> swapped;
    for (std::size_t i = 0; i < kSignalCount; ++i) {
      const std::multiset<std::uint32_t> parents{a.genes[i], b.genes[i]};
      const std::multiset<std::uint32_t> children{c1.genes[i], c2.genes[i]};
      ASSERT_EQ(parents, children);
      if (c1.genes[i] != a.genes[i]) swapped.push_back(i);
    }
    ASSERT_FALSE(swapped.empty());
    EXPECT_EQ(swapped.back() - swapped.front() + 1, swapped.size());
  }
}

TEST(Mutation, ZeroProbabilityIsIdentity) {
  Rng rng(4);
  const auto g = random_genome(Problem::Evasion, rng);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(uniform_mutate(g, 0.0, rng), g);
}

TEST(Mutation, FullProbabilityStaysInAlphabet) {
  Rng rng(5);
  for (auto p : {Problem::Shutdown, Problem::OpCost, Problem::Evasion}) {
    for (int i = 0; i < 200; ++i) EXPECT_NO_THROW(uniform_mutate(random_genome(p, rng), 1.0, rng).validate());
  }
}

TEST(Mutation, EmpiricalChangeRateMatchesProbability) {
  Rng rng(6);
  const double p = 0.05;
  const double a = attack::alphabet_size(Problem::Shutdown);
  std::size_t changed = 0;
  std::size_t genes = 0;
  while (genes < 100000) {
    const auto g = random_genome(Problem::Shutdown, rng);
    const auto m = uniform_mutate(g, p, rng);
    for (std::size_t i = 0; i < kSignalCount; ++i) changed += g.genes[i] != m.genes[i];
    genes += kSignalCount;
  }
  // A redrawn gene keeps its value with probability 1/|alphabet|.
  const double q = p * (a - 1.0) / a;
  const double sigma = std::sqrt(q * (1.0 - q) / static_cast<double>(genes));
  EXPECT_NEAR(static_cast<double>(changed) / static_cast<double>(genes), q, 3.0 * sigma);
}

std::vector<Individual> toy_population(std::size_t n, std::uint64_t seed) {
  std::vector<Individual> pop;
  for (const auto& g : random_population(Problem::Shutdown, n, seed)) pop.push_back(evaluated(g));
  return pop;
}

TEST(Vary, NoCrossoverNoMutationCopiesParents) {
  const auto pop = toy_population(20, 7);
  EvolutionConfig cfg;
  cfg.mu = 20;
  cfg.cxpb = 0.0;
  cfg.mutpb = 0.0;
  Rng rng(8);
  const auto out = vary(pop, cfg, rng, [](std::size_t a, std::size_t b) { return a < b; });
  ASSERT_EQ(out.offspring.size(), 20u);
  for (const auto& child : out.offspring) {
    EXPECT_TRUE(std::any_of(pop.begin(), pop.end(), [&](const Individual& p) { return p.genome == child.genome; }));
  }
  for (auto b : out.branches) EXPECT_EQ(b, VaryBranch::Reproduction);
}

TEST(Vary, AlwaysProducesMuValidOffspring) {
  const auto pop = toy_population(15, 9);
  Rng rng(10);
  for (bool two : {false, true}) {
    for (double cx : {0.0, 0.5, 0.9, 1.0}) {
      EvolutionConfig cfg;
      cfg.mu = 15;
      cfg.cxpb = cx;
      cfg.mutpb = 1.0 - cx;
      cfg.two_child_vary = two;
      const auto out = vary(pop, cfg, rng, [](std::size_t a, std::size_t b) { return a < b; });
      ASSERT_EQ(out.offspring.size(), 15u);
      for (const auto& c : out.offspring) EXPECT_NO_THROW(c.genome.validate());
    }
  }
}

TEST(Vary, BranchFrequenciesMatchProbabilities) {
  const auto pop = toy_population(30, 11);
  EvolutionConfig cfg;
  cfg.mu = 10000;
  cfg.cxpb = 0.6;
  cfg.mutpb = 0.3;
  Rng rng(12);
  const auto out = vary(pop, cfg, rng, [](std::size_t a, std::size_t b) { return a < b; });
  ASSERT_EQ(out.branches.size(), 10000u);
  const double n = 10000.0;
  const double expected[] = {0.6, 0.3, 0.1};
  for (int b = 0; b < 3; ++b) {
    const auto count = std::count(out.branches.begin(), out.branches.end(), static_cast<VaryBranch>(b));
    const double sigma = std::sqrt(expected[b] * (1 - expected[b]) / n);
    EXPECT_NEAR(static_cast<double>(count) / n, expected[b], 3.0 * sigma) << "branch " << b;
  }
}

TEST(Archive, RejectsDominatedAndDuplicates) {
  ParetoArchive archive;
  Individual a;
  a.genome = genome_with({{0, 1}});
  a.fitness.values = {1.0, 1.0};
  a.evaluated = true;
  EXPECT_TRUE(archive.update(a));
  auto worse = a;
  worse.genome = genome_with({{1, 1}});
  worse.fitness.values = {2.0, 2.0};
  EXPECT_FALSE(archive.update(worse));
  EXPECT_FALSE(archive.update(a));
  EXPECT_EQ(archive.size(), 1u);
  auto penalized = a;
  penalized.genome = genome_with({{2, 1}});
  penalized.fitness.values = {0.0, 0.0};
  penalized.fitness.penalized = true;
  EXPECT_FALSE(archive.update(penalized));
  EXPECT_EQ(archive.size(), 1u);
}

TEST(Archive, DominatingInsertRemovesDominatedMembers) {
  ParetoArchive archive;
  const Point pts[] = {{1, 4}, {2, 3}, {3, 2}, {4, 1}};
  for (std::uint32_t i = 0; i < 4; ++i) {
    Individual ind;
    ind.genome = genome_with({{i, 1}});
    ind.fitness.values = pts[i];
    ind.evaluated = true;
    archive.update(ind);
  }
  ASSERT_EQ(archive.size(), 4u);
  Individual best;
  best.genome = genome_with({{9, 1}});
  best.fitness.values = {1.5, 1.5};
  best.evaluated = true;
  EXPECT_TRUE(archive.update(best));
  EXPECT_EQ(archive.points(), (std::vector<Point>{{1, 4}, {4, 1}, {1.5, 1.5}}));
}

TEST(Archive, EqualsFilterOfEverythingInserted) {
  Rng rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    ParetoArchive archive;
    std::vector<Individual> all;
    for (int i = 0; i < 300; ++i) {
      Individual ind;
      ind.genome = random_genome(Problem::Shutdown, rng);
      // Fitness depends only on the genome, as it does in a real evaluation.
      const auto h = std::hash<Genome>{}(ind.genome);
      ind.fitness.values = {static_cast<double>(h % 10), static_cast<double>((h / 10) % 10)};
      ind.evaluated = true;
      archive.update(ind);
      all.push_back(ind);
    }
    std::set<Genome> expected;
    std::set<Genome> seen;
    for (const auto& c : all) {
      if (!seen.insert(c.genome).second) continue;
      const bool dominated = std::any_of(all.begin(), all.end(), [&](const Individual& o) {
        return dominates(o.fitness.values, c.fitness.values);
      });
      if (!dominated) expected.insert(c.genome);
    }
    // Equal objective vectors from different genomes: the first one wins.
    std::set<Point> expected_points;
    for (const auto& c : all) {
      if (expected.count(c.genome)) expected_points.insert(c.fitness.values);
    }
    std::set<Point> got_points;
    for (const auto& m : archive.members()) got_points.insert(m.fitness.values);
    EXPECT_EQ(got_points, expected_points);
    for (const auto& m : archive.members()) {
      EXPECT_TRUE(expected.count(m.genome));
      for (const auto& o : archive.members()) EXPECT_FALSE(dominates(o.fitness.values, m.fitness.values));
    }
  }
}

TEST(Evaluator, CachesByGenomeAndSeed) {
  std::atomic<int> calls{0};
  Evaluator ev(
      [&](const Genome& g) {
        ++calls;
        return toy_fitness(g);
      },
      99);
  auto pop = toy_population(10, 14);
  pop.push_back(pop.front());
  ev.evaluate(pop);
  EXPECT_EQ(calls.load(), 10);
  EXPECT_EQ(ev.computed(), 10u);
  EXPECT_EQ(ev.requests(), 11u);
  auto again = pop;
  for (auto& ind : again) ind.evaluated = false;
  ev.evaluate(again);
  EXPECT_EQ(calls.load(), 10);
  for (std::size_t i = 0; i < pop.size(); ++i) {
    EXPECT_EQ(again[i].fitness, pop[i].fitness);
    EXPECT_EQ(again[i].eval_seed, 99u);
  }
}

TEST(Evaluator, WorkerCountDoesNotChangeResults) {
  auto a = toy_population(64, 15);
  auto b = a;
  Evaluator one(toy_fitness, 1, 1);
  Evaluator four(toy_fitness, 1, 4);
  one.evaluate(a);
  four.evaluate(b);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].fitness, b[i].fitness);
}

TEST(Evaluator, FailuresBecomeEvaluationErrors) {
  Evaluator ev([](const Genome& g) -> Evaluation {
    if (g.active() > 3) throw std::runtime_error("boom");
    return toy_fitness(g);
  }, 1, 2);
  std::vector<Individual> pop{evaluated(genome_with({{0, 1}, {1, 1}, {2, 1}, {3, 1}, {4, 1}}))};
  EXPECT_THROW(ev.evaluate(pop), EvaluationError);
}

EvolutionResult toy_run(Algorithm alg, std::size_t ngens, std::uint64_t seed, std::size_t workers = 1) {
  EvolutionConfig cfg;
  cfg.mu = 20;
  cfg.ngens = ngens;
  cfg.algorithm = alg;
  cfg.rng_seed = seed;
  Evaluator ev(toy_fitness, 0, workers);
  return run_evolution(cfg, Problem::Shutdown, ev, kToyReference);
}

TEST(RunEvolution, ZeroGenerationsArchivesNonDominatedInitialMembers) {
  for (auto alg : {Algorithm::NSGA2, Algorithm::SPEA2, Algorithm::Random}) {
    const auto r = toy_run(alg, 0, 16);
    ASSERT_EQ(r.hypervolume.size(), 1u);
    std::vector<Point> pts;
    for (const auto& g : r.initial_population) pts.push_back(toy_fitness(g).values);
    std::set<Point> expected;
    for (auto i : non_dominated_indices(pts)) expected.insert(pts[i]);
    const auto got = r.archive.points();
    EXPECT_EQ(std::set<Point>(got.begin(), got.end()), expected);
  }
}

TEST(RunEvolution, DeterministicAndMonotone) {
  for (auto alg : {Algorithm::NSGA2, Algorithm::SPEA2, Algorithm::Random}) {
    const auto a = toy_run(alg, 15, 17);
    const auto b = toy_run(alg, 15, 17, 3);
    EXPECT_EQ(a.hypervolume, b.hypervolume);
    EXPECT_EQ(a.archive.points(), b.archive.points());
    EXPECT_EQ(a.initial_population, b.initial_population);
    ASSERT_EQ(a.hypervolume.size(), 16u);
    for (std::size_t g = 1; g < a.hypervolume.size(); ++g) EXPECT_GE(a.hypervolume[g], a.hypervolume[g - 1]);
    EXPECT_EQ(a.evaluations, 20u * 16u);
    for (const auto& ind : a.final_population) EXPECT_NO_THROW(ind.genome.validate());
  }
}

TEST(RunEvolution, RandomAlgorithmRespectsAttackLimit) {
  EvolutionConfig cfg;
  cfg.mu = 30;
  cfg.ngens = 5;
  cfg.algorithm = Algorithm::Random;
  cfg.max_active = 3;
  Evaluator ev(toy_fitness, 0);
  const auto r = run_evolution(cfg, Problem::Shutdown, ev, kToyReference);
  for (const auto& ind : r.final_population) EXPECT_LE(ind.genome.active(), 3u);
}

TEST(RunEvolution, RejectsBadInitialPopulationAndConfig) {
  EvolutionConfig cfg;
  cfg.mu = 4;
  cfg.ngens = 1;
  Evaluator ev(toy_fitness, 0);
  EXPECT_THROW(run_evolution(cfg, Problem::Shutdown, ev, kToyReference, {genome_with({})}), ContractError);
  std::vector<Genome> wrong(4, genome_with({}, Problem::OpCost));
  EXPECT_THROW(run_evolution(cfg, Problem::Shutdown, ev, kToyReference, wrong), ContractError);

  EvolutionConfig bad;
  bad.mu = 1;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = {};
  bad.cxpb = 0.8;
  bad.mutpb = 0.3;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = {};
  bad.gene_mut_p = 1.5;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = {};
  bad.tournament_size = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(RunEvolution, UsesProvidedInitialPopulation) {
  EvolutionConfig cfg;
  cfg.mu = 6;
  cfg.ngens = 2;
  const auto init = random_population(Problem::Shutdown, 6, 18);
  Evaluator ev(toy_fitness, 0);
  const auto r = run_evolution(cfg, Problem::Shutdown, ev, kToyReference, init);
  EXPECT_EQ(r.initial_population, init);
}

TEST(RandomSampling, PopulationIsSeedDeterministic) {
  EXPECT_EQ(random_population(Problem::Evasion, 30, 5), random_population(Problem::Evasion, 30, 5));
  EXPECT_NE(random_population(Problem::Evasion, 30, 5), random_population(Problem::Evasion, 30, 6));
}

TEST(RandomSampling, CombinedGenomesAreUniformOverBoundedSchedules) {
  Rng rng(19);
  const std::size_t max_active = 7;
  const int draws = 20000;
  std::vector<int> by_active(kSignalCount + 1, 0);
  for (int i = 0; i < draws; ++i) {
    const auto g = random_combined_genome(Problem::Shutdown, max_active, rng);
    ASSERT_LE(g.active(), max_active);
    for (auto gene : g.genes) {
      if (gene != 0) {
        ASSERT_EQ(attack::encoding_table(Problem::Shutdown)[gene - 1].t_start, 2.0);
      }
    }
    ++by_active[g.active()];
  }
  // k attacked signals with 4 hour-2 codes each: C(25, k) * 4^k schedules.
  std::vector<double> count(max_active + 1);
  double total = 0.0;
  for (std::size_t k = 0; k <= max_active; ++k) {
    double c = 1.0;
    for (std::size_t j = 0; j < k; ++j) c = c * static_cast<double>(25 - j) / static_cast<double>(j + 1);
    count[k] = c * std::pow(4.0, static_cast<double>(k));
    total += count[k];
  }
  for (std::size_t k = 5; k <= max_active; ++k) {
    const double p = count[k] / total;
    const double sigma = std::sqrt(p * (1 - p) / draws);
    EXPECT_NEAR(by_active[k] / static_cast<double>(draws), p, 4.0 * sigma) << k;
  }
  Rng zero(20);
  EXPECT_EQ(random_combined_genome(Problem::Shutdown, 0, zero).active(), 0u);
}

TEST(ArchiveIo, JsonLinesRoundTrip) {
  const auto r = toy_run(Algorithm::SPEA2, 3, 21);
  std::stringstream s;
  write_archive_jsonl(s, r.archive);
  const auto back = read_archive_jsonl(s);
  ASSERT_EQ(back.size(), r.archive.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].genome, r.archive.members()[i].genome);
    EXPECT_EQ(back[i].fitness.values, r.archive.members()[i].fitness.values);
    EXPECT_EQ(back[i].fitness.raw, r.archive.members()[i].fitness.raw);
    EXPECT_EQ(back[i].eval_seed, r.archive.members()[i].eval_seed);
  }
  std::stringstream bad("{\"genome\": [1]}\n");
  EXPECT_THROW(read_archive_jsonl(bad), IoError);
}

TEST(ArchiveIo, ConvergenceCsv) {
  std::ostringstream out;
  write_convergence_csv(out, {0.5, 1.25});
  EXPECT_EQ(out.str(), "generation,hypervolume\n0,0.5\n1,1.25\n");
}

TEST(AlgorithmNames, RoundTrip) {
  for (auto a : {Algorithm::NSGA2, Algorithm::SPEA2, Algorithm::Random}) EXPECT_EQ(algorithm_from_string(to_string(a)), a);
  EXPECT_THROW(algorithm_from_string("moead"), ConfigError);
}

} // namespace
} // namespace icsatk::emo
