#pragma once

#include "icsatk/attack.hpp"
#include "icsatk/detect.hpp"
#include "icsatk/evolution.hpp"
#include "icsatk/genome.hpp"
#include "icsatk/plant.hpp"

#include <memory>
#include <string_view>

namespace icsatk::emo {

/// Attack problems and their objective sets (minimized form):
/// Shutdown (run time after attack start, effort), OpCost (-cost, effort),
/// Evasion2 (-damage, detection), Evasion3 (-damage, detection, effort).
enum class ProblemVariant : std::uint8_t { Shutdown, OpCost, Evasion2, Evasion3 };

std::string_view to_string(ProblemVariant variant);
ProblemVariant problem_variant_from_string(std::string_view name);
attack::Problem genome_problem(ProblemVariant variant);
std::size_t objective_count(ProblemVariant variant);
bool is_evasion(ProblemVariant variant);

/// Everything a fitness evaluation reads. Immutable once built, so one
/// context serves concurrent evaluations.
struct ProblemContext {
  ProblemVariant variant = ProblemVariant::Shutdown;
  plant::PlantConfig plant{};
  attack::SignalRanges ranges{};
  std::shared_ptr<const detect::DetectorModel> detector;
  detect::AlarmPolicy policy{};
  detect::WindowAggregate aggregate = detect::WindowAggregate::Max;
  /// Attack-free operating cost under plant.seed; damage is measured from it.
  double baseline_cost = 0.0;
};

/// Builds a context, running the attack-free baseline for evasion problems.
/// Throws ConfigError when an evasion problem has no detector.
ProblemContext make_context(ProblemVariant variant, const plant::PlantConfig& plant, attack::SignalRanges ranges,
                            std::shared_ptr<const detect::DetectorModel> detector = nullptr,
                            detect::AlarmPolicy policy = {});

/// Simulates the decoded genome and scores it. Evasion runs that shut the
/// plant down score the sentinel raw damage -1 and detection 1.
Evaluation evaluate_fitness(const attack::Genome& genome, const ProblemContext& context);

FitnessFunction make_fitness(std::shared_ptr<const ProblemContext> context);

/// Fixed reference point for per-generation archive hypervolume.
Point convergence_reference(ProblemVariant variant, const plant::PlantConfig& plant);

} // namespace icsatk::emo
