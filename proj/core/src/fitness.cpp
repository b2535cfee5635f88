#include "icsatk/fitness.hpp"

#include "icsatk/errors.hpp"

#include <algorithm>
#include <string>

namespace icsatk::emo {

std::string_view to_string(ProblemVariant variant) {
  switch (variant) {
  case ProblemVariant::Shutdown: return "shutdown";
  case ProblemVariant::OpCost: return "opcost";
  case ProblemVariant::Evasion2: return "evasion2";
  case ProblemVariant::Evasion3: return "evasion3";
  }
  return "unknown";
}

ProblemVariant problem_variant_from_string(std::string_view name) {
  for (const auto v : {ProblemVariant::Shutdown, ProblemVariant::OpCost, ProblemVariant::Evasion2,
                       ProblemVariant::Evasion3}) {
    if (to_string(v) == name) return v;
  }
  throw ConfigError("unknown problem '" + std::string(name) + "'");
}

attack::Problem genome_problem(ProblemVariant variant) {
  switch (variant) {
  case ProblemVariant::Shutdown: return attack::Problem::Shutdown;
  case ProblemVariant::OpCost: return attack::Problem::OpCost;
  default: return attack::Problem::Evasion;
  }
}

std::size_t objective_count(ProblemVariant variant) { return variant == ProblemVariant::Evasion3 ? 3 : 2; }

bool is_evasion(ProblemVariant variant) {
  return variant == ProblemVariant::Evasion2 || variant == ProblemVariant::Evasion3;
}

ProblemContext make_context(ProblemVariant variant, const plant::PlantConfig& plant, attack::SignalRanges ranges,
                            std::shared_ptr<const detect::DetectorModel> detector, detect::AlarmPolicy policy) {
  plant.validate();
  ProblemContext ctx;
  ctx.variant = variant;
  ctx.plant = plant;
  ctx.ranges = std::move(ranges);
  ctx.policy = policy;
  if (is_evasion(variant)) {
    if (!detector) throw ConfigError("evasion problems need a trained detector");
    ctx.detector = std::move(detector);
    plant::SimulationOptions options;
    options.record_frames = false;
    options.record_rates = false;
    ctx.baseline_cost = plant::simulate(attack::AttackSchedule{}, plant, options).operating_cost;
  }
  return ctx;
}

Evaluation evaluate_fitness(const attack::Genome& genome, const ProblemContext& ctx) {
  if (genome.problem != genome_problem(ctx.variant)) throw ContractError("genome belongs to another problem");
  const auto schedule = attack::decode_genome(genome, ctx.ranges, ctx.plant.horizon_hours);
  const auto effort = static_cast<double>(attack::effort(schedule));

  plant::SimulationOptions options;
  options.record_frames = false;
  options.record_rates = false;
  std::optional<detect::WindowScanner> scanner;
  detect::Features x{};
  if (is_evasion(ctx.variant)) {
    if (!ctx.detector) throw ContractError("evasion context without a detector");
    scanner.emplace(ctx.policy.window);
    options.on_frame = [&](const plant::SignalFrame& f) {
      std::copy(f.sensors.begin(), f.sensors.end(), x.begin());
      std::copy(f.actuators.begin(), f.actuators.end(), x.begin() + kSensorCount);
      scanner->push(ctx.detector->classify(x));
    };
  }
  const auto trace = plant::simulate(schedule, ctx.plant, options);

  Evaluation e;
  switch (ctx.variant) {
  case ProblemVariant::Shutdown: {
    double run_time = ctx.plant.horizon_hours;
    if (trace.shut_down()) {
      double first = ctx.plant.horizon_hours;
      for (const auto& d : schedule.directives()) first = std::min(first, d.t_start);
      run_time = *trace.shutdown_time - first;
    }
    e.raw = {run_time, effort};
    e.values = e.raw;
    break;
  }
  case ProblemVariant::OpCost:
    e.raw = {trace.operating_cost, effort};
    e.values = {-trace.operating_cost, effort};
    break;
  case ProblemVariant::Evasion2:
  case ProblemVariant::Evasion3: {
    double damage = std::max(0.0, trace.operating_cost - ctx.baseline_cost);
    double detection = ctx.aggregate == detect::WindowAggregate::Max ? scanner->max_fraction() : scanner->mean_fraction();
    if (trace.shut_down()) {
      damage = -1.0;
      detection = 1.0;
      e.penalized = true;
    }
    e.raw = {damage, detection};
    e.values = {-damage, detection};
    if (ctx.variant == ProblemVariant::Evasion3) {
      e.raw.push_back(effort);
      e.values.push_back(effort);
    }
    break;
  }
  }
  return e;
}

FitnessFunction make_fitness(std::shared_ptr<const ProblemContext> context) {
  if (!context) throw ContractError("fitness needs a problem context");
  return [context](const attack::Genome& g) { return evaluate_fitness(g, *context); };
}

Point convergence_reference(ProblemVariant variant, const plant::PlantConfig& plant) {
  constexpr double kEffortBound = static_cast<double>(kSignalCount) * 1.01;
  switch (variant) {
  case ProblemVariant::Shutdown: return {plant.horizon_hours * 1.01, kEffortBound};
  case ProblemVariant::OpCost: return {0.0, kEffortBound};
  case ProblemVariant::Evasion2: return {1.0, 1.01};
  case ProblemVariant::Evasion3: return {1.0, 1.01, kEffortBound};
  }
  return {};
}

} // namespace icsatk::emo
