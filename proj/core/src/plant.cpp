#include "icsatk/plant.hpp"

#include "icsatk/errors.hpp"
#include "icsatk/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace icsatk::plant {
namespace {

// Nominal operating point. Every normalized flow below equals 1 here, which
// makes all derivatives vanish at equilibrium_state().
constexpr double kPressureNominal = 2705.0;
constexpr double kTemperatureNominal = 120.4;
constexpr double kReactorLevelNominal = 75.0;
constexpr double kLevelNominal = 50.0;
constexpr double kRecycleNominal = 32.19;
constexpr double kPurgeCNominal = 13.8;
constexpr double kProductGNominal = 53.8;
constexpr double kVentPressure = 2300.0;
constexpr double kCoolingWaterTemperature = 35.0;

constexpr ActuatorVector kNominalActuators = {63.0, 53.0, 26.0, 60.5, 25.0, 38.0, 46.5, 41.0, 18.0};

// Engineering-unit scales of the flow measurements at the nominal point.
constexpr double kAFeedNominal = 0.2510;     // kscmh
constexpr double kDFeedNominal = 3664.0;     // kg/h
constexpr double kEFeedNominal = 4509.0;     // kg/h
constexpr double kACFeedNominal = 9.348;     // kscmh
constexpr double kPurgeRateNominal = 0.3371; // kscmh
constexpr double kSeparatorFlowNominal = 25.16;
constexpr double kStripperFlowNominal = 22.95;
constexpr double kCompressorWorkNominal = 341.4; // kW
constexpr double kSteamNominal = 230.3;          // kg/h

// Process gains (per hour).
constexpr double kPressureGain = 420.0;
constexpr double kTemperatureGain = 24.0;
constexpr double kReactorLevelGain = 18.0;
constexpr double kSeparatorLevelGain = 22.0;
constexpr double kStripperLevelGain = 22.0;
constexpr double kRecycleLag = 0.15;
constexpr double kPurgeCLag = 1.5;
constexpr double kArrhenius = 0.014; // 1/degC

// Noise: sensor sigma as a fraction of each channel's span, process noise per sqrt(hour).
constexpr double kSensorNoiseFraction = 0.005;
constexpr SensorVector kSensorSpan = {0.5, 4000.0, 5000.0, 10.0, 30.0, 400.0, 50.0, 4.0,
                                      0.6, 10.0,   80.0,   50.0, 80.0, 50.0,  16.0, 20.0};
constexpr StateVector kProcessNoise = {3.0, 0.2, 0.05, 0.3, 0.3, 0.05, 0.03};
constexpr Disturbances kDisturbanceSigma = {0.8, 0.01};
constexpr Disturbances kDisturbanceTau = {2.0, 4.0};

constexpr std::uint64_t kSensorStream = 0x5e5;
constexpr std::uint64_t kProcessStream = 0x9c0;

struct Flows {
  double a, d, e, ac, purge, separator, stripper, cooling, condenser;
};

Flows flows(const StateVector& x, const ActuatorVector& u) {
  const double pn = std::max(x[kPressure], 0.0) / kPressureNominal;
  Flows f{};
  f.d = u[0] / kNominalActuators[0];
  f.e = u[1] / kNominalActuators[1];
  f.a = u[2] / kNominalActuators[2];
  f.ac = u[3] / kNominalActuators[3];
  f.purge = std::sqrt(std::max(u[4], 0.0) / kNominalActuators[4]) * pn;
  f.separator = u[5] / kNominalActuators[5] * std::sqrt(std::max(x[kSeparatorLevel], 0.0) / kLevelNominal);
  f.stripper = u[6] / kNominalActuators[6] * std::sqrt(std::max(x[kStripperLevel], 0.0) / kLevelNominal);
  f.cooling = u[7] / kNominalActuators[7];
  f.condenser = u[8] / kNominalActuators[8];
  return f;
}

double clamp_valve(double v) { return std::clamp(v, 0.0, 100.0); }

// Fills `out` with standard normals drawn from counter (seed, stream, index).
template <std::size_t N>
void counter_normals(std::uint64_t seed, std::uint64_t stream, std::uint64_t index, std::array<double, N>& out) {
  const std::uint64_t base = derive_seed(seed, stream, index);
  for (std::size_t i = 0; i < N; ++i) out[i] = normal_from_bits(mix64(base + i));
}

void check_pair(const LimitPair& p, const char* name) {
  if (!(p.low < p.high)) throw ConfigError(std::string("shutdown limit pair for ") + name + " needs low < high");
}

} // namespace

std::string_view to_string(ConstraintId id) {
  switch (id) {
  case ConstraintId::ReactorPressureLow: return "reactor-pressure-low";
  case ConstraintId::ReactorPressureHigh: return "reactor-pressure-high";
  case ConstraintId::ReactorLevelLow: return "reactor-level-low";
  case ConstraintId::ReactorLevelHigh: return "reactor-level-high";
  case ConstraintId::ReactorTemperatureLow: return "reactor-temperature-low";
  case ConstraintId::ReactorTemperatureHigh: return "reactor-temperature-high";
  case ConstraintId::SeparatorLevelLow: return "separator-level-low";
  case ConstraintId::SeparatorLevelHigh: return "separator-level-high";
  case ConstraintId::StripperLevelLow: return "stripper-level-low";
  case ConstraintId::StripperLevelHigh: return "stripper-level-high";
  }
  return "unknown";
}

ConstraintId constraint_from_string(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(ConstraintId::StripperLevelHigh); ++i) {
    const auto id = static_cast<ConstraintId>(i);
    if (to_string(id) == name) return id;
  }
  throw ConfigError("unknown constraint '" + std::string(name) + "'");
}

void PlantConfig::validate() const {
  if (!(horizon_hours > 0.0) || !std::isfinite(horizon_hours)) throw ConfigError("horizon_hours must be positive");
  if (samples_per_hour <= 0) throw ConfigError("samples_per_hour must be positive");
  if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale)) throw ConfigError("noise_scale must be >= 0");
  check_pair(shutdown_limits.reactor_pressure, "reactor pressure");
  check_pair(shutdown_limits.reactor_level, "reactor level");
  check_pair(shutdown_limits.reactor_temperature, "reactor temperature");
  check_pair(shutdown_limits.separator_level, "separator level");
  check_pair(shutdown_limits.stripper_level, "stripper level");
}

std::size_t PlantConfig::step_count() const {
  return static_cast<std::size_t>(std::llround(horizon_hours * samples_per_hour));
}

PlantState equilibrium_state() {
  PlantState s;
  s.x[kPressure] = kPressureNominal;
  s.x[kReactorLevel] = kReactorLevelNominal;
  s.x[kReactorTemperature] = kTemperatureNominal;
  s.x[kSeparatorLevel] = kLevelNominal;
  s.x[kStripperLevel] = kLevelNominal;
  s.x[kRecycleFlow] = kRecycleNominal;
  s.x[kPurgeC] = kPurgeCNominal;
  return s;
}

const ActuatorVector& equilibrium_actuators() { return kNominalActuators; }

StateVector derivatives(const StateVector& x, const ActuatorVector& u, const Disturbances& d) {
  const Flows f = flows(x, u);
  const double pn = std::max(x[kPressure], 0.0) / kPressureNominal;

  const double availability = (0.10 * f.a + 0.60 * f.ac + 0.15 * f.d + 0.15 * f.e) * (1.0 + d[1]);
  const double reaction =
      std::exp(kArrhenius * (x[kReactorTemperature] - kTemperatureNominal)) * pn * std::sqrt(pn) * availability;
  const double vapour = std::max(0.0, (x[kPressure] - kVentPressure) / (kPressureNominal - kVentPressure));
  const double recycle = x[kRecycleFlow] / kRecycleNominal;

  const double gas_in = 0.15 * f.a + 0.55 * f.ac + 0.30 * recycle;
  const double gas_out = 0.45 * reaction + 0.20 * f.purge + 0.35 * vapour;

  const double heat_removed = f.cooling * (x[kReactorTemperature] - kCoolingWaterTemperature - d[0]) /
                              (kTemperatureNominal - kCoolingWaterTemperature);

  const double liquid_made = reaction * (0.5 * f.d + 0.5 * f.e);
  const double liquid_out =
      std::max(x[kReactorLevel], 0.0) / kReactorLevelNominal * (0.6 * vapour + 0.4 * f.condenser);

  StateVector dx{};
  dx[kPressure] = kPressureGain * (gas_in - gas_out);
  dx[kReactorTemperature] = kTemperatureGain * (reaction - heat_removed);
  dx[kReactorLevel] = kReactorLevelGain * (liquid_made - liquid_out);
  dx[kSeparatorLevel] = kSeparatorLevelGain * (liquid_out - f.separator);
  dx[kStripperLevel] = kStripperLevelGain * (f.separator - f.stripper);
  dx[kRecycleFlow] = (kRecycleNominal * vapour * (1.6 - 0.6 * f.condenser) - x[kRecycleFlow]) / kRecycleLag;
  dx[kPurgeC] = (kPurgeCNominal * f.ac / (0.5 + 0.5 * f.a) - x[kPurgeC]) / kPurgeCLag;
  return dx;
}

PlantState step(const PlantState& state, std::span<const double> effective_actuators, const PlantConfig& config) {
  if (effective_actuators.size() != kActuatorCount) {
    throw InputDomainError("step needs exactly 9 actuator values");
  }
  ActuatorVector u{};
  for (std::size_t j = 0; j < kActuatorCount; ++j) {
    if (!std::isfinite(effective_actuators[j])) {
      throw InputDomainError("non-finite value on " + signal_name(kSensorCount + j));
    }
    u[j] = effective_actuators[j];
  }
  if (state.step_index >= config.step_count()) throw ContractError("plant clock has reached the horizon");

  const double dt = config.dt();
  const auto& x = state.x;
  const auto& d = state.disturbances;
  const StateVector k1 = derivatives(x, u, d);
  StateVector tmp{};
  for (std::size_t i = 0; i < kStateCount; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
  const StateVector k2 = derivatives(tmp, u, d);
  for (std::size_t i = 0; i < kStateCount; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
  const StateVector k3 = derivatives(tmp, u, d);
  for (std::size_t i = 0; i < kStateCount; ++i) tmp[i] = x[i] + dt * k3[i];
  const StateVector k4 = derivatives(tmp, u, d);

  PlantState next;
  for (std::size_t i = 0; i < kStateCount; ++i) {
    next.x[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  next.disturbances = d;

  if (config.noise_scale > 0.0) {
    std::array<double, kStateCount + 2> z{};
    counter_normals(config.seed, kProcessStream, state.step_index, z);
    const double root_dt = std::sqrt(dt);
    for (std::size_t i = 0; i < kStateCount; ++i) next.x[i] += config.noise_scale * kProcessNoise[i] * root_dt * z[i];
    for (std::size_t j = 0; j < 2; ++j) {
      const double decay = std::exp(-dt / kDisturbanceTau[j]);
      next.disturbances[j] = d[j] * decay + config.noise_scale * kDisturbanceSigma[j] *
                                                std::sqrt(1.0 - decay * decay) * z[kStateCount + j];
    }
  }

  for (auto i : {kReactorLevel, kSeparatorLevel, kStripperLevel}) next.x[i] = std::clamp(next.x[i], 0.0, 100.0);
  next.step_index = state.step_index + 1;
  next.clock = static_cast<double>(next.step_index) / config.samples_per_hour;
  return next;
}

SensorVector measure(const PlantState& state, const ActuatorVector& applied, const PlantConfig& config) {
  const auto& x = state.x;
  const Flows f = flows(x, applied);
  SensorVector y{};
  y[index(Sensor::AFeed)] = kAFeedNominal * f.a;
  y[index(Sensor::DFeed)] = kDFeedNominal * f.d;
  y[index(Sensor::EFeed)] = kEFeedNominal * f.e;
  y[index(Sensor::ACFeed)] = kACFeedNominal * f.ac;
  y[index(Sensor::RecycleFlow)] = x[kRecycleFlow];
  y[index(Sensor::ReactorPressure)] = x[kPressure];
  y[index(Sensor::ReactorLevel)] = x[kReactorLevel];
  y[index(Sensor::ReactorTemperature)] = x[kReactorTemperature];
  y[index(Sensor::PurgeRate)] = kPurgeRateNominal * f.purge;
  y[index(Sensor::SeparatorTemperature)] = 80.1 - 30.0 * (f.condenser - 1.0) + 0.02 * (x[kPressure] - kPressureNominal);
  y[index(Sensor::SeparatorLevel)] = x[kSeparatorLevel];
  y[index(Sensor::SeparatorUnderflow)] = kSeparatorFlowNominal * f.separator;
  y[index(Sensor::StripperLevel)] = x[kStripperLevel];
  y[index(Sensor::StripperUnderflow)] = kStripperFlowNominal * f.stripper;
  y[index(Sensor::PurgeC)] = x[kPurgeC];
  const double d_share = f.d / std::max(0.5 * f.d + 0.5 * f.e, 1e-9);
  y[index(Sensor::ProductG)] = kProductGNominal * d_share;

  if (config.noise_scale > 0.0) {
    SensorVector z{};
    counter_normals(config.seed, kSensorStream, state.step_index, z);
    for (std::size_t i = 0; i < kSensorCount; ++i) {
      y[i] += config.noise_scale * kSensorNoiseFraction * kSensorSpan[i] * z[i];
    }
  }
  return y;
}

CostRates cost_rates(const StateVector& x, const ActuatorVector& u) {
  const Flows f = flows(x, u);
  CostRates r;
  r.purge_rate = kPurgeRateNominal * f.purge;
  r.product_rate = kStripperFlowNominal * f.stripper;
  r.compressor_work =
      kCompressorWorkNominal * std::max(x[kRecycleFlow], 0.0) / kRecycleNominal * std::max(x[kPressure], 0.0) /
      kPressureNominal;
  r.steam_rate = kSteamNominal * f.separator;
  return r;
}

double cost_rate(const CostRates& r, const CostCoefficients& c) {
  return c.purge * r.purge_rate + c.product * r.product_rate + c.compressor * r.compressor_work +
         c.steam * r.steam_rate;
}

double operating_cost(std::span<const CostRates> rates, int samples_per_hour, const CostCoefficients& coefficients) {
  const double dt = 1.0 / samples_per_hour;
  double total = 0.0;
  for (const auto& r : rates) total += cost_rate(r, coefficients) * dt;
  return total;
}

double operating_cost(const SimulationTrace& trace, const CostCoefficients& coefficients) {
  if (trace.rates.empty()) throw ContractError("operating_cost needs at least one recorded sample");
  return operating_cost(trace.rates, trace.samples_per_hour, coefficients);
}

ShutdownStatus check_constraints(const PlantState& state, const PlantConfig& config) {
  const auto& lim = config.shutdown_limits;
  const auto outside = [](double v, const LimitPair& p, ConstraintId low, ConstraintId high) -> std::optional<ConstraintId> {
    if (v < p.low) return low;
    if (v > p.high) return high;
    return std::nullopt;
  };
  const auto& x = state.x;
  for (auto hit : {outside(x[kPressure], lim.reactor_pressure, ConstraintId::ReactorPressureLow,
                           ConstraintId::ReactorPressureHigh),
                   outside(x[kReactorLevel], lim.reactor_level, ConstraintId::ReactorLevelLow,
                           ConstraintId::ReactorLevelHigh),
                   outside(x[kReactorTemperature], lim.reactor_temperature, ConstraintId::ReactorTemperatureLow,
                           ConstraintId::ReactorTemperatureHigh),
                   outside(x[kSeparatorLevel], lim.separator_level, ConstraintId::SeparatorLevelLow,
                           ConstraintId::SeparatorLevelHigh),
                   outside(x[kStripperLevel], lim.stripper_level, ConstraintId::StripperLevelLow,
                           ConstraintId::StripperLevelHigh)}) {
    if (hit) return ShutdownStatus{hit};
  }
  if (!std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); })) {
    return ShutdownStatus{ConstraintId::ReactorPressureHigh};
  }
  return {};
}

ControlSystem::ControlSystem(const Setpoints& sp)
    : loops_{{
          {index(Sensor::ReactorPressure), index(Actuator::PurgeValve), sp.reactor_pressure, 0.6, 0.4,
           kNominalActuators[4]},
          {index(Sensor::ReactorTemperature), index(Actuator::ReactorCooling), sp.reactor_temperature, 6.0, 0.5,
           kNominalActuators[7]},
          {index(Sensor::SeparatorLevel), index(Actuator::SeparatorValve), sp.separator_level, 2.0, 1.0,
           kNominalActuators[5]},
          {index(Sensor::StripperLevel), index(Actuator::StripperValve), sp.stripper_level, 2.0, 1.0,
           kNominalActuators[6]},
          {index(Sensor::ReactorLevel), index(Actuator::CondenserCooling), sp.reactor_level, 2.5, 1.0,
           kNominalActuators[8]},
      }} {}

ActuatorVector ControlSystem::update(const SensorVector& y, double dt) {
  ActuatorVector u{};

  // Direct-acting PI loops with conditional integration (no wind-up past the valve limits).
  for (auto& loop : loops_) {
    const double error = y[loop.sensor] - loop.setpoint;
    const double unclamped = loop.bias + loop.gain * (error + loop.integral);
    const bool saturated_high = unclamped >= 100.0 && error > 0.0;
    const bool saturated_low = unclamped <= 0.0 && error < 0.0;
    if (!saturated_high && !saturated_low) loop.integral += error * dt / loop.reset_time;
    u[loop.actuator] = clamp_valve(loop.bias + loop.gain * (error + loop.integral));
  }

  // Ratio laws: feeds follow the measured A&C feed, trimmed by product and purge composition.
  const double ac_ratio = y[index(Sensor::ACFeed)] / kACFeedNominal;
  u[index(Actuator::ACFeedValve)] = clamp_valve(kNominalActuators[3] * (1.0 + 0.5 * (1.0 - ac_ratio)));
  u[index(Actuator::DFeedValve)] = clamp_valve(kNominalActuators[0] * ac_ratio);
  u[index(Actuator::EFeedValve)] =
      clamp_valve(kNominalActuators[1] * ac_ratio * (1.0 + 0.03 * (y[index(Sensor::ProductG)] - kProductGNominal)));
  u[index(Actuator::AFeedValve)] =
      clamp_valve(kNominalActuators[2] * (1.0 + 0.05 * (y[index(Sensor::PurgeC)] - kPurgeCNominal)));
  return u;
}

SimulationTrace simulate(const attack::AttackSchedule& schedule, const PlantConfig& config,
                         const SimulationOptions& options) {
  config.validate();
  schedule.validate(config.horizon_hours);

  attack::Interceptor layer(schedule, config.samples_per_hour);
  ControlSystem control(config.setpoints);
  PlantState state = equilibrium_state();
  ActuatorVector applied = kNominalActuators;

  const std::size_t steps = config.step_count();
  const double dt = config.dt();

  SimulationTrace trace;
  trace.samples_per_hour = config.samples_per_hour;
  trace.seed = config.seed;
  if (options.record_frames) trace.frames.reserve(steps);
  if (options.record_rates) trace.rates.reserve(steps);

  double cost = 0.0;
  SignalFrame frame;
  for (std::size_t k = 0; k < steps; ++k) {
    frame.t = static_cast<double>(k) * dt;
    frame.sensors = measure(state, applied, config);
    if (layer.any()) {
      for (std::size_t i = 0; i < kSensorCount; ++i) frame.sensors[i] = layer.intercept(i, k, frame.sensors[i]);
    }
    frame.actuators = control.update(frame.sensors, dt);
    if (layer.any()) {
      for (std::size_t j = 0; j < kActuatorCount; ++j) {
        frame.actuators[j] = layer.intercept(kSensorCount + j, k, frame.actuators[j]);
      }
    }
    applied = frame.actuators;

    const CostRates rates = cost_rates(state.x, applied);
    cost += cost_rate(rates, config.cost) * dt;
    if (options.record_rates) trace.rates.push_back(rates);
    if (options.record_frames) trace.frames.push_back(frame);
    if (options.on_frame) options.on_frame(frame);
    ++trace.sample_count;

    state = step(state, applied, config);
    if (const auto status = check_constraints(state, config); !status.ok()) {
      trace.shutdown_time = state.clock;
      trace.shutdown_cause = status.tripped;
      break;
    }
  }
  trace.operating_cost = cost;
  return trace;
}

std::uint64_t run_seed(std::uint64_t base_seed, std::size_t run) { return derive_seed(base_seed, 0x72756e, run); }

attack::SignalRanges record_signal_ranges(std::size_t n_runs, const PlantConfig& config) {
  if (n_runs == 0) throw ContractError("record_signal_ranges needs at least one run");
  std::array<attack::Range, kSignalCount> extrema{};
  for (auto& r : extrema) r = {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};

  SimulationOptions options;
  options.record_frames = false;
  options.record_rates = false;
  options.on_frame = [&](const SignalFrame& f) {
    for (std::size_t i = 0; i < kSignalCount; ++i) {
      const double v = f.signal(i);
      extrema[i].min = std::min(extrema[i].min, v);
      extrema[i].max = std::max(extrema[i].max, v);
    }
  };
  for (std::size_t run = 0; run < n_runs; ++run) {
    PlantConfig cfg = config;
    cfg.seed = run_seed(config.seed, run);
    simulate(attack::AttackSchedule{}, cfg, options);
  }
  attack::SignalRanges ranges;
  for (std::size_t i = 0; i < kSignalCount; ++i) ranges.set(i, extrema[i]);
  return ranges;
}

} // namespace icsatk::plant
