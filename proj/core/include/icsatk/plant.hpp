#pragma once

#include "icsatk/attack.hpp"
#include "icsatk/signals.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

/// Surrogate chemical plant: a 7-state reactor/separator/stripper model under
/// 5 PI loops and 4 ratio laws, exposing 16 measurements and 9 manipulated
/// variables, 5 shutdown-constrained variables and a 4-term operating cost.
namespace icsatk::plant {

/// Measurement channels, in XMEAS order.
enum class Sensor : std::size_t {
  AFeed,
  DFeed,
  EFeed,
  ACFeed,
  RecycleFlow,
  ReactorPressure,
  ReactorLevel,
  ReactorTemperature,
  PurgeRate,
  SeparatorTemperature,
  SeparatorLevel,
  SeparatorUnderflow,
  StripperLevel,
  StripperUnderflow,
  PurgeC,
  ProductG,
};

/// Manipulated channels, in XMV order.
enum class Actuator : std::size_t {
  DFeedValve,
  EFeedValve,
  AFeedValve,
  ACFeedValve,
  PurgeValve,
  SeparatorValve,
  StripperValve,
  ReactorCooling,
  CondenserCooling,
};

constexpr std::size_t index(Sensor s) noexcept { return static_cast<std::size_t>(s); }
constexpr std::size_t index(Actuator a) noexcept { return static_cast<std::size_t>(a); }
/// Signal index (0-24) of an actuator.
constexpr std::size_t signal_of(Actuator a) noexcept { return kSensorCount + index(a); }

enum class ConstraintId : std::uint8_t {
  ReactorPressureLow,
  ReactorPressureHigh,
  ReactorLevelLow,
  ReactorLevelHigh,
  ReactorTemperatureLow,
  ReactorTemperatureHigh,
  SeparatorLevelLow,
  SeparatorLevelHigh,
  StripperLevelLow,
  StripperLevelHigh,
};

std::string_view to_string(ConstraintId id);
ConstraintId constraint_from_string(std::string_view name);

struct LimitPair {
  double low = 0.0;
  double high = 0.0;
};

/// Exclusive shutdown limits: the plant trips only on strict violation.
struct ShutdownLimits {
  LimitPair reactor_pressure{1500.0, 3000.0};   // kPa
  LimitPair reactor_level{40.0, 95.0};          // %
  LimitPair reactor_temperature{90.0, 150.0};   // degC
  LimitPair separator_level{10.0, 90.0};        // %
  LimitPair stripper_level{10.0, 90.0};         // %
};

/// $ per unit of each cost-bearing rate. The defaults put a 72 h normal run
/// near $8,200.
struct CostCoefficients {
  double purge = 210.0;       // $/kscm
  double product = 1.2;       // $/m3
  double compressor = 0.0354; // $/kWh
  double steam = 0.0158;      // $/kg
};

/// Set-points of the five PI loops.
struct Setpoints {
  double reactor_pressure = 2705.0;
  double reactor_temperature = 120.4;
  double reactor_level = 75.0;
  double separator_level = 50.0;
  double stripper_level = 50.0;
};

struct PlantConfig {
  double horizon_hours = 72.0;
  int samples_per_hour = 500;
  double noise_scale = 1.0;
  std::uint64_t seed = 1;
  Setpoints setpoints{};
  ShutdownLimits shutdown_limits{};
  CostCoefficients cost{};

  /// Throws ConfigError on a non-positive horizon or rate, negative noise or
  /// a limit pair with low >= high.
  void validate() const;
  [[nodiscard]] double dt() const { return 1.0 / samples_per_hour; }
  /// Number of samples in a full run.
  [[nodiscard]] std::size_t step_count() const;
};

enum StateIndex : std::size_t {
  kPressure,
  kReactorLevel,
  kReactorTemperature,
  kSeparatorLevel,
  kStripperLevel,
  kRecycleFlow,
  kPurgeC,
  kStateCount,
};

using StateVector = std::array<double, kStateCount>;
using SensorVector = std::array<double, kSensorCount>;
using ActuatorVector = std::array<double, kActuatorCount>;

/// Slow unmeasured disturbances: cooling-water temperature offset (degC) and
/// relative feed-quality offset.
using Disturbances = std::array<double, 2>;

struct PlantState {
  StateVector x{};
  Disturbances disturbances{};
  double clock = 0.0;
  std::uint64_t step_index = 0;

  friend bool operator==(const PlantState&, const PlantState&) = default;
};

/// Steady operating point of the default set-points.
PlantState equilibrium_state();
const ActuatorVector& equilibrium_actuators();

/// Right-hand side of the plant ODE with actuators held at `u`.
StateVector derivatives(const StateVector& x, const ActuatorVector& u, const Disturbances& d);

/// Advances the plant by one sample (RK4 at 1/samples_per_hour) and applies
/// the seeded process noise of the state's step index. Throws
/// InputDomainError on a non-finite or missing actuator value and
/// ContractError when the clock has reached the horizon.
PlantState step(const PlantState& state, std::span<const double> effective_actuators, const PlantConfig& config);

/// Noisy measurement of every sensor at the state's step index.
SensorVector measure(const PlantState& state, const ActuatorVector& applied, const PlantConfig& config);

struct SignalFrame {
  double t = 0.0;
  SensorVector sensors{};
  ActuatorVector actuators{};

  /// Signal value by 0-24 index.
  [[nodiscard]] double signal(std::size_t i) const { return i < kSensorCount ? sensors[i] : actuators[i - kSensorCount]; }

  friend bool operator==(const SignalFrame&, const SignalFrame&) = default;
};

/// Physical rates entering the operating cost during one sample.
struct CostRates {
  double purge_rate = 0.0;      // kscm/h
  double product_rate = 0.0;    // m3/h
  double compressor_work = 0.0; // kW
  double steam_rate = 0.0;      // kg/h

  friend bool operator==(const CostRates&, const CostRates&) = default;
};

CostRates cost_rates(const StateVector& x, const ActuatorVector& u);
double cost_rate(const CostRates& rates, const CostCoefficients& coefficients);

struct SimulationTrace {
  std::vector<SignalFrame> frames;
  /// Cost-bearing rates per frame; parallel to `frames`.
  std::vector<CostRates> rates;
  std::optional<double> shutdown_time;
  std::optional<ConstraintId> shutdown_cause;
  double operating_cost = 0.0;
  int samples_per_hour = 500;
  std::uint64_t seed = 0;
  std::size_t sample_count = 0;

  [[nodiscard]] bool shut_down() const { return shutdown_time.has_value(); }
};

/// Rectangle-rule integral of the cost rates of a (possibly partial) trace.
/// Throws ContractError when the trace holds no rate samples.
double operating_cost(const SimulationTrace& trace, const CostCoefficients& coefficients);

/// Rectangle-rule integral of a rate series sampled at `samples_per_hour`.
double operating_cost(std::span<const CostRates> rates, int samples_per_hour, const CostCoefficients& coefficients);

struct ShutdownStatus {
  std::optional<ConstraintId> tripped;
  [[nodiscard]] bool ok() const { return !tripped; }
};

ShutdownStatus check_constraints(const PlantState& state, const PlantConfig& config);

/// Discrete PI controllers plus ratio laws mapping (possibly attacked) sensor
/// readings to actuator commands.
class ControlSystem {
public:
  explicit ControlSystem(const Setpoints& setpoints);
  ActuatorVector update(const SensorVector& readings, double dt);

private:
  struct Loop {
    std::size_t sensor;
    std::size_t actuator;
    double setpoint;
    double gain;
    double reset_time;
    double bias;
    double integral = 0.0;
  };
  std::array<Loop, 5> loops_;
};

struct SimulationOptions {
  bool record_frames = true;
  bool record_rates = true;
  /// Called for every frame in order, whether or not frames are recorded.
  std::function<void(const SignalFrame&)> on_frame;
};

/// Closed-loop run of `config` under `schedule`: sensors pass through the
/// attack layer before the controllers, commands pass through it before the
/// plant. Stops at the first constraint trip. Throws ScheduleError on a
/// malformed schedule.
SimulationTrace simulate(const attack::AttackSchedule& schedule, const PlantConfig& config,
                         const SimulationOptions& options = {});

/// Seed of the i-th run of a family of independent no-attack runs.
std::uint64_t run_seed(std::uint64_t base_seed, std::size_t run);

/// Per-signal extrema across `n_runs` attack-free runs with seeds
/// run_seed(config.seed, i). Throws ContractError when n_runs is zero.
attack::SignalRanges record_signal_ranges(std::size_t n_runs, const PlantConfig& config);

} // namespace icsatk::plant
