#pragma once

#include "icsatk/attack.hpp"
#include "icsatk/plant.hpp"

#include <nlohmann/json_fwd.hpp>

#include <iosfwd>

namespace icsatk::plant {

/// CSV with header `t,xmeas_1..xmeas_16,xmv_1..xmv_9`, one row per frame.
void write_trace_csv(std::ostream& out, const SimulationTrace& trace);

/// `{seed, shutdown_time, shutdown_cause, operating_cost}`; absent shutdown
/// fields are null.
nlohmann::json run_summary(const SimulationTrace& trace);

void to_json(nlohmann::json& j, const PlantConfig& config);
/// Missing keys keep their defaults. Throws ConfigError on invalid values.
void from_json(const nlohmann::json& j, PlantConfig& config);

} // namespace icsatk::plant

namespace icsatk::attack {

/// `{"xmeas_1": [min, max], ...}`
nlohmann::json ranges_to_json(const SignalRanges& ranges);
SignalRanges ranges_from_json(const nlohmann::json& j);

} // namespace icsatk::attack
