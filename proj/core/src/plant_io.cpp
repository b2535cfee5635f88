#include "icsatk/plant_io.hpp"

#include "icsatk/errors.hpp"
#include "icsatk/text.hpp"

#include <nlohmann/json.hpp>

#include <ostream>
#include <string>

namespace icsatk::plant {
namespace {

void limits_to_json(nlohmann::json& j, const char* key, const LimitPair& p) { j[key] = {p.low, p.high}; }

void limits_from_json(const nlohmann::json& j, const char* key, LimitPair& p) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2) throw ConfigError(std::string("shutdown limit '") + key + "' must be [low, high]");
  p = {v[0].get<double>(), v[1].get<double>()};
}

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

} // namespace

void write_trace_csv(std::ostream& out, const SimulationTrace& trace) {
  out << 't';
  for (std::size_t i = 0; i < kSignalCount; ++i) out << ',' << signal_column(i);
  out << '\n';
  for (const auto& f : trace.frames) {
    out << shortest(f.t);
    for (std::size_t i = 0; i < kSignalCount; ++i) out << ',' << shortest(f.signal(i));
    out << '\n';
  }
}

nlohmann::json run_summary(const SimulationTrace& trace) {
  nlohmann::json j;
  j["seed"] = trace.seed;
  j["shutdown_time"] = trace.shutdown_time ? nlohmann::json(*trace.shutdown_time) : nlohmann::json(nullptr);
  j["shutdown_cause"] =
      trace.shutdown_cause ? nlohmann::json(std::string(to_string(*trace.shutdown_cause))) : nlohmann::json(nullptr);
  j["operating_cost"] = trace.operating_cost;
  return j;
}

void to_json(nlohmann::json& j, const PlantConfig& c) {
  j = nlohmann::json::object();
  j["horizon_hours"] = c.horizon_hours;
  j["samples_per_hour"] = c.samples_per_hour;
  j["noise_scale"] = c.noise_scale;
  j["seed"] = c.seed;
  j["setpoints"] = {{"reactor_pressure", c.setpoints.reactor_pressure},
                    {"reactor_temperature", c.setpoints.reactor_temperature},
                    {"reactor_level", c.setpoints.reactor_level},
                    {"separator_level", c.setpoints.separator_level},
                    {"stripper_level", c.setpoints.stripper_level}};
  nlohmann::json limits;
  limits_to_json(limits, "reactor_pressure", c.shutdown_limits.reactor_pressure);
  limits_to_json(limits, "reactor_level", c.shutdown_limits.reactor_level);
  limits_to_json(limits, "reactor_temperature", c.shutdown_limits.reactor_temperature);
  limits_to_json(limits, "separator_level", c.shutdown_limits.separator_level);
  limits_to_json(limits, "stripper_level", c.shutdown_limits.stripper_level);
  j["shutdown_limits"] = limits;
  j["cost"] = {{"purge", c.cost.purge},
               {"product", c.cost.product},
               {"compressor", c.cost.compressor},
               {"steam", c.cost.steam}};
}

void from_json(const nlohmann::json& j, PlantConfig& c) {
  try {
    read_if(j, "horizon_hours", c.horizon_hours);
    read_if(j, "samples_per_hour", c.samples_per_hour);
    read_if(j, "noise_scale", c.noise_scale);
    read_if(j, "seed", c.seed);
    if (j.contains("setpoints")) {
      const auto& s = j.at("setpoints");
      read_if(s, "reactor_pressure", c.setpoints.reactor_pressure);
      read_if(s, "reactor_temperature", c.setpoints.reactor_temperature);
      read_if(s, "reactor_level", c.setpoints.reactor_level);
      read_if(s, "separator_level", c.setpoints.separator_level);
      read_if(s, "stripper_level", c.setpoints.stripper_level);
    }
    if (j.contains("shutdown_limits")) {
      const auto& l = j.at("shutdown_limits");
      limits_from_json(l, "reactor_pressure", c.shutdown_limits.reactor_pressure);
      limits_from_json(l, "reactor_level", c.shutdown_limits.reactor_level);
      limits_from_json(l, "reactor_temperature", c.shutdown_limits.reactor_temperature);
      limits_from_json(l, "separator_level", c.shutdown_limits.separator_level);
      limits_from_json(l, "stripper_level", c.shutdown_limits.stripper_level);
    }
    if (j.contains("cost")) {
      const auto& k = j.at("cost");
      read_if(k, "purge", c.cost.purge);
      read_if(k, "product", c.cost.product);
      read_if(k, "compressor", c.cost.compressor);
      read_if(k, "steam", c.cost.steam);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("plant config: ") + e.what());
  }
  c.validate();
}

} // namespace icsatk::plant

namespace icsatk::attack {

nlohmann::json ranges_to_json(const SignalRanges& ranges) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < kSignalCount; ++i) {
    if (ranges.has(i)) j[signal_column(i)] = {ranges.at(i).min, ranges.at(i).max};
  }
  return j;
}

SignalRanges ranges_from_json(const nlohmann::json& j) {
  SignalRanges ranges;
  for (std::size_t i = 0; i < kSignalCount; ++i) {
    const auto key = signal_column(i);
    if (!j.contains(key)) continue;
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != 2) throw ConfigError("range '" + key + "' must be [min, max]");
    ranges.set(i, {v[0].get<double>(), v[1].get<double>()});
  }
  return ranges;
}

} // namespace icsatk::attack
