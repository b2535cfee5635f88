#pragma once

#include <cstddef>
#include <string>

namespace icsatk {

inline constexpr std::size_t kSensorCount = 16;
inline constexpr std::size_t kActuatorCount = 9;
/// Attackable signals: sensors first (0-15), then actuators (16-24).
inline constexpr std::size_t kSignalCount = kSensorCount + kActuatorCount;

constexpr bool is_sensor(std::size_t signal) noexcept { return signal < kSensorCount; }

/// "XMEAS-3", "XMV-1", ...
std::string signal_name(std::size_t signal);

/// CSV column label: "xmeas_3", "xmv_1", ...
std::string signal_column(std::size_t signal);

} // namespace icsatk
