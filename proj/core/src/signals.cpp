#include "icsatk/signals.hpp"

#include "icsatk/errors.hpp"

namespace icsatk {

std::string signal_name(std::size_t signal) {
  if (signal >= kSignalCount) throw InputDomainError("signal index out of range: " + std::to_string(signal));
  if (is_sensor(signal)) return "XMEAS-" + std::to_string(signal + 1);
  return "XMV-" + std::to_string(signal - kSensorCount + 1);
}

std::string signal_column(std::size_t signal) {
  if (signal >= kSignalCount) throw InputDomainError("signal index out of range: " + std::to_string(signal));
  if (is_sensor(signal)) return "xmeas_" + std::to_string(signal + 1);
  return "xmv_" + std::to_string(signal - kSensorCount + 1);
}

} // namespace icsatk
