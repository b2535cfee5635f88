#pragma once

#include "icsatk/attack.hpp"

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace icsatk::attack {

enum class Problem : std::uint8_t { Shutdown, OpCost, Evasion };

std::string_view to_string(Problem problem);
Problem problem_from_string(std::string_view name);

/// One nonzero gene value. A negative duration means "until the horizon".
struct GeneCode {
  AttackKind kind = AttackKind::None;
  double t_start = 0.0;
  double duration = -1.0;

  friend bool operator==(const GeneCode&, const GeneCode&) = default;
};

/// Codes 1..n of a problem, in gene-value order (entry i is gene value i+1).
const std::vector<GeneCode>& encoding_table(Problem problem);

/// Number of admissible gene values including 0.
std::uint32_t alphabet_size(Problem problem);

/// One gene per signal: position i attacks signal i, value 0 means no attack.
struct Genome {
  std::array<std::uint32_t, kSignalCount> genes{};
  Problem problem = Problem::Shutdown;

  [[nodiscard]] std::size_t active() const;
  /// Throws DecodeError when a gene lies outside the problem's alphabet.
  void validate() const;

  friend bool operator==(const Genome&, const Genome&) = default;
  friend auto operator<=>(const Genome&, const Genome&) = default;
};

/// Schedule of `genome`, windows clipped to `horizon_hours`. Throws
/// DecodeError on an out-of-alphabet gene.
AttackSchedule decode_genome(const Genome& genome, const SignalRanges& ranges, double horizon_hours);

/// Inverse of decode_genome for schedules drawn from the problem's table.
/// Throws DecodeError when a directive has no code.
Genome encode_schedule(const AttackSchedule& schedule, Problem problem, double horizon_hours);

void to_json(nlohmann::json& j, const Genome& genome);
void from_json(const nlohmann::json& j, Genome& genome);
void to_json(nlohmann::json& j, const AttackDirective& directive);
void from_json(const nlohmann::json& j, AttackDirective& directive);
/// Directives only; ranges are not part of the serialized form.
nlohmann::json schedule_to_json(const AttackSchedule& schedule);
AttackSchedule schedule_from_json(const nlohmann::json& j, SignalRanges ranges = {});

} // namespace icsatk::attack

template <>
struct std::hash<icsatk::attack::Genome> {
  std::size_t operator()(const icsatk::attack::Genome& g) const noexcept;
};
