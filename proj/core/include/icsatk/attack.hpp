#pragma once

#include "icsatk/signals.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace icsatk::attack {

enum class AttackKind : std::uint8_t { None, DoS, IntegrityMin, IntegrityMax, Replay };

std::string_view to_string(AttackKind kind);
AttackKind attack_kind_from_string(std::string_view name);

/// Observed extrema of one signal under normal operation.
struct Range {
  double min = 0.0;
  double max = 0.0;

  friend bool operator==(const Range&, const Range&) = default;
};

/// Per-signal ranges feeding the integrity attacks. Entries may be missing.
class SignalRanges {
public:
  SignalRanges() = default;

  void set(std::size_t signal, Range range);
  [[nodiscard]] bool has(std::size_t signal) const;
  /// Throws ConfigError when no range was recorded for `signal`.
  [[nodiscard]] const Range& at(std::size_t signal) const;
  [[nodiscard]] bool complete() const;

  friend bool operator==(const SignalRanges&, const SignalRanges&) = default;

private:
  std::array<std::optional<Range>, kSignalCount> ranges_{};
};

/// One interception directive on one signal. Times are in plant hours; the
/// attack covers [t_start, t_end).
struct AttackDirective {
  std::size_t target = 0;
  AttackKind kind = AttackKind::None;
  double t_start = 0.0;
  double t_end = 0.0;
  /// Replay source window [first, second), required for Replay.
  std::optional<std::pair<double, double>> replay_src;

  friend bool operator==(const AttackDirective&, const AttackDirective&) = default;
};

/// Replay window used for genome-decoded replay attacks: the legitimate data
/// recorded during the (at most) 2 hours before the attack starts.
std::pair<double, double> default_replay_source(double t_start);

/// A set of simultaneous directives, at most one per target signal.
class AttackSchedule {
public:
  AttackSchedule() = default;
  explicit AttackSchedule(std::vector<AttackDirective> directives, SignalRanges ranges = {});

  /// Throws ScheduleError if the target already has a directive.
  void add(AttackDirective directive);

  [[nodiscard]] const std::vector<AttackDirective>& directives() const { return directives_; }
  [[nodiscard]] const SignalRanges& ranges() const { return ranges_; }
  void set_ranges(SignalRanges ranges) { ranges_ = std::move(ranges); }
  [[nodiscard]] bool empty() const { return directives_.empty(); }

  /// Checks targets, windows and replay sources against the plant horizon.
  /// Throws ScheduleError on the first violation.
  void validate(double horizon_hours) const;

  friend bool operator==(const AttackSchedule&, const AttackSchedule&) = default;

private:
  std::vector<AttackDirective> directives_;
  SignalRanges ranges_;
};

/// Number of attacked signals (directives whose kind is not None).
std::size_t effort(const AttackSchedule& schedule);

/// DoS hold: the last sample received before the attack began. With
/// start_index 0 the initial value stream[0] is held.
double apply_dos(std::span<const double> stream_so_far, std::size_t start_index);

/// Integrity substitution: the recorded minimum or maximum of `target`.
double apply_integrity(AttackKind kind, const SignalRanges& ranges, std::size_t target);

/// Cyclic replay of a legitimate recording.
double apply_replay(std::span<const double> recorded, std::size_t samples_since_start);

/// Sample index of time t (hours) on a grid of samples_per_hour.
std::size_t sample_index(double t_hours, int samples_per_hour);

/// The attack layer of one simulation run. Call intercept() for every signal
/// at every sample in increasing sample order.
class Interceptor {
public:
  Interceptor(const AttackSchedule& schedule, int samples_per_hour);

  /// Returns the value delivered downstream at sample k for a live value.
  double intercept(std::size_t signal, std::size_t k, double live);

  [[nodiscard]] bool attacked(std::size_t signal, std::size_t k) const;
  [[nodiscard]] bool any() const { return any_; }

private:
  struct Channel {
    AttackKind kind = AttackKind::None;
    std::size_t start = 0;
    std::size_t end = 0;
    std::size_t replay_begin = 0;
    std::size_t replay_end = 0;
    double substitute = 0.0;
    double previous = 0.0;
    bool has_previous = false;
    std::vector<double> recorded;
  };

  std::array<Channel, kSignalCount> channels_{};
  bool any_ = false;
};

} // namespace icsatk::attack
