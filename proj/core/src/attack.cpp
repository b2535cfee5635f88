#include "icsatk/attack.hpp"

#include "icsatk/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace icsatk::attack {

std::string_view to_string(AttackKind kind) {
  switch (kind) {
  case AttackKind::None: return "none";
  case AttackKind::DoS: return "dos";
  case AttackKind::IntegrityMin: return "integrity_min";
  case AttackKind::IntegrityMax: return "integrity_max";
  case AttackKind::Replay: return "replay";
  }
  return "none";
}

AttackKind attack_kind_from_string(std::string_view name) {
  for (auto kind : {AttackKind::None, AttackKind::DoS, AttackKind::IntegrityMin, AttackKind::IntegrityMax,
                    AttackKind::Replay}) {
    if (to_string(kind) == name) return kind;
  }
  throw ScheduleError("unknown attack kind '" + std::string(name) + "'");
}

void SignalRanges::set(std::size_t signal, Range range) {
  if (signal >= kSignalCount) throw InputDomainError("signal index out of range: " + std::to_string(signal));
  if (!(range.min <= range.max)) throw ConfigError("range for " + signal_name(signal) + " has min > max");
  ranges_[signal] = range;
}

bool SignalRanges::has(std::size_t signal) const { return signal < kSignalCount && ranges_[signal].has_value(); }

const Range& SignalRanges::at(std::size_t signal) const {
  if (!has(signal)) throw ConfigError("no recorded range for signal index " + std::to_string(signal));
  return *ranges_[signal];
}

bool SignalRanges::complete() const {
  return std::all_of(ranges_.begin(), ranges_.end(), [](const auto& r) { return r.has_value(); });
}

std::pair<double, double> default_replay_source(double t_start) {
  const double length = std::min(2.0, t_start);
  return {t_start - length, t_start};
}

AttackSchedule::AttackSchedule(std::vector<AttackDirective> directives, SignalRanges ranges)
    : ranges_(std::move(ranges)) {
  directives_.reserve(directives.size());
  for (auto& d : directives) add(d);
}

void AttackSchedule::add(AttackDirective directive) {
  if (directive.target >= kSignalCount) {
    throw ScheduleError("directive target out of range: " + std::to_string(directive.target));
  }
  const bool taken = std::any_of(directives_.begin(), directives_.end(),
                                 [&](const AttackDirective& d) { return d.target == directive.target; });
  if (taken) throw ScheduleError("two directives target " + signal_name(directive.target));
  directives_.push_back(directive);
}

void AttackSchedule::validate(double horizon_hours) const {
  std::array<bool, kSignalCount> seen{};
  for (const auto& d : directives_) {
    if (d.target >= kSignalCount) throw ScheduleError("directive target out of range");
    if (seen[d.target]) throw ScheduleError("two directives target " + signal_name(d.target));
    seen[d.target] = true;
    if (d.kind == AttackKind::None) continue;
    if (!std::isfinite(d.t_start) || !std::isfinite(d.t_end) || d.t_start < 0.0 || d.t_start >= d.t_end ||
        d.t_end > horizon_hours) {
      throw ScheduleError("attack window on " + signal_name(d.target) + " must satisfy 0 <= t_start < t_end <= " +
                          std::to_string(horizon_hours));
    }
    if (d.kind == AttackKind::Replay) {
      if (!d.replay_src) throw ScheduleError("replay on " + signal_name(d.target) + " has no source window");
      const auto [r_start, r_end] = *d.replay_src;
      if (!(r_start >= 0.0 && r_start < r_end && r_end <= d.t_start)) {
        throw ScheduleError("replay source on " + signal_name(d.target) +
                            " must satisfy 0 <= r_start < r_end <= t_start");
      }
    }
  }
}

std::size_t effort(const AttackSchedule& schedule) {
  return static_cast<std::size_t>(std::count_if(schedule.directives().begin(), schedule.directives().end(),
                                                [](const AttackDirective& d) { return d.kind != AttackKind::None; }));
}

double apply_dos(std::span<const double> stream_so_far, std::size_t start_index) {
  if (stream_so_far.empty()) throw ContractError("DoS hold needs at least one sample");
  if (start_index == 0) return stream_so_far.front();
  if (start_index > stream_so_far.size()) throw ContractError("DoS start lies beyond the received stream");
  return stream_so_far[start_index - 1];
}

double apply_integrity(AttackKind kind, const SignalRanges& ranges, std::size_t target) {
  const Range& r = ranges.at(target);
  switch (kind) {
  case AttackKind::IntegrityMin: return r.min;
  case AttackKind::IntegrityMax: return r.max;
  default: throw ContractError("apply_integrity called with a non-integrity kind");
  }
}

double apply_replay(std::span<const double> recorded, std::size_t samples_since_start) {
  if (recorded.empty()) throw ScheduleError("replay attack has an empty recording");
  return recorded[samples_since_start % recorded.size()];
}

std::size_t sample_index(double t_hours, int samples_per_hour) {
  return static_cast<std::size_t>(std::llround(t_hours * samples_per_hour));
}

Interceptor::Interceptor(const AttackSchedule& schedule, int samples_per_hour) {
  for (const auto& d : schedule.directives()) {
    if (d.kind == AttackKind::None) continue;
    Channel& ch = channels_[d.target];
    ch.kind = d.kind;
    ch.start = sample_index(d.t_start, samples_per_hour);
    ch.end = sample_index(d.t_end, samples_per_hour);
    if (d.kind == AttackKind::IntegrityMin || d.kind == AttackKind::IntegrityMax) {
      ch.substitute = apply_integrity(d.kind, schedule.ranges(), d.target);
    }
    if (d.kind == AttackKind::Replay) {
      if (!d.replay_src) throw ScheduleError("replay on " + signal_name(d.target) + " has no source window");
      ch.replay_begin = sample_index(d.replay_src->first, samples_per_hour);
      ch.replay_end = std::min(sample_index(d.replay_src->second, samples_per_hour), ch.start);
      if (ch.replay_end <= ch.replay_begin) {
        throw ScheduleError("replay on " + signal_name(d.target) + " has an empty recording window");
      }
      ch.recorded.reserve(ch.replay_end - ch.replay_begin);
    }
    any_ = any_ || ch.end > ch.start;
  }
}

bool Interceptor::attacked(std::size_t signal, std::size_t k) const {
  const Channel& ch = channels_[signal];
  return ch.kind != AttackKind::None && k >= ch.start && k < ch.end;
}

double Interceptor::intercept(std::size_t signal, std::size_t k, double live) {
  Channel& ch = channels_[signal];
  if (ch.kind == AttackKind::None) return live;

  if (k < ch.start || k >= ch.end) {
    if (ch.kind == AttackKind::Replay && k >= ch.replay_begin && k < ch.replay_end) ch.recorded.push_back(live);
    if (k < ch.start) {
      ch.previous = live;
      ch.has_previous = true;
    }
    return live;
  }

  switch (ch.kind) {
  case AttackKind::DoS:
    if (k == ch.start) {
      // Hold the last value received before the window; the live value at
      // sample 0 when the attack starts with the run.
      const double history[2] = {ch.has_previous ? ch.previous : live, live};
      ch.substitute = apply_dos(std::span<const double>(history, 2), ch.has_previous ? 1 : 0);
    }
    return ch.substitute;
  case AttackKind::IntegrityMin:
  case AttackKind::IntegrityMax: return ch.substitute;
  case AttackKind::Replay: return apply_replay(ch.recorded, k - ch.start);
  case AttackKind::None: break;
  }
  return live;
}

} // namespace icsatk::attack
