#include "icsatk/genome.hpp"

#include "icsatk/errors.hpp"
#include "icsatk/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace icsatk::attack {
namespace {

constexpr std::array<AttackKind, 4> kAllKinds = {AttackKind::DoS, AttackKind::IntegrityMin, AttackKind::IntegrityMax,
                                                 AttackKind::Replay};

std::vector<GeneCode> shutdown_table() {
  std::vector<GeneCode> table;
  for (const AttackKind kind : kAllKinds) {
    for (int i = 0; i < 35; ++i) table.push_back({kind, 2.0 + 2.0 * i, -1.0});
  }
  return table;
}

std::vector<GeneCode> opcost_table() {
  // Nine (start, duration) windows per kind.
  constexpr std::array<std::pair<double, double>, 9> windows = {
      {{2, 70}, {2, 50}, {10, 62}, {10, 20}, {20, 52}, {20, 10}, {30, 42}, {50, 12}, {50, 20}}};
  std::vector<GeneCode> table;
  for (const AttackKind kind : kAllKinds) {
    for (const auto& [start, duration] : windows) table.push_back({kind, start, duration});
  }
  return table;
}

std::vector<GeneCode> evasion_table() {
  std::vector<GeneCode> table;
  for (const AttackKind kind : {AttackKind::DoS, AttackKind::Replay}) {
    for (int i = 0; i < 70; ++i) table.push_back({kind, 2.0 + 68.0 * i / 69.0, 2.0});
  }
  return table;
}

AttackDirective directive_of(std::size_t target, const GeneCode& code, double horizon) {
  AttackDirective d;
  d.target = target;
  d.kind = code.kind;
  d.t_start = code.t_start;
  d.t_end = code.duration < 0.0 ? horizon : std::min(horizon, code.t_start + code.duration);
  if (code.kind == AttackKind::Replay) d.replay_src = default_replay_source(code.t_start);
  return d;
}

} // namespace

std::string_view to_string(Problem problem) {
  switch (problem) {
  case Problem::Shutdown: return "shutdown";
  case Problem::OpCost: return "opcost";
  case Problem::Evasion: return "evasion";
  }
  return "unknown";
}

Problem problem_from_string(std::string_view name) {
  for (const Problem p : {Problem::Shutdown, Problem::OpCost, Problem::Evasion}) {
    if (to_string(p) == name) return p;
  }
  throw ConfigError("unknown problem '" + std::string(name) + "'");
}

const std::vector<GeneCode>& encoding_table(Problem problem) {
  static const std::vector<GeneCode> shutdown = shutdown_table();
  static const std::vector<GeneCode> opcost = opcost_table();
  static const std::vector<GeneCode> evasion = evasion_table();
  switch (problem) {
  case Problem::Shutdown: return shutdown;
  case Problem::OpCost: return opcost;
  case Problem::Evasion: return evasion;
  }
  throw ContractError("unknown problem");
}

std::uint32_t alphabet_size(Problem problem) {
  return static_cast<std::uint32_t>(encoding_table(problem).size() + 1);
}

std::size_t Genome::active() const {
  return static_cast<std::size_t>(std::count_if(genes.begin(), genes.end(), [](auto g) { return g != 0; }));
}

void Genome::validate() const {
  const std::uint32_t n = alphabet_size(problem);
  for (std::size_t i = 0; i < genes.size(); ++i) {
    if (genes[i] >= n) {
      throw DecodeError("gene " + std::to_string(i) + " = " + std::to_string(genes[i]) + " outside the " +
                        std::string(to_string(problem)) + " alphabet [0, " + std::to_string(n - 1) + "]");
    }
  }
}

AttackSchedule decode_genome(const Genome& genome, const SignalRanges& ranges, double horizon_hours) {
  genome.validate();
  const auto& table = encoding_table(genome.problem);
  AttackSchedule schedule({}, ranges);
  for (std::size_t i = 0; i < kSignalCount; ++i) {
    if (genome.genes[i] == 0) continue;
    schedule.add(directive_of(i, table[genome.genes[i] - 1], horizon_hours));
  }
  return schedule;
}

Genome encode_schedule(const AttackSchedule& schedule, Problem problem, double horizon_hours) {
  const auto& table = encoding_table(problem);
  Genome genome;
  genome.problem = problem;
  for (const auto& d : schedule.directives()) {
    if (d.kind == AttackKind::None) continue;
    if (d.target >= kSignalCount) throw DecodeError("directive target out of range");
    const auto it = std::find_if(table.begin(), table.end(), [&](const GeneCode& code) {
      return directive_of(d.target, code, horizon_hours) == d;
    });
    if (it == table.end()) {
      throw DecodeError("no " + std::string(to_string(problem)) + " code for the directive on " +
                        signal_name(d.target));
    }
    genome.genes[d.target] = static_cast<std::uint32_t>(it - table.begin() + 1);
  }
  return genome;
}

void to_json(nlohmann::json& j, const Genome& genome) {
  j = nlohmann::json{{"problem", to_string(genome.problem)}, {"genes", genome.genes}};
}

void from_json(const nlohmann::json& j, Genome& genome) {
  genome.problem = problem_from_string(j.at("problem").get<std::string>());
  const auto genes = j.at("genes").get<std::vector<std::int64_t>>();
  if (genes.size() != kSignalCount) throw DecodeError("genome needs exactly 25 genes");
  for (std::size_t i = 0; i < kSignalCount; ++i) {
    if (genes[i] < 0) throw DecodeError("negative gene value");
    genome.genes[i] = static_cast<std::uint32_t>(genes[i]);
  }
  genome.validate();
}

void to_json(nlohmann::json& j, const AttackDirective& d) {
  j = nlohmann::json{{"target", d.target}, {"kind", to_string(d.kind)}, {"t_start", d.t_start}, {"t_end", d.t_end}};
  if (d.replay_src) j["replay_src"] = {d.replay_src->first, d.replay_src->second};
}

void from_json(const nlohmann::json& j, AttackDirective& d) {
  d.target = j.at("target").get<std::size_t>();
  d.kind = attack_kind_from_string(j.at("kind").get<std::string>());
  d.t_start = j.at("t_start").get<double>();
  d.t_end = j.at("t_end").get<double>();
  d.replay_src.reset();
  if (j.contains("replay_src")) {
    const auto& src = j.at("replay_src");
    d.replay_src = std::pair{src.at(0).get<double>(), src.at(1).get<double>()};
  }
}

nlohmann::json schedule_to_json(const AttackSchedule& schedule) {
  return nlohmann::json(schedule.directives());
}

AttackSchedule schedule_from_json(const nlohmann::json& j, SignalRanges ranges) {
  return AttackSchedule(j.get<std::vector<AttackDirective>>(), std::move(ranges));
}

} // namespace icsatk::attack

std::size_t std::hash<icsatk::attack::Genome>::operator()(const icsatk::attack::Genome& g) const noexcept {
  std::uint64_t h = static_cast<std::uint64_t>(g.problem);
  for (const auto gene : g.genes) h = icsatk::mix64(h ^ gene);
  return static_cast<std::size_t>(h);
}
