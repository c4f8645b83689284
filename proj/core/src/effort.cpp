// SPDX-License-Identifier: Apache-2.0
#include "setupkit/effort.hpp"

#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

#include "setupkit/csv.hpp"
#include "setupkit/errors.hpp"

namespace setupkit {

void EffortParams::validate() const {
  for (double v : {g_tg, g_inv, p_tg, p_inv, h, gamma})
    if (!(v > 0.0)) throw std::invalid_argument("EffortParams: all parameters must be positive");
}

TopologyPaths default_paths(Topology topology) {
  constexpr Stage inv{GateKind::Inverter, 1.0};
  constexpr Stage tg{GateKind::TransmissionGate, 1.0};
  if (topology == Topology::Latch) {
    // E -> CLKb -> D -> D1 -> D2 -> D3 -> Q : 28 units
    // D -> D1 -> D2 : 12 units, D -> D1 : 10 units
    return {"latch", {inv, tg, tg, tg, tg, tg, tg, inv}, {tg, tg, tg}, {tg, tg, inv}, 0.4, 0.35};
  }
  // CK -> CLKb -> CLK -> D3 -> D4 -> D5 -> Q : 10 units
  // D -> D1 -> D2 -> D3 : 7 units, D -> D1 -> D2 : 3.33 units
  return {"dff",
          {inv, inv, tg, inv},
          {inv, tg, {GateKind::Inverter, 0.5}},
          {inv, {GateKind::Inverter, 2.0 / 3.0}},
          0.7,
          0.33};
}

double stage_delay(const Stage& stage, const EffortParams& p) {
  const bool tg = stage.kind == GateKind::TransmissionGate;
  const double g = tg ? p.g_tg : p.g_inv;
  const double parasitic = tg ? p.p_tg : p.p_inv;
  return stage.weight * (g * p.h + parasitic * p.gamma);
}

double path_delay(const StagePath& path, const EffortParams& params) {
  double total = 0.0;
  for (const auto& s : path) total += stage_delay(s, params);
  return total;
}

double stage_count(const StagePath& path) {
  double n = 0.0;
  for (const auto& s : path) n += s.weight;
  return n;
}

TopologyEstimate estimate_topology(const TopologyPaths& paths, const EffortParams& params) {
  params.validate();
  return {path_delay(paths.nominal, params), path_delay(paths.setup, params), path_delay(paths.hold, params),
          paths.setup_fraction, paths.hold_fraction};
}

TopologyEstimate estimate_topology(Topology topology, const EffortParams& params) {
  return estimate_topology(default_paths(topology), params);
}

InitialInterval initial_interval(const TopologyPaths& paths, Constraint constraint, double measured_nominal_delay,
                                 double s_min) {
  if (!(s_min > 0.0)) throw std::invalid_argument("initial_interval: s_min must be positive");
  const double fraction = constraint == Constraint::Setup ? paths.setup_fraction : paths.hold_fraction;
  const double v = fraction * measured_nominal_delay;
  return {std::max(v, s_min), std::max(v, s_min)};
}

InitialInterval initial_interval(Topology topology, Constraint constraint, double measured_nominal_delay,
                                 double s_min) {
  return initial_interval(default_paths(topology), constraint, measured_nominal_delay, s_min);
}

GateKind parse_gate_kind(std::string_view token) {
  if (token == "INV" || token == "inv") return GateKind::Inverter;
  if (token == "TG" || token == "tg") return GateKind::TransmissionGate;
  throw ParseError(fmt::format("unknown gate kind '{}' (expected INV or TG)", token));
}

std::string_view to_string(GateKind kind) { return kind == GateKind::Inverter ? "INV" : "TG"; }

StagePath parse_stage_path(std::string_view text) {
  StagePath path;
  for (const auto& item : split_csv_line(text)) {
    if (item.empty()) throw ParseError(fmt::format("empty stage in '{}'", text));
    const auto star = item.find('*');
    Stage s;
    s.kind = parse_gate_kind(trim(std::string_view(item).substr(0, star)));
    if (star != std::string::npos) {
      const auto w = trim(std::string_view(item).substr(star + 1));
      const auto slash = w.find('/');
      if (slash != std::string_view::npos) {
        s.weight = parse_number(w.substr(0, slash), "stage weight") / parse_number(w.substr(slash + 1), "stage weight");
      } else {
        s.weight = parse_number(w, "stage weight");
      }
      if (!(s.weight > 0.0)) throw ParseError(fmt::format("stage weight must be positive in '{}'", item));
    }
    path.push_back(s);
  }
  return path;
}

std::string format_stage_path(const StagePath& path) {
  std::string out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) out += ", ";
    out += to_string(path[i].kind);
    if (path[i].weight != 1.0) out += fmt::format("*{}", path[i].weight);
  }
  return out;
}

}  // namespace setupkit
