// SPDX-License-Identifier: Apache-2.0
#pragma once

// Zero-simulation initial search intervals from logical effort.
//
// Each stage contributes weight * (g * h + p * gamma) inverter-delay units.
// Default stage lists sum to latch 28/12/10 and DFF 10/7/3.33 units. They
// are data, so other register topologies need no new arithmetic.

#include <string>
#include <utility>
#include <vector>

#include "setupkit/oracle.hpp"

namespace setupkit {

enum class GateKind { Inverter, TransmissionGate };

struct EffortParams {
  double g_tg = 2.0;
  double g_inv = 1.0;
  double p_tg = 2.0;
  double p_inv = 1.0;
  double h = 1.0;
  double gamma = 1.0;

  void validate() const;
};

struct Stage {
  GateKind kind = GateKind::Inverter;
  /// Fraction of a full stage on the path; 1 for an ordinary gate.
  double weight = 1.0;
};

using StagePath = std::vector<Stage>;

struct TopologyPaths {
  std::string name;
  StagePath nominal;
  StagePath setup;
  StagePath hold;
  double setup_fraction = 0.5;
  double hold_fraction = 0.5;
};

struct TopologyEstimate {
  double nominal_delay_units = 0.0;
  double setup_units = 0.0;
  double hold_units = 0.0;
  double setup_fraction = 0.0;
  double hold_fraction = 0.0;
};

/// C2MOS latch (enable -> Q) and C2MOS/transmission-gate DFF (CK -> Q).
TopologyPaths default_paths(Topology topology);

double stage_delay(const Stage& stage, const EffortParams& params);
double path_delay(const StagePath& path, const EffortParams& params);
/// Sum of stage weights.
double stage_count(const StagePath& path);

TopologyEstimate estimate_topology(const TopologyPaths& paths, const EffortParams& params = {});
TopologyEstimate estimate_topology(Topology topology, const EffortParams& params = {});

struct InitialInterval {
  double l0 = 0.0;
  double s0 = 0.0;
};

/// l0 = s0 = fraction * measured_nominal_delay, each clamped to >= s_min.
/// The measured delay may be negative.
InitialInterval initial_interval(const TopologyPaths& paths, Constraint constraint,
                                 double measured_nominal_delay, double s_min);
InitialInterval initial_interval(Topology topology, Constraint constraint, double measured_nominal_delay,
                                 double s_min);

GateKind parse_gate_kind(std::string_view token);
std::string_view to_string(GateKind kind);

/// Parses "INV, TG, INV*0.5" style stage lists.
StagePath parse_stage_path(std::string_view text);
std::string format_stage_path(const StagePath& path);

}  // namespace setupkit
