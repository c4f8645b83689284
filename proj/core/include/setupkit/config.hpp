// SPDX-License-Identifier: Apache-2.0
#pragma once
// Experiment configuration: flat "key = value" lines grouped under
// [section] headers. '#' starts a comment. Unknown keys are errors.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "setupkit/al.hpp"
#include "setupkit/effort.hpp"
#include "setupkit/external_oracle.hpp"
#include "setupkit/oracle.hpp"
#include "setupkit/sampling.hpp"
#include "setupkit/search.hpp"

namespace setupkit {

/// One parsed "key = value" with its origin, for error messages.
struct ConfigEntry {
  std::string section;
  std::string key;
  std::string value;
  int line = 0;
};

/// Splits text into entries. Lines under [corners] without '=' are kept
/// with an empty key. Throws ConfigError with the line number.
std::vector<ConfigEntry> parse_config_text(std::string_view text);

enum class IntervalPolicy { Fixed, Effort, Al };

std::string_view to_string(IntervalPolicy p);
IntervalPolicy parse_interval_policy(std::string_view token);

struct FixedInterval {
  double l0 = 0.0;
  double s0 = 0.0;
};

struct ExperimentConfig {
  std::vector<PvtCorner> corners = default_corner_table();
  Topology topology = Topology::Dff;
  Constraint constraint = Constraint::Setup;
  std::vector<Method> methods{Method::Bisection, Method::Beira};
  std::vector<IntervalPolicy> policies{IntervalPolicy::Fixed, IntervalPolicy::Al};
  int samples_per_corner = 100;
  std::uint64_t seed = 1;
  /// Seeds the synthetic PVT -> model map; kept apart from the sample seed.
  std::uint64_t model_seed = 2024;
  /// Large skew used for the one-call nominal delay measurement.
  double nominal_skew = 100.0;
  /// Number of samples (first of each corner, in corner order) whose traces are written.
  int trace_samples = 16;
  std::filesystem::path output_dir = "results";

  SearchConfig search;
  AlConfig al{20, 5, 6};
  int gp_starts = 3;
  int gp_max_iterations = 150;
  QmcConfig qmc;
  bool scramble = true;
  EffortParams effort;
  TopologyPaths paths = default_paths(Topology::Dff);
  /// Explicit fixed interval; unset means 10x the effort estimate.
  std::optional<FixedInterval> fixed;
  /// Set when the oracle is an external simulator (single-point runs).
  std::optional<ExternalOracleOptions> external;

  /// Throws ConfigError on violated invariants.
  void validate() const;
  int sample_count() const { return static_cast<int>(corners.size()) * samples_per_corner; }
  /// Explicit (l0, s0) or 10x the effort estimate in topology units.
  FixedInterval fixed_interval() const;
};

/// Throws ConfigError with line and key context.
ExperimentConfig parse_experiment_config(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Reads a corner table CSV with header process,voltage,temperature.
std::vector<PvtCorner> read_corner_csv(std::istream& in);

/// Commented default configuration; parses back to ExperimentConfig{}.
std::string default_config_text();

}  // namespace setupkit
