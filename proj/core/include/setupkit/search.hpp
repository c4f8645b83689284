// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "setupkit/oracle.hpp"

namespace setupkit {

/// Outcome of one test point against the degradation threshold. Failure
/// brackets on the same side as AboveThreshold.
enum class Classification { BelowThreshold, AboveThreshold, Failure };

inline bool on_above_side(Classification c) { return c != Classification::BelowThreshold; }

std::string_view to_string(Classification c);
Classification parse_classification(std::string_view token);

Classification classify(const SimOutcome& outcome, double threshold_delay);

/// Interval guaranteed to contain the threshold crossing: exactly one
/// endpoint classifies BelowThreshold. Delays are kept so interpolation can
/// start from the endpoints without re-simulating them.
struct Bracket {
  double lo = 0.0;
  double hi = 0.0;
  Classification lo_class = Classification::AboveThreshold;
  Classification hi_class = Classification::BelowThreshold;
  std::optional<double> lo_delay;
  std::optional<double> hi_delay;

  double length() const { return hi - lo; }
  bool valid() const { return lo < hi && (on_above_side(lo_class) != on_above_side(hi_class)); }
};

struct SearchConfig {
  double tau = 0.01;
  double sigma0 = 0.001;
  double beta = 5.0;
  int max_iter = 100;
  double threshold_ratio = 1.10;
  int safeguard_window = 2;
  /// Smallest permitted initial step for bracket expansion.
  double min_step = 0.02;

  /// Throws ConfigError when an invariant is violated.
  void validate() const;
};

struct TraceEntry {
  double test_point = 0.0;
  Classification classification = Classification::BelowThreshold;
  std::optional<double> delay;
  /// Bracket length after this evaluation; empty while no bracket exists.
  std::optional<double> interval_length;
};

struct SearchTrace {
  std::vector<TraceEntry> entries;
};

enum class Method { Bisection, RegulaFalsi, Quadratic, Brent, Beira };

std::string_view to_string(Method m);
Method parse_method(std::string_view token);

struct SearchResult {
  double root = 0.0;
  std::uint64_t oracle_calls = 0;
  SearchTrace trace;
  Method method = Method::Bisection;
  Bracket final_bracket;
};

struct Expansion {
  Bracket bracket;
  std::uint64_t oracle_calls = 0;
  SearchTrace trace;
};

/// Tests l0, then l0 +- 2^n s0 (n = 0, 1, ...) toward the side opposite to
/// l0's classification until the classification flips. fail_side says which
/// direction of the skew axis fails. Throws BracketNotFound after
/// max_doublings steps (config.max_iter when unset).
Expansion expand_bracket(SkewDelayOracle& oracle, double l0, double s0, FailSide fail_side,
                         const SearchConfig& config, std::optional<int> max_doublings = std::nullopt);

SearchResult search_bisection(SkewDelayOracle& oracle, const Bracket& bracket, const SearchConfig& config);
SearchResult search_regula_falsi(SkewDelayOracle& oracle, const Bracket& bracket, const SearchConfig& config);
SearchResult search_quadratic(SkewDelayOracle& oracle, const Bracket& bracket, const SearchConfig& config);
SearchResult search_brent(SkewDelayOracle& oracle, const Bracket& bracket, const SearchConfig& config);

/// Bias-enhanced interpolation. Each step interpolates the threshold crossing,
/// models its error as Gaussian with sigma = sigma0 * beta^n (n = consecutive
/// steps landing on the same bracket side) and tests at the point that
/// minimizes the expected next bracket length.
SearchResult search_beira(SkewDelayOracle& oracle, const Bracket& bracket, const SearchConfig& config);

SearchResult search(Method method, SkewDelayOracle& oracle, const Bracket& bracket, const SearchConfig& config);

/// Longest run of consecutive trace entries landing on the same bracket side.
int longest_one_sided_run(const SearchTrace& trace);

/// CSV with header iter,test_point,classification,delay,interval_length.
void write_trace_csv(std::ostream& out, const SearchTrace& trace);
/// Throws ParseError on a malformed or empty trace.
SearchTrace read_trace_csv(std::istream& in);

}  // namespace setupkit
