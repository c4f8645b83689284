// SPDX-License-Identifier: Apache-2.0
#pragma once
// Active-learning characterization over a pool of samples.
//
// Iteration 0 simulates a uniform slice of the pool with circuit-analysis
// intervals. Each later iteration fits a GP to everything simulated so far,
// spends the batch budget across corners in proportion to their summed
// predictive uncertainty, and searches the chosen samples starting from the
// GP prediction. After iteration k_max the rest of the pool is swept with the
// last predictions.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "setupkit/effort.hpp"
#include "setupkit/gp.hpp"
#include "setupkit/oracle.hpp"
#include "setupkit/search.hpp"

namespace setupkit {

struct AlConfig {
  int batch_size = 200;  // M
  int k_max = 5;
  /// Doublings allowed from a predicted interval before falling back to the
  /// circuit-analysis interval.
  int predicted_doublings = 6;

  /// Throws ConfigError unless 1 <= batch_size <= pool_size and k_max >= 0.
  void validate(int pool_size) const;
};

/// 0-based ids of the 1-based positions floor(i N / M), i = 1..M. A
/// collision advances to the next unused position.
std::vector<int> initial_selection(int pool_size, const AlConfig& config);

/// Integer budgets m_i summing to total, proportional to weights, by largest
/// remainder (ties to the lower index). capacity caps each m_i; the excess
/// goes to the remaining groups in the same way. All-zero weights fall back
/// to capacity-proportional shares.
std::vector<int> allocate_budget(const std::vector<double>& weights, int total, const std::vector<int>& capacity);

struct Candidate {
  int id = 0;
  int group = 0;  // corner index
  Prediction prediction;
};

/// Spends batch_size across groups by summed v and takes the top-v candidates
/// within each group (ties to the lower id). Result is sorted by id.
std::vector<int> select_batch(const std::vector<Candidate>& candidates, int group_count, int batch_size);

/// (mu, max(v, s_min)).
InitialInterval predicted_interval(const Prediction& p, double s_min);

/// Everything run_active_learning needs to know about the pool.
struct AlProblem {
  /// One row per sample; row index is the sample id.
  Eigen::MatrixXd features;
  std::vector<int> group_of;
  int group_count = 0;
  FailSide fail_side = FailSide::Low;
  std::function<std::unique_ptr<SkewDelayOracle>(int id)> make_oracle;
  /// Circuit-analysis interval; may spend oracle calls (they are counted).
  std::function<InitialInterval(int id, SkewDelayOracle& oracle)> analysis_interval;
};

enum class IntervalSource { Analysis, Predicted, PredictedFallback };

std::string_view to_string(IntervalSource s);

struct SampleOutcome {
  int id = 0;
  int group = 0;
  /// Iteration that simulated the sample; k_max + 1 for the final sweep.
  int phase = 0;
  double setup_time = 0.0;
  std::uint64_t oracle_calls = 0;
  std::uint64_t expansion_calls = 0;
  IntervalSource source = IntervalSource::Analysis;
  std::optional<Prediction> prediction;
  SearchTrace trace;  // expansion then search
};

struct AlPhaseStats {
  int phase = 0;
  bool final_sweep = false;
  int batch_size = 0;
  double mean_calls = 0.0;
  /// Mean predicted v over this phase's samples; empty for iteration 0.
  std::optional<double> mean_pred_std;
  std::optional<double> rmse_pred_vs_actual;
  /// Mean predicted v over the samples still unsimulated after this phase.
  std::optional<double> mean_pool_std;
};

struct ScatterPoint {
  int phase = 0;
  int id = 0;
  double predicted = 0.0;
  double predicted_std = 0.0;
  double actual = 0.0;
};

struct AlReport {
  std::vector<AlPhaseStats> phases;
  std::vector<ScatterPoint> scatter;
};

struct AlResult {
  /// Indexed by sample id.
  std::vector<SampleOutcome> outcomes;
  AlReport report;
};

/// Errors from a search or a fit are rethrown with the sample id or phase
/// prepended to the message.
AlResult run_active_learning(const AlProblem& problem, Method method, const SearchConfig& search_config,
                             const AlConfig& config, const GpFitOptions& gp_options = {});

/// k,phase,batch_size,mean_calls,mean_pred_std,rmse_pred_vs_actual,mean_pool_std with
/// phase one of initial, iteration, final.
void write_al_report_csv(std::ostream& out, const AlReport& report);
/// k,sample_id,predicted,predicted_std,actual
void write_scatter_csv(std::ostream& out, const AlReport& report);

}  // namespace setupkit
