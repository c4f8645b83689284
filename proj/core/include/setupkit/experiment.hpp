// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "setupkit/al.hpp"
#include "setupkit/config.hpp"

namespace setupkit {

/// Synthetic sample pool: corner-major blocks of samples_per_corner rows.
struct SamplePool {
  std::vector<PvtSample> samples;
  std::vector<int> corner_of;
  Eigen::MatrixXd features;
  std::vector<AnalyticCellModel> models;
};

/// GP feature row: process code, voltage, temperature / 100, local variations.
Eigen::VectorXd feature_row(const PvtSample& sample);

SamplePool build_pool(const ExperimentConfig& config);

struct SampleRecord {
  int id = 0;
  int corner = 0;
  double setup_time = 0.0;
  std::uint64_t oracle_calls = 0;
  std::uint64_t expansion_calls = 0;
  Method method = Method::Bisection;
  IntervalPolicy policy = IntervalPolicy::Fixed;
};

struct ComboResult {
  Method method = Method::Bisection;
  IntervalPolicy policy = IntervalPolicy::Fixed;
  std::vector<SampleRecord> samples;
  std::vector<std::pair<int, SearchTrace>> traces;
  std::optional<AlReport> al_report;
  /// Calls seen by the oracles themselves, for cross-checking the records.
  std::uint64_t counter_total = 0;
  double wall_seconds = 0.0;
};

/// Runs one (method, policy) pair over the whole pool. When on_partial is
/// given and a sample throws, it receives the records finished so far
/// before the error propagates.
ComboResult run_combo(const ExperimentConfig& config, const SamplePool& pool, Method method, IntervalPolicy policy,
                      const std::function<void(const ComboResult&)>& on_partial = {});

struct ReportRow {
  Method method = Method::Bisection;
  IntervalPolicy policy = IntervalPolicy::Fixed;
  std::string corner;  // "all" for the pooled row
  int samples = 0;
  double mean_calls = 0.0;
  double p95_calls = 0.0;
  std::uint64_t max_expansion_calls = 0;
  double wall_seconds = 0.0;
};

/// Per-corner rows followed by the pooled "all" row.
std::vector<ReportRow> summarize(const ExperimentConfig& config, const ComboResult& combo);

/// Nearest-rank percentile, q in (0, 1].
double percentile(std::vector<double> values, double q);

std::string results_csv(const ExperimentConfig& config, const ComboResult& combo);
/// method,policy,corner,samples,mean_calls,p95_calls,max_expansion_calls (no timing, so it is reproducible).
std::string report_csv(const std::vector<ReportRow>& rows);
std::string timing_csv(const std::vector<ReportRow>& rows);
std::string markdown_summary(const ExperimentConfig& config, const std::vector<ReportRow>& rows);

struct RunSummary {
  std::vector<ComboResult> combos;
  std::vector<ReportRow> rows;
};

/// Every configured (method, policy) pair; writes results and trace CSVs.
/// With an [external] oracle, characterizes the single external cell.
RunSummary characterize(const ExperimentConfig& config);
/// characterize() plus report.csv, timing.csv and summary.md. Needs at least two pairs.
RunSummary bench(const ExperimentConfig& config);
/// Every configured method with the al policy; writes results and AL reports.
RunSummary al_run(const ExperimentConfig& config);

}  // namespace setupkit
