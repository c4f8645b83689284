// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace setupkit {

/// Result of one skew -> CK-Q delay evaluation: a delay, or a failed capture.
struct SimOutcome {
  std::optional<double> delay;

  static SimOutcome failure() { return {}; }
  static SimOutcome of(double d) { return {d}; }
  bool failed() const { return !delay.has_value(); }
};

/// The black box being characterized. Every evaluate() is one unit of cost.
class SkewDelayOracle {
 public:
  virtual ~SkewDelayOracle() = default;

  virtual SimOutcome evaluate(double skew) = 0;
  /// Number of evaluate() calls so far.
  virtual std::uint64_t calls() const = 0;
  /// Reference (nominal) CK-Q delay the degradation threshold is relative to.
  virtual double nominal_delay() const = 0;
  /// Whether evaluate() may be called from several threads at once.
  virtual bool concurrent_evaluation() const = 0;
};

/// Which side of the skew axis holds the failure region. Setup checks fail
/// at small skew (Low); a mirrored axis puts the failure region High.
enum class FailSide { Low, High };

enum class Process { TT, FF, SS };

/// TT -> 0, FF -> +1, SS -> -1.
int process_code(Process p);
std::string_view to_string(Process p);
Process parse_process(std::string_view token);

struct PvtCorner {
  Process process = Process::TT;
  double voltage = 0.8;      // V
  double temperature = 25.0;  // degC

  bool operator==(const PvtCorner&) const = default;
};

std::string corner_label(const PvtCorner& c);

/// The sixteen global corners used by the multi-corner experiments.
std::vector<PvtCorner> default_corner_table();

struct PvtSample {
  PvtCorner corner;
  std::vector<double> local_vars;
};

/// Synthetic metastability model. For skew on the passing side of x_c,
/// delay = d0 (1 + alpha exp(-dist / lambda)) + d0 tail max(0, dist_tail)^2,
/// with dist measured from x_c (and tail_start) away from the failure side.
struct AnalyticCellModel {
  double d0 = 1.0;
  double x_c = 0.0;
  double lambda = 1.0;
  double alpha = 1.0;
  double tail = 0.0;
  double tail_start = 0.0;
  FailSide fail_side = FailSide::Low;

  /// Throws std::invalid_argument when d0, lambda or alpha are not positive.
  void validate() const;
};

/// Pure evaluation; does not count.
SimOutcome evaluate(const AnalyticCellModel& model, double skew);

/// Skew where delay == threshold_ratio * d0 (ignores the tail term).
double true_root(const AnalyticCellModel& model, double threshold_ratio);

/// Counting oracle over an analytic model. Safe for concurrent use.
class AnalyticOracle final : public SkewDelayOracle {
 public:
  explicit AnalyticOracle(AnalyticCellModel model);

  SimOutcome evaluate(double skew) override;
  std::uint64_t calls() const override { return calls_.load(std::memory_order_relaxed); }
  double nominal_delay() const override { return model_.d0; }
  bool concurrent_evaluation() const override { return true; }

  const AnalyticCellModel& model() const { return model_; }

 private:
  AnalyticCellModel model_;
  std::atomic<std::uint64_t> calls_{0};
};

/// Counting oracle over an arbitrary function; nullopt from the function
/// means failure. Used for hand-built test shapes.
class FunctionOracle final : public SkewDelayOracle {
 public:
  using Function = std::function<std::optional<double>(double)>;

  FunctionOracle(Function f, double nominal_delay);

  SimOutcome evaluate(double skew) override;
  std::uint64_t calls() const override { return calls_.load(std::memory_order_relaxed); }
  double nominal_delay() const override { return nominal_; }
  bool concurrent_evaluation() const override { return false; }

 private:
  Function f_;
  double nominal_;
  std::atomic<std::uint64_t> calls_{0};
};

enum class Topology { Latch, Dff };
enum class Constraint { Setup, Hold };

std::string_view to_string(Topology t);
std::string_view to_string(Constraint c);
Topology parse_topology(std::string_view token);
Constraint parse_constraint(std::string_view token);

/// Model at the reference corner (TT, 0.8 V, 25 degC) with zero local variation.
AnalyticCellModel base_model(Topology topology, Constraint constraint = Constraint::Setup);

/// Deterministic synthetic ground truth for one PVT sample. Parameters are
/// exponentials of a seeded affine map in (process, voltage, temperature,
/// local variations) plus small quadratic cross terms, anchored so the
/// reference corner with zero local variation gives base_model() exactly.
AnalyticCellModel model_from_pvt(const PvtSample& sample, Topology topology, std::uint64_t seed,
                                 Constraint constraint = Constraint::Setup);

}  // namespace setupkit
