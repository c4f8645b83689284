// SPDX-License-Identifier: Apache-2.0
#include "setupkit/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "setupkit/csv.hpp"
#include "setupkit/errors.hpp"
#include "setupkit/external_oracle.hpp"
#include "setupkit/random.hpp"

namespace setupkit {

namespace {

// Forwards to an inner oracle and adds every call to a shared tally.
class TallyOracle final : public SkewDelayOracle {
 public:
  TallyOracle(std::unique_ptr<SkewDelayOracle> inner, std::atomic<std::uint64_t>& tally)
      : inner_(std::move(inner)), tally_(tally) {}

  SimOutcome evaluate(double skew) override {
    tally_.fetch_add(1, std::memory_order_relaxed);
    return inner_->evaluate(skew);
  }
  std::uint64_t calls() const override { return inner_->calls(); }
  double nominal_delay() const override { return inner_->nominal_delay(); }
  bool concurrent_evaluation() const override { return inner_->concurrent_evaluation(); }

 private:
  std::unique_ptr<SkewDelayOracle> inner_;
  std::atomic<std::uint64_t>& tally_;
};

InitialInterval effort_interval(const ExperimentConfig& config, SkewDelayOracle& oracle) {
  const SimOutcome o = oracle.evaluate(config.nominal_skew);
  if (o.failed()) {
    throw Error(fmt::format("nominal delay measurement failed at skew {}", format_number(config.nominal_skew)));
  }
  return initial_interval(config.paths, config.constraint, *o.delay, config.search.min_step);
}

FailSide fail_side_of(const SamplePool& pool) {
  return pool.models.empty() ? FailSide::Low : pool.models.front().fail_side;
}

std::vector<int> traced_ids(const ExperimentConfig& config, int corner_count) {
  std::vector<int> ids;
  for (int c = 0; c < std::min(config.trace_samples, corner_count); ++c) ids.push_back(c * config.samples_per_corner);
  return ids;
}

std::string trace_name(const ComboResult& combo, int id) {
  return fmt::format("trace_{}_{}_{}.csv", to_string(combo.method), to_string(combo.policy), id);
}

std::string combo_name(Method m, IntervalPolicy p) { return fmt::format("{}_{}", to_string(m), to_string(p)); }

void write_outputs(const ExperimentConfig& config, const ComboResult& combo) {
  const auto& dir = config.output_dir;
  std::filesystem::create_directories(dir / "traces");
  write_file_atomic(dir / fmt::format("results_{}.csv", combo_name(combo.method, combo.policy)),
                    results_csv(config, combo));
  for (const auto& [id, trace] : combo.traces) {
    std::ostringstream os;
    write_trace_csv(os, trace);
    write_file_atomic(dir / "traces" / trace_name(combo, id), os.str());
  }
  if (combo.al_report) {
    std::ostringstream rep, sc;
    write_al_report_csv(rep, *combo.al_report);
    write_scatter_csv(sc, *combo.al_report);
    write_file_atomic(dir / fmt::format("al_report_{}.csv", to_string(combo.method)), rep.str());
    write_file_atomic(dir / fmt::format("al_scatter_{}.csv", to_string(combo.method)), sc.str());
  }
}

ComboResult run_external(const ExperimentConfig& config, Method method, IntervalPolicy policy) {
  if (policy == IntervalPolicy::Al) throw ConfigError("the al policy needs the synthetic sample pool, not [external]");
  const auto start = std::chrono::steady_clock::now();
  ExternalOracle oracle(*config.external);
  const InitialInterval iv = policy == IntervalPolicy::Effort
                                 ? effort_interval(config, oracle)
                                 : InitialInterval{config.fixed_interval().l0, config.fixed_interval().s0};
  const Expansion exp = expand_bracket(oracle, iv.l0, iv.s0, FailSide::Low, config.search);
  const std::uint64_t expansion_calls = oracle.calls();
  const SearchResult r = search(method, oracle, exp.bracket, config.search);

  ComboResult out;
  out.method = method;
  out.policy = policy;
  out.samples.push_back({0, 0, r.root, oracle.calls(), expansion_calls, method, policy});
  SearchTrace t = exp.trace;
  t.entries.insert(t.entries.end(), r.trace.entries.begin(), r.trace.entries.end());
  out.traces.emplace_back(0, std::move(t));
  out.counter_total = oracle.calls();
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace

Eigen::VectorXd feature_row(const PvtSample& sample) {
  Eigen::VectorXd f(3 + static_cast<Eigen::Index>(sample.local_vars.size()));
  f[0] = process_code(sample.corner.process);
  f[1] = sample.corner.voltage;
  f[2] = sample.corner.temperature / 100.0;
  for (std::size_t i = 0; i < sample.local_vars.size(); ++i) f[3 + static_cast<Eigen::Index>(i)] = sample.local_vars[i];
  return f;
}

SamplePool build_pool(const ExperimentConfig& config) {
  QmcConfig q = config.qmc;
  q.count = config.sample_count();
  q.scramble_seed = config.scramble ? (mix_seed(config.seed, 0x51ab) | 1u) : 0;
  const SampleMatrix local = generate(q);

  SamplePool pool;
  const int n = config.sample_count();
  pool.samples.reserve(static_cast<std::size_t>(n));
  pool.features.resize(n, 3 + q.dimension);
  for (int id = 0; id < n; ++id) {
    const int corner = id / config.samples_per_corner;
    PvtSample s{config.corners[static_cast<std::size_t>(corner)], local.row(id)};
    pool.features.row(id) = feature_row(s).transpose();
    pool.models.push_back(model_from_pvt(s, config.topology, config.model_seed, config.constraint));
    pool.corner_of.push_back(corner);
    pool.samples.push_back(std::move(s));
  }
  return pool;
}

ComboResult run_combo(const ExperimentConfig& config, const SamplePool& pool, Method method, IntervalPolicy policy,
                      const std::function<void(const ComboResult&)>& on_partial) {
  const auto start = std::chrono::steady_clock::now();
  ComboResult out;
  out.method = method;
  out.policy = policy;
  std::atomic<std::uint64_t> tally{0};
  const int n = static_cast<int>(pool.models.size());
  const std::vector<int> traced = traced_ids(config, static_cast<int>(config.corners.size()));
  auto is_traced = [&](int id) { return std::find(traced.begin(), traced.end(), id) != traced.end(); };
  auto make_oracle = [&](int id) -> std::unique_ptr<SkewDelayOracle> {
    return std::make_unique<TallyOracle>(std::make_unique<AnalyticOracle>(pool.models[static_cast<std::size_t>(id)]),
                                         tally);
  };

  if (policy == IntervalPolicy::Al) {
    AlProblem problem;
    problem.features = pool.features;
    problem.group_of = pool.corner_of;
    problem.group_count = static_cast<int>(config.corners.size());
    problem.fail_side = fail_side_of(pool);
    problem.make_oracle = make_oracle;
    problem.analysis_interval = [&](int, SkewDelayOracle& o) { return effort_interval(config, o); };
    GpFitOptions gp;
    gp.starts = config.gp_starts;
    gp.max_iterations = config.gp_max_iterations;
    gp.seed = config.seed;
    AlResult r = run_active_learning(problem, method, config.search, config.al, gp);
    for (SampleOutcome& o : r.outcomes) {
      out.samples.push_back({o.id, o.group, o.setup_time, o.oracle_calls, o.expansion_calls, method, policy});
      if (is_traced(o.id)) out.traces.emplace_back(o.id, std::move(o.trace));
    }
    out.al_report = std::move(r.report);
  } else {
    const FixedInterval fixed = config.fixed_interval();
    for (int id = 0; id < n; ++id) {
      try {
        auto oracle = make_oracle(id);
        const InitialInterval iv =
            policy == IntervalPolicy::Effort ? effort_interval(config, *oracle) : InitialInterval{fixed.l0, fixed.s0};
        const Expansion exp = expand_bracket(*oracle, iv.l0, iv.s0, fail_side_of(pool), config.search);
        const std::uint64_t expansion_calls = oracle->calls();
        const SearchResult r = search(method, *oracle, exp.bracket, config.search);
        out.samples.push_back(
            {id, pool.corner_of[static_cast<std::size_t>(id)], r.root, oracle->calls(), expansion_calls, method, policy});
        if (is_traced(id)) {
          SearchTrace t = exp.trace;
          t.entries.insert(t.entries.end(), r.trace.entries.begin(), r.trace.entries.end());
          out.traces.emplace_back(id, std::move(t));
        }
      } catch (const Error& e) {
        out.counter_total = tally.load();
        if (on_partial) on_partial(out);
        throw Error(fmt::format("{} sample {}: {}", combo_name(method, policy), id, e.what()));
      }
    }
  }
  out.counter_total = tally.load();
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
  return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

std::vector<ReportRow> summarize(const ExperimentConfig& config, const ComboResult& combo) {
  std::map<int, std::vector<const SampleRecord*>> by_corner;
  for (const SampleRecord& s : combo.samples) by_corner[s.corner].push_back(&s);
  auto row_of = [&](std::string label, const std::vector<const SampleRecord*>& recs) {
    ReportRow r;
    r.method = combo.method;
    r.policy = combo.policy;
    r.corner = std::move(label);
    r.samples = static_cast<int>(recs.size());
    std::vector<double> calls;
    for (const SampleRecord* s : recs) {
      calls.push_back(static_cast<double>(s->oracle_calls));
      r.max_expansion_calls = std::max(r.max_expansion_calls, s->expansion_calls);
    }
    double sum = 0.0;
    for (double c : calls) sum += c;
    r.mean_calls = calls.empty() ? 0.0 : sum / static_cast<double>(calls.size());
    r.p95_calls = percentile(calls, 0.95);
    r.wall_seconds = combo.wall_seconds;
    return r;
  };
  std::vector<ReportRow> rows;
  std::vector<const SampleRecord*> all;
  for (const auto& [corner, recs] : by_corner) {
    const std::string label = config.external ? std::string("external")
                                              : corner_label(config.corners[static_cast<std::size_t>(corner)]);
    rows.push_back(row_of(label, recs));
    all.insert(all.end(), recs.begin(), recs.end());
  }
  rows.push_back(row_of("all", all));
  return rows;
}

std::string results_csv(const ExperimentConfig& config, const ComboResult& combo) {
  std::string out = "sample_id,corner,setup_time,oracle_calls,method,policy,expansion_calls\n";
  for (const SampleRecord& s : combo.samples) {
    const std::string corner =
        config.external ? std::string("external") : corner_label(config.corners[static_cast<std::size_t>(s.corner)]);
    out += fmt::format("{},{},{},{},{},{},{}\n", s.id, corner, format_number(s.setup_time), s.oracle_calls,
                       to_string(s.method), to_string(s.policy), s.expansion_calls);
  }
  return out;
}

std::string report_csv(const std::vector<ReportRow>& rows) {
  std::string out = "method,policy,corner,samples,mean_calls,p95_calls,max_expansion_calls\n";
  for (const ReportRow& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{}\n", to_string(r.method), to_string(r.policy), r.corner, r.samples,
                       format_number(r.mean_calls), format_number(r.p95_calls), r.max_expansion_calls);
  }
  return out;
}

std::string timing_csv(const std::vector<ReportRow>& rows) {
  std::string out = "method,policy,wall_seconds\n";
  for (const ReportRow& r : rows) {
    if (r.corner == "all") {
      out += fmt::format("{},{},{:.3f}\n", to_string(r.method), to_string(r.policy), r.wall_seconds);
    }
  }
  return out;
}

std::string markdown_summary(const ExperimentConfig& config, const std::vector<ReportRow>& rows) {
  std::optional<double> reference;
  for (const ReportRow& r : rows) {
    if (r.corner == "all" && r.method == Method::Bisection && r.policy == IntervalPolicy::Fixed) {
      reference = r.mean_calls;
    }
  }
  const FixedInterval fixed = config.fixed_interval();
  std::string out = fmt::format("# Oracle-call comparison\n\n{} {}, {} corners x {} samples, seed {}.\n\n",
                                to_string(config.topology), to_string(config.constraint), config.corners.size(),
                                config.samples_per_corner, config.seed);
  out += "| method | policy | mean calls | p95 calls | max expansion calls | speedup vs bisection/fixed | wall s |\n";
  out += "|---|---|---|---|---|---|---|\n";
  for (const ReportRow& r : rows) {
    if (r.corner != "all") continue;
    const std::string speedup = reference && r.mean_calls > 0.0 ? fmt::format("{:.2f}x", *reference / r.mean_calls)
                                                                 : std::string("n/a");
    out += fmt::format("| {} | {} | {:.2f} | {} | {} | {} | {:.2f} |\n", to_string(r.method), to_string(r.policy),
                       r.mean_calls, format_number(r.p95_calls), r.max_expansion_calls, speedup, r.wall_seconds);
  }
  out += fmt::format("\nFixed interval (l0, s0) = ({}, {}){}.\n", format_number(fixed.l0), format_number(fixed.s0),
                     config.fixed ? "" : ", assumed as 10x the effort estimate");
  if (!reference) out += "No (bisection, fixed) run, so no speedups.\n";
  return out;
}

RunSummary characterize(const ExperimentConfig& config) {
  config.validate();
  RunSummary summary;
  std::optional<SamplePool> pool;
  if (!config.external) pool = build_pool(config);
  for (Method m : config.methods) {
    for (IntervalPolicy p : config.policies) {
      ComboResult combo;
      if (config.external) {
        combo = run_external(config, m, p);
      } else {
        combo = run_combo(config, *pool, m, p, [&](const ComboResult& partial) { write_outputs(config, partial); });
      }
      write_outputs(config, combo);
      const auto rows = summarize(config, combo);
      summary.rows.insert(summary.rows.end(), rows.begin(), rows.end());
      summary.combos.push_back(std::move(combo));
    }
  }
  return summary;
}

RunSummary bench(const ExperimentConfig& config) {
  if (config.methods.size() * config.policies.size() < 2) {
    throw ConfigError("bench needs at least two method/policy combinations");
  }
  RunSummary summary = characterize(config);
  write_file_atomic(config.output_dir / "report.csv", report_csv(summary.rows));
  write_file_atomic(config.output_dir / "timing.csv", timing_csv(summary.rows));
  write_file_atomic(config.output_dir / "summary.md", markdown_summary(config, summary.rows));
  return summary;
}

RunSummary al_run(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  c.policies = {IntervalPolicy::Al};
  if (c.external) throw ConfigError("al-run needs the synthetic sample pool, not [external]");
  return characterize(c);
}

}  // namespace setupkit
