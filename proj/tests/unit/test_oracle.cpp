// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <thread>

#include <setupkit/errors.hpp>
#include <setupkit/experiment.hpp>
#include <setupkit/external_oracle.hpp>
#include <setupkit/oracle.hpp>
#include <setupkit/search.hpp>

using namespace setupkit;

TEST_CASE("evaluate: failure region, knee and nominal tail") {
  const AnalyticCellModel m{1.0, 0.0, 1.0, 1.0};
  CHECK(evaluate(m, -1.0).failed());
  CHECK(evaluate(m, 0.0).failed());
  CHECK(*evaluate(m, 1e3).delay == doctest::Approx(1.0));
  const double at = m.x_c + m.lambda * std::log(m.alpha / 0.1);
  CHECK(*evaluate(m, at).delay == doctest::Approx(1.1).epsilon(1e-14));
}

TEST_CASE("true root closed form") {
  CHECK(true_root({1.0, 0.0, 1.0, 1.0}, 1.1) == doctest::Approx(2.302585093).epsilon(1e-9));
  CHECK(true_root({1.0, 3.0, 1.0, 0.1}, 1.1) == doctest::Approx(3.0));
  const double one = true_root({1.0, 0.0, 1.0, 1.0}, 1.1);
  const double two = true_root({1.0, 0.0, 2.0, 1.0}, 1.1);
  CHECK(two == doctest::Approx(2.0 * one));
}

TEST_CASE("mirrored models fail above x_c") {
  AnalyticCellModel m{2.0, 1.0, 0.5, 1.0};
  m.fail_side = FailSide::High;
  CHECK(evaluate(m, 1.5).failed());
  CHECK(*evaluate(m, 0.0).delay > 2.0);
  const double r = true_root(m, 1.1);
  CHECK(r < 1.0);
  CHECK(*evaluate(m, r).delay == doctest::Approx(2.2));
}

TEST_CASE("tail term makes delay non-monotone far from the knee") {
  AnalyticCellModel m{1.0, 0.0, 1.0, 1.0};
  m.tail = 0.01;
  m.tail_start = 10.0;
  CHECK(*evaluate(m, 20.0).delay > *evaluate(m, 10.0).delay);
}

TEST_CASE("model validation") {
  CHECK_THROWS_AS(AnalyticCellModel({0.0, 0.0, 1.0, 1.0}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(AnalyticCellModel({1.0, 0.0, 0.0, 1.0}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(AnalyticCellModel({1.0, 0.0, 1.0, -1.0}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(AnalyticOracle(AnalyticCellModel{-1.0}), std::invalid_argument);
}

TEST_CASE("oracle counter is exact under concurrency") {
  AnalyticOracle o(base_model(Topology::Dff));
  CHECK(o.concurrent_evaluation());
  std::vector<std::thread> pool;
  for (int t = 0; t < 4; ++t)
    pool.emplace_back([&o] {
      for (int i = 0; i < 1000; ++i) o.evaluate(5.0 + i * 1e-3);
    });
  for (auto& t : pool) t.join();
  CHECK(o.calls() == 4000);
}

TEST_CASE("search results report the counter delta") {
  AnalyticOracle o(base_model(Topology::Latch));
  SearchConfig cfg;
  const Expansion e = expand_bracket(o, 11.2, 11.2, FailSide::Low, cfg);
  const std::uint64_t before = o.calls();
  const SearchResult r = search_brent(o, e.bracket, cfg);
  CHECK(o.calls() - before == r.oracle_calls);
  CHECK(before == e.oracle_calls);
}

TEST_CASE("corner table and process codes") {
  const auto t = default_corner_table();
  REQUIRE(t.size() == 16);
  CHECK((t.front() == PvtCorner{Process::TT, 0.8, 25}));
  CHECK((t.back() == PvtCorner{Process::SS, 0.81, 125}));
  CHECK(process_code(Process::TT) == 0);
  CHECK(process_code(Process::FF) == 1);
  CHECK(process_code(Process::SS) == -1);
  CHECK(parse_process("ss") == Process::SS);
  CHECK_THROWS_AS(parse_process("XX"), ParseError);
  CHECK(corner_label(t.front()) == "TT_0.8V_25C");
}

TEST_CASE("synthetic map is deterministic and anchored") {
  PvtSample s{{Process::FF, 0.99, -40}, std::vector<double>(168, 0.0)};
  for (std::size_t i = 0; i < s.local_vars.size(); ++i) s.local_vars[i] = std::sin(1.0 + i);
  const AnalyticCellModel a = model_from_pvt(s, Topology::Dff, 42);
  const AnalyticCellModel b = model_from_pvt(s, Topology::Dff, 42);
  CHECK(a.d0 == b.d0);
  CHECK(a.x_c == b.x_c);
  CHECK(a.lambda == b.lambda);
  CHECK(a.alpha == b.alpha);

  for (Topology t : {Topology::Dff, Topology::Latch})
    for (Constraint c : {Constraint::Setup, Constraint::Hold}) {
      const PvtSample ref{{Process::TT, 0.8, 25}, std::vector<double>(168, 0.0)};
      const AnalyticCellModel m = model_from_pvt(ref, t, 2024, c);
      const AnalyticCellModel base = base_model(t, c);
      CHECK(m.d0 == base.d0);
      CHECK(m.x_c == base.x_c);
      CHECK(m.lambda == base.lambda);
      CHECK(m.alpha == base.alpha);
    }
}

TEST_CASE("slow corners are slower than fast ones") {
  const ExperimentConfig cfg;
  for (double v : {0.8, 0.9})
    for (double temp : {-40.0, 25.0, 125.0}) {
      const PvtSample ss{{Process::SS, v, temp}, std::vector<double>(168, 0.0)};
      const PvtSample ff{{Process::FF, v, temp}, std::vector<double>(168, 0.0)};
      CHECK(model_from_pvt(ss, Topology::Dff, cfg.model_seed).d0 > model_from_pvt(ff, Topology::Dff, cfg.model_seed).d0);
    }
}

TEST_CASE("generated models: monotone search side and exact roots") {
  ExperimentConfig cfg;
  cfg.samples_per_corner = 20;
  const SamplePool pool = build_pool(cfg);
  for (const AnalyticCellModel& m : pool.models) {
    const double root = true_root(m, 1.1);
    CHECK(*evaluate(m, root).delay == doctest::Approx(1.1 * m.d0).epsilon(1e-9));
    double prev = std::numeric_limits<double>::infinity();
    bool monotone = true;
    for (int i = 1; i <= 400; ++i) {
      const double x = m.x_c + 20.0 * m.lambda * i / 400.0;
      const double d = *evaluate(m, x).delay;
      monotone = monotone && d < prev;
      prev = d;
    }
    CHECK(monotone);
  }
}

TEST_CASE("synthetic spread: corners about 3x apart, local variation about 20%") {
  const ExperimentConfig cfg;
  const SamplePool pool = build_pool(cfg);
  std::vector<double> means;
  double worst = 0.0;
  for (std::size_t k = 0; k < cfg.corners.size(); ++k) {
    double sum = 0.0, lo = 1e300, hi = -1e300;
    for (int j = 0; j < cfg.samples_per_corner; ++j) {
      const double r = true_root(pool.models[k * cfg.samples_per_corner + j], 1.1);
      sum += r, lo = std::min(lo, r), hi = std::max(hi, r);
    }
    const double mean = sum / cfg.samples_per_corner;
    means.push_back(mean);
    worst = std::max(worst, std::max(hi - mean, mean - lo) / mean);
  }
  const double ratio = *std::max_element(means.begin(), means.end()) / *std::min_element(means.begin(), means.end());
  CHECK(ratio > 2.0);
  CHECK(ratio < 4.5);
  CHECK(worst > 0.1);
  CHECK(worst < 0.35);
}

TEST_CASE("function oracle counts and reports failure") {
  FunctionOracle f([](double x) -> std::optional<double> {
    if (x < 0) return std::nullopt;
    return 1.0 + x;
  }, 1.0);
  CHECK(f.evaluate(-1).failed());
  CHECK(*f.evaluate(1).delay == 2.0);
  CHECK(f.calls() == 2);
  CHECK_FALSE(f.concurrent_evaluation());
}

TEST_CASE("external adapter: fixed delay") {
  ExternalOracle o({"echo 'delay= 12.5 # skew {skew}'", {}, 10.0, false});
  const SimOutcome r = o.evaluate(3.25);
  REQUIRE_FALSE(r.failed());
  CHECK(*r.delay == 12.5);
  CHECK(o.calls() == 1);
  CHECK(o.render_command(3.25) == "echo 'delay= 12.5 # skew 3.25'");
}

TEST_CASE("external adapter: failure token, exit status and garbage") {
  ExternalOracle fail({"echo FAIL {skew}", {}, 10.0, false});
  CHECK(fail.evaluate(1.0).failed());
  ExternalOracle exits({"exit 3 # {skew}", {}, 10.0, false});
  CHECK_THROWS_AS(exits.evaluate(1.0), AdapterFailure);
  ExternalOracle garbage({"echo hello {skew}", {}, 10.0, false});
  CHECK_THROWS_AS(garbage.evaluate(1.0), AdapterFailure);
  ExternalOracle nan({"echo delay=abc {skew}", {}, 10.0, false});
  CHECK_THROWS_AS(nan.evaluate(1.0), AdapterFailure);
  CHECK(exits.calls() == 1);
}

TEST_CASE("external adapter: custom parse rule and a scripted cell") {
  // awk stands in for a simulator: the analytic DFF model with failure below 5.
  const std::string cmd =
      "awk -v x={skew} 'BEGIN { if (x <= 5) print \"status: metastable\"; "
      "else printf \"tcq %.17g\\n\", 10 * (1 + 1.5 * exp(-(x - 5) / 0.6)) }'";
  ExternalOracle o({cmd, parse_rule_from_text("tcq,metastable"), 10.0, false});
  SearchConfig cfg;
  const Expansion e = expand_bracket(o, 7.0, 7.0, FailSide::Low, cfg);
  const SearchResult r = search_beira(o, e.bracket, cfg);
  CHECK(std::fabs(r.root - true_root(base_model(Topology::Dff), 1.1)) <= cfg.tau);
  CHECK(o.calls() == e.oracle_calls + r.oracle_calls);
}

TEST_CASE("external adapter: configuration errors") {
  CHECK_THROWS_AS(ExternalOracle({"echo delay=1", {}, 1.0, false}), ConfigError);
  CHECK_THROWS_AS(ExternalOracle({"echo {skew}", {"", "FAIL"}, 1.0, false}), ConfigError);
  CHECK_THROWS_AS(parse_rule_from_text("only"), ConfigError);
  CHECK(parse_adapter_output("noise\ndelay=4\n", ParseRule{}).delay == 4.0);
  CHECK_THROWS_AS(parse_adapter_output("delay=-1\n", ParseRule{}), AdapterFailure);
}
