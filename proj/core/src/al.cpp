// SPDX-License-Identifier: Apache-2.0
#include "setupkit/al.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "setupkit/csv.hpp"
#include "setupkit/errors.hpp"
#include "setupkit/random.hpp"

namespace setupkit {

void AlConfig::validate(int pool_size) const {
  if (batch_size < 1) throw ConfigError("al: batch size must be at least 1");
  if (batch_size > pool_size) {
    throw ConfigError(fmt::format("al: batch size {} exceeds pool size {}", batch_size, pool_size));
  }
  if (k_max < 0) throw ConfigError("al: k_max must be non-negative");
  if (predicted_doublings < 1) throw ConfigError("al: predicted_doublings must be at least 1");
}

std::vector<int> initial_selection(int pool_size, const AlConfig& config) {
  config.validate(pool_size);
  const auto n = static_cast<std::int64_t>(pool_size);
  const auto m = static_cast<std::int64_t>(config.batch_size);
  std::vector<bool> used(static_cast<std::size_t>(pool_size) + 1, false);
  std::vector<int> ids;
  ids.reserve(static_cast<std::size_t>(m));
  for (std::int64_t i = 1; i <= m; ++i) {
    auto pos = static_cast<std::size_t>(i * n / m);
    std::size_t tries = 0;
    while ((pos == 0 || used[pos]) && tries++ <= used.size()) pos = pos % static_cast<std::size_t>(n) + 1;
    used[pos] = true;
    ids.push_back(static_cast<int>(pos) - 1);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<int> allocate_budget(const std::vector<double>& weights, int total, const std::vector<int>& capacity) {
  const std::size_t g = weights.size();
  if (capacity.size() != g) throw std::invalid_argument("allocate_budget: weights and capacity differ in size");
  const long cap_sum = std::accumulate(capacity.begin(), capacity.end(), 0L);
  if (total < 0 || total > cap_sum) throw std::invalid_argument("allocate_budget: total exceeds capacity");

  std::vector<int> m(g, 0);
  std::vector<bool> open(g);
  for (std::size_t i = 0; i < g; ++i) open[i] = capacity[i] > 0;
  int left = total;
  while (left > 0) {
    double w_sum = 0.0;
    for (std::size_t i = 0; i < g; ++i)
      if (open[i]) w_sum += weights[i];
    const bool by_capacity = !(w_sum > 0.0);
    if (by_capacity) {
      w_sum = 0.0;
      for (std::size_t i = 0; i < g; ++i)
        if (open[i]) w_sum += capacity[i] - m[i];
    }
    std::vector<int> add(g, 0);
    std::vector<std::pair<double, std::size_t>> rem;
    int given = 0;
    for (std::size_t i = 0; i < g; ++i) {
      if (!open[i]) continue;
      const double w = by_capacity ? capacity[i] - m[i] : weights[i];
      const double share = left * w / w_sum;
      add[i] = static_cast<int>(std::floor(share));
      given += add[i];
      rem.emplace_back(share - add[i], i);
    }
    std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; r < rem.size() && given < left; ++r, ++given) ++add[rem[r].second];

    // Clip at capacity; the clipped excess is redistributed next round.
    left = 0;
    for (std::size_t i = 0; i < g; ++i) {
      const int room = capacity[i] - m[i];
      const int take = std::min(add[i], room);
      m[i] += take;
      left += add[i] - take;
      if (m[i] >= capacity[i]) open[i] = false;
    }
  }
  return m;
}

std::vector<int> select_batch(const std::vector<Candidate>& candidates, int group_count, int batch_size) {
  std::vector<std::vector<const Candidate*>> by_group(static_cast<std::size_t>(group_count));
  std::vector<double> v_sum(static_cast<std::size_t>(group_count), 0.0);
  for (const Candidate& c : candidates) {
    if (c.group < 0 || c.group >= group_count) throw std::invalid_argument("select_batch: group out of range");
    by_group[static_cast<std::size_t>(c.group)].push_back(&c);
    v_sum[static_cast<std::size_t>(c.group)] += c.prediction.v;
  }
  std::vector<int> capacity(by_group.size());
  for (std::size_t i = 0; i < by_group.size(); ++i) capacity[i] = static_cast<int>(by_group[i].size());
  const int total = std::min<int>(batch_size, static_cast<int>(candidates.size()));
  const std::vector<int> m = allocate_budget(v_sum, total, capacity);

  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(total));
  for (std::size_t i = 0; i < by_group.size(); ++i) {
    auto& group = by_group[i];
    std::sort(group.begin(), group.end(), [](const Candidate* a, const Candidate* b) {
      if (a->prediction.v != b->prediction.v) return a->prediction.v > b->prediction.v;
      return a->id < b->id;
    });
    for (int j = 0; j < m[i]; ++j) out.push_back(group[static_cast<std::size_t>(j)]->id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

InitialInterval predicted_interval(const Prediction& p, double s_min) { return {p.mu, std::max(p.v, s_min)}; }

std::string_view to_string(IntervalSource s) {
  switch (s) {
    case IntervalSource::Analysis: return "analysis";
    case IntervalSource::Predicted: return "predicted";
    case IntervalSource::PredictedFallback: return "predicted_fallback";
  }
  return "analysis";
}

namespace {

template <class E>
[[noreturn]] void rethrow_as(const E& e, const std::string& context) {
  throw E(context + ": " + e.what());
}

// Runs fn, prefixing any library error with context.
template <class Fn>
auto with_context(const std::string& context, Fn&& fn) {
  try {
    return fn();
  } catch (const BracketNotFound& e) {
    rethrow_as(e, context);
  } catch (const MaxIterExceeded& e) {
    rethrow_as(e, context);
  } catch (const AdapterFailure& e) {
    rethrow_as(e, context);
  } catch (const SingularKernel& e) {
    rethrow_as(e, context);
  } catch (const Error& e) {
    rethrow_as(e, context);
  }
}

void append(SearchTrace& into, const SearchTrace& from) {
  into.entries.insert(into.entries.end(), from.entries.begin(), from.entries.end());
}

SampleOutcome simulate(const AlProblem& problem, int id, int phase, const std::optional<Prediction>& prediction,
                       Method method, const SearchConfig& search_config, const AlConfig& config) {
  return with_context(fmt::format("sample {}", id), [&] {
    auto oracle = problem.make_oracle(id);
    SampleOutcome out;
    out.id = id;
    out.group = problem.group_of[static_cast<std::size_t>(id)];
    out.phase = phase;
    out.prediction = prediction;

    std::optional<Expansion> exp;
    if (prediction) {
      const InitialInterval iv = predicted_interval(*prediction, search_config.min_step);
      out.source = IntervalSource::Predicted;
      try {
        exp = expand_bracket(*oracle, iv.l0, iv.s0, problem.fail_side, search_config, config.predicted_doublings);
      } catch (const BracketNotFound&) {
        out.source = IntervalSource::PredictedFallback;
        out.expansion_calls = oracle->calls();
      }
    }
    if (!exp) {
      const InitialInterval iv = problem.analysis_interval(id, *oracle);
      exp = expand_bracket(*oracle, iv.l0, iv.s0, problem.fail_side, search_config);
    }
    out.expansion_calls = oracle->calls();
    append(out.trace, exp->trace);
    const SearchResult r = search(method, *oracle, exp->bracket, search_config);
    append(out.trace, r.trace);
    out.setup_time = r.root;
    out.oracle_calls = oracle->calls();
    return out;
  });
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

AlResult run_active_learning(const AlProblem& problem, Method method, const SearchConfig& search_config,
                             const AlConfig& config, const GpFitOptions& gp_options) {
  const int n = static_cast<int>(problem.features.rows());
  if (static_cast<int>(problem.group_of.size()) != n) {
    throw DimensionMismatch("al: group_of and features disagree on the pool size");
  }
  config.validate(n);
  search_config.validate();

  AlResult result;
  result.outcomes.resize(static_cast<std::size_t>(n));
  std::vector<bool> done(static_cast<std::size_t>(n), false);
  std::vector<int> simulated;
  std::vector<std::optional<Prediction>> pred(static_cast<std::size_t>(n));

  auto run_phase = [&](int k, bool final_sweep, const std::vector<int>& ids) {
    AlPhaseStats stats;
    stats.phase = k;
    stats.final_sweep = final_sweep;
    stats.batch_size = static_cast<int>(ids.size());
    std::vector<double> calls, stds, sq_err;
    for (int id : ids) {
      const auto& p = pred[static_cast<std::size_t>(id)];
      SampleOutcome o = simulate(problem, id, k, p, method, search_config, config);
      calls.push_back(static_cast<double>(o.oracle_calls));
      if (p) {
        stds.push_back(p->v);
        sq_err.push_back((p->mu - o.setup_time) * (p->mu - o.setup_time));
        result.report.scatter.push_back({k, id, p->mu, p->v, o.setup_time});
      }
      result.outcomes[static_cast<std::size_t>(id)] = std::move(o);
      done[static_cast<std::size_t>(id)] = true;
      simulated.push_back(id);
    }
    stats.mean_calls = mean_of(calls);
    if (!stds.empty()) {
      stats.mean_pred_std = mean_of(stds);
      stats.rmse_pred_vs_actual = std::sqrt(mean_of(sq_err));
    }
    result.report.phases.push_back(stats);
  };

  std::optional<GpHyperparams> last_hyper;
  auto refit = [&](int k) {
    with_context(fmt::format("gp fit after iteration {}", k), [&] {
      const auto m = static_cast<Eigen::Index>(simulated.size());
      Eigen::MatrixXd x(m, problem.features.cols());
      Eigen::VectorXd y(m);
      for (Eigen::Index r = 0; r < m; ++r) {
        const int id = simulated[static_cast<std::size_t>(r)];
        x.row(r) = problem.features.row(id);
        y[r] = result.outcomes[static_cast<std::size_t>(id)].setup_time;
      }
      GpFitOptions opts = gp_options;
      opts.seed = mix_seed(gp_options.seed, static_cast<std::uint64_t>(k));
      if (last_hyper) opts.warm_start = last_hyper;
      const GpModel model = GpModel::fit(x, y, opts);
      last_hyper = model.hyperparams();
      std::vector<double> stds;
      for (int id = 0; id < n; ++id) {
        if (done[static_cast<std::size_t>(id)]) continue;
        pred[static_cast<std::size_t>(id)] = model.predict_one(problem.features.row(id).transpose());
        stds.push_back(pred[static_cast<std::size_t>(id)]->v);
      }
      if (!stds.empty()) result.report.phases.back().mean_pool_std = mean_of(stds);
      return 0;
    });
  };

  run_phase(0, false, initial_selection(n, config));
  for (int k = 0;; ++k) {
    const bool remaining = static_cast<int>(simulated.size()) < n;
    if (!remaining) break;
    refit(k);
    if (k >= config.k_max) {
      std::vector<int> rest;
      for (int id = 0; id < n; ++id)
        if (!done[static_cast<std::size_t>(id)]) rest.push_back(id);
      run_phase(k + 1, true, rest);
      break;
    }
    std::vector<Candidate> cands;
    for (int id = 0; id < n; ++id) {
      if (!done[static_cast<std::size_t>(id)]) {
        cands.push_back({id, problem.group_of[static_cast<std::size_t>(id)], *pred[static_cast<std::size_t>(id)]});
      }
    }
    run_phase(k + 1, false, select_batch(cands, problem.group_count, config.batch_size));
  }
  return result;
}

void write_al_report_csv(std::ostream& out, const AlReport& report) {
  out << "k,phase,batch_size,mean_calls,mean_pred_std,rmse_pred_vs_actual,mean_pool_std\n";
  for (const AlPhaseStats& s : report.phases) {
    const char* phase = s.final_sweep ? "final" : (s.phase == 0 ? "initial" : "iteration");
    out << s.phase << ',' << phase << ',' << s.batch_size << ',' << format_number(s.mean_calls) << ','
        << format_optional(s.mean_pred_std) << ',' << format_optional(s.rmse_pred_vs_actual) << ','
        << format_optional(s.mean_pool_std) << '\n';
  }
}

void write_scatter_csv(std::ostream& out, const AlReport& report) {
  out << "k,sample_id,predicted,predicted_std,actual\n";
  for (const ScatterPoint& p : report.scatter) {
    out << p.phase << ',' << p.id << ',' << format_number(p.predicted) << ',' << format_number(p.predicted_std)
        << ',' << format_number(p.actual) << '\n';
  }
}

}  // namespace setupkit
