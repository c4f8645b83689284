// SPDX-License-Identifier: Apache-2.0
#include "setupkit/search.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

#include "setupkit/bias.hpp"
#include "setupkit/csv.hpp"
#include "setupkit/errors.hpp"

namespace setupkit {

std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::BelowThreshold: return "below";
    case Classification::AboveThreshold: return "above";
    case Classification::Failure: return "failure";
  }
  return "below";
}

Classification parse_classification(std::string_view token) {
  if (token == "below") return Classification::BelowThreshold;
  if (token == "above") return Classification::AboveThreshold;
  if (token == "failure") return Classification::Failure;
  throw ParseError(fmt::format("unknown classification '{}'", token));
}

Classification classify(const SimOutcome& outcome, double threshold_delay) {
  if (outcome.failed()) return Classification::Failure;
  return *outcome.delay > threshold_delay ? Classification::AboveThreshold : Classification::BelowThreshold;
}

void SearchConfig::validate() const {
  if (!(tau > 0.0)) throw ConfigError("search: tau must be positive");
  if (!(sigma0 > 0.0)) throw ConfigError("search: sigma0 must be positive");
  if (!(beta > 1.0)) throw ConfigError("search: beta must exceed 1");
  if (!(threshold_ratio > 1.0)) throw ConfigError("search: threshold_ratio must exceed 1");
  if (max_iter < 1) throw ConfigError("search: max_iter must be at least 1");
  if (safeguard_window < 1) throw ConfigError("search: safeguard_window must be at least 1");
  if (!(min_step > 0.0)) throw ConfigError("search: min_step must be positive");
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Bisection: return "bisection";
    case Method::RegulaFalsi: return "regula_falsi";
    case Method::Quadratic: return "quadratic";
    case Method::Brent: return "brent";
    case Method::Beira: return "beira";
  }
  return "bisection";
}

Method parse_method(std::string_view token) {
  for (Method m : {Method::Bisection, Method::RegulaFalsi, Method::Quadratic, Method::Brent, Method::Beira})
    if (token == to_string(m)) return m;
  throw ParseError(fmt::format("unknown search method '{}'", token));
}

Expansion expand_bracket(SkewDelayOracle& oracle, double l0, double s0, FailSide fail_side,
                         const SearchConfig& config, std::optional<int> max_doublings) {
  if (!std::isfinite(l0)) throw std::invalid_argument("expand_bracket: l0 must be finite");
  if (!(s0 >= config.min_step)) throw std::invalid_argument("expand_bracket: s0 below the minimum step");
  const double threshold = config.threshold_ratio * oracle.nominal_delay();
  const int limit = max_doublings.value_or(config.max_iter);

  Expansion out;
  auto probe = [&](double x) {
    const SimOutcome o = oracle.evaluate(x);
    ++out.oracle_calls;
    const Classification c = classify(o, threshold);
    out.trace.entries.push_back({x, c, o.delay, std::nullopt});
    return std::pair{c, o.delay};
  };

  const auto [c0, d0] = probe(l0);
  const bool start_above = on_above_side(c0);
  // A passing point lies on the far side of the crossing from the failure region.
  const double toward_fail = fail_side == FailSide::Low ? -1.0 : 1.0;
  const double dir = start_above ? -toward_fail : toward_fail;

  double prev_x = l0;
  Classification prev_c = c0;
  std::optional<double> prev_d = d0;
  for (int n = 0; n < limit; ++n) {
    const double x = l0 + dir * std::ldexp(s0, n);
    const auto [c, d] = probe(x);
    if (on_above_side(c) != start_above) {
      Bracket& b = out.bracket;
      if (x < prev_x) {
        b = {x, prev_x, c, prev_c, d, prev_d};
      } else {
        b = {prev_x, x, prev_c, c, prev_d, d};
      }
      out.trace.entries.back().interval_length = b.length();
      return out;
    }
    prev_x = x;
    prev_c = c;
    prev_d = d;
  }
  throw BracketNotFound(
      fmt::format("no sign change within {} doublings from l0={} s0={}", limit, l0, s0));
}

namespace {

struct Point {
  double x;
  double g;  // effective delay minus threshold
};

// Shared bookkeeping for the bracketing methods: evaluation, bracket update,
// trace and call accounting.
class BracketState {
 public:
  BracketState(SkewDelayOracle& oracle, const Bracket& bracket, const SearchConfig& config, Method method)
      : oracle_(oracle), config_(config), bracket_(bracket) {
    config.validate();
    if (!bracket.valid()) throw std::invalid_argument("search: invalid bracket");
    threshold_ = config.threshold_ratio * oracle.nominal_delay();
    result_.method = method;
    history_.push_back({bracket.lo, offset(bracket.lo_delay)});
    history_.push_back({bracket.hi, offset(bracket.hi_delay)});
  }

  const Bracket& bracket() const { return bracket_; }
  const std::vector<Point>& history() const { return history_; }
  double tau() const { return config_.tau; }
  bool converged() const { return bracket_.length() <= config_.tau; }
  double g_lo() const { return offset(bracket_.lo_delay); }
  double g_hi() const { return offset(bracket_.hi_delay); }
  double mid() const { return 0.5 * (bracket_.lo + bracket_.hi); }

  /// Failed captures interpolate as if the delay were twice the threshold.
  double offset(const std::optional<double>& delay) const {
    return delay ? *delay - threshold_ : threshold_;
  }

  struct Probe {
    double g;
    bool replaced_lo;
  };

  Probe probe(double x) {
    if (++iterations_ > config_.max_iter)
      throw MaxIterExceeded(fmt::format("{}: no convergence after {} iterations (bracket [{}, {}])",
                                        to_string(result_.method), config_.max_iter, bracket_.lo,
                                        bracket_.hi));
    if (!(x > bracket_.lo && x < bracket_.hi)) x = mid();
    const SimOutcome o = oracle_.evaluate(x);
    ++result_.oracle_calls;
    const Classification c = classify(o, threshold_);
    const bool replaced_lo = on_above_side(c) == on_above_side(bracket_.lo_class);
    if (replaced_lo) {
      bracket_.lo = x;
      bracket_.lo_class = c;
      bracket_.lo_delay = o.delay;
    } else {
      bracket_.hi = x;
      bracket_.hi_class = c;
      bracket_.hi_delay = o.delay;
    }
    const double g = offset(o.delay);
    history_.push_back({x, g});
    result_.trace.entries.push_back({x, c, o.delay, bracket_.length()});
    return {g, replaced_lo};
  }

  SearchResult finish() {
    result_.root = mid();
    result_.final_bracket = bracket_;
    return std::move(result_);
  }

 private:
  SkewDelayOracle& oracle_;
  const SearchConfig& config_;
  Bracket bracket_;
  double threshold_ = 0.0;
  std::vector<Point> history_;
  SearchResult result_;
  int iterations_ = 0;
};

double linear_estimate(const BracketState& s) {
  const Bracket& b = s.bracket();
  const double ga = s.g_lo();
  const double gb = s.g_hi();
  return b.lo - ga * (b.hi - b.lo) / (gb - ga);
}

// Inverse quadratic through both endpoints and the most recent other point,
// when the inverse parabola is single-valued between the endpoint values;
// otherwise linear interpolation between the endpoints.
double interpolation_estimate(const BracketState& s) {
  const Bracket& b = s.bracket();
  Point sel[3] = {{b.lo, s.g_lo()}, {b.hi, s.g_hi()}, {0.0, 0.0}};
  int count = 2;
  const auto& hist = s.history();
  for (auto it = hist.rbegin(); it != hist.rend(); ++it) {
    if (it->x != b.lo && it->x != b.hi && it->g != sel[0].g && it->g != sel[1].g) {
      sel[count++] = *it;
      break;
    }
  }
  if (count == 3) {
    const auto [x1, g1] = sel[0];
    const auto [x2, g2] = sel[1];
    const auto [x3, g3] = sel[2];
    const double d1 = (g1 - g2) * (g1 - g3);
    const double d2 = (g2 - g1) * (g2 - g3);
    const double d3 = (g3 - g1) * (g3 - g2);
    const double est = x1 * g2 * g3 / d1 + x2 * g1 * g3 / d2 + x3 * g1 * g2 / d3;
    auto slope = [&](double g) {
      return x1 * (2 * g - g2 - g3) / d1 + x2 * (2 * g - g1 - g3) / d2 + x3 * (2 * g - g1 - g2) / d3;
    };
    const bool monotone = slope(s.g_lo()) * slope(s.g_hi()) > 0.0;
    if (monotone && est > b.lo && est < b.hi && std::isfinite(est)) return est;
  }
  return linear_estimate(s);
}

bool near_endpoint(const BracketState& s, double x) {
  const Bracket& b = s.bracket();
  const double guard = 0.25 * s.tau();
  return !(x > b.lo + guard && x < b.hi - guard);
}

}  // namespace

SearchResult search_bisection(SkewDelayOracle& oracle, const Bracket& bracket, const SearchConfig& config) {
  BracketState s(oracle, bracket, config, Method::Bisection);
  while (!s.converged()) s.probe(s.mid());
  return s.finish();
}

SearchResult search_regula_falsi(SkewDelayOracle& oracle, const Bracket& bracket, const SearchConfig& config) {
  BracketState s(oracle, bracket, config, Method::RegulaFalsi);
  while (!s.converged()) {
    double x = linear_estimate(s);
    if (near_endpoint(s, x)) x = s.mid();
    s.probe(x);
  }
  return s.finish();
}

SearchResult search_quadratic(SkewDelayOracle& oracle, const Bracket& bracket, const SearchConfig& config) {
  BracketState s(oracle, bracket, config, Method::Quadratic);
  while (!s.converged()) {
    double x = interpolation_estimate(s);
    if (near_endpoint(s, x)) x = s.mid();
    s.probe(x);
  }
  return s.finish();
}

SearchResult search_brent(SkewDelayOracle& oracle, const Bracket& bracket, const SearchConfig& config) {
  BracketState s(oracle, bracket, config, Method::Brent);
  auto above = [](double g) { return g > 0.0; };

  // Brent's zeroin: b is the best estimate, c the contrapoint, a the previous b.
  double a = bracket.lo, fa = s.g_lo();
  double b = bracket.hi, fb = s.g_hi();
  double c = a, fc = fa;
  double d = b - a, e = d;
  const double tol = 0.5 * config.tau;
  while (true) {
    if (above(fb) == above(fc)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::fabs(fc) < std::fabs(fb)) {
      a = b, b = c, c = a;
      fa = fb, fb = fc, fc = fa;
    }
    const double xm = 0.5 * (c - b);
    if (std::fabs(xm) <= tol) break;

    if (std::fabs(e) >= tol && std::fabs(fa) > std::fabs(fb)) {
      double p, q;
      const double sr = fb / fa;
      if (a == c) {
        p = 2.0 * xm * sr;
        q = 1.0 - sr;
      } else {
        const double qa = fa / fc;
        const double r = fb / fc;
        p = sr * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
        q = (qa - 1.0) * (r - 1.0) * (sr - 1.0);
      }
      if (p > 0.0) q = -q;
      else p = -p;
      const double prev_e = e;
      e = d;
      if (2.0 * p < 3.0 * xm * q - std::fabs(tol * q) && p < std::fabs(0.5 * prev_e * q)) {
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += std::fabs(d) > tol ? d : std::copysign(tol, xm);
    fb = s.probe(b).g;
  }
  return s.finish();
}

SearchResult search_beira(SkewDelayOracle& oracle, const Bracket& bracket, const SearchConfig& config) {
  BracketState s(oracle, bracket, config, Method::Beira);
  std::vector<double> lengths{s.bracket().length()};
  int stuck = 0;
  std::optional<bool> last_side;
  bool force_bisection = false;

  while (!s.converged()) {
    const Bracket& b = s.bracket();
    const double length = b.length();
    if (force_bisection) {
      // Forced steps are not BEIRA test points and leave the stagnation count alone.
      force_bisection = false;
      s.probe(s.mid());
    } else {
      const double estimate = interpolation_estimate(s);
      const double x0 = std::clamp((estimate - b.lo) / length, 1e-12, 1.0 - 1e-12);
      const double sigma = config.sigma0 * std::pow(config.beta, std::min(stuck, 60));
      const double margin = std::min(std::max(config.tau / length, 1e-6), 0.5);
      const BiasSolution bias = solve_bias(x0, sigma, margin);
      const bool side = s.probe(b.lo + (x0 + bias.epsilon) * length).replaced_lo;
      stuck = (last_side && *last_side == side) ? stuck + 1 : 0;
      last_side = side;
    }
    lengths.push_back(s.bracket().length());
    const std::size_t w = static_cast<std::size_t>(config.safeguard_window);
    if (lengths.size() > w && lengths.back() > 0.75 * lengths[lengths.size() - 1 - w]) force_bisection = true;
  }
  return s.finish();
}

SearchResult search(Method method, SkewDelayOracle& oracle, const Bracket& bracket, const SearchConfig& config) {
  switch (method) {
    case Method::Bisection: return search_bisection(oracle, bracket, config);
    case Method::RegulaFalsi: return search_regula_falsi(oracle, bracket, config);
    case Method::Quadratic: return search_quadratic(oracle, bracket, config);
    case Method::Brent: return search_brent(oracle, bracket, config);
    case Method::Beira: return search_beira(oracle, bracket, config);
  }
  throw std::invalid_argument("search: unknown method");
}

int longest_one_sided_run(const SearchTrace& trace) {
  int best = 0, run = 0;
  std::optional<bool> prev;
  for (const auto& e : trace.entries) {
    const bool side = on_above_side(e.classification);
    run = (prev && *prev == side) ? run + 1 : 1;
    prev = side;
    best = std::max(best, run);
  }
  return best;
}

void write_trace_csv(std::ostream& out, const SearchTrace& trace) {
  out << "iter,test_point,classification,delay,interval_length\n";
  for (std::size_t i = 0; i < trace.entries.size(); ++i) {
    const auto& e = trace.entries[i];
    out << (i + 1) << ',' << format_number(e.test_point) << ',' << to_string(e.classification) << ','
        << format_optional(e.delay) << ',' << format_optional(e.interval_length) << '\n';
  }
}

SearchTrace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("trace: empty input");
  const auto header = split_csv_line(line);
  const std::vector<std::string> expected{"iter", "test_point", "classification", "delay", "interval_length"};
  if (header != expected) throw ParseError(fmt::format("trace: unexpected header '{}'", line));
  SearchTrace trace;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 5) throw ParseError(fmt::format("trace line {}: expected 5 fields", line_no));
    const auto ctx = fmt::format("trace line {}", line_no);
    TraceEntry e;
    e.test_point = parse_number(f[1], ctx);
    e.classification = parse_classification(f[2]);
    if (!f[3].empty()) e.delay = parse_number(f[3], ctx);
    if (!f[4].empty()) e.interval_length = parse_number(f[4], ctx);
    trace.entries.push_back(e);
  }
  if (trace.entries.empty()) throw ParseError("trace: no entries");
  return trace;
}

}  // namespace setupkit
