// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <setupkit/oracle.hpp>
#include <setupkit/random.hpp>
#include <setupkit/search.hpp>

namespace suite {

struct Case {
  setupkit::AnalyticCellModel model;
  double l0 = 0.0;
  double s0 = 0.0;
};

/// Randomized analytic cells with a rough starting guess around the root.
inline std::vector<Case> randomized(int count, std::uint64_t seed, double threshold_ratio = 1.10) {
  setupkit::SplitMix64 rng(seed);
  std::vector<Case> out;
  for (int i = 0; i < count; ++i) {
    Case c;
    c.model.d0 = rng.uniform(5.0, 15.0);
    c.model.x_c = rng.uniform(0.0, 5.0);
    c.model.lambda = rng.uniform(0.2, 1.5);
    c.model.alpha = rng.uniform(0.5, 4.0);
    const double root = c.model.x_c + c.model.lambda * std::log(c.model.alpha / (threshold_ratio - 1.0));
    c.l0 = root + rng.uniform(-5.0, 5.0);
    c.s0 = rng.uniform(1.0, 5.0);
    out.push_back(c);
  }
  return out;
}

/// Replays a search trace from its starting bracket and counts entries that
/// test outside the bracket, break the sign change, misreport the length or
/// fail to shrink it.
inline int bracket_violations(const setupkit::Bracket& start, const setupkit::SearchTrace& trace) {
  using setupkit::on_above_side;
  setupkit::Bracket b = start;
  int bad = 0;
  double prev_len = b.length();
  for (const auto& e : trace.entries) {
    if (!(e.test_point > b.lo && e.test_point < b.hi)) ++bad;
    if (on_above_side(e.classification) == on_above_side(b.lo_class)) {
      b.lo = e.test_point;
      b.lo_class = e.classification;
    } else {
      b.hi = e.test_point;
      b.hi_class = e.classification;
    }
    if (!(b.lo < b.hi) || on_above_side(b.lo_class) == on_above_side(b.hi_class)) ++bad;
    if (!e.interval_length || std::fabs(*e.interval_length - b.length()) > 1e-12 * (1.0 + b.length())) ++bad;
    if (!(b.length() < prev_len)) ++bad;
    prev_len = b.length();
  }
  return bad;
}

}  // namespace suite
