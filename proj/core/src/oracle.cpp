// SPDX-License-Identifier: Apache-2.0
#include "setupkit/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

#include "setupkit/errors.hpp"
#include "setupkit/random.hpp"

namespace setupkit {

int process_code(Process p) {
  switch (p) {
    case Process::TT: return 0;
    case Process::FF: return 1;
    case Process::SS: return -1;
  }
  return 0;
}

std::string_view to_string(Process p) {
  switch (p) {
    case Process::TT: return "TT";
    case Process::FF: return "FF";
    case Process::SS: return "SS";
  }
  return "TT";
}

Process parse_process(std::string_view token) {
  std::string t(token);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::toupper(c); });
  if (t == "TT") return Process::TT;
  if (t == "FF") return Process::FF;
  if (t == "SS") return Process::SS;
  throw ParseError(fmt::format("unknown process corner '{}' (expected TT, FF or SS)", token));
}

std::string corner_label(const PvtCorner& c) {
  return fmt::format("{}_{}V_{}C", to_string(c.process), c.voltage, c.temperature);
}

std::vector<PvtCorner> default_corner_table() {
  using P = Process;
  return {
      {P::TT, 0.80, 25},   {P::TT, 0.80, 85}, {P::TT, 0.90, 25},  {P::TT, 0.90, 85},
      {P::FF, 0.88, -40},  {P::FF, 0.88, 0},  {P::FF, 0.88, 125}, {P::FF, 0.99, -40},
      {P::FF, 0.99, 0},    {P::FF, 0.99, 125}, {P::SS, 0.72, -40}, {P::SS, 0.72, 0},
      {P::SS, 0.72, 125},  {P::SS, 0.81, -40}, {P::SS, 0.81, 0},  {P::SS, 0.81, 125},
  };
}

void AnalyticCellModel::validate() const {
  if (!(d0 > 0.0)) throw std::invalid_argument("AnalyticCellModel: d0 must be positive");
  if (!(lambda > 0.0)) throw std::invalid_argument("AnalyticCellModel: lambda must be positive");
  if (!(alpha > 0.0)) throw std::invalid_argument("AnalyticCellModel: alpha must be positive");
  if (!(tail >= 0.0)) throw std::invalid_argument("AnalyticCellModel: tail must be non-negative");
}

SimOutcome evaluate(const AnalyticCellModel& m, double skew) {
  const double orient = m.fail_side == FailSide::Low ? 1.0 : -1.0;
  const double dist = orient * (skew - m.x_c);
  if (dist <= 0.0) return SimOutcome::failure();
  double delay = m.d0 * (1.0 + m.alpha * std::exp(-dist / m.lambda));
  if (m.tail > 0.0) {
    const double over = std::max(0.0, orient * (skew - m.tail_start));
    delay += m.d0 * m.tail * over * over;
  }
  return SimOutcome::of(delay);
}

double true_root(const AnalyticCellModel& m, double threshold_ratio) {
  if (!(threshold_ratio > 1.0)) throw std::invalid_argument("true_root: threshold_ratio must exceed 1");
  const double orient = m.fail_side == FailSide::Low ? 1.0 : -1.0;
  return m.x_c + orient * m.lambda * std::log(m.alpha / (threshold_ratio - 1.0));
}

AnalyticOracle::AnalyticOracle(AnalyticCellModel model) : model_(model) { model_.validate(); }

SimOutcome AnalyticOracle::evaluate(double skew) {
  calls_.fetch_add(1, std::memory_order_relaxed);
  return setupkit::evaluate(model_, skew);
}

FunctionOracle::FunctionOracle(Function f, double nominal_delay)
    : f_(std::move(f)), nominal_(nominal_delay) {}

SimOutcome FunctionOracle::evaluate(double skew) {
  calls_.fetch_add(1, std::memory_order_relaxed);
  return SimOutcome{f_(skew)};
}

std::string_view to_string(Topology t) { return t == Topology::Latch ? "latch" : "dff"; }
std::string_view to_string(Constraint c) { return c == Constraint::Setup ? "setup" : "hold"; }

Topology parse_topology(std::string_view token) {
  if (token == "latch") return Topology::Latch;
  if (token == "dff") return Topology::Dff;
  throw ParseError(fmt::format("unknown topology '{}' (expected latch or dff)", token));
}

Constraint parse_constraint(std::string_view token) {
  if (token == "setup") return Constraint::Setup;
  if (token == "hold") return Constraint::Hold;
  throw ParseError(fmt::format("unknown constraint '{}' (expected setup or hold)", token));
}

AnalyticCellModel base_model(Topology topology, Constraint constraint) {
  AnalyticCellModel m;
  if (topology == Topology::Dff) {
    m.d0 = 10.0;
    if (constraint == Constraint::Setup) {
      m.x_c = 5.0, m.lambda = 0.6, m.alpha = 1.5;  // root ~6.62
    } else {
      m.x_c = 2.0, m.lambda = 0.4, m.alpha = 1.0;  // root ~2.92
    }
  } else {
    m.d0 = 28.0;
    if (constraint == Constraint::Setup) {
      m.x_c = 9.0, m.lambda = 0.8, m.alpha = 1.5;  // root ~11.17
    } else {
      m.x_c = 8.0, m.lambda = 0.7, m.alpha = 1.3;  // root ~9.80
    }
  }
  return m;
}

namespace {

// Default global sensitivities of log(parameter) to
// (process code, (V - 0.8) / 0.1, (T - 25) / 100), plus cross terms
// (process * dV, dV^2, dT * dV). Rows: d0, x_c, lambda, alpha.
constexpr double kGlobal[4][6] = {
    {-0.18, -0.22, 0.08, 0.02, 0.03, -0.02},
    {-0.22, -0.26, 0.05, 0.03, 0.04, -0.02},
    {-0.15, -0.20, 0.12, 0.02, 0.02, 0.01},
    {0.05, 0.05, -0.05, 0.00, 0.01, 0.00},
};

// Strong local sensitivities are drawn from [lo, hi] with a random sign.
constexpr double kStrongRange[4][2] = {
    {0.005, 0.02},
    {0.02, 0.05},
    {0.01, 0.03},
    {0.0, 0.01},
};
constexpr int kStrongDims = 6;
constexpr double kWeakScale = 3e-4;
constexpr double kQuadScale = 0.01;
constexpr double kCoefficientJitter = 0.15;

struct SyntheticMap {
  double global[4][6];
  std::vector<int> strong;
  std::vector<double> local[4];
  double quad[4][2];
};

SyntheticMap build_map(std::size_t local_dim, Topology topology, Constraint constraint,
                       std::uint64_t seed) {
  SplitMix64 rng(mix_seed(seed, 1000 + 10 * static_cast<int>(topology) + static_cast<int>(constraint)));
  SyntheticMap map{};
  for (int k = 0; k < 4; ++k)
    for (int j = 0; j < 6; ++j)
      map.global[k][j] = kGlobal[k][j] * (1.0 + kCoefficientJitter * rng.uniform(-1.0, 1.0));

  const int n_strong = static_cast<int>(std::min<std::size_t>(kStrongDims, local_dim));
  while (static_cast<int>(map.strong.size()) < n_strong) {
    const int idx = static_cast<int>(rng.below(local_dim));
    if (std::find(map.strong.begin(), map.strong.end(), idx) == map.strong.end()) map.strong.push_back(idx);
  }
  for (int k = 0; k < 4; ++k) {
    map.local[k].assign(local_dim, 0.0);
    for (std::size_t j = 0; j < local_dim; ++j) map.local[k][j] = kWeakScale * rng.uniform(-1.0, 1.0);
    for (int idx : map.strong) {
      const double mag = rng.uniform(kStrongRange[k][0], kStrongRange[k][1]);
      map.local[k][idx] = rng.uniform() < 0.5 ? -mag : mag;
    }
    map.quad[k][0] = kQuadScale * rng.uniform(-1.0, 1.0);
    map.quad[k][1] = kQuadScale * rng.uniform(-1.0, 1.0);
  }
  return map;
}

}  // namespace

AnalyticCellModel model_from_pvt(const PvtSample& sample, Topology topology, std::uint64_t seed,
                                 Constraint constraint) {
  const SyntheticMap map = build_map(sample.local_vars.size(), topology, constraint, seed);
  const double p = process_code(sample.corner.process);
  const double dv = (sample.corner.voltage - 0.8) / 0.1;
  const double dt = (sample.corner.temperature - 25.0) / 100.0;
  const double features[6] = {p, dv, dt, p * dv, dv * dv, dt * dv};
  // Slow silicon is more sensitive to local variation.
  const double local_gain = 1.0 - 0.1 * p;
  const auto& z = sample.local_vars;

  double g[4];
  for (int k = 0; k < 4; ++k) {
    double s = 0.0;
    for (int j = 0; j < 6; ++j) s += map.global[k][j] * features[j];
    double local = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) local += map.local[k][j] * z[j];
    if (map.strong.size() >= 3) {
      local += map.quad[k][0] * z[map.strong[0]] * z[map.strong[1]];
      local += map.quad[k][1] * z[map.strong[2]] * z[map.strong[2]];
    }
    g[k] = s + local_gain * local;
  }

  AnalyticCellModel m = base_model(topology, constraint);
  m.d0 *= std::exp(g[0]);
  m.x_c *= std::exp(g[1]);
  m.lambda *= std::exp(g[2]);
  m.alpha *= std::exp(g[3]);
  return m;
}

}  // namespace setupkit
