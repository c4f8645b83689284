// SPDX-License-Identifier: Apache-2.0
#include "setupkit/bias.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "setupkit/normal.hpp"

namespace setupkit {
namespace {

constexpr double kClosedFormSigmaMax = 0.01;
constexpr double kSolveTolerance = 1e-12;
constexpr int kUniformGrid = 2000;
constexpr int kLocalGrid = 400;
constexpr double kLocalSpan = 10.0;  // local grid covers x0 +- kLocalSpan * sigma

const double kSqrt2Pi = std::sqrt(2.0 * std::numbers::pi);

// Minimizes the expected length for x0 <= 0.5 without clamping.
double minimize_numerically(double x0, double sigma) {
  std::vector<double> points;
  points.reserve(kUniformGrid + kLocalGrid + 2);
  for (int i = 0; i <= kUniformGrid; ++i) points.push_back(static_cast<double>(i) / kUniformGrid);
  if (kLocalSpan * sigma < 0.5) {
    for (int i = 0; i <= kLocalGrid; ++i) {
      const double t = x0 + kLocalSpan * sigma * (2.0 * i / kLocalGrid - 1.0);
      if (t > 0.0 && t < 1.0) points.push_back(t);
    }
  }
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end(), [](double a, double b) { return b - a < 1e-12; }),
               points.end());

  std::size_t best = 0;
  double best_value = expected_interval_length(x0, points[0] - x0, sigma);
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double v = expected_interval_length(x0, points[i] - x0, sigma);
    if (v < best_value) {
      best_value = v;
      best = i;
    }
  }

  double lo = points[best == 0 ? 0 : best - 1] - x0;
  double hi = points[std::min(best + 1, points.size() - 1)] - x0;
  double slope_lo = expected_interval_length_slope(x0, lo, sigma);
  const double slope_hi = expected_interval_length_slope(x0, hi, sigma);
  if (!(slope_lo < 0.0 && slope_hi > 0.0)) return points[best] - x0;

  // Stationary point of the expected length: bisection on its slope.
  while (hi - lo > kSolveTolerance) {
    const double mid = 0.5 * (lo + hi);
    const double s = expected_interval_length_slope(x0, mid, sigma);
    if (s == 0.0) return mid;
    if ((s < 0.0) == (slope_lo < 0.0)) {
      lo = mid;
      slope_lo = s;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double expected_interval_length(double x0, double eps, double sigma) {
  const double split = normal_cdf(eps / sigma);
  const double p1 = split - normal_cdf(-x0 / sigma);
  const double p2 = normal_cdf((1.0 - x0) / sigma) - split;
  return p1 * (x0 + eps) + p2 * (1.0 - x0 - eps);
}

double expected_interval_length_slope(double x0, double eps, double sigma) {
  return 2.0 * normal_cdf(eps / sigma) - normal_cdf((1.0 - x0) / sigma) -
         normal_cdf(-x0 / sigma) + normal_pdf(eps / sigma) / sigma * (2.0 * (x0 + eps) - 1.0);
}

double closed_form_bias(double x0, double sigma) {
  if (x0 == 0.5) return 0.0;
  const double arg = std::fabs(2.0 * x0 - 1.0) / (sigma * kSqrt2Pi);
  const double magnitude = sigma * std::sqrt(2.0 * std::log(arg));
  return x0 > 0.5 ? -magnitude : magnitude;
}

bool closed_form_applicable(double x0, double sigma) {
  const double arg = std::fabs(2.0 * x0 - 1.0) / (sigma * kSqrt2Pi);
  return sigma <= kClosedFormSigmaMax && arg > std::exp(2.0);
}

BiasSolution solve_bias(double x0, double sigma, double margin) {
  if (!(x0 > 0.0 && x0 < 1.0)) throw std::domain_error("solve_bias: x0 must lie in (0, 1)");
  if (!(sigma > 0.0)) throw std::domain_error("solve_bias: sigma must be positive");
  margin = std::clamp(margin, 0.0, 0.5);

  BiasSolution out;
  if (x0 == 0.5) {
    out.epsilon = 0.0;
  } else {
    // E[L] is mirror-symmetric: eps*(x0) = -eps*(1 - x0). Solve on the left half.
    const bool mirrored = x0 > 0.5;
    const double left = mirrored ? 1.0 - x0 : x0;
    double eps;
    if (closed_form_applicable(left, sigma)) {
      eps = closed_form_bias(left, sigma);
      out.closed_form = true;
    } else {
      eps = minimize_numerically(left, sigma);
    }
    out.epsilon = mirrored ? -eps : eps;
  }

  const double point = std::clamp(x0 + out.epsilon, margin, 1.0 - margin);
  out.epsilon = point - x0;
  return out;
}

}  // namespace setupkit
