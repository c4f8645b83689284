// SPDX-License-Identifier: Apache-2.0
#pragma once

// Optimal test-point bias for interpolation under a Gaussian error model.
//
// The bracket is normalized to [0, 1] and the interpolation estimate x0 is
// treated as the mean of a Gaussian with standard deviation sigma. Testing at
// x0 + eps leaves [0, x0 + eps] with probability P1 and [x0 + eps, 1] with
// probability P2; solve_bias picks the eps minimizing the expected length.
// The Phi differences are deliberately left un-normalized.

namespace setupkit {

/// P1 * (x0 + eps) + P2 * (1 - x0 - eps).
double expected_interval_length(double x0, double eps, double sigma);

/// d/d(eps) of expected_interval_length, in the simplified closed form.
double expected_interval_length_slope(double x0, double eps, double sigma);

/// Small-sigma approximation of the optimal bias. Only meaningful where
/// closed_form_applicable() holds.
double closed_form_bias(double x0, double sigma);

/// sigma <= 0.01 and |2 x0 - 1| / (sigma sqrt(2 pi)) > e^2.
bool closed_form_applicable(double x0, double sigma);

struct BiasSolution {
  double epsilon = 0.0;
  bool closed_form = false;
};

/// Optimal bias for 0 < x0 < 1, sigma > 0. The biased point x0 + eps is
/// clamped into [margin, 1 - margin]; margin is capped at 0.5.
BiasSolution solve_bias(double x0, double sigma, double margin = 1e-6);

}  // namespace setupkit
