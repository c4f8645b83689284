// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>

#include <Eigen/Core>

namespace setupkit::detail {

struct LbfgsOptions {
  int max_iterations = 200;
  int history = 8;
  double gradient_tolerance = 1e-6;
  double relative_tolerance = 1e-10;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
};

/// Objective returns f(x) and writes the gradient; a non-finite value marks
/// an infeasible point and makes the line search back off.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

/// Unconstrained limited-memory BFGS with a backtracking Armijo line search.
LbfgsResult minimize_lbfgs(const Objective& f, Eigen::VectorXd x0, const LbfgsOptions& options = {});

}  // namespace setupkit::detail
