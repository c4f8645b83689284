// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "setupkit/search.hpp"

namespace setupkit {

struct TracePlotOptions {
  int width = 640;
  int height = 400;
  /// Draws a horizontal tolerance line when set.
  std::optional<double> tau;
  std::string title = "Bracket length per iteration";
};

/// (iteration, bracket length) for every entry that has a bracket; the
/// first bracket is iteration 0.
std::vector<std::pair<int, double>> interval_series(const SearchTrace& trace);

/// Halving from l0: (i, l0 / 2^i) for i = 0..iterations.
std::vector<std::pair<int, double>> bisection_reference(double l0, int iterations);

/// Self-contained SVG with a log-scale y axis and the bisection reference.
/// Throws ParseError when the trace has no bracketed entries.
std::string trace_plot_svg(const SearchTrace& trace, const TracePlotOptions& options = {});

}  // namespace setupkit
