// SPDX-License-Identifier: Apache-2.0
#include "setupkit/trace_plot.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "setupkit/errors.hpp"

namespace setupkit {

std::vector<std::pair<int, double>> interval_series(const SearchTrace& trace) {
  std::vector<std::pair<int, double>> out;
  for (const TraceEntry& e : trace.entries) {
    if (e.interval_length) out.emplace_back(static_cast<int>(out.size()), *e.interval_length);
  }
  return out;
}

std::vector<std::pair<int, double>> bisection_reference(double l0, int iterations) {
  std::vector<std::pair<int, double>> out;
  for (int i = 0; i <= iterations; ++i) out.emplace_back(i, std::ldexp(l0, -i));
  return out;
}

std::string trace_plot_svg(const SearchTrace& trace, const TracePlotOptions& options) {
  if (trace.entries.empty()) throw ParseError("trace plot: empty trace");
  const auto series = interval_series(trace);
  if (series.empty()) throw ParseError("trace plot: trace has no bracketed entries");
  for (const auto& [i, l] : series) {
    if (!(l > 0.0) || !std::isfinite(l)) throw ParseError("trace plot: interval lengths must be positive");
  }

  const int last = series.back().first;
  const auto reference = bisection_reference(series.front().second, std::max(last, 1));
  double y_min = series.front().second, y_max = y_min;
  for (const auto& [i, l] : series) y_min = std::min(y_min, l), y_max = std::max(y_max, l);
  for (const auto& [i, l] : reference) y_min = std::min(y_min, l), y_max = std::max(y_max, l);
  if (options.tau && *options.tau > 0.0) y_min = std::min(y_min, *options.tau);
  const double lo = std::floor(std::log10(y_min));
  const double hi = std::max(std::ceil(std::log10(y_max)), lo + 1.0);
  const int x_max = std::max(1, reference.back().first);

  const double ml = 64, mr = 16, mt = 32, mb = 40;
  const double pw = options.width - ml - mr, ph = options.height - mt - mb;
  auto px = [&](double i) { return ml + pw * i / x_max; };
  auto py = [&](double v) { return mt + ph * (hi - std::log10(v)) / (hi - lo); };
  auto polyline = [&](const std::vector<std::pair<int, double>>& pts) {
    std::string s;
    for (const auto& [i, l] : pts) s += fmt::format("{:.2f},{:.2f} ", px(i), py(l));
    if (!s.empty()) s.pop_back();
    return s;
  };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"11\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{2:.1f}\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">{3}</text>\n",
      options.width, options.height, ml + pw / 2, options.title);

  // Decade grid and labels.
  for (int d = static_cast<int>(lo); d <= static_cast<int>(hi); ++d) {
    const double y = py(std::pow(10.0, d));
    svg += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#ddd\"/>\n", ml, y,
                       ml + pw, y);
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">1e{}</text>\n", ml - 6, y + 4, d);
  }
  const int step = std::max(1, x_max / 10);
  for (int i = 0; i <= x_max; i += step) {
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n", px(i), mt + ph + 16, i);
  }
  svg += fmt::format(
      "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"none\" stroke=\"#333\"/>\n", ml, mt,
      pw, ph);
  svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">iteration</text>\n", ml + pw / 2,
                     options.height - 6.0);

  if (options.tau && *options.tau > 0.0) {
    const double y = py(*options.tau);
    svg += fmt::format(
        "<line class=\"tau\" x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#c33\" "
        "stroke-dasharray=\"2,3\"/>\n",
        ml, y, ml + pw, y);
  }
  svg += fmt::format(
      "<polyline class=\"reference\" points=\"{}\" fill=\"none\" stroke=\"#888\" stroke-dasharray=\"5,4\"/>\n",
      polyline(reference));
  svg += fmt::format("<polyline class=\"trace\" points=\"{}\" fill=\"none\" stroke=\"#1f5fbf\" stroke-width=\"2\"/>\n",
                     polyline(series));
  for (const auto& [i, l] : series) {
    svg += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2.5\" fill=\"#1f5fbf\"/>\n", px(i), py(l));
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace setupkit
