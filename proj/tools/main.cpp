// SPDX-License-Identifier: Apache-2.0
// setupkit command-line front end.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include <setupkit/config.hpp>
#include <setupkit/csv.hpp>
#include <setupkit/errors.hpp>
#include <setupkit/experiment.hpp>
#include <setupkit/trace_plot.hpp>

namespace fs = std::filesystem;
using namespace setupkit;

namespace {

constexpr int kConfigExit = 2;
constexpr int kRuntimeExit = 3;

struct ConfigFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ExperimentConfig load(const fs::path& path, const std::optional<fs::path>& output_dir) {
  try {
    ExperimentConfig c = load_experiment_config(path);
    if (output_dir) c.output_dir = *output_dir;
    else if (c.output_dir.is_relative()) c.output_dir = fs::current_path() / c.output_dir;
    return c;
  } catch (const ConfigError& e) {
    throw ConfigFailure(fmt::format("{}: {}", path.string(), e.what()));
  } catch (const ParseError& e) {
    throw ConfigFailure(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void print_rows(const RunSummary& s) {
  for (const ReportRow& r : s.rows) {
    if (r.corner != "all") continue;
    std::cout << fmt::format("{:<12} {:<7} samples {:>5}  mean calls {:>6.2f}  p95 {:>3}  wall {:.2f} s\n",
                             to_string(r.method), to_string(r.policy), r.samples, r.mean_calls,
                             format_number(r.p95_calls), r.wall_seconds);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Setup/hold time characterization with interpolation search and active learning"};
  app.require_subcommand(0, 1);
  bool print_default = false;
  app.add_flag("--print-default-config", print_default, "Print the commented default configuration and exit");

  fs::path config_path;
  std::optional<fs::path> output_dir;
  auto add_run = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("config", config_path, "Experiment configuration file")->required();
    sub->add_option("-o,--output-dir", output_dir, "Override [experiment] output_dir");
    return sub;
  };
  CLI::App* characterize_cmd = add_run("characterize", "Characterize every configured method and policy");
  CLI::App* bench_cmd = add_run("bench", "Compare method/policy pairs and write report.csv and summary.md");
  CLI::App* al_cmd = add_run("al-run", "Run active learning for every configured method");

  CLI::App* plot_cmd = app.add_subcommand("trace-plot", "Render a trace CSV as an SVG convergence chart");
  fs::path trace_path;
  std::optional<fs::path> svg_path;
  std::optional<double> tau;
  plot_cmd->add_option("trace", trace_path, "Trace CSV")->required();
  plot_cmd->add_option("-o,--output", svg_path, "SVG path (default: trace path with .svg)");
  plot_cmd->add_option("--tau", tau, "Draw a tolerance line");

  CLI::App* default_cmd = app.add_subcommand("print-default-config", "Print the commented default configuration");

  CLI11_PARSE(app, argc, argv);

  try {
    if (print_default || default_cmd->parsed()) {
      std::cout << default_config_text();
      return 0;
    }
    if (characterize_cmd->parsed() || bench_cmd->parsed() || al_cmd->parsed()) {
      const ExperimentConfig cfg = load(config_path, output_dir);
      RunSummary s;
      try {
        if (characterize_cmd->parsed()) s = characterize(cfg);
        else if (bench_cmd->parsed()) s = bench(cfg);
        else s = al_run(cfg);
      } catch (const ConfigError& e) {
        throw ConfigFailure(e.what());
      }
      print_rows(s);
      std::cout << "results in " << cfg.output_dir.string() << '\n';
      return 0;
    }
    if (plot_cmd->parsed()) {
      std::ifstream in(trace_path);
      if (!in) throw Error(fmt::format("cannot open trace '{}'", trace_path.string()));
      TracePlotOptions o;
      o.tau = tau;
      o.title = trace_path.filename().string();
      const std::string svg = trace_plot_svg(read_trace_csv(in), o);
      const fs::path out = svg_path.value_or(fs::path(trace_path).replace_extension(".svg"));
      write_file_atomic(out, svg);
      std::cout << out.string() << '\n';
      return 0;
    }
    std::cout << app.help();
    return 0;
  } catch (const ConfigFailure& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeExit;
  }
}
