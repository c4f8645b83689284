// SPDX-License-Identifier: Apache-2.0
#include "setupkit/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "setupkit/csv.hpp"
#include "setupkit/errors.hpp"

namespace setupkit {

namespace {

[[noreturn]] void fail_at(const ConfigEntry& e, std::string_view msg) {
  if (e.key.empty()) throw ConfigError(fmt::format("line {}: [{}]: {}", e.line, e.section, msg));
  throw ConfigError(fmt::format("line {}: {}.{}: {}", e.line, e.section, e.key, msg));
}

double as_double(const ConfigEntry& e) {
  try {
    return parse_number(e.value, e.key);
  } catch (const ParseError&) {
    fail_at(e, fmt::format("expected a number, got '{}'", e.value));
  }
}

long long as_int(const ConfigEntry& e) {
  long long v = 0;
  const char* end = e.value.data() + e.value.size();
  const auto [p, ec] = std::from_chars(e.value.data(), end, v);
  if (ec != std::errc{} || p != end) fail_at(e, fmt::format("expected an integer, got '{}'", e.value));
  return v;
}

std::uint64_t as_seed(const ConfigEntry& e) {
  std::uint64_t v = 0;
  const char* end = e.value.data() + e.value.size();
  const auto [p, ec] = std::from_chars(e.value.data(), end, v);
  if (ec != std::errc{} || p != end) fail_at(e, fmt::format("expected a non-negative integer, got '{}'", e.value));
  return v;
}

bool as_bool(const ConfigEntry& e) {
  if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
  if (e.value == "false" || e.value == "0" || e.value == "no") return false;
  fail_at(e, fmt::format("expected true or false, got '{}'", e.value));
}

template <class T, class Fn>
std::vector<T> as_list(const ConfigEntry& e, Fn parse) {
  std::vector<T> out;
  for (const std::string& tok : split_csv_line(e.value)) {
    if (tok.empty()) continue;
    try {
      out.push_back(parse(tok));
    } catch (const Error& err) {
      fail_at(e, err.what());
    }
  }
  return out;
}

PvtCorner corner_from_fields(const std::vector<std::string>& f) {
  if (f.size() != 3) throw ParseError(fmt::format("corner row needs 3 fields, got {}", f.size()));
  return {parse_process(f[0]), parse_number(f[1], "voltage"), parse_number(f[2], "temperature")};
}

}  // namespace

std::vector<ConfigEntry> parse_config_text(std::string_view text) {
  std::vector<ConfigEntry> out;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(fmt::format("line {}: unterminated section header", line_no));
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section.empty()) throw ConfigError(fmt::format("line {}: empty section name", line_no));
      out.push_back({section, "", "", line_no});
      continue;
    }
    if (section.empty()) throw ConfigError(fmt::format("line {}: entry outside any section", line_no));
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      if (section != "corners") throw ConfigError(fmt::format("line {}: expected 'key = value'", line_no));
      out.push_back({section, "", std::string(line), line_no});
      continue;
    }
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw ConfigError(fmt::format("line {}: missing key", line_no));
    out.push_back({section, key, std::string(trim(line.substr(eq + 1))), line_no});
  }
  return out;
}

std::string_view to_string(IntervalPolicy p) {
  switch (p) {
    case IntervalPolicy::Fixed: return "fixed";
    case IntervalPolicy::Effort: return "effort";
    case IntervalPolicy::Al: return "al";
  }
  return "fixed";
}

IntervalPolicy parse_interval_policy(std::string_view token) {
  for (IntervalPolicy p : {IntervalPolicy::Fixed, IntervalPolicy::Effort, IntervalPolicy::Al})
    if (token == to_string(p)) return p;
  throw ParseError(fmt::format("unknown interval policy '{}' (expected fixed, effort or al)", token));
}

void ExperimentConfig::validate() const {
  if (corners.empty()) throw ConfigError("corner list is empty");
  if (methods.empty()) throw ConfigError("no search methods listed");
  if (policies.empty()) throw ConfigError("no interval policies listed");
  if (samples_per_corner < 1) throw ConfigError("samples_per_corner must be at least 1");
  if (!(nominal_skew > 0.0) && !(nominal_skew < 0.0)) throw ConfigError("nominal_skew must be non-zero");
  if (trace_samples < 0) throw ConfigError("trace_samples must be non-negative");
  search.validate();
  if (std::count(policies.begin(), policies.end(), IntervalPolicy::Al) > 0) al.validate(sample_count());
  if (gp_starts < 1) throw ConfigError("gp_starts must be at least 1");
  if (gp_max_iterations < 1) throw ConfigError("gp_max_iterations must be at least 1");
  try {
    QmcConfig q = qmc;
    q.count = sample_count();
    q.validate();
    effort.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (paths.nominal.empty() || paths.setup.empty() || paths.hold.empty()) {
    throw ConfigError("topology stage paths must not be empty");
  }
  if (fixed && !(fixed->s0 > 0.0)) throw ConfigError("fixed.s0 must be positive");
}

FixedInterval ExperimentConfig::fixed_interval() const {
  if (fixed) return *fixed;
  const TopologyEstimate est = estimate_topology(paths, effort);
  const double fraction = constraint == Constraint::Setup ? est.setup_fraction : est.hold_fraction;
  const double v = std::max(10.0 * fraction * est.nominal_delay_units, search.min_step);
  return {v, v};
}

ExperimentConfig parse_experiment_config(std::string_view text, const std::filesystem::path& base_dir) {
  const std::vector<ConfigEntry> entries = parse_config_text(text);
  ExperimentConfig cfg;

  // Topology first: stage-path defaults depend on it.
  for (const ConfigEntry& e : entries) {
    if (e.section == "experiment" && e.key == "topology") {
      try {
        cfg.topology = parse_topology(e.value);
      } catch (const Error& err) {
        fail_at(e, err.what());
      }
    }
  }
  cfg.paths = default_paths(cfg.topology);

  using Setter = std::function<void(const ConfigEntry&)>;
  std::map<std::string, Setter> setters;
  auto on = [&](std::string key, Setter s) { setters.emplace(std::move(key), std::move(s)); };
  auto parsed = [](const ConfigEntry& e, auto&& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& err) {
      fail_at(e, err.what());
    } catch (const std::invalid_argument& err) {
      fail_at(e, err.what());
    }
  };

  on("experiment.topology", [](const ConfigEntry&) {});
  on("experiment.constraint", [&](const ConfigEntry& e) { parsed(e, [&] { cfg.constraint = parse_constraint(e.value); }); });
  on("experiment.methods", [&](const ConfigEntry& e) {
    cfg.methods = as_list<Method>(e, [](const std::string& t) { return parse_method(t); });
  });
  on("experiment.policies", [&](const ConfigEntry& e) {
    cfg.policies = as_list<IntervalPolicy>(e, [](const std::string& t) { return parse_interval_policy(t); });
  });
  on("experiment.samples_per_corner", [&](const ConfigEntry& e) { cfg.samples_per_corner = static_cast<int>(as_int(e)); });
  on("experiment.seed", [&](const ConfigEntry& e) { cfg.seed = as_seed(e); });
  on("experiment.model_seed", [&](const ConfigEntry& e) { cfg.model_seed = as_seed(e); });
  on("experiment.nominal_skew", [&](const ConfigEntry& e) { cfg.nominal_skew = as_double(e); });
  on("experiment.trace_samples", [&](const ConfigEntry& e) { cfg.trace_samples = static_cast<int>(as_int(e)); });
  on("experiment.output_dir", [&](const ConfigEntry& e) {
    const std::filesystem::path p = e.value;
    cfg.output_dir = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  });
  on("experiment.corner_file", [&](const ConfigEntry& e) {
    std::filesystem::path p = e.value;
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    std::ifstream in(p);
    if (!in) fail_at(e, fmt::format("cannot open corner file '{}'", p.string()));
    parsed(e, [&] { cfg.corners = read_corner_csv(in); });
  });

  on("search.tau", [&](const ConfigEntry& e) { cfg.search.tau = as_double(e); });
  on("search.sigma0", [&](const ConfigEntry& e) { cfg.search.sigma0 = as_double(e); });
  on("search.beta", [&](const ConfigEntry& e) { cfg.search.beta = as_double(e); });
  on("search.max_iter", [&](const ConfigEntry& e) { cfg.search.max_iter = static_cast<int>(as_int(e)); });
  on("search.threshold_ratio", [&](const ConfigEntry& e) { cfg.search.threshold_ratio = as_double(e); });
  on("search.safeguard_window", [&](const ConfigEntry& e) { cfg.search.safeguard_window = static_cast<int>(as_int(e)); });
  on("search.min_step", [&](const ConfigEntry& e) { cfg.search.min_step = as_double(e); });

  on("al.batch_size", [&](const ConfigEntry& e) { cfg.al.batch_size = static_cast<int>(as_int(e)); });
  on("al.k_max", [&](const ConfigEntry& e) { cfg.al.k_max = static_cast<int>(as_int(e)); });
  on("al.predicted_doublings", [&](const ConfigEntry& e) { cfg.al.predicted_doublings = static_cast<int>(as_int(e)); });
  on("al.gp_starts", [&](const ConfigEntry& e) { cfg.gp_starts = static_cast<int>(as_int(e)); });
  on("al.gp_max_iterations", [&](const ConfigEntry& e) { cfg.gp_max_iterations = static_cast<int>(as_int(e)); });

  on("qmc.dimension", [&](const ConfigEntry& e) { cfg.qmc.dimension = static_cast<int>(as_int(e)); });
  on("qmc.generator", [&](const ConfigEntry& e) { parsed(e, [&] { cfg.qmc.generator = parse_qmc_generator(e.value); }); });
  on("qmc.scramble", [&](const ConfigEntry& e) { cfg.scramble = as_bool(e); });

  on("effort.g_tg", [&](const ConfigEntry& e) { cfg.effort.g_tg = as_double(e); });
  on("effort.g_inv", [&](const ConfigEntry& e) { cfg.effort.g_inv = as_double(e); });
  on("effort.p_tg", [&](const ConfigEntry& e) { cfg.effort.p_tg = as_double(e); });
  on("effort.p_inv", [&](const ConfigEntry& e) { cfg.effort.p_inv = as_double(e); });
  on("effort.h", [&](const ConfigEntry& e) { cfg.effort.h = as_double(e); });
  on("effort.gamma", [&](const ConfigEntry& e) { cfg.effort.gamma = as_double(e); });

  on("topology.nominal", [&](const ConfigEntry& e) { parsed(e, [&] { cfg.paths.nominal = parse_stage_path(e.value); }); });
  on("topology.setup", [&](const ConfigEntry& e) { parsed(e, [&] { cfg.paths.setup = parse_stage_path(e.value); }); });
  on("topology.hold", [&](const ConfigEntry& e) { parsed(e, [&] { cfg.paths.hold = parse_stage_path(e.value); }); });
  on("topology.setup_fraction", [&](const ConfigEntry& e) { cfg.paths.setup_fraction = as_double(e); });
  on("topology.hold_fraction", [&](const ConfigEntry& e) { cfg.paths.hold_fraction = as_double(e); });

  std::optional<double> fixed_l0, fixed_s0;
  const ConfigEntry* fixed_entry = nullptr;
  on("fixed.l0", [&](const ConfigEntry& e) { fixed_l0 = as_double(e), fixed_entry = &e; });
  on("fixed.s0", [&](const ConfigEntry& e) { fixed_s0 = as_double(e), fixed_entry = &e; });

  ExternalOracleOptions ext;
  bool has_external = false;
  on("external.command", [&](const ConfigEntry& e) { ext.command_template = e.value, has_external = true; });
  on("external.parse_rule", [&](const ConfigEntry& e) { parsed(e, [&] { ext.parse_rule = parse_rule_from_text(e.value); }); });
  on("external.nominal_delay", [&](const ConfigEntry& e) { ext.nominal_delay = as_double(e); });
  on("external.concurrent", [&](const ConfigEntry& e) { ext.concurrent = as_bool(e); });

  static const std::set<std::string> kSections{"experiment", "corners", "search", "al",     "qmc",
                                               "effort",     "topology", "fixed", "external"};
  bool corners_section = false;
  std::vector<PvtCorner> corner_rows;
  std::set<std::string> seen;
  for (const ConfigEntry& e : entries) {
    if (!kSections.count(e.section)) fail_at(e, "unknown section");
    if (e.key.empty() && e.value.empty()) {
      if (e.section == "corners") corners_section = true;
      continue;
    }
    if (e.section == "corners") {
      if (!e.key.empty()) fail_at(e, "corner rows are 'process, voltage, temperature'");
      try {
        corner_rows.push_back(corner_from_fields(split_csv_line(e.value)));
      } catch (const Error& err) {
        fail_at(e, err.what());
      }
      continue;
    }
    const std::string full = e.section + "." + e.key;
    const auto it = setters.find(full);
    if (it == setters.end()) fail_at(e, "unknown key");
    if (!seen.insert(full).second) fail_at(e, "duplicate key");
    it->second(e);
  }
  if (corners_section) {
    if (seen.count("experiment.corner_file")) throw ConfigError("both [corners] rows and experiment.corner_file given");
    cfg.corners = std::move(corner_rows);
  }
  if (fixed_l0.has_value() != fixed_s0.has_value()) fail_at(*fixed_entry, "fixed policy needs both l0 and s0");
  if (fixed_l0) cfg.fixed = FixedInterval{*fixed_l0, *fixed_s0};
  if (has_external) cfg.external = ext;
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str(), path.parent_path());
}

std::vector<PvtCorner> read_corner_csv(std::istream& in) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  const auto header = split_csv_line(line);
  if (header != std::vector<std::string>{"process", "voltage", "temperature"}) {
    throw ParseError("corner file: header must be 'process,voltage,temperature'");
  }
  std::vector<PvtCorner> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      out.push_back(corner_from_fields(split_csv_line(line)));
    } catch (const Error& e) {
      throw ParseError(fmt::format("corner file line {}: {}", line_no, e.what()));
    }
  }
  return out;
}

std::string default_config_text() {
  const ExperimentConfig d;
  std::string corners;
  for (const PvtCorner& c : d.corners) {
    corners += fmt::format("{}, {}, {}\n", to_string(c.process), format_number(c.voltage), format_number(c.temperature));
  }
  return fmt::format(
      R"(# setupkit experiment configuration

[experiment]
topology = {}              # dff | latch
constraint = {}          # setup | hold
methods = bisection, beira   # bisection, regula_falsi, quadratic, brent, beira
policies = fixed, al         # fixed, effort, al
samples_per_corner = {}
seed = {}                    # sample generation and GP restarts
model_seed = {}           # synthetic PVT -> cell model map
nominal_skew = {}          # skew of the one-call nominal delay measurement
trace_samples = {}
output_dir = {}
# corner_file = corners.csv  # CSV process,voltage,temperature; replaces [corners]

[corners]
# process, voltage (V), temperature (C)
{}
[search]
tau = {}
sigma0 = {}
beta = {}
max_iter = {}
threshold_ratio = {}
safeguard_window = {}
min_step = {}

[al]
batch_size = {}
k_max = {}
predicted_doublings = {}
gp_starts = {}
gp_max_iterations = {}

[qmc]
dimension = {}
generator = {}           # sobol | stratified
scramble = true

[effort]
g_tg = {}
g_inv = {}
p_tg = {}
p_inv = {}
h = {}
gamma = {}

[topology]
# Stage lists override the built-in paths for [experiment] topology.
# nominal = INV, INV, TG, INV
# setup = INV, TG, INV*0.5
# hold = INV, INV*2/3
# setup_fraction = 0.7
# hold_fraction = 0.33

[fixed]
# Unset: l0 = s0 = 10x the effort estimate.
# l0 = 70
# s0 = 70

[external]
# command = ./simulate.sh {{skew}}
# parse_rule = delay=,FAIL
# nominal_delay = 10
# concurrent = false
)",
      to_string(d.topology), to_string(d.constraint), d.samples_per_corner, d.seed, d.model_seed,
      format_number(d.nominal_skew), d.trace_samples, d.output_dir.string(), corners, format_number(d.search.tau),
      format_number(d.search.sigma0), format_number(d.search.beta), d.search.max_iter,
      format_number(d.search.threshold_ratio), d.search.safeguard_window, format_number(d.search.min_step),
      d.al.batch_size, d.al.k_max, d.al.predicted_doublings, d.gp_starts, d.gp_max_iterations, d.qmc.dimension,
      to_string(d.qmc.generator), format_number(d.effort.g_tg), format_number(d.effort.g_inv),
      format_number(d.effort.p_tg), format_number(d.effort.p_inv), format_number(d.effort.h),
      format_number(d.effort.gamma));
}

}  // namespace setupkit
