// SPDX-License-Identifier: Apache-2.0
#include "setupkit/external_oracle.hpp"

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <memory>
#include <sstream>

#include "setupkit/csv.hpp"
#include "setupkit/errors.hpp"

namespace setupkit {

namespace {

constexpr std::string_view kPlaceholder = "{skew}";

}  // namespace

ExternalOracle::ExternalOracle(ExternalOracleOptions options) : options_(std::move(options)) {
  if (options_.command_template.find(kPlaceholder) == std::string::npos) {
    throw ConfigError("external oracle command template has no {skew} placeholder");
  }
  if (options_.parse_rule.delay_prefix.empty() || options_.parse_rule.failure_token.empty()) {
    throw ConfigError("external oracle parse rule needs a delay prefix and a failure token");
  }
  if (!(options_.nominal_delay > 0.0)) throw ConfigError("external oracle nominal delay must be positive");
}

std::string ExternalOracle::render_command(double skew) const {
  std::string cmd = options_.command_template;
  const std::string value = format_number(skew);
  for (auto pos = cmd.find(kPlaceholder); pos != std::string::npos;
       pos = cmd.find(kPlaceholder, pos + value.size())) {
    cmd.replace(pos, kPlaceholder.size(), value);
  }
  return cmd;
}

SimOutcome ExternalOracle::evaluate(double skew) {
  calls_.fetch_add(1, std::memory_order_relaxed);
  if (options_.concurrent) return run(skew);
  std::lock_guard lock(mutex_);
  return run(skew);
}

SimOutcome ExternalOracle::run(double skew) {
  const std::string cmd = render_command(skew);
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) throw AdapterFailure("cannot spawn: " + cmd);

  std::string output;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) output.append(buf.data(), n);

  const int status = ::pclose(pipe);
  if (status == -1) throw AdapterFailure("cannot reap: " + cmd);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    throw AdapterFailure("command exited with status " + std::to_string(code) + ": " + cmd);
  }
  return parse_adapter_output(output, options_.parse_rule);
}

SimOutcome parse_adapter_output(std::string_view output, const ParseRule& rule) {
  std::istringstream in{std::string(output)};
  std::string line;
  while (std::getline(in, line)) {
    const std::string_view t = trim(line);
    if (t.find(rule.failure_token) != std::string_view::npos) return SimOutcome::failure();
    if (t.starts_with(rule.delay_prefix)) {
      double d = 0.0;
      try {
        const std::string_view rest = trim(t.substr(rule.delay_prefix.size()));
        d = parse_number(rest.substr(0, rest.find_first_of(" \t")), "delay");
      } catch (const ParseError& e) {
        throw AdapterFailure(std::string("unparseable adapter output: ") + e.what());
      }
      if (!(d > 0.0)) throw AdapterFailure("adapter reported a non-positive delay: " + std::string(t));
      return SimOutcome::of(d);
    }
  }
  throw AdapterFailure("adapter output has neither '" + rule.delay_prefix + "' nor '" + rule.failure_token + "'");
}

ParseRule parse_rule_from_text(std::string_view text) {
  const auto parts = split_csv_line(text);
  if (parts.size() != 2 || parts[0].empty() || parts[1].empty()) {
    throw ConfigError("parse rule must be 'delay_prefix,failure_token', got '" + std::string(text) + "'");
  }
  return ParseRule{parts[0], parts[1]};
}

}  // namespace setupkit
