// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <string>

#include "setupkit/oracle.hpp"

namespace setupkit {

/// How to read one evaluation from the child's stdout. The first line that
/// starts with delay_prefix supplies the delay; any line containing
/// failure_token marks a failed capture.
struct ParseRule {
  std::string delay_prefix = "delay=";
  std::string failure_token = "FAIL";
};

struct ExternalOracleOptions {
  /// Shell command; every "{skew}" is replaced by the skew value.
  std::string command_template;
  ParseRule parse_rule;
  double nominal_delay = 1.0;
  /// Allow overlapping child processes. Off by default.
  bool concurrent = false;
};

/// Runs one external process per evaluation through /bin/sh.
/// Throws AdapterFailure on a non-zero exit status or unparseable output.
class ExternalOracle final : public SkewDelayOracle {
 public:
  explicit ExternalOracle(ExternalOracleOptions options);

  SimOutcome evaluate(double skew) override;
  std::uint64_t calls() const override { return calls_.load(std::memory_order_relaxed); }
  double nominal_delay() const override { return options_.nominal_delay; }
  bool concurrent_evaluation() const override { return options_.concurrent; }

  /// The command that evaluate(skew) would run.
  std::string render_command(double skew) const;

 private:
  SimOutcome run(double skew);

  ExternalOracleOptions options_;
  std::mutex mutex_;
  std::atomic<std::uint64_t> calls_{0};
};

/// Parses "prefix" and "token" pair text such as "delay=,FAIL".
ParseRule parse_rule_from_text(std::string_view text);

/// Interprets captured stdout per rule. Throws AdapterFailure.
SimOutcome parse_adapter_output(std::string_view output, const ParseRule& rule);

}  // namespace setupkit
