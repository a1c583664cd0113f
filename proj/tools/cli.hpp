#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace swgauge::cli {

enum ExitCode : int {
  kSuccess = 0,
  kConfigError = 2,
  kNumericFailure = 3,
};

/// Everything a single invocation needs. Unset optionals fall back to the
/// config file (bp-solve, sweep) and then to built-in defaults.
struct RunConfig {
  std::string command;  // dist | grad | hess | bp-solve | sweep
  std::optional<std::filesystem::path> mu;
  std::optional<std::filesystem::path> nu;
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> log;
  std::optional<double> sigma;
  std::optional<double> delta;
  std::optional<double> lambda;
  std::optional<double> horizon;
  std::optional<int> rule_nodes;
  std::optional<std::string> rule_method;
  std::optional<int> hermite;
  std::optional<std::string> expectation;  // panels | hermite
  std::optional<int> legendre;
  std::optional<std::uint64_t> seed;
  bool sqrt_display = false;
};

/// Executes one command and writes its artifacts. Errors are reported on
/// `err`; the return value is the process exit code.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Parses argv with CLI11 and dispatches to run().
int main_entry(int argc, char** argv);

}  // namespace swgauge::cli
