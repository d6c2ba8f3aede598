#pragma once

#include "config.hpp"

#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace finsler::cli {

enum ExitCode : int { kPass = 0, kCheckFailed = 1, kConfigError = 2, kNonConvergence = 3 };

struct RunContext {
  std::string out_dir = ".";
  std::string config_dir = ".";  // base for relative paths inside the config
  std::optional<std::uint64_t> seed;
  bool timestamp = true;
  std::ostream* log = nullptr;  // human-readable summary; nullptr silences it
};

/// CSV file in the output directory. The first line is a "# finsler <command> <UTC time>"
/// comment unless timestamps are disabled; numbers carry 17 significant digits.
class CsvWriter {
 public:
  CsvWriter(const RunContext& ctx, std::string_view command, const std::string& file);
  void header(const std::vector<std::string>& columns);
  CsvWriter& cell(double v);
  CsvWriter& cell(std::string_view s);
  CsvWriter& cell(bool pass);
  CsvWriter& cell(long long v);
  void end_row();

 private:
  void sep();
  std::ofstream os_;
  bool first_ = true;
};

std::string csv_quote(std::string_view s);

int cmd_verify_norms(const json& cfg, const RunContext& ctx);
int cmd_verify_exact(const json& cfg, const RunContext& ctx);
int cmd_simulate(const json& cfg, const RunContext& ctx);
int cmd_radial_solve(const json& cfg, const RunContext& ctx);
int cmd_classify(const json& cfg, const RunContext& ctx);
int cmd_compare(const json& cfg, const RunContext& ctx);

/// Built-in configuration for commands that have one (verify-norms, verify-exact); null otherwise.
json default_config(std::string_view command);

/// Dispatches by subcommand name and maps exceptions onto the exit-code contract:
/// configuration and domain errors → 2, non-convergence → 3.
int run_command(std::string_view command, const json& cfg, const RunContext& ctx);

/// Reads a JSON document; ConfigError on I/O or parse failure.
json load_config(const std::string& path);

}  // namespace finsler::cli
