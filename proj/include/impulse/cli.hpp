#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace impulse::cli {

inline constexpr const char* kToolVersion = "0.1.0";

struct RunArgs {
  std::string scenario;
  std::string out;
  std::string traj_dir;
  std::uint64_t seed = 1;
  double h = 0.0;              ///< overrides the scenario step when positive
  std::size_t max_degree = 0;  ///< 0 uses the scenario value
  std::vector<double> radii{0.1, 0.3, 1.0};
  std::vector<double> eta{1e-2, 3e-3, 1e-3};
  std::size_t budget = 2000;
  std::size_t jobs = 1;
};

const std::vector<std::string>& commands();

/// Runs one command and returns the full report:
/// {header: {timestamp}, tool_version, command, scenario_hash, seed, warnings, result}.
/// Writes the report to `args.out` and CSV files to `args.traj_dir` when set.
/// Library errors propagate unchanged.
nlohmann::json run(const std::string& command, const RunArgs& args);

/// The report without its header, serialized as written.
std::string stable_text(const nlohmann::json& report);

/// 64-bit FNV-1a, lowercase hex.
std::string fnv1a_hex(std::string_view bytes);

/// Full command-line entry point (argv parsing, logging, exit codes):
/// 0 success, 2 validation failure (bad arguments included), 3 numerical
/// failure, 1 for anything unexpected.
int main(int argc, char** argv);

}  // namespace impulse::cli
