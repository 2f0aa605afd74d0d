#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "uvesc/config.hpp"

namespace uvesc {

enum ExitCode : int {
  kExitOk = 0,
  kExitVerifyFailed = 1,
  kExitInfeasible = 2,
  kExitVerifierRejection = 3,
  kExitConfigError = 4,
  kExitNumerical = 5,
};

struct CommandResult {
  int exit_code = kExitOk;
  json report;
  std::string message;
};

enum class SimulationMode { kFull, kAverage };

struct SimulateOptions {
  SimulationMode mode = SimulationMode::kFull;
  std::optional<std::uint64_t> seed;
  double omega_scale = 1.0;
  /// gain.json or synthesis.json; synthesized from the config when absent.
  std::optional<std::filesystem::path> gain_file;
};

/// Writes synthesis.json and gain.json into out_dir.
CommandResult cmd_synthesize(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// Checks a gain.json (searches a certificate for K) or a synthesis.json
/// (re-checks the stored certificate). Writes verify.json.
CommandResult cmd_verify(const ExperimentConfig& cfg, const std::filesystem::path& input,
                         const std::filesystem::path& out_dir);

/// Writes trace.csv (or average.csv) and simulate.json.
CommandResult cmd_simulate(const ExperimentConfig& cfg, const SimulateOptions& options,
                           const std::filesystem::path& out_dir);

/// Runs the embedded example end to end and writes the bundle. The exit code
/// reflects stage failures; the acceptance matrix is reported, not enforced.
CommandResult cmd_reproduce_example(const std::filesystem::path& out_dir, std::optional<std::uint64_t> seed = {});

/// Maps toolkit exceptions to exit codes.
int exit_code_for(const std::exception& e);

/// Entry point of the command-line tool.
int run_cli(int argc, char** argv);

}  // namespace uvesc
