#pragma once

#include <string>
#include <vector>

#include "turnpike/config.hpp"
#include "turnpike/errors.hpp"

namespace turnpike {

struct PipelineOutcome {
  ExitCode code = ExitCode::Ok;
  std::string message;                  // empty on success
  std::vector<std::string> log_lines;   // human-readable progress, fixed order
  std::vector<std::string> files;       // everything written under the run directory
};

// Runs one subcommand end to end and writes its artifacts (and manifest.json;
// error.json on failure) under cfg.output_dir. Exceptions are mapped to the
// exit code they carry instead of escaping.
PipelineOutcome run_pipeline(const std::string& command, const RunConfig& cfg,
                             const std::string& config_bytes);

// The CLI entry: loads the config, applies --output / --seed overrides, runs
// the pipeline, and prints the log. Returns the process exit code.
int run_cli(const std::string& command, const std::string& config_path,
            const std::string& output_override, const std::string& seed_override);

}  // namespace turnpike
