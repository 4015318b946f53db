#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "turnpike/feasibility.hpp"
#include "turnpike/linear_system.hpp"
#include "turnpike/stage_cost.hpp"
#include "turnpike/steady_pair.hpp"
#include "turnpike/turnpike_analysis.hpp"

namespace turnpike {

// Everything a pipeline run needs, parsed from one JSON document. Field
// defaults below are the documented defaults; the schema itself is described
// in the README and exercised by the shipped example configs.
struct RunConfig {
  LinearSystem system;
  std::unique_ptr<StageCost> cost;
  std::vector<Eigen::VectorXd> initial_states;
  std::vector<double> horizons;  // sorted ascending after load

  int N_per_unit = 100;
  NewtonOptions newton;

  double rank_tol = 0.0;  // <= 0 picks the relative default
  FeasibilityTolerances feasibility;
  double kkt_tol = 1e-8;

  EnvelopeOptions envelope;  // floor defaults to 1e-9 here (reports, not unit tests)
  double min_rate = 0.01;
  double min_r2 = 0.9;

  std::uint64_t seed = 0;
  std::string output_dir = "out";
};

// Parses and validates a config document. Errors carry the offending field
// path ("cost.Q", "initial_states[2]", ...) and map to exit code 4.
RunConfig parse_config(const std::string& json_text);

// Reads the file and delegates to parse_config. raw_out, when non-null,
// receives the file bytes (the manifest hashes them).
RunConfig load_config(const std::string& path, std::string* raw_out = nullptr);

}  // namespace turnpike
