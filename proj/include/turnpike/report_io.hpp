#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "turnpike/feasibility.hpp"
#include "turnpike/finite_horizon.hpp"
#include "turnpike/kalman.hpp"
#include "turnpike/steady_pair.hpp"
#include "turnpike/turnpike_analysis.hpp"

namespace turnpike {

inline constexpr const char* kToolVersion = "0.1.0";

nlohmann::json to_json(const Eigen::MatrixXd& M);  // nested row-major arrays
nlohmann::json to_json(const Eigen::VectorXd& v);

nlohmann::json describe(const KalmanDecomposition& dec);
nlohmann::json describe(const FeasibilitySpaces& spaces, const FeasibilityCertificate& cert);
nlohmann::json describe(const SteadyPair& sp);
nlohmann::json describe(const EnvelopeFit& fit);
nlohmann::json describe(const HorizonRecord& rec);
nlohmann::json describe(const SweepResult& sweep);

// Columns t, x_1..x_n, u_1..u_m, psi_1..psi_n; header row; 17 significant
// digits so a round trip through the file is exact.
std::string trajectory_csv(const Trajectory& traj);

std::string horizon_label(double T);  // "%g", used in trajectory file names

std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

// Collects everything one run writes so the manifest can list it. All writes
// go through here; file contents depend only on the data passed in, which is
// what makes reruns byte-identical.
class RunDirectory {
 public:
  explicit RunDirectory(std::string dir);  // creates the directory if needed

  void write_json(const std::string& name, const nlohmann::json& j);
  void write_text(const std::string& name, const std::string& content);
  // Written last; lists the files above plus itself, the config hash, the
  // tool version, and the exit code the run finished with.
  void write_manifest(const std::string& command, const std::string& config_hash, int exit_code);

  const std::vector<std::string>& files() const { return files_; }
  const std::string& dir() const { return dir_; }

 private:
  std::string dir_;
  std::vector<std::string> files_;
};

}  // namespace turnpike
