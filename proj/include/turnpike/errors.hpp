#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace turnpike {

// Exit codes surfaced by the CLI; library exceptions carry the one they map to.
enum class ExitCode : int {
  Ok = 0,
  Internal = 1,
  Assumption = 2,
  Solver = 3,
  Config = 4,
};

class Error : public std::runtime_error {
 public:
  Error(std::string msg, ExitCode code) : std::runtime_error(std::move(msg)), code_(code) {}
  ExitCode exit_code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

struct ConfigError : Error {
  explicit ConfigError(std::string msg) : Error(std::move(msg), ExitCode::Config) {}
};

// Structural prerequisites violated: the offset equation has no solution, or no
// supplied initial state passes certification.
struct AssumptionError : Error {
  explicit AssumptionError(std::string msg) : Error(std::move(msg), ExitCode::Assumption) {}
};

struct SolverError : Error {
  explicit SolverError(std::string msg) : Error(std::move(msg), ExitCode::Solver) {}
};

struct InternalError : Error {
  explicit InternalError(std::string msg) : Error(std::move(msg), ExitCode::Internal) {}
};

}  // namespace turnpike
