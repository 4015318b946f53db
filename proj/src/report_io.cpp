#include "turnpike/report_io.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "turnpike/errors.hpp"

namespace turnpike {
namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

nlohmann::json to_json(const Eigen::MatrixXd& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

nlohmann::json describe(const KalmanDecomposition& dec) {
  return {
      {"k", dec.k},
      {"n", static_cast<int>(dec.P1.rows())},
      {"singular_values", to_json(dec.singular_values)},
      {"rank_tol", dec.rank_tol},
      {"rank_margin_thin", dec.rank_margin_thin},
      {"controllable", hautus_controllable(dec.A11, dec.B1)},
      {"P1", to_json(dec.P1)},
      {"P2", to_json(dec.P2)},
      {"A11", to_json(dec.A11)},
      {"A12", to_json(dec.A12)},
      {"A22", to_json(dec.A22)},
      {"B1", to_json(dec.B1)},
  };
}

nlohmann::json describe(const FeasibilitySpaces& spaces, const FeasibilityCertificate& cert) {
  return {
      {"feasible", cert.feasible},
      {"verdict", verdict_name(cert.verdict)},
      {"residual", cert.residual},
      {"d1", spaces.d1()},
      {"d2", spaces.d2()},
      {"w", to_json(cert.w)},
      {"q1", to_json(cert.q1)},
      {"q2", to_json(cert.q2)},
      {"marginal_spectrum_flag", cert.marginal_spectrum},
      {"offset", to_json(spaces.c)},
      {"offset_residual", spaces.offset_residual},
  };
}

nlohmann::json describe(const SteadyPair& sp) {
  return {
      {"x_star", to_json(sp.x_star)},
      {"u_star", to_json(sp.u_star)},
      {"lambda1", to_json(sp.lambda1)},
      {"lambda2", to_json(sp.lambda2)},
      {"v_star", sp.v_star},
      {"kkt_residual", sp.kkt_residual},
      {"newton_iters", sp.newton_iters},
  };
}

nlohmann::json describe(const EnvelopeFit& fit) {
  return {
      {"rate", fit.rate},
      {"amplitude", fit.amplitude},
      {"r2", fit.r2},
      {"entry_slope", fit.entry_slope},
      {"exit_slope", fit.exit_slope},
      {"entry_nodes", fit.entry_nodes},
      {"exit_nodes", fit.exit_nodes},
  };
}

nlohmann::json describe(const HorizonRecord& rec) {
  return {
      {"T", rec.T},
      {"N", rec.N},
      {"value", rec.value},
      {"gap", rec.gap},
      {"mid_state_dev", rec.mid_state_dev},
      {"mid_control_dev", rec.mid_control_dev},
      {"integral_metric", rec.integral_metric},
      {"fit", describe(rec.fit)},
      {"passes", rec.passes},
  };
}

nlohmann::json describe(const SweepResult& sweep) {
  nlohmann::json records = nlohmann::json::array();
  for (const HorizonRecord& rec : sweep.records) records.push_back(describe(rec));
  double gap_lo = 0.0, gap_hi = 0.0;
  if (!sweep.records.empty()) {
    gap_lo = gap_hi = sweep.records.front().gap;
    for (const HorizonRecord& rec : sweep.records) {
      gap_lo = std::min(gap_lo, rec.gap);
      gap_hi = std::max(gap_hi, rec.gap);
    }
  }
  return {
      {"records", std::move(records)},
      {"value_slope", sweep.value_slope},
      {"gap_spread", gap_hi - gap_lo},
      {"confirmed", sweep.confirmed},
      {"verdict", sweep.confirmed ? "confirmed" : "not confirmed"},
  };
}

std::string trajectory_csv(const Trajectory& traj) {
  const int n = static_cast<int>(traj.x.rows());
  const int m = static_cast<int>(traj.u.rows());
  std::string out;
  out.reserve(static_cast<std::size_t>(traj.grid.N + 2) * (1 + n + m + n) * 26);
  out += "t";
  for (int i = 1; i <= n; ++i) out += ",x_" + std::to_string(i);
  for (int i = 1; i <= m; ++i) out += ",u_" + std::to_string(i);
  for (int i = 1; i <= n; ++i) out += ",psi_" + std::to_string(i);
  out += "\n";
  for (int i = 0; i <= traj.grid.N; ++i) {
    out += fmt17(traj.grid.node(i));
    for (int j = 0; j < n; ++j) out += "," + fmt17(traj.x(j, i));
    for (int j = 0; j < m; ++j) out += "," + fmt17(traj.u(j, i));
    for (int j = 0; j < n; ++j) out += "," + fmt17(traj.psi(j, i));
    out += "\n";
  }
  return out;
}

std::string horizon_label(double T) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", T);
  return buf;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

RunDirectory::RunDirectory(std::string dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir_ + ": " + ec.message());
}

void RunDirectory::write_text(const std::string& name, const std::string& content) {
  const std::string path = dir_ + "/" + name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path);
  out << content;
  out.close();
  if (!out) throw ConfigError("write failed for " + path);
  files_.push_back(name);
}

void RunDirectory::write_json(const std::string& name, const nlohmann::json& j) {
  write_text(name, j.dump(2) + "\n");
}

void RunDirectory::write_manifest(const std::string& command, const std::string& config_hash,
                                  int exit_code) {
  std::vector<std::string> listed = files_;
  listed.push_back("manifest.json");
  std::sort(listed.begin(), listed.end());
  nlohmann::json j{
      {"version", kToolVersion},
      {"command", command},
      {"config_fnv1a64", config_hash},
      {"exit_code", exit_code},
      {"files", listed},
  };
  write_json("manifest.json", j);
}

}  // namespace turnpike
