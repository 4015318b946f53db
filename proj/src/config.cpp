#include "turnpike/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "turnpike/errors.hpp"

namespace turnpike {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config: " + path + " " + what);
}

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const json& require(const json& obj, const char* key, const std::string& path) {
  const json* p = find(obj, key);
  if (!p) fail(path + "." + key, "is required");
  return *p;
}

void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "must be an object");
}

// Typo safety: an unrecognized key is an error, not a silent no-op.
void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                    const std::string& path) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* a : allowed) known = known || it.key() == a;
    if (!known) fail(path + "." + it.key(), "is not a recognized key");
  }
}

double parse_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "must be finite");
  return v;
}

int parse_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "must be an integer");
  return j.get<int>();
}

Eigen::VectorXd parse_vector(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "must be an array of numbers");
  Eigen::VectorXd v(static_cast<int>(j.size()));
  for (int i = 0; i < v.size(); ++i)
    v(i) = parse_number(j[static_cast<std::size_t>(i)], path + "[" + std::to_string(i) + "]");
  return v;
}

Eigen::MatrixXd parse_matrix(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "must be an array of row arrays");
  const int rows = static_cast<int>(j.size());
  int cols = -1;
  Eigen::MatrixXd M;
  for (int i = 0; i < rows; ++i) {
    const Eigen::VectorXd row = parse_vector(j[static_cast<std::size_t>(i)],
                                             path + "[" + std::to_string(i) + "]");
    if (cols < 0) {
      cols = static_cast<int>(row.size());
      M.resize(rows, cols);
    } else if (row.size() != cols) {
      fail(path, "rows have inconsistent lengths");
    }
    M.row(i) = row.transpose();
  }
  if (rows == 0) M.resize(0, 0);
  return M;
}

double number_or(const json& obj, const char* key, const std::string& path, double fallback) {
  const json* p = find(obj, key);
  return p ? parse_number(*p, path + "." + key) : fallback;
}

std::unique_ptr<StageCost> parse_cost(const json& j, int n, int m) {
  expect_object(j, "cost");
  reject_unknown(j,
                 {"family", "Q", "S", "R", "q", "r", "c0", "declared_modulus", "alpha", "beta"},
                 "cost");

  std::string family = "quadratic";
  if (const json* f = find(j, "family")) {
    if (!f->is_string()) fail("cost.family", "must be a string");
    family = f->get<std::string>();
  }
  if (family != "quadratic" && family != "perturbed_quadratic")
    fail("cost.family", "must be \"quadratic\" or \"perturbed_quadratic\"");

  Eigen::MatrixXd Q = parse_matrix(require(j, "Q", "cost"), "cost.Q");
  Eigen::MatrixXd R = parse_matrix(require(j, "R", "cost"), "cost.R");
  Eigen::MatrixXd S = find(j, "S") ? parse_matrix(*find(j, "S"), "cost.S")
                                   : Eigen::MatrixXd::Zero(n, m);
  Eigen::VectorXd q = find(j, "q") ? parse_vector(*find(j, "q"), "cost.q")
                                   : Eigen::VectorXd::Zero(n);
  Eigen::VectorXd r = find(j, "r") ? parse_vector(*find(j, "r"), "cost.r")
                                   : Eigen::VectorXd::Zero(m);
  const double c0 = number_or(j, "c0", "cost", 0.0);

  if (Q.rows() != n || Q.cols() != n) fail("cost.Q", "must be " + std::to_string(n) + "x" + std::to_string(n));
  if (R.rows() != m || R.cols() != m) fail("cost.R", "must be " + std::to_string(m) + "x" + std::to_string(m));
  if (S.rows() != n || S.cols() != m) fail("cost.S", "must be " + std::to_string(n) + "x" + std::to_string(m));
  if (q.size() != n) fail("cost.q", "must have length " + std::to_string(n));
  if (r.size() != m) fail("cost.r", "must have length " + std::to_string(m));

  std::optional<double> declared;
  if (const json* d = find(j, "declared_modulus"))
    declared = parse_number(*d, "cost.declared_modulus");

  QuadraticCost base(std::move(Q), std::move(S), std::move(R), std::move(q), std::move(r), c0,
                     declared);
  if (family == "quadratic") {
    if (find(j, "alpha") || find(j, "beta"))
      fail("cost.alpha", "only applies to family \"perturbed_quadratic\"");
    return std::make_unique<QuadraticCost>(std::move(base));
  }

  Eigen::VectorXd alpha = find(j, "alpha") ? parse_vector(*find(j, "alpha"), "cost.alpha")
                                           : Eigen::VectorXd::Zero(n);
  Eigen::VectorXd beta = find(j, "beta") ? parse_vector(*find(j, "beta"), "cost.beta")
                                         : Eigen::VectorXd::Zero(m);
  if (alpha.size() != n) fail("cost.alpha", "must have length " + std::to_string(n));
  if (beta.size() != m) fail("cost.beta", "must have length " + std::to_string(m));
  if (alpha.size() > 0 && alpha.minCoeff() < 0.0) fail("cost.alpha", "must be nonnegative");
  if (beta.size() > 0 && beta.minCoeff() < 0.0) fail("cost.beta", "must be nonnegative");
  return std::make_unique<PerturbedQuadraticCost>(std::move(base), std::move(alpha),
                                                  std::move(beta));
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    // The library message already carries line/column information.
    throw ConfigError(std::string("config: ") + e.what());
  }
  expect_object(j, "config");
  reject_unknown(j,
                 {"system", "cost", "initial_states", "horizons", "discretization", "tolerances",
                  "seed", "output_dir"},
                 "config");

  RunConfig cfg;
  cfg.envelope.floor = 1e-9;  // report-level floor; exit sides of stabilized runs sit at noise

  const json& jsys = require(j, "system", "config");
  expect_object(jsys, "system");
  reject_unknown(jsys, {"A", "B", "b"}, "system");
  Eigen::MatrixXd A = parse_matrix(require(jsys, "A", "system"), "system.A");
  Eigen::MatrixXd B = parse_matrix(require(jsys, "B", "system"), "system.B");
  if (A.rows() == 0) fail("system.A", "must be non-empty");
  if (A.rows() != A.cols()) fail("system.A", "must be square");
  if (B.rows() != A.rows()) fail("system.B", "must have as many rows as system.A");
  if (B.cols() == 0) fail("system.B", "must have at least one column");
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(B.cols());
  Eigen::VectorXd b = find(jsys, "b") ? parse_vector(*find(jsys, "b"), "system.b")
                                      : Eigen::VectorXd::Zero(n);
  if (b.size() != n) fail("system.b", "must have length " + std::to_string(n));
  cfg.system = LinearSystem::make(std::move(A), std::move(B), std::move(b));

  cfg.cost = parse_cost(require(j, "cost", "config"), n, m);

  const json& jx0 = require(j, "initial_states", "config");
  if (!jx0.is_array() || jx0.empty()) fail("initial_states", "must be a non-empty array of vectors");
  for (std::size_t i = 0; i < jx0.size(); ++i) {
    const std::string path = "initial_states[" + std::to_string(i) + "]";
    Eigen::VectorXd x = parse_vector(jx0[i], path);
    if (x.size() != n) fail(path, "must have length " + std::to_string(n));
    cfg.initial_states.push_back(std::move(x));
  }

  if (const json* jT = find(j, "horizons")) {
    if (!jT->is_array()) fail("horizons", "must be an array of positive numbers");
    for (std::size_t i = 0; i < jT->size(); ++i) {
      const std::string path = "horizons[" + std::to_string(i) + "]";
      const double T = parse_number((*jT)[i], path);
      if (T <= 0.0) fail(path, "must be positive");
      cfg.horizons.push_back(T);
    }
    std::sort(cfg.horizons.begin(), cfg.horizons.end());
  }

  if (const json* jd = find(j, "discretization")) {
    expect_object(*jd, "discretization");
    reject_unknown(*jd, {"N_per_unit", "newton_tol", "max_iter"}, "discretization");
    if (const json* p = find(*jd, "N_per_unit")) {
      cfg.N_per_unit = parse_int(*p, "discretization.N_per_unit");
      if (cfg.N_per_unit < 2) fail("discretization.N_per_unit", "must be at least 2");
    }
    if (const json* p = find(*jd, "newton_tol")) {
      cfg.newton.tol = parse_number(*p, "discretization.newton_tol");
      if (cfg.newton.tol <= 0.0) fail("discretization.newton_tol", "must be positive");
    }
    if (const json* p = find(*jd, "max_iter")) {
      cfg.newton.max_iter = parse_int(*p, "discretization.max_iter");
      if (cfg.newton.max_iter < 1) fail("discretization.max_iter", "must be at least 1");
    }
  }

  if (const json* jt = find(j, "tolerances")) {
    expect_object(*jt, "tolerances");
    reject_unknown(*jt,
                   {"rank_tol", "stab_tol", "tol_feas", "tol_kkt", "tol_offset", "kernel_tol",
                    "envelope_floor", "envelope_window_frac", "envelope_min_nodes", "min_rate",
                    "min_r2"},
                   "tolerances");
    cfg.rank_tol = number_or(*jt, "rank_tol", "tolerances", cfg.rank_tol);
    cfg.feasibility.stability = number_or(*jt, "stab_tol", "tolerances", cfg.feasibility.stability);
    cfg.feasibility.membership = number_or(*jt, "tol_feas", "tolerances", cfg.feasibility.membership);
    cfg.feasibility.offset = number_or(*jt, "tol_offset", "tolerances", cfg.feasibility.offset);
    cfg.feasibility.kernel = number_or(*jt, "kernel_tol", "tolerances", cfg.feasibility.kernel);
    cfg.kkt_tol = number_or(*jt, "tol_kkt", "tolerances", cfg.kkt_tol);
    cfg.envelope.floor = number_or(*jt, "envelope_floor", "tolerances", cfg.envelope.floor);
    cfg.envelope.window_frac =
        number_or(*jt, "envelope_window_frac", "tolerances", cfg.envelope.window_frac);
    if (const json* p = find(*jt, "envelope_min_nodes"))
      cfg.envelope.min_nodes = parse_int(*p, "tolerances.envelope_min_nodes");
    cfg.min_rate = number_or(*jt, "min_rate", "tolerances", cfg.min_rate);
    cfg.min_r2 = number_or(*jt, "min_r2", "tolerances", cfg.min_r2);
    for (double v : {cfg.feasibility.stability, cfg.feasibility.membership, cfg.feasibility.offset,
                     cfg.kkt_tol, cfg.envelope.floor})
      if (v <= 0.0) fail("tolerances", "thresholds must be positive");
    if (cfg.envelope.window_frac <= 0.0 || cfg.envelope.window_frac >= 0.5)
      fail("tolerances.envelope_window_frac", "must lie in (0, 0.5)");
    if (cfg.envelope.min_nodes < 2) fail("tolerances.envelope_min_nodes", "must be at least 2");
  }

  if (const json* p = find(j, "seed")) {
    if (!p->is_number_unsigned() && !(p->is_number_integer() && p->get<long long>() >= 0))
      fail("seed", "must be a nonnegative integer");
    cfg.seed = p->get<std::uint64_t>();
  }
  if (const json* p = find(j, "output_dir")) {
    if (!p->is_string() || p->get<std::string>().empty())
      fail("output_dir", "must be a non-empty string");
    cfg.output_dir = p->get<std::string>();
  }

  return cfg;
}

RunConfig load_config(const std::string& path, std::string* raw_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string raw = buf.str();
  RunConfig cfg = parse_config(raw);
  if (raw_out) *raw_out = std::move(raw);
  return cfg;
}

}  // namespace turnpike
