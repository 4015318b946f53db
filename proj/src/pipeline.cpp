#include "turnpike/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>

#include <json.hpp>

#include "turnpike/feasibility.hpp"
#include "turnpike/finite_horizon.hpp"
#include "turnpike/kalman.hpp"
#include "turnpike/report_io.hpp"
#include "turnpike/steady_pair.hpp"
#include "turnpike/turnpike_analysis.hpp"

namespace turnpike {
namespace {

using nlohmann::json;

std::string short_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

const char* error_kind(ExitCode code) {
  switch (code) {
    case ExitCode::Config: return "config";
    case ExitCode::Assumption: return "assumption";
    case ExitCode::Solver: return "solver";
    default: return "internal";
  }
}

class PipelineRun {
 public:
  explicit PipelineRun(const RunConfig& cfg) : cfg_(cfg), dir_(cfg.output_dir) {}

  ExitCode dispatch(const std::string& command) {
    if (command == "decompose") return cmd_decompose();
    if (command == "feasibility") return cmd_feasibility();
    if (command == "steady") return cmd_steady();
    if (command == "solve") return cmd_solve();
    if (command == "turnpike") return cmd_analysis(true);
    if (command == "sweep") return cmd_analysis(false);
    if (command == "validate") return cmd_validate();
    throw ConfigError("unknown subcommand: " + command);
  }

  RunDirectory& dir() { return dir_; }
  std::vector<std::string> take_log() { return std::move(log_); }

 private:
  // --- shared stages, each idempotent within one run -----------------------

  void decompose_stage() {
    dec_ = decompose(cfg_.system, cfg_.rank_tol);
    dir_.write_json("decomposition.json", describe(*dec_));
    log_.push_back("decomposition: controllable rank " + std::to_string(dec_->k) + " of " +
                   std::to_string(cfg_.system.n()));
  }

  void feasibility_stage() {
    spaces_ = build_feasibility_spaces(*dec_, cfg_.system, cfg_.feasibility);
    for (std::size_t i = 0; i < cfg_.initial_states.size(); ++i) {
      FeasibilityCertificate cert =
          certify(*spaces_, *dec_, cfg_.initial_states[i], cfg_.feasibility.membership);
      dir_.write_json("certificate_" + std::to_string(i) + ".json", describe(*spaces_, cert));
      log_.push_back("initial state " + std::to_string(i) + ": " +
                     verdict_name(cert.verdict) + " (residual " + short_num(cert.residual) + ")");
      certs_.push_back(std::move(cert));
    }
  }

  bool any_feasible() const {
    return std::any_of(certs_.begin(), certs_.end(),
                       [](const FeasibilityCertificate& c) { return c.feasible; });
  }

  // Called after all artifacts for the command are on disk, so a rejection
  // still leaves the certificates (and reports) available for inspection.
  void require_some_feasible() const {
    if (!any_feasible())
      throw AssumptionError("no supplied initial state certifies as feasible");
  }

  // Steady pair anchored at state i when feasible; otherwise the reference
  // pair obtained by projecting the state onto the feasible set (the analysis
  // for such a state is expected to refute the envelope, not to confirm it).
  SteadyPair steady_for(std::size_t i, bool* anchored) {
    const FeasibilityCertificate& cert = certs_[i];
    *anchored = cert.feasible;
    if (cert.feasible)
      return compute_steady(cfg_.system, *dec_, *cfg_.cost, *spaces_, cert, cfg_.newton,
                            cfg_.kkt_tol);
    const Eigen::VectorXd y2_ref = cert.q2 - spaces_->c;
    const ReducedSolution red =
        solve_reduced_kkt(cfg_.system, *dec_, *cfg_.cost, y2_ref, cfg_.newton);
    return assemble_steady(cfg_.system, *dec_, *cfg_.cost, *spaces_, y2_ref, red, cfg_.kkt_tol);
  }

  void write_steady(std::size_t i, const SteadyPair& sp, bool anchored) {
    json j = describe(sp);
    j["anchored"] = anchored;
    dir_.write_json("steady_" + std::to_string(i) + ".json", j);
    log_.push_back("steady pair " + std::to_string(i) + ": V* = " + short_num(sp.v_star) +
                   (anchored ? "" : " (projected reference; state is infeasible)"));
  }

  std::vector<double> require_horizons(const char* command) const {
    if (cfg_.horizons.empty())
      throw ConfigError(std::string("config: horizons is required for the ") + command +
                        " command");
    return cfg_.horizons;
  }

  SweepOptions sweep_options(bool keep_trajectories) const {
    SweepOptions o;
    o.N_per_unit = cfg_.N_per_unit;
    o.min_rate = cfg_.min_rate;
    o.min_r2 = cfg_.min_r2;
    o.envelope = cfg_.envelope;
    o.newton = cfg_.newton;
    o.keep_trajectories = keep_trajectories;
    return o;
  }

  // --- subcommands ---------------------------------------------------------

  ExitCode cmd_decompose() {
    decompose_stage();
    return ExitCode::Ok;
  }

  ExitCode cmd_feasibility() {
    decompose_stage();
    feasibility_stage();
    require_some_feasible();
    return ExitCode::Ok;
  }

  ExitCode cmd_steady() {
    decompose_stage();
    feasibility_stage();
    for (std::size_t i = 0; i < certs_.size(); ++i) {
      if (!certs_[i].feasible) continue;
      bool anchored = false;
      const SteadyPair sp = steady_for(i, &anchored);
      write_steady(i, sp, anchored);
    }
    require_some_feasible();
    return ExitCode::Ok;
  }

  ExitCode cmd_solve() {
    const std::vector<double> horizons = require_horizons("solve");
    decompose_stage();
    feasibility_stage();
    for (std::size_t i = 0; i < cfg_.initial_states.size(); ++i) {
      json solves = json::array();
      for (double T : horizons) {
        const int N = static_cast<int>(std::ceil(cfg_.N_per_unit * T));
        const Grid grid = Grid::make(T, N);
        const Trajectory traj = [&]() -> Trajectory {
          try {
            return solve_lc(cfg_.system, *cfg_.cost, cfg_.initial_states[i], grid, cfg_.newton);
          } catch (const SolverError& e) {
            throw SolverError("state " + std::to_string(i) + ", horizon T=" + horizon_label(T) +
                              ": " + e.what());
          }
        }();
        dir_.write_text("trajectory_" + std::to_string(i) + "_" + horizon_label(T) + ".csv",
                        trajectory_csv(traj));
        const PmpResidual pmp = pmp_residual(cfg_.system, *cfg_.cost, traj);
        solves.push_back({
            {"T", T},
            {"N", N},
            {"cost", traj.cost},
            {"newton_iters", traj.newton_iters},
            {"dynamics_residual", trapezoid_dynamics_residual(cfg_.system, traj)},
            {"adjoint_residual", pmp.adjoint},
            {"stationarity_residual", pmp.stationarity},
        });
        log_.push_back("state " + std::to_string(i) + ", T=" + horizon_label(T) +
                       ": cost " + short_num(traj.cost));
      }
      dir_.write_json("report_" + std::to_string(i) + ".json",
                      json{{"initial_state", to_json(cfg_.initial_states[i])},
                           {"certificate", describe(*spaces_, certs_[i])},
                           {"solves", std::move(solves)}});
    }
    return ExitCode::Ok;
  }

  ExitCode cmd_analysis(bool full) {
    const std::vector<double> horizons = require_horizons(full ? "turnpike" : "sweep");
    decompose_stage();
    feasibility_stage();
    for (std::size_t i = 0; i < cfg_.initial_states.size(); ++i) {
      bool anchored = false;
      const SteadyPair sp = steady_for(i, &anchored);
      write_steady(i, sp, anchored);

      const SweepResult sweep = value_gap_sweep(cfg_.system, *cfg_.cost, sp,
                                                cfg_.initial_states[i], horizons,
                                                sweep_options(full));

      json report{
          {"initial_state", to_json(cfg_.initial_states[i])},
          {"certificate", describe(*spaces_, certs_[i])},
          {"anchored", anchored},
          {"steady", describe(sp)},
          {"sweep", describe(sweep)},
          {"turnpike", anchored && sweep.confirmed ? "confirmed" : "not confirmed"},
      };

      if (full) {
        for (std::size_t t = 0; t < sweep.trajectories.size(); ++t)
          dir_.write_text("trajectory_" + std::to_string(i) + "_" +
                              horizon_label(sweep.records[t].T) + ".csv",
                          trajectory_csv(sweep.trajectories[t]));
        // Interior-window identity check on the longest horizon (an eighth
        // trimmed at each end keeps both boundary layers out of the window).
        const Trajectory& tr = sweep.trajectories.back();
        const int N = tr.grid.N;
        const int i1 = std::max(1, static_cast<int>(std::lround(0.125 * N)));
        const int i2 = N - i1;
        if (i1 < i2) {
          const double res =
              excess_cost_identity_residual(cfg_.system, *dec_, *cfg_.cost, sp, tr, i1, i2);
          report["identity"] = json{{"i1", i1},
                                    {"i2", i2},
                                    {"t1", tr.grid.node(i1)},
                                    {"t2", tr.grid.node(i2)},
                                    {"residual", res}};
        }
      }

      dir_.write_json("report_" + std::to_string(i) + ".json", report);
      log_.push_back("state " + std::to_string(i) + ": turnpike " +
                     (anchored && sweep.confirmed ? "confirmed" : "not confirmed"));
    }
    require_some_feasible();
    return ExitCode::Ok;
  }

  ExitCode cmd_validate() {
    decompose_stage();
    feasibility_stage();
    const int n = cfg_.system.n(), m = cfg_.system.m();
    bool all_hold = true;
    json v;

    {
      const Eigen::VectorXd lo_x = Eigen::VectorXd::Constant(n, -3.0);
      const Eigen::VectorXd hi_x = Eigen::VectorXd::Constant(n, 3.0);
      const Eigen::VectorXd lo_u = Eigen::VectorXd::Constant(m, -3.0);
      const Eigen::VectorXd hi_u = Eigen::VectorXd::Constant(m, 3.0);
      const PredicateCheck convex =
          check_strong_convexity(*cfg_.cost, lo_x, hi_x, lo_u, hi_u, 200, cfg_.seed);
      const PredicateCheck cross = check_cross_gain(*cfg_.cost, 3.0, 3.0, 200, cfg_.seed + 1);
      v["strong_convexity"] = {{"holds", convex.holds}, {"observed", convex.observed}};
      v["cross_gain"] = {{"holds", cross.holds}, {"observed", cross.observed}};
      all_hold = all_hold && convex.holds && cross.holds;
      log_.push_back(std::string("strong convexity: ") + (convex.holds ? "holds" : "FAILS") +
                     " (smallest sampled eigenvalue " + short_num(convex.observed) + ")");
      log_.push_back(std::string("cross gain bound: ") + (cross.holds ? "holds" : "FAILS") +
                     " (largest sampled ratio " + short_num(cross.observed) + ")");
    }

    {
      Eigen::MatrixXd P(n, n);
      P.leftCols(dec_->k) = dec_->P1;
      P.rightCols(n - dec_->k) = dec_->P2;
      const double ortho =
          (P.transpose() * P - Eigen::MatrixXd::Identity(n, n)).lpNorm<Eigen::Infinity>();
      const double scale = 1.0 + cfg_.system.A.norm() + cfg_.system.B.norm();
      const double lower = (dec_->P2.transpose() * cfg_.system.A * dec_->P1).norm() / scale;
      const double bu = (dec_->P2.transpose() * cfg_.system.B).norm() / scale;
      const bool controllable = hautus_controllable(dec_->A11, dec_->B1);
      const bool holds = ortho <= 1e-12 && lower <= 1e-10 && bu <= 1e-10 && controllable;
      v["decomposition"] = {{"holds", holds},
                            {"orthonormality_error", ortho},
                            {"lower_block", lower},
                            {"uncontrollable_input_block", bu},
                            {"controllable_pair", controllable}};
      all_hold = all_hold && holds;
      log_.push_back(std::string("decomposition invariants: ") + (holds ? "hold" : "FAIL"));
    }

    v["offset_residual"] = spaces_->offset_residual;
    v["feasible_states"] = static_cast<int>(
        std::count_if(certs_.begin(), certs_.end(),
                      [](const FeasibilityCertificate& c) { return c.feasible; }));

    const auto* quad = dynamic_cast<const QuadraticCost*>(cfg_.cost.get());
    std::size_t first_feasible = certs_.size();
    for (std::size_t i = 0; i < certs_.size(); ++i)
      if (certs_[i].feasible) {
        first_feasible = i;
        break;
      }

    if (quad && first_feasible < certs_.size()) {
      const FeasibilityCertificate& cert = certs_[first_feasible];
      const SteadyPair sp =
          compute_steady(cfg_.system, *dec_, *cfg_.cost, *spaces_, cert, cfg_.newton, cfg_.kkt_tol);
      const SaddlePoint oracle =
          qp_oracle_steady(cfg_.system, *dec_, *quad, steady_y2(cert, *spaces_));
      const double denom = 1.0 + oracle.x.norm() + oracle.u.norm();
      const double rel =
          ((sp.x_star - oracle.x).norm() + (sp.u_star - oracle.u).norm()) / denom;
      const bool holds = rel <= 1e-7 && sp.kkt_residual <= cfg_.kkt_tol;
      v["steady_oracle"] = {{"holds", holds},
                           {"relative_discrepancy", rel},
                           {"kkt_residual", sp.kkt_residual},
                           {"initial_state", static_cast<int>(first_feasible)}};
      all_hold = all_hold && holds;
      log_.push_back(std::string("steady pair vs saddle oracle: ") +
                     (holds ? "agree" : "DISAGREE") + " (rel " + short_num(rel) + ")");

      const double T = cfg_.horizons.empty() ? 5.0 : cfg_.horizons.front();
      const int N = static_cast<int>(std::ceil(cfg_.N_per_unit * T));
      const Grid grid = Grid::make(T, N);
      const Eigen::VectorXd& x0 = cfg_.initial_states[first_feasible];
      const Trajectory traj = solve_lc(cfg_.system, *cfg_.cost, x0, grid, cfg_.newton);
      const RiccatiSolution ric = riccati_lq_oracle(cfg_.system, *quad, x0, grid);
      double sup = 0.0;
      for (int k = 0; k <= N; ++k)
        sup = std::max(sup, (traj.x.col(k) - ric.trajectory.x.col(k)).norm());
      const double cost_rel =
          std::abs(traj.cost - ric.trajectory.cost) / (1.0 + std::abs(traj.cost));
      const bool holds_ric = sup <= 1e-3 && cost_rel <= 1e-4;
      v["riccati_oracle"] = {{"holds", holds_ric},
                            {"T", T},
                            {"sup_state_discrepancy", sup},
                            {"relative_cost_discrepancy", cost_rel}};
      all_hold = all_hold && holds_ric;
      log_.push_back(std::string("transcription vs sweep oracle: ") +
                     (holds_ric ? "agree" : "DISAGREE") + " (sup " + short_num(sup) + ")");
    }

    v["all_hold"] = all_hold;
    dir_.write_json("validation.json", v);
    if (!all_hold) throw AssumptionError("validation reports failed checks (see validation.json)");
    require_some_feasible();
    return ExitCode::Ok;
  }

  const RunConfig& cfg_;
  RunDirectory dir_;
  std::vector<std::string> log_;
  std::optional<KalmanDecomposition> dec_;
  std::optional<FeasibilitySpaces> spaces_;
  std::vector<FeasibilityCertificate> certs_;
};

}  // namespace

PipelineOutcome run_pipeline(const std::string& command, const RunConfig& cfg,
                             const std::string& config_bytes) {
  PipelineOutcome out;
  const std::string hash = hex64(fnv1a64(config_bytes));
  std::optional<PipelineRun> run;
  try {
    run.emplace(cfg);
    const ExitCode code = run->dispatch(command);
    run->dir().write_manifest(command, hash, static_cast<int>(code));
    out.code = code;
  } catch (const Error& e) {
    out.code = e.exit_code();
    out.message = e.what();
  } catch (const std::exception& e) {
    out.code = ExitCode::Internal;
    out.message = e.what();
  }
  if (run) {
    if (!out.message.empty()) {
      try {
        run->dir().write_json("error.json", nlohmann::json{
                                                {"error", error_kind(out.code)},
                                                {"message", out.message},
                                                {"exit_code", static_cast<int>(out.code)},
                                            });
        run->dir().write_manifest(command, hash, static_cast<int>(out.code));
      } catch (const std::exception&) {
        // Reporting the original failure matters more than the artifacts.
      }
    }
    out.log_lines = run->take_log();
    out.files = run->dir().files();
  }
  return out;
}

int run_cli(const std::string& command, const std::string& config_path,
            const std::string& output_override, const std::string& seed_override) {
  RunConfig cfg;
  std::string raw;
  try {
    cfg = load_config(config_path, &raw);
    if (!output_override.empty()) cfg.output_dir = output_override;
    if (!seed_override.empty()) {
      std::size_t pos = 0;
      unsigned long long parsed = 0;
      try {
        parsed = std::stoull(seed_override, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != seed_override.size())
        throw ConfigError("--seed must be a nonnegative integer");
      cfg.seed = parsed;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (!output_override.empty()) {
      // Best effort: the run directory is only known when --output was given.
      try {
        RunDirectory dir(output_override);
        dir.write_json("error.json", nlohmann::json{
                                         {"error", error_kind(e.exit_code())},
                                         {"message", std::string(e.what())},
                                         {"exit_code", static_cast<int>(e.exit_code())},
                                     });
      } catch (const std::exception&) {
      }
    }
    return static_cast<int>(e.exit_code());
  }

  const PipelineOutcome out = run_pipeline(command, cfg, raw);
  for (const std::string& line : out.log_lines) std::cout << line << "\n";
  if (!out.message.empty()) std::cerr << "error: " << out.message << "\n";
  return static_cast<int>(out.code);
}

}  // namespace turnpike
