#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "turnpike/config.hpp"
#include "turnpike/errors.hpp"
#include "turnpike/feasibility.hpp"
#include "turnpike/finite_horizon.hpp"
#include "turnpike/kalman.hpp"
#include "turnpike/pipeline.hpp"
#include "turnpike/report_io.hpp"
#include "turnpike/stage_cost.hpp"
#include "turnpike/steady_pair.hpp"
#include "turnpike/turnpike_analysis.hpp"

namespace py = pybind11;
using namespace turnpike;

PYBIND11_MODULE(_turnpike, m) {
  m.doc() = "Partial exponential turnpike analysis for linear-convex optimal control";
  m.attr("__version__") = kToolVersion;

  // Derived registrations come after the base so they take precedence.
  py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<AssumptionError>(m, "AssumptionError");
  py::register_exception<SolverError>(m, "SolverError");
  py::register_exception<InternalError>(m, "InternalError");

  py::class_<LinearSystem>(m, "LinearSystem")
      .def(py::init(&LinearSystem::make), py::arg("A"), py::arg("B"), py::arg("b"))
      .def_readonly("A", &LinearSystem::A)
      .def_readonly("B", &LinearSystem::B)
      .def_readonly("b", &LinearSystem::b)
      .def_property_readonly("n", &LinearSystem::n)
      .def_property_readonly("m", &LinearSystem::m);

  py::class_<StageCost>(m, "StageCost")
      .def("eval", &StageCost::eval, py::arg("x"), py::arg("u"))
      .def("grad", &StageCost::grad, py::arg("x"), py::arg("u"))
      .def("hess", &StageCost::hess, py::arg("x"), py::arg("u"))
      .def_property_readonly("state_dim", &StageCost::state_dim)
      .def_property_readonly("control_dim", &StageCost::control_dim)
      .def_property_readonly("convexity_modulus", &StageCost::convexity_modulus);

  py::class_<QuadraticCost, StageCost>(m, "QuadraticCost")
      .def(py::init<Eigen::MatrixXd, Eigen::MatrixXd, Eigen::MatrixXd, Eigen::VectorXd,
                    Eigen::VectorXd, double, std::optional<double>>(),
           py::arg("Q"), py::arg("S"), py::arg("R"), py::arg("q"), py::arg("r"),
           py::arg("c0") = 0.0, py::arg("declared_modulus") = py::none());

  py::class_<PerturbedQuadraticCost, StageCost>(m, "PerturbedQuadraticCost")
      .def(py::init<QuadraticCost, Eigen::VectorXd, Eigen::VectorXd>(), py::arg("base"),
           py::arg("alpha"), py::arg("beta"));

  py::class_<KalmanDecomposition>(m, "KalmanDecomposition")
      .def_readonly("P1", &KalmanDecomposition::P1)
      .def_readonly("P2", &KalmanDecomposition::P2)
      .def_readonly("A11", &KalmanDecomposition::A11)
      .def_readonly("A12", &KalmanDecomposition::A12)
      .def_readonly("A22", &KalmanDecomposition::A22)
      .def_readonly("B1", &KalmanDecomposition::B1)
      .def_readonly("k", &KalmanDecomposition::k)
      .def_readonly("singular_values", &KalmanDecomposition::singular_values);

  py::class_<FeasibilitySpaces>(m, "FeasibilitySpaces")
      .def_readonly("c", &FeasibilitySpaces::c)
      .def_readonly("V1", &FeasibilitySpaces::V1)
      .def_readonly("V2", &FeasibilitySpaces::V2)
      .def_readonly("offset_residual", &FeasibilitySpaces::offset_residual)
      .def_property_readonly("d1", &FeasibilitySpaces::d1)
      .def_property_readonly("d2", &FeasibilitySpaces::d2);

  py::class_<FeasibilityCertificate>(m, "FeasibilityCertificate")
      .def_readonly("feasible", &FeasibilityCertificate::feasible)
      .def_readonly("w", &FeasibilityCertificate::w)
      .def_readonly("q1", &FeasibilityCertificate::q1)
      .def_readonly("q2", &FeasibilityCertificate::q2)
      .def_readonly("residual", &FeasibilityCertificate::residual)
      .def_property_readonly(
          "verdict", [](const FeasibilityCertificate& c) { return verdict_name(c.verdict); });

  py::class_<SteadyPair>(m, "SteadyPair")
      .def_readonly("x_star", &SteadyPair::x_star)
      .def_readonly("u_star", &SteadyPair::u_star)
      .def_readonly("lambda1", &SteadyPair::lambda1)
      .def_readonly("lambda2", &SteadyPair::lambda2)
      .def_readonly("v_star", &SteadyPair::v_star)
      .def_readonly("kkt_residual", &SteadyPair::kkt_residual)
      .def_readonly("newton_iters", &SteadyPair::newton_iters);

  py::class_<Grid>(m, "Grid")
      .def(py::init(&Grid::make), py::arg("T"), py::arg("N"))
      .def_readonly("T", &Grid::T)
      .def_readonly("N", &Grid::N)
      .def("h", &Grid::h)
      .def("node", &Grid::node, py::arg("i"));

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("grid", &Trajectory::grid)
      .def_readonly("x", &Trajectory::x)
      .def_readonly("u", &Trajectory::u)
      .def_readonly("psi", &Trajectory::psi)
      .def_readonly("cost", &Trajectory::cost)
      .def_readonly("newton_iters", &Trajectory::newton_iters);

  py::class_<PmpResidual>(m, "PmpResidual")
      .def_readonly("adjoint", &PmpResidual::adjoint)
      .def_readonly("stationarity", &PmpResidual::stationarity);

  py::class_<DeviationSeries>(m, "DeviationSeries")
      .def_readonly("t", &DeviationSeries::t)
      .def_readonly("state", &DeviationSeries::state)
      .def_readonly("control", &DeviationSeries::control)
      .def_readonly("combined", &DeviationSeries::combined);

  py::class_<EnvelopeFit>(m, "EnvelopeFit")
      .def_readonly("rate", &EnvelopeFit::rate)
      .def_readonly("amplitude", &EnvelopeFit::amplitude)
      .def_readonly("r2", &EnvelopeFit::r2)
      .def_readonly("entry_nodes", &EnvelopeFit::entry_nodes)
      .def_readonly("exit_nodes", &EnvelopeFit::exit_nodes);

  py::class_<HorizonRecord>(m, "HorizonRecord")
      .def_readonly("T", &HorizonRecord::T)
      .def_readonly("N", &HorizonRecord::N)
      .def_readonly("value", &HorizonRecord::value)
      .def_readonly("gap", &HorizonRecord::gap)
      .def_readonly("mid_state_dev", &HorizonRecord::mid_state_dev)
      .def_readonly("mid_control_dev", &HorizonRecord::mid_control_dev)
      .def_readonly("integral_metric", &HorizonRecord::integral_metric)
      .def_readonly("fit", &HorizonRecord::fit)
      .def_readonly("passes", &HorizonRecord::passes);

  py::class_<SweepResult>(m, "SweepResult")
      .def_readonly("records", &SweepResult::records)
      .def_readonly("value_slope", &SweepResult::value_slope)
      .def_readonly("confirmed", &SweepResult::confirmed);

  m.def("decompose", &decompose, py::arg("system"), py::arg("rank_tol") = 0.0);
  m.def("hautus_controllable", &hautus_controllable, py::arg("A11"), py::arg("B1"),
        py::arg("tol") = 1e-8);
  m.def(
      "build_feasibility_spaces",
      [](const KalmanDecomposition& dec, const LinearSystem& sys) {
        return build_feasibility_spaces(dec, sys);
      },
      py::arg("decomposition"), py::arg("system"));
  m.def(
      "certify",
      [](const FeasibilitySpaces& spaces, const KalmanDecomposition& dec, const Eigen::VectorXd& x,
         double tol) { return certify(spaces, dec, x, tol); },
      py::arg("spaces"), py::arg("decomposition"), py::arg("x"), py::arg("tol") = 1e-8);
  m.def(
      "compute_steady",
      [](const LinearSystem& sys, const KalmanDecomposition& dec, const StageCost& cost,
         const FeasibilitySpaces& spaces, const FeasibilityCertificate& cert) {
        return compute_steady(sys, dec, cost, spaces, cert);
      },
      py::arg("system"), py::arg("decomposition"), py::arg("cost"), py::arg("spaces"),
      py::arg("certificate"));
  m.def(
      "solve_lc",
      [](const LinearSystem& sys, const StageCost& cost, const Eigen::VectorXd& x0,
         const Grid& grid) { return solve_lc(sys, cost, x0, grid); },
      py::arg("system"), py::arg("cost"), py::arg("x0"), py::arg("grid"));
  m.def(
      "pmp_residual",
      [](const LinearSystem& sys, const StageCost& cost, const Trajectory& traj) {
        return pmp_residual(sys, cost, traj);
      },
      py::arg("system"), py::arg("cost"), py::arg("trajectory"));
  m.def("deviation_series", &deviation_series, py::arg("trajectory"), py::arg("steady"));
  m.def(
      "fit_envelope",
      [](const DeviationSeries& dev, const Grid& grid, double floor) {
        EnvelopeOptions opts;
        opts.floor = floor;
        return fit_envelope(dev, grid, opts);
      },
      py::arg("deviations"), py::arg("grid"), py::arg("floor") = 1e-9);
  m.def(
      "value_gap_sweep",
      [](const LinearSystem& sys, const StageCost& cost, const SteadyPair& steady,
         const Eigen::VectorXd& x0, const std::vector<double>& horizons, int N_per_unit,
         double envelope_floor) {
        SweepOptions opts;
        opts.N_per_unit = N_per_unit;
        opts.envelope.floor = envelope_floor;
        return value_gap_sweep(sys, cost, steady, x0, horizons, opts);
      },
      py::arg("system"), py::arg("cost"), py::arg("steady"), py::arg("x0"), py::arg("horizons"),
      py::arg("N_per_unit") = 100, py::arg("envelope_floor") = 1e-9);
  m.def(
      "excess_cost_identity_residual",
      [](const LinearSystem& sys, const KalmanDecomposition& dec, const StageCost& cost,
         const SteadyPair& steady, const Trajectory& traj, int i1, int i2) {
        return excess_cost_identity_residual(sys, dec, cost, steady, traj, i1, i2);
      },
      py::arg("system"), py::arg("decomposition"), py::arg("cost"), py::arg("steady"),
      py::arg("trajectory"), py::arg("i1"), py::arg("i2"));

  // Full pipeline from a config document; returns (exit_code, files, log_lines).
  m.def(
      "run",
      [](const std::string& command, const std::string& config_text,
         const std::string& output_dir) {
        RunConfig cfg = parse_config(config_text);
        if (!output_dir.empty()) cfg.output_dir = output_dir;
        const PipelineOutcome out = run_pipeline(command, cfg, config_text);
        return py::make_tuple(static_cast<int>(out.code), out.files, out.log_lines);
      },
      py::arg("command"), py::arg("config_text"), py::arg("output_dir") = "");
}
