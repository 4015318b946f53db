import json

import numpy as np
import pytest

import turnpike


def scalar_lq():
    sys = turnpike.LinearSystem(np.array([[0.0]]), np.array([[1.0]]), np.array([0.0]))
    cost = turnpike.QuadraticCost(
        np.array([[1.0]]), np.array([[0.0]]), np.array([[1.0]]), np.array([0.0]), np.array([0.0])
    )
    return sys, cost


def frozen_state():
    sys = turnpike.LinearSystem(
        np.array([[-1.0, 0.0], [0.0, 0.0]]), np.array([[1.0], [0.0]]), np.zeros(2)
    )
    cost = turnpike.QuadraticCost(
        np.eye(2), np.zeros((2, 1)), np.array([[1.0]]), np.zeros(2), np.zeros(1)
    )
    return sys, cost


def test_version():
    assert turnpike.__version__ == "0.1.0"


def test_decompose_scalar():
    sys, _ = scalar_lq()
    dec = turnpike.decompose(sys)
    assert dec.k == 1
    assert turnpike.hautus_controllable(dec.A11, dec.B1)


def test_solve_matches_frozen_cost():
    sys, cost = scalar_lq()
    traj = turnpike.solve_lc(sys, cost, np.array([1.0]), turnpike.Grid(10.0, 2000))
    # Same value the C++ suite pins against an independently computed solution.
    assert traj.cost == pytest.approx(0.500003115146, abs=1e-9)
    assert traj.newton_iters == 1
    res = turnpike.pmp_residual(sys, cost, traj)
    assert res.adjoint <= 1e-8
    assert res.stationarity <= 1e-6


def test_steady_pair_frozen_state():
    sys, cost = frozen_state()
    dec = turnpike.decompose(sys)
    spaces = turnpike.build_feasibility_spaces(dec, sys)
    cert = turnpike.certify(spaces, dec, np.array([1.0, 3.0]))
    assert cert.feasible
    sp = turnpike.compute_steady(sys, dec, cost, spaces, cert)
    assert sp.v_star == pytest.approx(4.5, abs=1e-9)
    assert np.allclose(sp.x_star, [0.0, 3.0], atol=1e-9)


def test_sweep_confirms_frozen_state():
    sys, cost = frozen_state()
    dec = turnpike.decompose(sys)
    spaces = turnpike.build_feasibility_spaces(dec, sys)
    cert = turnpike.certify(spaces, dec, np.array([1.0, 3.0]))
    sp = turnpike.compute_steady(sys, dec, cost, spaces, cert)
    sweep = turnpike.value_gap_sweep(sys, cost, sp, np.array([1.0, 3.0]), [5.0, 10.0], 60)
    assert sweep.confirmed
    assert sweep.value_slope == pytest.approx(4.5, abs=1e-5)
    for rec in sweep.records:
        assert rec.passes
        assert rec.fit.rate > 0.5


def test_errors_translate():
    sys, cost = scalar_lq()
    with pytest.raises(turnpike.ConfigError):
        turnpike.Grid(-1.0, 100)
    with pytest.raises(turnpike.ConfigError):
        turnpike.solve_lc(sys, cost, np.array([1.0, 2.0]), turnpike.Grid(1.0, 10))


def test_pipeline_run(tmp_path):
    config = {
        "system": {"A": [[-1.0, 0.0], [0.0, 0.0]], "B": [[1.0], [0.0]]},
        "cost": {"Q": [[1.0, 0.0], [0.0, 1.0]], "R": [[1.0]]},
        "initial_states": [[1.0, 3.0]],
        "horizons": [5.0, 10.0],
        "discretization": {"N_per_unit": 60},
    }
    code, files, log_lines = turnpike.run("turnpike", json.dumps(config), str(tmp_path))
    assert code == 0
    assert "report_0.json" in files
    assert any("confirmed" in line for line in log_lines)
    report = json.loads((tmp_path / "report_0.json").read_text())
    assert report["turnpike"] == "confirmed"
    assert report["steady"]["v_star"] == pytest.approx(4.5, abs=1e-9)
