import json

import numpy as np
import pytest

from stochhjb.diagnostics import (burgers_companion, compare_to_reference, error_norms,
                                  gamma_convergence_study, gradient_gap, max_principle_check,
                                  observed_order, uniqueness_experiment)
from stochhjb.noise import sample_path, zero_path
from stochhjb.solver import SolverConfig, integrate
from stochhjb.transport import TransportOperator


def test_error_norms_and_report(grid):
    x = grid.coords[0]
    e = error_norms(grid, np.sin(x), np.zeros(grid.shape), 2.0)
    assert e["Linf"] == pytest.approx(1.0, abs=1e-3)
    assert e["L2"] == pytest.approx(np.sqrt(np.pi))
    assert e["Hbeta"] == pytest.approx(2 * np.sqrt(np.pi))
    rep = compare_to_reference("demo", grid, [0.0, 1.0], [np.sin(x), 2 * np.sin(x)],
                               [np.sin(x), np.sin(x)], tolerance=0.5)
    assert not rep.passed and rep.errors["Linf"][0] == 0
    assert all(v >= 0 for vals in rep.errors.values() for v in vals)
    lines = rep.to_csv(header=("config_hash=x",)).splitlines()
    assert lines[1] == "t,error_L2,error_Linf,error_Hbeta,pass"
    assert lines[2].endswith(",1") and lines[3].endswith(",0")
    assert json.loads(rep.to_json())["oracle"] == "demo"


def test_observed_order():
    dts = np.array([4e-4, 2e-4, 1e-4])
    assert observed_order(dts, 3 * dts**0.5) == pytest.approx(0.5)
    assert observed_order(dts, dts) == pytest.approx(1.0)


def test_burgers_constant_data(grid):
    cfg = SolverConfig(grid=grid, u0=np.full(grid.shape, 2.0), operator=TransportOperator.constant(grid, -0.3, 0.2),
                       scheme="strat_heun", T=0.01)
    traj = burgers_companion(cfg, sample_path(0, 1, 1e-4, cfg.steps))
    assert np.max(np.abs(traj.snapshots)) == 0


def test_burgers_self_refinement(grid):
    x = grid.coords[0]
    finals = []
    for dt in (2e-4, 1e-4):
        cfg = SolverConfig(grid=grid, u0=-np.cos(x), dt=dt, T=0.1, scheme="strat_heun")
        finals.append(burgers_companion(cfg, zero_path(1, dt, cfg.steps)).final_state[0])
    assert np.max(np.abs(finals[0] - np.sin(x))) > 0.01       # it really evolved
    assert np.max(np.abs(finals[0] - finals[1])) < 1e-4


def test_burgers_coupling(grid):
    op = TransportOperator.constant(grid, -0.3, 0.2)
    cfg = SolverConfig(grid=grid, u0=np.sin(grid.coords[0]), V=0.1 * np.cos(grid.coords[0]), operator=op,
                       scheme="strat_heun", T=0.05)
    p = sample_path(4, 1, 1e-4, cfg.steps)
    gaps = gradient_gap(grid, integrate(cfg, p), burgers_companion(cfg, p))
    assert np.max(gaps) <= 10 * cfg.dt


def test_burgers_refuses_variable_coefficients(grid):
    op = TransportOperator(grid, [np.cos(grid.coords[0])], [np.zeros(grid.shape)])
    cfg = SolverConfig(grid=grid, u0=np.zeros(grid.shape), operator=op, T=0.01)
    with pytest.raises(ValueError):
        burgers_companion(cfg, zero_path(1, 1e-4, cfg.steps))


def test_max_principle_examples(grid):
    x = grid.coords[0]
    op = TransportOperator.constant(grid, -0.2, 0.0)
    cfg = SolverConfig(grid=grid, u0=np.full(grid.shape, 1.5), operator=op, T=0.05)
    p = sample_path(1, 1, 1e-4, cfg.steps)
    rep = max_principle_check(integrate(cfg, p), cfg, p)
    assert rep.asserted and rep.passed and rep.tolerance == pytest.approx(10 * 1e-4 + 128.0**-3)
    cfg = cfg.replace(u0=np.sin(x))
    assert max_principle_check(integrate(cfg, p), cfg, p).passed
    for V in (1 + np.cos(x), -(1 + np.cos(x))):
        c = cfg.replace(V=V)
        rep = max_principle_check(integrate(c, p), c, p)
        assert not rep.asserted and rep.passed is None
    c = cfg.replace(operator=TransportOperator(grid, [np.cos(x)], [np.zeros(grid.shape)]))
    assert not max_principle_check(integrate(c, p), c, p).asserted


def test_max_principle_with_zero_order_term(grid):
    # b != 0 rescales the gradient by exp(b W); the envelope follows it
    op = TransportOperator.constant(grid, -0.2, 0.5)
    cfg = SolverConfig(grid=grid, u0=np.sin(grid.coords[0]), operator=op, T=0.1)
    p = sample_path(2, 1, 1e-4, cfg.steps)
    traj = integrate(cfg, p)
    assert max_principle_check(traj, cfg, p).passed
    with pytest.raises(ValueError):
        max_principle_check(traj, cfg, None)


def test_max_principle_flags_violation(grid):
    op = TransportOperator.constant(grid, 0.0, 0.0)
    cfg = SolverConfig(grid=grid, u0=np.sin(grid.coords[0]), operator=op, T=0.01)
    traj = integrate(cfg, zero_path(1, 1e-4, cfg.steps))
    traj.diagnostics["grad_sup"] = traj.diagnostics["grad_sup"] + np.linspace(0, 0.01, len(traj.times))
    rep = max_principle_check(traj, cfg, tol=1e-3)
    assert rep.asserted and not rep.passed and rep.violations > 0
    assert rep.worst_time == pytest.approx(traj.times[-1])


def test_uniqueness(grid):
    op = TransportOperator(grid, [0.2 * np.cos(grid.coords[0]) - 0.3], [0.1 * np.sin(2 * grid.coords[0])])
    cfg = SolverConfig(grid=grid, u0=np.sin(grid.coords[0]), operator=op, T=0.05)
    p = sample_path(3, 1, 1e-4, cfg.steps)
    same = uniqueness_experiment(cfg, p, 0.0)
    assert same.bit_identical and same.passed
    small = uniqueness_experiment(cfg, p, 1e-6)
    big = uniqueness_experiment(cfg, p, 1e-3)
    assert small.envelope_ok and big.envelope_ok
    assert 0.5 <= (big.terminal_gap / small.terminal_gap) / 1e3 <= 2.0
    with pytest.raises(ValueError):
        uniqueness_experiment(cfg, p, -1.0)


def test_gamma_study(grid):
    op = TransportOperator.constant(grid, -0.3, 0.0)
    cfg = SolverConfig(grid=grid, u0=np.sin(grid.coords[0]), operator=op, T=0.02)
    p = sample_path(0, 1, 1e-4, cfg.steps)
    study = gamma_convergence_study(cfg, [1e-8, 1e-9, 1e-10], p)
    assert study.monotone and study.gammas[-1] == 0.0
    assert study.to_csv().splitlines()[0] == "gamma,next_gamma,sup_diff_next_Hbeta,sup_diff_zero_Hbeta"
    # negligible operator: gamma * xi_max^{2k'} * dt below 1e-14
    tiny = 1e-14 / (float(grid.xi_squared.max()) ** 7 * cfg.dt)
    study = gamma_convergence_study(cfg, [tiny], p)
    assert study.diff_zero[0] <= 1e-10
    with pytest.raises(ValueError):
        gamma_convergence_study(cfg, [1e-10, 1e-9], p)
    with pytest.raises(ValueError):
        gamma_convergence_study(cfg, [1e-9, 0.0], p)
