import numpy as np
import pytest

from stochhjb.spectral import TorusGrid, random_field
from stochhjb.transport import (TransportOperator, apply_L, apply_L_adjoint, bound_constant,
                                detect_special_class, operator_bound_diag, strat_correction)


def test_apply_examples(grid):
    x = grid.coords[0]
    s = np.sin(x)
    op = TransportOperator.constant(grid, 1.0, 0.0)
    assert np.max(np.abs(apply_L(op, 0, s) - np.cos(x))) < 1e-12
    op = TransportOperator.constant(grid, 0.0, 1.0)
    assert np.max(np.abs(apply_L(op, 0, s) - s)) < 1e-12
    op = TransportOperator(grid, [np.sin(x)], [np.zeros(grid.shape)])
    assert np.max(np.abs(apply_L(op, 0, s) - s * np.cos(x))) < 1e-10


def test_adjoint_examples(grid):
    x = grid.coords[0]
    phi = np.cos(3 * x) + 0.2
    op = TransportOperator.constant(grid, 1.0, 0.0)
    assert np.max(np.abs(apply_L_adjoint(op, 0, phi) - 3 * np.sin(3 * x))) < 1e-11
    b = 0.7 * np.ones(grid.shape)
    op = TransportOperator(grid, [np.zeros(grid.shape)], [b])
    assert np.max(np.abs(apply_L_adjoint(op, 0, phi) - 0.7 * phi)) < 1e-12


def test_adjoint_duality_random(rng):
    g = TorusGrid(1, 64)
    op = TransportOperator(g, [random_field(g, rng, 6)], [random_field(g, rng, 6)])
    u, phi = random_field(g, rng, 6), random_field(g, rng, 6)
    lhs = g.inner(apply_L(op, 0, u), phi)
    rhs = g.inner(u, apply_L_adjoint(op, 0, phi))
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


def test_strat_correction_examples(grid, grid2):
    x = grid.coords[0]
    s = np.sin(x)
    op = TransportOperator.constant(grid, 1.0, 0.0)
    assert np.max(np.abs(strat_correction(op, s) + 0.5 * s)) < 1e-12
    op = TransportOperator.constant(grid, 0.0, 0.3)
    assert np.max(np.abs(strat_correction(op, s) - 0.5 * 0.09 * s)) < 1e-12
    op = TransportOperator(grid, [np.sin(x)], [np.zeros(grid.shape)])
    # 1/2 sin d(sin cos) = 1/2 sin (cos^2 - sin^2)
    ref = 0.5 * np.sin(x) * (np.cos(x) ** 2 - np.sin(x) ** 2)
    assert np.max(np.abs(strat_correction(op, s) - ref)) < 1e-9
    op2 = TransportOperator.constant(grid2, [1.0, 1.0], [0.0, 0.0])
    X, Y = grid2.coords
    u = np.sin(X) + np.cos(2 * Y)
    assert np.max(np.abs(strat_correction(op2, u) + 0.5 * (np.sin(X) + 4 * np.cos(2 * Y)))) < 1e-12


def test_linearity(grid, rng):
    op = TransportOperator(grid, [random_field(grid, rng)], [random_field(grid, rng)])
    u, v = random_field(grid, rng), random_field(grid, rng)
    lhs = apply_L(op, 0, 2.5 * u - 1.5 * v)
    rhs = 2.5 * apply_L(op, 0, u) - 1.5 * apply_L(op, 0, v)
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_bound_examples(grid, rng):
    u = random_field(grid, rng)
    s, bound = operator_bound_diag(TransportOperator.constant(grid, 1.0, 0.0), u)
    assert abs(s) < 1e-10
    s, bound = operator_bound_diag(TransportOperator.constant(grid, 0.0, 0.4), u)
    assert s == pytest.approx(2 * 0.16 * grid.l2_norm(u) ** 2, rel=1e-12)
    assert s <= bound * (1 + 1e-12)


def test_bound_hard_case(grid):
    # large b with an oscillating a: the a'b cross term dominates where cos(5x) = -1
    x = grid.coords[0]
    op = TransportOperator(grid, [np.sin(5 * x)], [np.full(grid.shape, 1000.0)])
    u = np.exp(4 * np.cos(5 * x + np.pi))
    s, bound = operator_bound_diag(op, u)
    assert s > 2e6 * grid.l2_norm(u) ** 2       # beyond the pure 2 b^2 contribution
    assert s <= bound


def test_bound_constant_value(grid):
    x = grid.coords[0]
    op = TransportOperator(grid, [np.sin(x)], [0.5 * np.cos(x)])
    # 2*0.25 + 2*1*0.5 + 1*0.5 + 0.5*1 + 0.5*1*1
    assert bound_constant(op) == pytest.approx(3.0, rel=1e-12)


def test_special_class(grid, grid2):
    tag = detect_special_class(TransportOperator.constant(grid, 2.0, 1.0))
    assert tag.is_special and tag.c[0] == pytest.approx(1.0)
    x = grid.coords[0]
    assert not detect_special_class(TransportOperator(grid, [np.sin(x)], [np.zeros(grid.shape)])).is_special
    assert not detect_special_class(TransportOperator(grid, [np.ones(grid.shape)], [np.cos(x)])).is_special
    tag = detect_special_class(TransportOperator.constant(grid2, -0.2, 0.0))
    assert tag.is_special and np.all(tag.c == 0)


def test_operator_validation(grid):
    with pytest.raises(ValueError):
        TransportOperator(grid, [np.zeros(grid.shape)] * 2, [np.zeros(grid.shape)])
    with pytest.raises(ValueError):
        TransportOperator(grid, [np.full(grid.shape, np.nan)], [np.zeros(grid.shape)])
    op = TransportOperator.constant(grid, 1.0, 0.0)
    with pytest.raises(ValueError):
        op.a[0][0] = 3.0
    with pytest.raises(ValueError):
        apply_L(op, 1, np.zeros(grid.shape))


def test_smoothness_budget(grid):
    x = grid.coords[0]
    op = TransportOperator(grid, [np.sin(2 * x)], [np.zeros(grid.shape)])
    assert op.smoothness["a"][0][:3] == pytest.approx([1.0, 3.0, 7.0], abs=1e-3)
    assert op.smoothness["b"][0] == [0.0] * 5
