"""Property tests over random smooth data."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from stochhjb.spectral import TorusGrid, random_field
from stochhjb.transport import TransportOperator, apply_L, apply_L_adjoint, operator_bound_diag
from stochhjb.truncation import CutoffSpec, embed_constant, theta, theta_prime

seeds = st.integers(0, 2**32 - 1)
grids = st.sampled_from([TorusGrid(1, 64), TorusGrid(1, 128), TorusGrid(2, 16), TorusGrid(3, 8)])
COMMON = settings(max_examples=40, deadline=None)


def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


@COMMON
@given(grids, seeds)
def test_transform_round_trip(g, seed):
    f = np.random.default_rng(seed).standard_normal(g.shape)
    assert np.max(np.abs(g.to_physical(g.to_spectral(f)) - f)) < 1e-12 * max(1.0, np.max(np.abs(f)))


@COMMON
@given(grids, seeds)
def test_parseval(g, seed):
    f = np.random.default_rng(seed).standard_normal(g.shape)
    assert _rel(g.l2_norm(f), g.spectral_l2_norm(g.to_spectral(f))) < 1e-12


@COMMON
@given(grids, seeds, st.floats(0.0, 4.0))
def test_sobolev_monotone_in_k(g, seed, k):
    f = random_field(g, np.random.default_rng(seed), max_mode=g.points // 4)
    assert g.sobolev_norm(f, k) <= g.sobolev_norm(f, k + 0.5) * (1 + 1e-12)
    assert _rel(g.sobolev_norm(f, 0), g.l2_norm(f)) < 1e-12


@COMMON
@given(seeds, st.integers(1, 3))
def test_adjoint_duality(seed, mode):
    g = TorusGrid(1, 128)
    rng = np.random.default_rng(seed)
    x = g.coords[0]
    op = TransportOperator(g, [rng.normal() + rng.normal() * np.cos(mode * x)],
                           [rng.normal() * np.sin(mode * x)])
    u = random_field(g, rng, max_mode=12)
    phi = random_field(g, rng, max_mode=12)
    lhs = g.inner(apply_L(op, 0, u), phi)
    rhs = g.inner(u, apply_L_adjoint(op, 0, phi))
    assert abs(lhs - rhs) <= 1e-10 * (1 + abs(lhs))


@COMMON
@given(st.sampled_from([(3.0, 1, 128), (4.0, 1, 64), (3.5, 2, 16)]), seeds)
def test_embedding_inequality(case, seed):
    k, n, N = case
    g = TorusGrid(n, N)
    f = random_field(g, np.random.default_rng(seed), max_mode=N // 2, decay=0.2)
    assert g.grad_sup_norm(f) <= embed_constant(k, n, N) * g.sobolev_norm(f, k) * (1 + 1e-12)


@COMMON
@given(st.floats(0.1, 10.0), st.lists(st.floats(0.0, 15.0), min_size=2, max_size=20))
def test_theta_bounds_and_monotone(r, xs):
    spec = CutoffSpec(r, 1.0)
    xs = sorted(xs)
    vals = [theta(spec, x) for x in xs]
    assert all(0.0 <= v <= 1.0 for v in vals)
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    assert all(abs(theta_prime(spec, x)) <= spec.lipschitz_bound + 1e-12 for x in xs)
    assert all(v == 1.0 for x, v in zip(xs, vals) if x <= r)
    assert all(v == 0.0 for x, v in zip(xs, vals) if x >= r + 1)


@COMMON
@given(seeds, st.floats(-3, 3), st.floats(-3, 3))
def test_operator_linearity(seed, alpha, beta):
    g = TorusGrid(1, 64)
    rng = np.random.default_rng(seed)
    x = g.coords[0]
    op = TransportOperator(g, [np.cos(x) + 0.3], [0.5 * np.sin(2 * x)])
    u, v = random_field(g, rng), random_field(g, rng)
    lhs = apply_L(op, 0, alpha * u + beta * v)
    rhs = alpha * apply_L(op, 0, u) + beta * apply_L(op, 0, v)
    assert np.max(np.abs(lhs - rhs)) < 1e-10 * (1 + np.max(np.abs(lhs)))


@COMMON
@given(grids, seeds, st.lists(st.floats(-10, 10), min_size=3, max_size=3))
def test_shift_is_unitary(g, seed, d):
    f = random_field(g, np.random.default_rng(seed), max_mode=g.points // 4)
    s = g.shift(f, d[:g.dim])
    assert _rel(g.l2_norm(s), g.l2_norm(f)) < 1e-12
    back = g.shift(s, [-v for v in d[:g.dim]])
    assert np.max(np.abs(back - f)) < 1e-11 * (1 + np.max(np.abs(f)))


@COMMON
@given(seeds, st.floats(0.0, 2.0), st.floats(0.0, 5.0))
def test_operator_bound_holds(seed, a_amp, b_amp):
    g = TorusGrid(1, 128)
    rng = np.random.default_rng(seed)
    x = g.coords[0]
    m = int(rng.integers(1, 6))
    op = TransportOperator(g, [rng.normal() + a_amp * np.cos(m * x + rng.uniform(0, 6))],
                           [rng.normal() + b_amp * np.sin(m * x)])
    s, bound = operator_bound_diag(op, random_field(g, rng, max_mode=16))
    assert s <= bound * (1 + 1e-9) + 1e-9
