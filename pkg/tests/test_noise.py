import numpy as np
import pytest

from stochhjb.noise import NoisePath, sample_path, zero_path


def test_same_seed_same_table():
    a = sample_path(5, 2, 1e-3, 100)
    b = sample_path(5, 2, 1e-3, 100)
    assert np.array_equal(a.increments, b.increments)
    assert not np.array_equal(a.increments, sample_path(6, 2, 1e-3, 100).increments)


def test_variance():
    p = sample_path(1, 1, 1e-4, 100_000)
    ratio = p.increments.var() / 1e-4
    assert 0.98 <= ratio <= 1.02


def test_coarsen_sums_pairs():
    p = sample_path(3, 2, 1e-3, 10)
    c = p.coarsen(2)
    assert c.dt_fine == pytest.approx(2e-3) and c.steps == 5
    assert np.array_equal(c.increments, p.increments[:, 0::2] + p.increments[:, 1::2])
    assert p.coarsen(1) is p
    with pytest.raises(ValueError):
        p.coarsen(0)


def test_refine_is_consistent_and_reproducible():
    p = sample_path(7, 1, 4e-4, 2000)
    r = p.refine()
    assert r.level == 1 and r.dt_fine == pytest.approx(2e-4)
    assert np.max(np.abs(r.coarsen(2).increments - p.increments)) < 1e-15
    assert np.array_equal(r.increments, p.refine().increments)
    assert 0.9 < r.increments.var() / 2e-4 < 1.1
    rr = r.refine()
    assert np.max(np.abs(rr.coarsen(4).increments - p.increments)) < 1e-15


def test_W_and_for_step():
    p = sample_path(0, 1, 1e-3, 8)
    W = p.W()
    assert W.shape == (1, 9) and W[0, 0] == 0
    assert p.W_at(0.004)[0] == pytest.approx(W[0, 4])
    with pytest.raises(ValueError):
        p.W_at(0.0045)
    assert np.allclose(p.for_step(2e-3, 3), p.coarsen(2).increments[:, :3])
    with pytest.raises(ValueError):
        p.for_step(1.5e-3, 2)
    with pytest.raises(ValueError):
        p.for_step(2e-3, 5)


def test_immutability_and_zero_path():
    p = sample_path(0, 1, 1e-3, 4)
    with pytest.raises(ValueError):
        p.increments[0, 0] = 1.0
    z = zero_path(2, 1e-3, 4)
    assert z.n == 2 and z.steps == 4 and z.horizon == pytest.approx(4e-3)
    assert not np.any(z.increments)
    with pytest.raises(ValueError):
        sample_path(0, 0, 1e-3, 4)
    assert isinstance(p, NoisePath)
