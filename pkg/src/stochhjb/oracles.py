"""Independent reference solutions.

None of these share a code path with the SPDE time steppers beyond the grid
transforms: the Cole-Hopf oracle linearises the noise-free equation, the shift
oracle transports it exactly along the Brownian path, and the Feynman-Kac
estimator samples the linear heat equation with particles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import OracleError
from .noise import NoisePath
from .spectral import TorusGrid

MC_CHUNK = 10_000


def _sample_times(T, sample_times):
    ts = np.atleast_1d(np.asarray(sample_times if sample_times is not None else [T], dtype=float))
    if np.any(ts < 0) or np.any(ts > T * (1 + 1e-12)) or np.any(np.diff(ts) < 0):
        raise ValueError("sample times must be sorted and lie in [0, T]")
    return ts


def cole_hopf_exact(grid: TorusGrid, u0: np.ndarray, mu: float, V: np.ndarray | None,
                    T: float, sample_times=None, substep: float = 1e-5) -> np.ndarray:
    """Noise-free solution of ``u_t = V + mu Delta u - 1/2 |grad u|^2`` via Cole-Hopf.

    ``phi = exp(-u / (2 mu))`` solves ``phi_t = mu Delta phi - V phi / (2 mu)``.
    With ``V = 0`` this is a mode-wise exact heat semigroup; otherwise Strang
    splitting with steps of at most ``substep`` is used. Returns the fields at
    ``sample_times`` stacked along the first axis.
    """
    if not mu > 0:
        raise ValueError("Cole-Hopf needs mu > 0")
    ts = _sample_times(T, sample_times)
    u0 = grid.check_field(np.asarray(u0, dtype=float))
    shift = float(np.mean(u0))  # keeps phi near 1; exact since constants commute
    phi_hat = grid.to_spectral(np.exp(-(u0 - shift) / (2 * mu)))
    has_potential = V is not None and np.any(V != 0)
    out = []
    t_cur = 0.0
    for t in ts:
        if has_potential:
            phi_hat = _strang(grid, phi_hat, mu, V, t - t_cur, substep)
        else:
            phi_hat = np.exp(-mu * grid.xi_squared * (t - t_cur)) * phi_hat
        t_cur = t
        phi = grid._ifft(phi_hat)
        if phi.min() <= 0:
            raise OracleError(f"Cole-Hopf field lost positivity at t={t}; refine the grid")
        out.append(shift - 2 * mu * np.log(phi))
    return np.array(out)


def _strang(grid, phi_hat, mu, V, duration, substep):
    if duration <= 0:
        return phi_hat
    n = max(1, int(np.ceil(duration / substep - 1e-9)))
    h = duration / n
    half = np.exp(-V * h / (4 * mu))
    heat = np.exp(-mu * grid.xi_squared * h)
    phi = grid._ifft(phi_hat)
    for _ in range(n):
        phi = half * phi
        phi = grid._ifft(heat * grid._fft(phi))
        phi = half * phi
    return grid._fft(phi)


def shift_oracle(grid: TorusGrid, u0: np.ndarray, mu: float, nu: float, path: NoisePath,
                 T: float, sample_times=None) -> np.ndarray:
    """Exact solution for ``L_i = -sqrt(nu) d_i``, ``V = 0``.

    The Stratonovich chain rule gives ``u(t, x) = v(t, x - sqrt(nu) W(t))`` with
    ``v`` the noise-free solution; the shift is a Fourier phase, no interpolation.
    """
    if nu < 0:
        raise ValueError("nu must be non-negative")
    if path.n != grid.dim:
        raise ValueError("path dimension does not match the grid")
    ts = _sample_times(T, sample_times)
    v = cole_hopf_exact(grid, u0, mu, None, T, ts)
    return np.array([grid.shift(vt, np.sqrt(nu) * path.W_at(t)) for vt, t in zip(v, ts)])


def check_shift_operator(op, nu: float, atol: float = 1e-12) -> None:
    """Raise unless ``op`` is ``a_i = -sqrt(nu)``, ``b_i = 0`` on every axis."""
    want = -np.sqrt(nu)
    for ai, bi in zip(op.a, op.b):
        if np.max(np.abs(ai - want)) > atol or np.max(np.abs(bi)) > atol:
            raise ValueError("shift oracle needs a_i = -sqrt(nu) and b_i = 0")


@dataclass
class FeynmanKacResult:
    points: np.ndarray
    u: np.ndarray
    half_width: np.ndarray      # 95% band on u, delta method
    phi: np.ndarray
    phi_stderr: np.ndarray
    n_paths: int
    metadata: dict = field(default_factory=dict)


def feynman_kac_mc(grid: TorusGrid, u0: np.ndarray, V: np.ndarray | None, mu: float, T: float,
                   x_points, n_paths: int, seed: int, n_steps: int = 100) -> FeynmanKacResult:
    """Monte Carlo estimate of the noise-free solution at ``x_points``.

    ``phi(T, x) = E[exp(-1/(2 mu) int_0^T V(X_s) ds) exp(-u0(X_T) / (2 mu))]`` with
    ``dX = sqrt(2 mu) dB``, ``X_0 = x``, wrapped onto the torus, and
    ``u = -2 mu log phi``. ``x_points`` has shape ``(P, n)``.

    Paths are generated in chunks of ``MC_CHUNK``; chunk ``c`` draws from
    ``SeedSequence(seed).spawn(n_chunks)[c]``, so results do not depend on how
    chunks are scheduled. Without a potential a single exact step is taken.
    """
    if not mu > 0:
        raise ValueError("Feynman-Kac needs mu > 0")
    pts = np.atleast_2d(np.asarray(x_points, dtype=float))
    if pts.shape[1] != grid.dim:
        pts = pts.T
    P, n = pts.shape
    u0 = grid.check_field(np.asarray(u0, dtype=float))
    shift = float(np.mean(u0))
    u0_at = grid.interpolator(u0)
    has_potential = V is not None and np.any(V != 0)
    V_at = grid.interpolator(V) if has_potential else None
    steps = n_steps if has_potential else 1
    h = T / steps
    sig = np.sqrt(2 * mu * h)

    n_chunks = -(-n_paths // MC_CHUNK)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    s1 = np.zeros(P)
    s2 = np.zeros(P)
    for c, child in enumerate(children):
        m = min(MC_CHUNK, n_paths - c * MC_CHUNK)
        rng = np.random.default_rng(child)
        X = np.broadcast_to(pts.T[:, :, None], (n, P, m)).copy()
        log_w = np.zeros((P, m))
        for _ in range(steps):
            if has_potential:
                log_w -= h * V_at(X) / (2 * mu)
            X += sig * rng.standard_normal(X.shape)
        log_w -= (u0_at(X) - shift) / (2 * mu)
        Y = np.exp(log_w)
        s1 += Y.sum(axis=1)
        s2 += (Y**2).sum(axis=1)
    mean = s1 / n_paths
    var = np.maximum(s2 / n_paths - mean**2, 0.0) * n_paths / max(n_paths - 1, 1)
    se = np.sqrt(var / n_paths)
    if np.any(mean <= 0):
        raise OracleError("Feynman-Kac estimate of phi is not positive")
    u = shift - 2 * mu * np.log(mean)
    half = 1.96 * 2 * mu * se / mean
    return FeynmanKacResult(pts, u, half, mean, se, n_paths,
                            {"seed": seed, "steps": steps, "T": T, "mu": mu})
