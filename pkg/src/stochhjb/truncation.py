"""Smooth cut-off of the gradient nonlinearity and the associated stopping rule."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import TorusGrid

LIPSCHITZ_BOUND = 15.0 / 8.0


def embed_constant(k: float, n: int, N: int) -> float:
    """Discrete constant C with ``||grad u||_inf <= C ||u||_{H^k}`` on the resolved modes.

    Cauchy-Schwarz on ``|grad u(x)| <= sum |xi| |u_hat(xi)|`` gives
    ``C = sqrt(sum |xi|^2 (1 + |xi|^2)^{-k}) (2 pi)^{-n/2}``.
    """
    if k <= n / 2 + 1:
        raise ValueError(f"embedding needs k > n/2 + 1, got k={k} for n={n}")
    xi2 = TorusGrid(n, N).xi_squared
    return float(np.sqrt(np.sum(xi2 * (1.0 + xi2) ** (-k))) * (2 * np.pi) ** (-n / 2))


@dataclass(frozen=True)
class CutoffSpec:
    """``theta_r`` equals 1 on [0, r], 0 on [r+1, inf), quintic smoothstep in between."""

    r: float
    sobolev_constant: float
    lipschitz_bound: float = LIPSCHITZ_BOUND

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("cut-off radius r must be positive")
        if not self.sobolev_constant > 0:
            raise ValueError("Sobolev constant must be positive")

    @classmethod
    def for_grid(cls, r: float, grid: TorusGrid, k: float) -> CutoffSpec:
        return cls(r, embed_constant(k, grid.dim, grid.points))

    @property
    def threshold(self) -> float:
        """Stopping level ``r / C`` for the H^k norm."""
        return self.r / self.sobolev_constant


def theta(spec: CutoffSpec, x: float) -> float:
    if x < 0:
        raise ValueError("theta is defined on [0, inf)")
    t = x - spec.r
    if t <= 0.0:
        return 1.0
    if t >= 1.0:
        return 0.0
    return 1.0 - t**3 * (10.0 + t * (-15.0 + 6.0 * t))


def theta_prime(spec: CutoffSpec, x: float) -> float:
    if x < 0:
        raise ValueError("theta is defined on [0, inf)")
    t = x - spec.r
    if t <= 0.0 or t >= 1.0:
        return 0.0
    return -30.0 * t**2 * (t - 1.0) ** 2


def theta_value(spec: CutoffSpec | None, grad_sup: float) -> float:
    """``theta_r`` at ``grad_sup``, or exactly 1.0 when truncation is off."""
    return 1.0 if spec is None else theta(spec, grad_sup)


def truncated_nonlinearity(spec: CutoffSpec | None, grid: TorusGrid, u: np.ndarray) -> np.ndarray:
    """``1/2 theta_r(||grad u||_inf) |grad u|^2`` with a dealiased square."""
    g = grid.gradient(u)
    sq = np.sum(g**2, axis=0)
    th = theta_value(spec, float(np.sqrt(np.max(sq))))
    return 0.5 * th * grid._ifft(grid.dealias(grid._fft(sq)))


@dataclass(frozen=True)
class StoppingEvent:
    hit: bool
    time: float = float("nan")


def first_crossing(times, values, level: float) -> StoppingEvent:
    """First time ``values`` reaches ``level``, linearly interpolated between samples."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    idx = np.flatnonzero(values >= level)
    if idx.size == 0:
        return StoppingEvent(False)
    j = int(idx[0])
    if j == 0:
        return StoppingEvent(True, float(times[0]))
    v0, v1 = values[j - 1], values[j]
    frac = (level - v0) / (v1 - v0)
    return StoppingEvent(True, float(times[j - 1] + frac * (times[j] - times[j - 1])))


def stopping_monitor(traj, spec: CutoffSpec, k: float | None = None) -> StoppingEvent:
    """tau_r on the sampled H^k series of a trajectory.

    With ``k`` omitted (or equal to the run's k) the recorded ``Hk`` series is
    used; another order is recomputed from the stored snapshots.
    """
    if k is None or k == traj.k:
        return first_crossing(traj.times, traj.diagnostics["Hk"], spec.threshold)
    snaps = np.asarray(traj.snapshots)
    grid = TorusGrid(snaps.ndim - 1, snaps.shape[-1])
    norms = [grid.sobolev_norm(u, k) for u in snaps]
    return first_crossing(traj.snapshot_times, norms, spec.threshold)
