"""Seeded Brownian increment tables with coarsening and bridge refinement."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class NoisePath:
    """Increments ``dW_i`` of an n-dimensional Brownian motion on a uniform grid.

    ``increments`` has shape ``(n, steps)``. ``level`` counts bridge
    refinements applied to the originally sampled table.
    """

    seed: int
    dt_fine: float
    increments: np.ndarray
    level: int = 0

    def __post_init__(self):
        inc = np.array(self.increments, dtype=float, ndmin=2)
        inc.flags.writeable = False
        object.__setattr__(self, "increments", inc)

    @property
    def n(self) -> int:
        return self.increments.shape[0]

    @property
    def steps(self) -> int:
        return self.increments.shape[1]

    @property
    def horizon(self) -> float:
        return self.steps * self.dt_fine

    def W(self) -> np.ndarray:
        """Path values at the grid times, shape ``(n, steps + 1)`` with ``W(0) = 0``."""
        return np.concatenate([np.zeros((self.n, 1)), np.cumsum(self.increments, axis=1)], axis=1)

    def W_at(self, t: float) -> np.ndarray:
        j = int(round(t / self.dt_fine))
        if abs(j * self.dt_fine - t) > 1e-9 * max(1.0, t) or j > self.steps:
            raise ValueError(f"time {t} is not a grid time of this path")
        return self.increments[:, :j].sum(axis=1)

    def coarsen(self, m: int) -> NoisePath:
        """Sum blocks of ``m`` consecutive increments; trailing partial blocks are dropped."""
        if m < 1 or int(m) != m:
            raise ValueError("coarsening factor must be a positive integer")
        m = int(m)
        if m == 1:
            return self
        usable = (self.steps // m) * m
        coarse = self.increments[:, :usable].reshape(self.n, -1, m).sum(axis=2)
        return NoisePath(self.seed, self.dt_fine * m, coarse, self.level)

    def refine(self) -> NoisePath:
        """Halve the step by Brownian bridge midpoints, consistent with this path.

        Over a step ``[t, t + h]`` with increment ``D`` the midpoint split is
        ``D/2 + sqrt(h)/2 Z`` and ``D/2 - sqrt(h)/2 Z``. ``Z`` comes from a stream
        keyed on ``(seed, level + 1)`` so refinement is reproducible.
        """
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.level + 1,))
        Z = np.random.default_rng(ss).standard_normal(self.increments.shape)
        half = 0.5 * self.increments
        jitter = 0.5 * np.sqrt(self.dt_fine) * Z
        fine = np.empty((self.n, 2 * self.steps))
        fine[:, 0::2] = half + jitter
        fine[:, 1::2] = half - jitter
        return NoisePath(self.seed, 0.5 * self.dt_fine, fine, self.level + 1)

    def for_step(self, dt: float, steps: int) -> np.ndarray:
        """Increments at step ``dt`` (a multiple of ``dt_fine``) for the first ``steps`` steps."""
        ratio = dt / self.dt_fine
        m = int(round(ratio))
        if m < 1 or abs(m - ratio) > 1e-8 * ratio:
            raise ValueError(f"dt={dt} is not a multiple of the path step {self.dt_fine}")
        coarse = self.coarsen(m)
        if coarse.steps < steps:
            raise ValueError(f"path covers {coarse.steps} steps of size {dt}, need {steps}")
        return coarse.increments[:, :steps]


def sample_path(seed: int, n: int, dt_fine: float, steps: int) -> NoisePath:
    """Draw ``dW ~ Normal(0, dt_fine)`` for n independent Brownian motions."""
    if dt_fine <= 0 or steps < 1 or n < 1:
        raise ValueError("need dt_fine > 0, steps >= 1 and n >= 1")
    rng = np.random.default_rng(seed)
    inc = rng.standard_normal((n, steps)) * np.sqrt(dt_fine)
    return NoisePath(int(seed), float(dt_fine), inc)


def zero_path(n: int, dt_fine: float, steps: int) -> NoisePath:
    return NoisePath(0, float(dt_fine), np.zeros((n, steps)))
