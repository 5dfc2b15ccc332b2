"""Mild formulation of the hyper-regularised Ito equation, solved by Picard iteration.

With ``S(t) = exp(t gamma Delta^{k'})`` the fixed-point map on the time grid
``t_m = m dt`` is

    (F u)(t_m) = S(t_m) u0 + sum_{j<m} S(t_m - t_j) [ dt (F2(u_j) - 1/2 F1(u_j))
                                                    + sum_i L_i u_j dW_{i,j} ]

with ``F1 = theta |grad u|^2`` and ``F2 = V + mu Delta u + 1/2 sum L_i^2 u``
(left-endpoint quadrature for both integrals). The convolution is evaluated by
the recursion ``Y_m = S(dt) (Y_{m-1} + g_{m-1})``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError
from .noise import NoisePath
from .solver import SolverConfig
from .spectral import TorusGrid


def semigroup_symbol(grid: TorusGrid, gamma: float, k_prime: int, t: float) -> np.ndarray:
    if t < 0:
        raise ValueError("semigroup time must be non-negative")
    return np.exp(t * grid.linear_symbol(0.0, gamma, k_prime))


def semigroup_apply(grid: TorusGrid, gamma: float, k_prime: int, t: float, F: np.ndarray) -> np.ndarray:
    """Multiply spectral ``F`` by ``exp(-t gamma |xi|^{2k'})``."""
    return semigroup_symbol(grid, gamma, k_prime, t) * grid.check_field(F)


@dataclass(frozen=True, eq=False)
class MildProblem:
    cfg: SolverConfig
    path: NoisePath
    increments: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.cfg.gamma > 0:
            raise ValueError("the mild formulation needs gamma > 0 for a smoothing semigroup")
        if self.path.n != self.cfg.grid.dim:
            raise ValueError("path dimension does not match the grid")
        object.__setattr__(self, "increments", self.path.for_step(self.cfg.dt, self.cfg.steps))

    @property
    def M(self) -> int:
        return self.cfg.steps

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.M + 1) * self.cfg.dt


def _integrand_hat(prob: MildProblem, U: np.ndarray, j: int) -> np.ndarray:
    cfg = prob.cfg
    g = cfg.grid
    kern = cfg.kernels
    out = kern.V_hat + cfg.mu * g.laplacian(U)
    op = cfg.operator
    if not op.is_zero:
        out = out + op.correction_hat(U)
    if cfg.nonlinear:
        out = out - kern.nonlinearity(U)[0]
    out = cfg.dt * out
    G = kern.noise(U)
    if G is not None:
        for Gi, dw in zip(G, prob.increments[:, j]):
            out = out + Gi * dw
    return out


def _picard_hat(prob: MildProblem, U_grid: np.ndarray) -> np.ndarray:
    cfg = prob.cfg
    g = cfg.grid
    S_dt = semigroup_symbol(g, cfg.gamma, cfg.k_prime, cfg.dt)
    out = np.empty_like(U_grid)
    Y = g.dealias(g.to_spectral(cfg.u0))
    out[0] = Y
    for m in range(1, prob.M + 1):
        Y = g.dealias(S_dt * (Y + _integrand_hat(prob, U_grid[m - 1], m - 1)))
        if not np.all(np.isfinite(Y)):
            raise FloatingPointError(f"non-finite Picard iterate at node {m}")
        out[m] = Y
    return out


def picard_apply(prob: MildProblem, u_grid: np.ndarray) -> np.ndarray:
    """Apply the fixed-point map to physical fields on all ``M + 1`` time nodes."""
    g = prob.cfg.grid
    u_grid = np.asarray(u_grid, dtype=float)
    if u_grid.shape != (prob.M + 1,) + g.shape:
        raise ValueError(f"need fields on {prob.M + 1} nodes, got shape {u_grid.shape}")
    U = np.array([g.to_spectral(u) for u in u_grid])
    return np.array([g._ifft(Y) for Y in _picard_hat(prob, U)])


@dataclass
class PicardResult:
    fields: np.ndarray          # physical fields on the time nodes
    iterations: int
    ratios: list[float]
    residuals: list[float]      # sup_m ||u^{(j+1)}_m - u^{(j)}_m||_{H^k}
    converged: bool

    def report(self) -> dict:
        return {"iterations": self.iterations, "converged": self.converged,
                "ratios": [float(r) for r in self.ratios],
                "residuals": [float(r) for r in self.residuals]}


def fixed_point_solve(prob: MildProblem, tol: float, max_iter: int = 50) -> PicardResult:
    """Iterate ``u <- F u`` from ``u(t) = u0`` until successive iterates differ by < tol.

    The returned fields are the last iterate whose Picard residual was measured,
    so ``||F u* - u*|| < tol`` holds exactly for them.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    cfg = prob.cfg
    g = cfg.grid
    w = g.sobolev_weights(cfg.k)
    U0 = g.dealias(g.to_spectral(cfg.u0))
    U = np.broadcast_to(U0, (prob.M + 1,) + g.shape).copy()
    residuals, ratios = [], []
    for it in range(1, max_iter + 1):
        FU = _picard_hat(prob, U)
        diff = float(np.sqrt(np.max(np.sum(w * np.abs(FU - U) ** 2, axis=tuple(range(1, g.dim + 1))))))
        if residuals:
            ratios.append(diff / residuals[-1] if residuals[-1] > 0 else 0.0)
        residuals.append(diff)
        if diff < tol:
            fields = np.array([g._ifft(Y) for Y in U])
            return PicardResult(fields, it, ratios, residuals, True)
        U = FU
    result = PicardResult(np.array([g._ifft(Y) for Y in U]), max_iter, ratios, residuals, False)
    raise ConvergenceError(f"Picard iteration did not reach tol={tol} in {max_iter} iterations",
                           result.report())
