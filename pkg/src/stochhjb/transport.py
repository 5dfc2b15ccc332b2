"""First-order transport operators ``L_i u = a_i d_i u + b_i u`` on the torus."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .spectral import TorusGrid

SPECIAL_CLASS_ATOL = 1e-10


@dataclass(frozen=True)
class SpecialClassTag:
    is_special: bool
    c: np.ndarray  # c_i = d_i a_i + b_i, meaningful only when is_special


@dataclass(frozen=True, eq=False)
class TransportOperator:
    """Coefficient family ``{a_i, b_i}``, one operator per axis and per Brownian motion.

    Coefficients are physical fields on ``grid``. The smoothness budget (the
    discrete ``W^{m,inf}`` norms for ``m <= budget_order``) is computed on
    construction and kept in ``smoothness``.
    """

    grid: TorusGrid
    a: tuple[np.ndarray, ...]
    b: tuple[np.ndarray, ...]
    budget_order: int = 4
    smoothness: dict = field(init=False, repr=False)

    def __post_init__(self):
        g = self.grid
        if len(self.a) != g.dim or len(self.b) != g.dim:
            raise ValueError(f"need {g.dim} coefficients a_i and b_i, got {len(self.a)}, {len(self.b)}")
        a = tuple(np.asarray(g.check_field(np.broadcast_to(ai, g.shape), "a_i"), dtype=float).copy()
                  for ai in self.a)
        b = tuple(np.asarray(g.check_field(np.broadcast_to(bi, g.shape), "b_i"), dtype=float).copy()
                  for bi in self.b)
        for arr in a + b:
            if not np.all(np.isfinite(arr)):
                raise ValueError("transport coefficients must be finite")
            arr.flags.writeable = False
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        budget = {
            "a": [[g.w_inf_norm(ai, m) for m in range(self.budget_order + 1)] for ai in a],
            "b": [[g.w_inf_norm(bi, m) for m in range(self.budget_order + 1)] for bi in b],
        }
        object.__setattr__(self, "smoothness", budget)

    @classmethod
    def constant(cls, grid: TorusGrid, a, b) -> TransportOperator:
        a = np.broadcast_to(np.asarray(a, dtype=float), (grid.dim,))
        b = np.broadcast_to(np.asarray(b, dtype=float), (grid.dim,))
        return cls(grid, tuple(np.full(grid.shape, v) for v in a),
                   tuple(np.full(grid.shape, v) for v in b))

    @classmethod
    def zero(cls, grid: TorusGrid) -> TransportOperator:
        return cls.constant(grid, 0.0, 0.0)

    @property
    def n(self) -> int:
        return self.grid.dim

    @cached_property
    def is_constant(self) -> bool:
        return all(np.ptp(c) == 0.0 for c in self.a + self.b)

    @cached_property
    def is_zero(self) -> bool:
        return all(not np.any(c) for c in self.a + self.b)

    @cached_property
    def _const_symbols(self) -> tuple[np.ndarray, ...]:
        g = self.grid
        return tuple(float(ai.flat[0]) * g._ik[i] + float(bi.flat[0])
                     for i, (ai, bi) in enumerate(zip(self.a, self.b)))

    # -- spectral kernels used by the solvers -----------------------------

    def apply_hat(self, i: int, U: np.ndarray, u: np.ndarray | None = None) -> np.ndarray:
        """Spectral ``L_i u`` for spectral input ``U``, dealiased.

        ``u`` may carry the physical field when the caller already has it.
        """
        g = self.grid
        if self.is_constant:
            return g.dealias(self._const_symbols[i] * U)
        if u is None:
            u = g._ifft(U)
        ux = g._ifft(g._ik[i] * U)
        return g.dealias(g._fft(self.a[i] * ux + self.b[i] * u))

    def correction_hat(self, U: np.ndarray) -> np.ndarray:
        """Spectral ``1/2 sum_i L_i(L_i u)``."""
        out = np.zeros_like(U)
        for i in range(self.n):
            out += self.apply_hat(i, self.apply_hat(i, U))
        return 0.5 * out


def _check(op: TransportOperator, i: int, u: np.ndarray) -> None:
    if not 0 <= i < op.n:
        raise ValueError(f"operator index {i} out of range for n={op.n}")
    op.grid.check_field(u)


def apply_L(op: TransportOperator, i: int, u: np.ndarray) -> np.ndarray:
    _check(op, i, u)
    g = op.grid
    return g._ifft(op.apply_hat(i, g.to_spectral(u), u))


def apply_L_adjoint(op: TransportOperator, i: int, phi: np.ndarray) -> np.ndarray:
    """``L_i^* phi = -d_i(a_i phi) + b_i phi`` with dealiased products."""
    _check(op, i, phi)
    g = op.grid
    aphi = g.dealias(g.to_spectral(op.a[i] * phi))
    bphi = g.dealias(g.to_spectral(op.b[i] * phi))
    return g._ifft(-g.derivative(aphi, i) + bphi)


def strat_correction(op: TransportOperator, u: np.ndarray) -> np.ndarray:
    """Ito drift correction ``1/2 sum_i L_i^2 u``."""
    g = op.grid
    return g._ifft(op.correction_hat(g.to_spectral(g.check_field(u))))


def bound_constant(op: TransportOperator) -> float:
    """Constant ``C_ab`` with ``sum_i <L_i^2 u, u> + <L_i u, L_i u> <= C_ab ||u||^2``.

    Integrating by parts along axis i gives the exact identity

        <L^2 u, u> + <L u, L u> = < m u, u >,
        m = 2 b^2 - 2 a' b - a b' + a'^2 / 2 + a a'' / 2,   (' = d/dx_i)

    so the sup of |m|, bounded term by term by coefficient sup norms, is sufficient.
    """
    g = op.grid
    total = 0.0
    for i in range(op.n):
        A = g.to_spectral(op.a[i])
        B = g.to_spectral(op.b[i])
        sa = np.max(np.abs(op.a[i]))
        sb = np.max(np.abs(op.b[i]))
        da = np.max(np.abs(g._ifft(g.derivative(A, i))))
        dda = np.max(np.abs(g._ifft(g.derivative(g.derivative(A, i), i))))
        db = np.max(np.abs(g._ifft(g.derivative(B, i))))
        total += 2 * sb**2 + 2 * da * sb + sa * db + 0.5 * da**2 + 0.5 * sa * dda
    return float(total)


def operator_bound_diag(op: TransportOperator, u: np.ndarray) -> tuple[float, float]:
    """Return ``(s, bound)`` with ``s = sum_i <L_i^2 u, u> + <L_i u, L_i u>``."""
    g = op.grid
    U = g.to_spectral(g.check_field(u))
    s = 0.0
    for i in range(op.n):
        LU = op.apply_hat(i, U)
        LLU = op.apply_hat(i, LU)
        Lu = g._ifft(LU)
        s += g.inner(g._ifft(LLU), u) + g.inner(Lu, Lu)
    return float(s), bound_constant(op) * g.l2_norm(u) ** 2


def detect_special_class(op: TransportOperator, atol: float = SPECIAL_CLASS_ATOL) -> SpecialClassTag:
    """Special class: ``grad a_i`` and ``b_i`` constant over the grid.

    A periodic ``a_i`` with constant gradient must have zero gradient, so in
    practice this means constant ``a_i`` and ``b_i``.
    """
    g = op.grid
    special = True
    c = np.zeros(op.n)
    for i in range(op.n):
        A = g.to_spectral(op.a[i])
        for j in range(op.n):
            daj = g._ifft(g.derivative(A, j))
            if np.ptp(daj) > atol:
                special = False
        if np.ptp(op.b[i]) > atol:
            special = False
        c[i] = float(np.mean(g._ifft(g.derivative(A, i)))) + float(np.mean(op.b[i]))
    return SpecialClassTag(special, c)
