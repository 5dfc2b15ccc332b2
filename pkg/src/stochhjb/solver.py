"""Time integration of the stochastic HJB equation with transport noise.

The state lives in spectral space and is kept dealiased. Two schemes:

``ito_exp_em``
    Exponential Euler-Maruyama on the Ito form. The stiff linear part
    ``mu Delta + gamma Delta^{k'}`` is integrated exactly, the Ito drift
    ``V + 1/2 sum L_i^2 u - 1/2 theta |grad u|^2`` and the noise enter explicitly.
``strat_heun``
    Stochastic Heun predictor-corrector on the Stratonovich form, fully
    explicit; the linear part is folded into the drift, so configurations with
    ``|dt * symbol| > 2`` at the largest resolved mode are rejected.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from functools import cached_property
from math import floor

import numpy as np

from .errors import ConfigError
from .noise import NoisePath
from .spectral import TorusGrid
from .transport import TransportOperator
from .truncation import CutoffSpec, StoppingEvent, theta_value

SCHEMES = ("ito_exp_em", "strat_heun")
HEUN_STABILITY_LIMIT = 2.0


def default_k_prime(k: float) -> int:
    return 2 * floor(k) + 1


@dataclass(frozen=True, eq=False)
class SolverConfig:
    grid: TorusGrid
    u0: np.ndarray
    V: np.ndarray | None = None
    operator: TransportOperator | None = None
    mu: float = 0.1
    gamma: float = 0.0
    k: float = 3.0
    k_prime: int | None = None
    dt: float = 1e-4
    T: float = 0.5
    scheme: str = "ito_exp_em"
    cutoff: CutoffSpec | None = None
    nonlinear: bool = True
    truncation_respecting: bool = False
    sample_stride: int = 10
    snapshot_stride: int = 1
    blowup_threshold: float = 1e6

    def __post_init__(self):
        g = self.grid
        errs = []
        u0 = np.asarray(self.u0, dtype=float)
        V = np.zeros(g.shape) if self.V is None else np.asarray(self.V, dtype=float)
        for name, arr in (("u0", u0), ("V", V)):
            if arr.shape != g.shape:
                errs.append(f"{name}: shape {arr.shape} does not match grid {g.shape}")
            elif not np.all(np.isfinite(arr)):
                errs.append(f"{name}: values must be finite")
        op = TransportOperator.zero(g) if self.operator is None else self.operator
        if op.grid != g:
            errs.append("operator: coefficient grid differs from solver grid")
        kp = default_k_prime(self.k) if self.k_prime is None else self.k_prime
        if not self.mu > 0:
            errs.append(f"mu: must be > 0, got {self.mu}")
        if not self.gamma >= 0:
            errs.append(f"gamma: must be >= 0, got {self.gamma}")
        if not self.k > g.dim / 2 + 2:
            errs.append(f"k: need k > n/2 + 2 = {g.dim / 2 + 2}, got {self.k}")
        if int(kp) != kp or kp % 2 != 1:
            errs.append(f"k_prime: must be odd (even values are anti-dissipative), got {kp}")
        if self.scheme not in SCHEMES:
            errs.append(f"scheme: must be one of {SCHEMES}, got {self.scheme!r}")
        if not (self.dt > 0 and self.T > 0):
            errs.append("dt, T: must be positive")
        else:
            steps = round(self.T / self.dt)
            if steps < 1 or abs(steps * self.dt - self.T) > 1e-9 * self.T:
                errs.append(f"T: must be an integer multiple of dt, got T={self.T}, dt={self.dt}")
        if self.sample_stride < 1 or self.snapshot_stride < 1:
            errs.append("sample_stride, snapshot_stride: must be >= 1")
        if self.truncation_respecting and self.cutoff is None:
            errs.append("truncation_respecting: requires a cut-off")
        if not errs and self.scheme == "strat_heun" and self.stiffness > HEUN_STABILITY_LIMIT:
            errs.append(f"dt: strat_heun needs |dt * symbol| <= {HEUN_STABILITY_LIMIT} at the "
                        f"largest mode, got {self.stiffness:.3g}")
        if errs:
            raise ConfigError(errs)
        object.__setattr__(self, "u0", u0)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "operator", op)
        object.__setattr__(self, "k_prime", int(kp))

    @property
    def steps(self) -> int:
        return round(self.T / self.dt)

    @property
    def stiffness(self) -> float:
        """Stability budget ``dt * max |linear symbol|``."""
        kp = default_k_prime(self.k) if self.k_prime is None else self.k_prime
        xi2 = float(self.grid.xi_squared.max())
        return self.dt * (self.mu * xi2 + self.gamma * xi2**int(kp))

    def replace(self, **changes) -> SolverConfig:
        return replace(self, **changes)

    @cached_property
    def kernels(self) -> _Kernels:
        return _Kernels(self)


class _Kernels:
    """Precomputed multipliers and spectral right-hand sides for one config."""

    def __init__(self, cfg: SolverConfig):
        g = cfg.grid
        self.cfg = cfg
        self.grid = g
        self.op = cfg.operator
        self.symbol = g.linear_symbol(cfg.mu, cfg.gamma, cfg.k_prime)
        self.expo = np.exp(cfg.dt * self.symbol)
        self.V_hat = g.dealias(g._fft(cfg.V))
        self.hk_weights = g.sobolev_weights(cfg.k)
        self.l2_weight = (2 * np.pi) ** g.dim

    def gradient(self, U):
        g = self.grid
        return [g._ifft(ik * U) for ik in g._ik]

    def nonlinearity(self, U):
        """Spectral ``1/2 theta |grad u|^2`` plus the grad sup norm and theta used."""
        g = self.grid
        grads = self.gradient(U)
        sq = grads[0] ** 2
        for gi in grads[1:]:
            sq = sq + gi**2
        gs = float(np.sqrt(sq.max()))
        th = theta_value(self.cfg.cutoff, gs)
        return (0.5 * th) * g.dealias(g._fft(sq)), gs, th

    def ito_drift(self, U):
        out = self.V_hat.copy()
        if not self.op.is_zero:
            out += self.op.correction_hat(U)
        if self.cfg.nonlinear:
            out -= self.nonlinearity(U)[0]
        return out

    def strat_drift(self, U):
        out = self.V_hat + self.symbol * U
        if self.cfg.nonlinear:
            out -= self.nonlinearity(U)[0]
        return out

    def noise(self, U):
        if self.op.is_zero:
            return None
        u = None if self.op.is_constant else self.grid._ifft(U)
        return [self.op.apply_hat(i, U, u) for i in range(self.op.n)]

    def step_ito(self, U, dW):
        acc = U + self.cfg.dt * self.ito_drift(U)
        G = self.noise(U)
        if G is not None:
            for Gi, dw in zip(G, dW):
                acc += Gi * dw
        return self.grid.dealias(self.expo * acc)

    def step_heun(self, U, dW):
        dt = self.cfg.dt
        f0 = self.strat_drift(U)
        G0 = self.noise(U)
        pred = U + dt * f0
        if G0 is not None:
            for Gi, dw in zip(G0, dW):
                pred += Gi * dw
        f1 = self.strat_drift(pred)
        new = U + (0.5 * dt) * (f0 + f1)
        if G0 is not None:
            G1 = self.noise(pred)
            for Gi, Hi, dw in zip(G0, G1, dW):
                new += (0.5 * dw) * (Gi + Hi)
        return self.grid.dealias(new)

    def hk_norm(self, U) -> float:
        return float(np.sqrt(np.sum(self.hk_weights * (U.real**2 + U.imag**2))))

    def diagnostics(self, U) -> dict:
        grads = self.gradient(U)
        gs = float(np.sqrt(np.max(sum(gi**2 for gi in grads))))
        return {
            "L2": float(np.sqrt(self.l2_weight * np.sum(np.abs(U) ** 2))),
            "Hk": self.hk_norm(U),
            "grad_sup": gs,
            "theta": theta_value(self.cfg.cutoff, gs),
            "mean_mode": float(U.flat[0].real),
        }


def _initial_hat(cfg: SolverConfig) -> np.ndarray:
    g = cfg.grid
    return g.dealias(g.to_spectral(cfg.u0))


def ito_drift(cfg: SolverConfig, u: np.ndarray) -> np.ndarray:
    """``V + 1/2 sum L_i^2 u - 1/2 theta |grad u|^2`` (stiff linear part excluded)."""
    g = cfg.grid
    return g._ifft(cfg.kernels.ito_drift(g.to_spectral(u)))


def strat_drift(cfg: SolverConfig, u: np.ndarray) -> np.ndarray:
    """Full Stratonovich drift ``V + mu Delta u + gamma Delta^{k'} u - 1/2 theta |grad u|^2``."""
    g = cfg.grid
    return g._ifft(cfg.kernels.strat_drift(g.to_spectral(u)))


def _as_increment(cfg, dW):
    dW = np.atleast_1d(np.asarray(dW, dtype=float))
    if dW.shape != (cfg.grid.dim,):
        raise ValueError(f"need {cfg.grid.dim} Brownian increments, got shape {dW.shape}")
    return dW


def step_ito_exp_em(cfg: SolverConfig, u: np.ndarray, dW) -> np.ndarray:
    if cfg.scheme != "ito_exp_em":
        raise ValueError(f"config scheme is {cfg.scheme!r}, not 'ito_exp_em'")
    g = cfg.grid
    out = g._ifft(cfg.kernels.step_ito(g.to_spectral(u), _as_increment(cfg, dW)))
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite state after Ito step")
    return out


def step_strat_heun(cfg: SolverConfig, u: np.ndarray, dW) -> np.ndarray:
    if cfg.scheme != "strat_heun":
        raise ValueError(f"config scheme is {cfg.scheme!r}, not 'strat_heun'")
    g = cfg.grid
    out = g._ifft(cfg.kernels.step_heun(g.to_spectral(u), _as_increment(cfg, dW)))
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite state after Heun step")
    return out


DIAGNOSTIC_KEYS = ("L2", "Hk", "grad_sup", "theta", "mean_mode")


@dataclass
class Trajectory:
    """Sampled solution of one integration.

    ``snapshots`` holds physical fields at ``snapshot_times``; for the Burgers
    companion they carry a leading component axis.
    """

    times: np.ndarray
    diagnostics: dict[str, np.ndarray]
    snapshot_times: np.ndarray
    snapshots: np.ndarray
    final_state: np.ndarray
    final_time: float
    status: str = "completed"
    stopping: StoppingEvent | None = None
    blowup_time: float | None = None
    scheme: str = ""
    dt: float = 0.0
    seed: int | None = None
    k: float = 3.0
    metadata: dict = field(default_factory=dict)

    @property
    def blew_up(self) -> bool:
        return self.status == "blowup"

    def snapshot_at(self, t: float, rtol: float = 1e-9) -> np.ndarray:
        j = int(np.argmin(np.abs(self.snapshot_times - t)))
        if abs(self.snapshot_times[j] - t) > rtol * max(1.0, abs(t)):
            raise KeyError(f"no snapshot at t={t}")
        return self.snapshots[j]

    def to_csv(self, header: tuple[str, ...] = ()) -> str:
        buf = io.StringIO()
        for line in header:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("t",) + DIAGNOSTIC_KEYS + ("blowup", "stopped"))
        stop_t = self.stopping.time if self.stopping is not None and self.stopping.hit else None
        for j, t in enumerate(self.times):
            row = [repr(float(t))] + [repr(float(self.diagnostics[key][j])) for key in DIAGNOSTIC_KEYS]
            is_last = j == len(self.times) - 1
            row.append(int(self.blew_up and is_last))
            row.append(int(stop_t is not None and t >= stop_t and (j == 0 or self.times[j - 1] < stop_t)))
            w.writerow(row)
        return buf.getvalue()


def integrate(cfg: SolverConfig, path: NoisePath) -> Trajectory:
    """Integrate ``cfg`` along ``path`` and return the sampled trajectory.

    Integration halts at blow-up (non-finite state or H^k norm above
    ``cfg.blowup_threshold``) and, in truncation-respecting mode, at the first
    step where the H^k norm reaches ``r / C``.
    """
    g = cfg.grid
    if path.n != g.dim:
        raise ValueError(f"path has {path.n} Brownian motions, grid needs {g.dim}")
    steps = cfg.steps
    dW = path.for_step(cfg.dt, steps)
    kern = cfg.kernels
    step = kern.step_ito if cfg.scheme == "ito_exp_em" else kern.step_heun

    U = _initial_hat(cfg)
    times, rows, snap_t, snaps = [], [], [], []

    def record(t, U):
        times.append(t)
        rows.append(kern.diagnostics(U))
        if (len(times) - 1) % cfg.snapshot_stride == 0:
            snap_t.append(t)
            snaps.append(g._ifft(U))

    record(0.0, U)
    level = cfg.cutoff.threshold if cfg.cutoff is not None else None
    hk_prev = kern.hk_norm(U)
    stopping = StoppingEvent(True, 0.0) if level is not None and hk_prev >= level else None
    status, blowup_time, t_last = "completed", None, 0.0

    if stopping is not None and cfg.truncation_respecting:
        status = "stopped"
    else:
        for s in range(1, steps + 1):
            t = s * cfg.dt
            U_new = step(U, dW[:, s - 1])
            hk = kern.hk_norm(U_new)
            if not np.isfinite(hk) or hk > cfg.blowup_threshold:
                status, blowup_time = "blowup", t
                break
            U, t_last = U_new, t
            crossed = False
            if level is not None and stopping is None and hk >= level:
                frac = (level - hk_prev) / (hk - hk_prev)
                stopping = StoppingEvent(True, (s - 1 + frac) * cfg.dt)
                crossed = True
            hk_prev = hk
            if crossed and cfg.truncation_respecting:
                record(t, U)
                status = "stopped"
                break
            if s % cfg.sample_stride == 0 or s == steps:
                record(t, U)

    if times[-1] != t_last:
        record(t_last, U)
    if snap_t[-1] != t_last:
        snap_t.append(t_last)
        snaps.append(g._ifft(U))
    if level is not None and stopping is None:
        stopping = StoppingEvent(False)
    diag = {key: np.array([r[key] for r in rows]) for key in DIAGNOSTIC_KEYS}
    return Trajectory(
        times=np.array(times), diagnostics=diag, snapshot_times=np.array(snap_t),
        snapshots=np.array(snaps), final_state=g._ifft(U), final_time=t_last,
        status=status, stopping=stopping, blowup_time=blowup_time, scheme=cfg.scheme,
        dt=cfg.dt, seed=path.seed, k=cfg.k,
    )
