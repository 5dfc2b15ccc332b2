"""Property checkers and comparison reports built on top of the solvers."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .noise import NoisePath
from .solver import HEUN_STABILITY_LIMIT, SolverConfig, Trajectory, integrate
from .spectral import TorusGrid
from .transport import detect_special_class
from .truncation import theta_value


# -- error norms and oracle reports ----------------------------------------

def error_norms(grid: TorusGrid, candidate: np.ndarray, reference: np.ndarray, beta: float) -> dict:
    diff = np.asarray(candidate) - np.asarray(reference)
    return {
        "Linf": float(np.max(np.abs(diff))),
        "L2": grid.l2_norm(diff),
        "Hbeta": grid.sobolev_norm(diff, beta),
    }


@dataclass
class OracleReport:
    oracle: str
    times: list[float]
    errors: dict[str, list[float]]
    metric: str
    tolerance: float
    passed: bool
    metadata: dict = field(default_factory=dict)

    @property
    def max_error(self) -> float:
        return max(self.errors[self.metric]) if self.times else 0.0

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)

    def to_csv(self, header: tuple[str, ...] = ()) -> str:
        buf = io.StringIO()
        for line in header:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "error_L2", "error_Linf", "error_Hbeta", "pass"])
        for j, t in enumerate(self.times):
            ok = self.errors[self.metric][j] <= self.tolerance
            w.writerow([repr(t), repr(self.errors["L2"][j]), repr(self.errors["Linf"][j]),
                        repr(self.errors["Hbeta"][j]), int(ok)])
        return buf.getvalue()


def compare_to_reference(name: str, grid: TorusGrid, times, candidate, reference, tolerance: float,
                         metric: str = "Linf", beta: float = 2.0, metadata: dict | None = None) -> OracleReport:
    """Pass iff every sampled error in ``metric`` is within ``tolerance``."""
    rows = [error_norms(grid, c, r, beta) for c, r in zip(candidate, reference)]
    errors = {key: [row[key] for row in rows] for key in ("Linf", "L2", "Hbeta")}
    passed = all(e <= tolerance for e in errors[metric])
    return OracleReport(name, [float(t) for t in times], errors, metric, float(tolerance), passed,
                        dict(metadata or {}, beta=beta))


def observed_order(dts, errors) -> float:
    """Least-squares slope of ``log(error)`` against ``log(dt)``."""
    return float(np.polyfit(np.log(np.asarray(dts)), np.log(np.asarray(errors)), 1)[0])


# -- Burgers companion ------------------------------------------------------

def burgers_companion(cfg: SolverConfig, path: NoisePath) -> Trajectory:
    """Stratonovich Heun integration of ``v = grad u`` for a special-class operator.

    Component j obeys
    ``dv_j = sum_i (a_i d_i v_j + c_i v_j) o dW_i
             + (d_j V + mu Delta v_j + gamma Delta^{k'} v_j - theta v . grad v_j) dt``
    with constant ``a_i`` and ``c_i = b_i``. ``theta`` is evaluated at ``sup |v|``.
    Snapshots have shape ``(S, n) + grid.shape``.
    """
    g = cfg.grid
    tag = detect_special_class(cfg.operator)
    if not tag.is_special:
        raise ValueError("the Burgers companion needs a special-class operator")
    if cfg.stiffness > HEUN_STABILITY_LIMIT:
        raise ValueError(f"|dt * symbol| = {cfg.stiffness:.3g} exceeds the Heun limit")
    n = g.dim
    a = np.array([float(ai.flat[0]) for ai in cfg.operator.a])
    c = tag.c
    noisy = bool(np.any(a) or np.any(c))
    symbol = cfg.kernels.symbol
    V_hat = cfg.kernels.V_hat
    forcing = np.array([g.derivative(V_hat, j) for j in range(n)])
    noise_sym = [a[i] * g._ik[i] + c[i] for i in range(n)]
    dW = path.for_step(cfg.dt, cfg.steps)

    def drift(Vh):
        out = forcing + symbol * Vh
        if cfg.nonlinear:
            v = np.array([g._ifft(Vh[j]) for j in range(n)])
            th = theta_value(cfg.cutoff, float(np.sqrt(np.max(np.sum(v**2, axis=0)))))
            for j in range(n):
                adv = sum(v[l] * g._ifft(g.derivative(Vh[j], l)) for l in range(n))
                out[j] -= th * g.dealias(g._fft(adv))
        return out

    def noise(Vh, dw):
        return sum(noise_sym[i] * Vh * dw[i] for i in range(n))

    U0 = g.dealias(g.to_spectral(cfg.u0))
    Vh = np.array([g.derivative(U0, j) for j in range(n)])
    times, snaps, L2, sup = [], [], [], []

    def record(t, Vh):
        v = np.array([g._ifft(Vh[j]) for j in range(n)])
        times.append(t)
        snaps.append(v)
        L2.append(float(np.sqrt(sum(g.l2_norm(vj) ** 2 for vj in v))))
        sup.append(float(np.sqrt(np.max(np.sum(v**2, axis=0)))))

    record(0.0, Vh)
    status, blowup_time, t_last = "completed", None, 0.0
    for s in range(1, cfg.steps + 1):
        t = s * cfg.dt
        f0 = drift(Vh)
        pred = Vh + cfg.dt * f0
        if noisy:
            pred = pred + noise(Vh, dW[:, s - 1])
        new = Vh + 0.5 * cfg.dt * (f0 + drift(pred))
        if noisy:
            new = new + 0.5 * (noise(Vh, dW[:, s - 1]) + noise(pred, dW[:, s - 1]))
        new = np.array([g.dealias(new[j]) for j in range(n)])
        if not np.all(np.isfinite(new)) or np.max(np.abs(new)) > cfg.blowup_threshold:
            status, blowup_time = "blowup", t
            break
        Vh, t_last = new, t
        if s % cfg.sample_stride == 0 or s == cfg.steps:
            record(t, Vh)
    if times[-1] != t_last:
        record(t_last, Vh)
    snaps = np.array(snaps)
    return Trajectory(
        times=np.array(times), diagnostics={"L2": np.array(L2), "sup": np.array(sup)},
        snapshot_times=np.array(times), snapshots=snaps, final_state=snaps[-1],
        final_time=t_last, status=status, blowup_time=blowup_time, scheme="strat_heun",
        dt=cfg.dt, seed=path.seed, k=cfg.k, metadata={"system": "burgers"},
    )


def gradient_gap(grid: TorusGrid, hjb: Trajectory, burgers: Trajectory) -> np.ndarray:
    """``||grad u(t) - v(t)||_{L^2}`` at the snapshot times shared by both runs."""
    out = []
    for t, v in zip(burgers.snapshot_times, burgers.snapshots):
        gu = grid.gradient(hjb.snapshot_at(t))
        out.append(np.sqrt(sum(grid.l2_norm(gu[j] - v[j]) ** 2 for j in range(grid.dim))))
    return np.array(out)


# -- gradient maximum principle --------------------------------------------

@dataclass
class MaxPrincipleReport:
    asserted: bool
    passed: bool | None
    tolerance: float
    violations: int
    worst_time: float
    worst_margin: float
    reason: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


def default_maxprin_tolerance(cfg: SolverConfig) -> float:
    return 10 * cfg.dt + cfg.grid.points ** (-cfg.k)


def max_principle_check(traj: Trajectory, cfg: SolverConfig, path: NoisePath | None = None,
                        tol: float | None = None) -> MaxPrincipleReport:
    """Check ``||grad u(t)||_inf <= exp(sum_i c_i W_i(t)) ||grad u(0)||_inf + tol``.

    For ``c = 0`` this is the plain gradient maximum principle. A nonzero
    ``c = b`` rescales ``grad u`` by ``exp(c . W)``, which the envelope factor
    accounts for. Outside the hypotheses (non-special operator or some
    ``d_i V > 0``) nothing is asserted.
    """
    g = cfg.grid
    tol = default_maxprin_tolerance(cfg) if tol is None else tol
    tag = detect_special_class(cfg.operator)
    reason = ""
    if not tag.is_special:
        reason = "operator is not in the special class"
    else:
        V_hat = g.to_spectral(cfg.V)
        if any(np.max(g._ifft(g.derivative(V_hat, i))) > 1e-12 for i in range(g.dim)):
            reason = "d_i V <= 0 fails on the grid"
    if reason:
        return MaxPrincipleReport(False, None, tol, 0, float("nan"), float("nan"), reason)
    grad = traj.diagnostics["grad_sup"]
    if np.any(tag.c != 0):
        if path is None:
            raise ValueError("a nonzero c = grad a + b needs the noise path for the envelope")
        factor = np.array([np.exp(float(tag.c @ path.W_at(t))) for t in traj.times])
    else:
        factor = np.ones_like(grad)
    margin = grad - factor * grad[0]
    worst = int(np.argmax(margin))
    violations = int(np.sum(margin > tol))
    return MaxPrincipleReport(True, violations == 0, tol, violations,
                              float(traj.times[worst]), float(margin[worst]))


# -- pathwise uniqueness -----------------------------------------------------

@dataclass
class UniquenessReport:
    delta: float
    seed: int
    bit_identical: bool | None
    envelope_ok: bool | None
    worst_ratio: float            # max_{t>0} gap^2 / envelope
    terminal_gap: float
    passed: bool

    def as_dict(self) -> dict:
        return asdict(self)


def uniqueness_experiment(cfg: SolverConfig, path: NoisePath, delta: float) -> UniquenessReport:
    """Two runs on one path from ``u0`` and ``u0 + delta sin(x_1)``.

    ``delta = 0`` requires bit-identical trajectories. Otherwise the squared L^2
    gap must stay below the Gronwall envelope
    ``||u1(0) - u2(0)||^2 exp(int_0^t (1 + ||u1||_{H^k} + ||u2||_{H^k}) ds)``
    built from the norms recorded along the two runs.
    """
    if delta < 0:
        raise ValueError("delta must be non-negative")
    cfg = cfg.replace(snapshot_stride=1)
    g = cfg.grid
    first = integrate(cfg, path)
    second = integrate(cfg.replace(u0=cfg.u0 + delta * np.sin(g.coords[0])), path)
    if delta == 0:
        same = (np.array_equal(first.snapshots, second.snapshots)
                and np.array_equal(first.final_state, second.final_state)
                and all(np.array_equal(first.diagnostics[key], second.diagnostics[key])
                        for key in first.diagnostics))
        return UniquenessReport(0.0, path.seed, same, None, 0.0,
                                g.l2_norm(first.final_state - second.final_state), same)
    m = min(len(first.times), len(second.times))
    t = first.times[:m]
    gap2 = np.array([g.l2_norm(first.snapshots[j] - second.snapshots[j]) ** 2 for j in range(m)])
    rate = 1.0 + first.diagnostics["Hk"][:m] + second.diagnostics["Hk"][:m]
    exponent = np.concatenate([[0.0], np.cumsum(0.5 * (rate[1:] + rate[:-1]) * np.diff(t))])
    envelope = gap2[0] * np.exp(exponent)
    ratio = gap2[1:] / envelope[1:] if m > 1 else np.zeros(1)
    ok = bool(np.all(gap2 <= envelope)) and not (first.blew_up or second.blew_up)
    return UniquenessReport(float(delta), path.seed, None, ok, float(ratio.max()),
                            float(np.sqrt(gap2[-1])), ok)


# -- gamma -> 0 refinement ---------------------------------------------------

@dataclass
class GammaStudy:
    gammas: list[float]
    diff_next: list[float]      # sup_t ||u^{g_j} - u^{g_{j+1}}||_{H^beta}
    diff_zero: list[float]      # sup_t ||u^{g_j} - u^0||_{H^beta}, positive gammas only
    beta: float
    slack: float
    monotone: bool

    def to_csv(self, header: tuple[str, ...] = ()) -> str:
        buf = io.StringIO()
        for line in header:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["gamma", "next_gamma", "sup_diff_next_Hbeta", "sup_diff_zero_Hbeta"])
        for j, d in enumerate(self.diff_next):
            dz = self.diff_zero[j] if j < len(self.diff_zero) else 0.0
            w.writerow([repr(self.gammas[j]), repr(self.gammas[j + 1]), repr(d), repr(dz)])
        return buf.getvalue()


def _is_monotone(seq, slack):
    return all(b <= a * slack for a, b in zip(seq, seq[1:]))


def gamma_convergence_study(cfg: SolverConfig, gammas, path: NoisePath, beta: float = 2.0,
                            slack: float = 1.05) -> GammaStudy:
    """Run the hyper-regularised equation for each gamma (descending) and gamma = 0."""
    gammas = [float(x) for x in gammas]
    if any(x <= 0 for x in gammas) or gammas != sorted(gammas, reverse=True):
        raise ValueError("gammas must be positive and sorted in descending order")
    g = cfg.grid
    w = g.sobolev_weights(beta)
    runs = [integrate(cfg.replace(gamma=x, snapshot_stride=1), path) for x in gammas + [0.0]]
    spectra = [np.array([g._fft(s) for s in r.snapshots]) for r in runs]
    axes = tuple(range(1, g.dim + 1))

    def sup_diff(A, B):
        m = min(len(A), len(B))
        return float(np.sqrt(np.max(np.sum(w * np.abs(A[:m] - B[:m]) ** 2, axis=axes))))

    diff_next = [sup_diff(spectra[j], spectra[j + 1]) for j in range(len(gammas))]
    diff_zero = [sup_diff(spectra[j], spectra[-1]) for j in range(len(gammas))]
    ok = _is_monotone(diff_next, slack) and _is_monotone(diff_zero, slack)
    return GammaStudy(gammas + [0.0], diff_next, diff_zero, beta, slack, ok)
