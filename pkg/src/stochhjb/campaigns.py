"""Campaign orchestration and the on-disk artifact tree.

Every campaign is a fan-out of independent per-seed tasks followed by a
single-threaded reduce. Outputs land in ``<output>/<config hash>/``; CSV files
carry the hash in a ``#`` header line and JSON files in a ``config_hash`` key.
Only ``manifest.json`` holds timestamps, so all other files are byte-identical
across reruns of the same config and seed.
"""

from __future__ import annotations

import csv
import io
import json
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy

from .config import RunConfig, validate
from .diagnostics import (burgers_companion, compare_to_reference, gamma_convergence_study,
                          gradient_gap, max_principle_check, observed_order, uniqueness_experiment)
from .errors import ConvergenceError, OracleError
from .mild import MildProblem, fixed_point_solve
from .noise import sample_path, zero_path
from .oracles import check_shift_operator, cole_hopf_exact, feynman_kac_mc, shift_oracle
from .solver import integrate

MANIFEST = "manifest.json"
SUMMARY = "summary.json"


class OutputConflict(RuntimeError):
    """The target directory holds files written under another config hash."""


@dataclass
class CampaignOutcome:
    passed: bool
    directory: Path
    summary: dict


# -- helpers -----------------------------------------------------------------

def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_jsonable) + "\n"


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialise {type(x).__name__}")


def _table(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _noise(cfg, seed, dt_fine=None):
    dt_fine = cfg.dt if dt_fine is None else dt_fine
    steps = round(cfg.T / dt_fine)
    if cfg.operator.is_zero:
        return zero_path(cfg.grid.dim, dt_fine, steps)
    return sample_path(seed, cfg.grid.dim, dt_fine, steps)


# -- per-seed tasks ---------------------------------------------------------

def _task_single(rc: RunConfig, seed: int) -> dict:
    cfg = rc.solver_config()
    traj = integrate(cfg, _noise(cfg, seed))
    summary = {
        "seed": seed, "status": traj.status, "final_time": traj.final_time,
        "blowup_time": traj.blowup_time,
        "max_Hk": float(np.max(traj.diagnostics["Hk"])),
        "max_grad_sup": float(np.max(traj.diagnostics["grad_sup"])),
        "stopping": None if traj.stopping is None else
        {"hit": traj.stopping.hit, "time": traj.stopping.time if traj.stopping.hit else None},
    }
    return {
        "files": {f"trajectory_seed{seed}.csv": traj.to_csv()},
        "summary": summary, "passed": not traj.blew_up,
        "times": traj.times.tolist(), "Hk": traj.diagnostics["Hk"].tolist(),
        "L2": traj.diagnostics["L2"].tolist(),
    }


def _task_dt_refine(rc: RunConfig, seed: int) -> dict:
    base = rc.solver_config()
    dts = sorted(rc.options["dts"], reverse=True)
    path = _noise(base, seed, dt_fine=dts[-1])
    g = base.grid
    if rc.options["reference"] == "scheme_gap":
        errs = []
        for dt in dts:
            ito = integrate(base.replace(dt=dt, scheme="ito_exp_em"), path).final_state
            heun = integrate(base.replace(dt=dt, scheme="strat_heun"), path).final_state
            errs.append(g.l2_norm(ito - heun))
        used = dts
    else:
        finals = [integrate(base.replace(dt=dt), path).final_state for dt in dts]
        errs = [g.l2_norm(f - finals[-1]) for f in finals[:-1]]
        used = dts[:-1]
    return {"summary": {"seed": seed, "dts": used, "errors": errs}, "passed": None}


def _task_gamma(rc: RunConfig, seed: int) -> dict:
    cfg = rc.solver_config()
    study = gamma_convergence_study(cfg, rc.options["gammas"], _noise(cfg, seed),
                                    beta=rc.options["beta"], slack=rc.options["slack"])
    summary = {"seed": seed, "gammas": study.gammas, "diff_next": study.diff_next,
               "diff_zero": study.diff_zero, "monotone": study.monotone}
    return {"files": {f"gamma_seed{seed}.csv": study.to_csv()}, "summary": summary,
            "passed": study.monotone}


def _task_oracle(rc: RunConfig, seed: int) -> dict:
    o = rc.options
    cfg = rc.solver_config()
    g = cfg.grid
    oracle = o["oracle"]
    meta = {"seed": seed, "dt": cfg.dt, "N": g.points}
    if oracle == "feynman_kac":
        if not cfg.operator.is_zero:
            raise OracleError("the Feynman-Kac oracle needs the noise switched off")
        probes = o["probes"]
        if probes is None:
            base = np.linspace(0, 2 * np.pi, 5, endpoint=False) + 0.1
            probes = [[float(p)] * g.dim for p in base]
        pts = np.asarray(probes, dtype=float)
        mc = feynman_kac_mc(g, cfg.u0, cfg.V, cfg.mu, cfg.T, pts, o["n_paths"], seed)
        exact = g.interpolator(cole_hopf_exact(g, cfg.u0, cfg.mu, cfg.V, cfg.T)[0])(pts.T)
        width = 3.0 if o["tolerance"] is None else o["tolerance"]
        ok = np.abs(mc.u - exact) <= width * mc.half_width
        rows = [list(p) + [u, hw, e, int(k)] for p, u, hw, e, k in zip(pts.tolist(), mc.u, mc.half_width, exact, ok)]
        header = [f"x{i}" for i in range(g.dim)] + ["u_mc", "half_width", "u_exact", "pass"]
        summary = {"oracle": oracle, "n_paths": o["n_paths"], "band_multiple": width,
                   "max_error_over_halfwidth": float(np.max(np.abs(mc.u - exact) / np.maximum(mc.half_width, 1e-300))),
                   "passed": bool(ok.all()), **meta}
        return {"files": {f"oracle_seed{seed}.csv": _table(header, rows)}, "summary": summary,
                "passed": bool(ok.all())}
    if oracle == "burgers":
        path = _noise(cfg, seed)
        hjb = integrate(cfg.replace(snapshot_stride=1), path)
        bur = burgers_companion(cfg, path)
        gaps = gradient_gap(g, hjb, bur)
        tol = 10 * cfg.dt if o["tolerance"] is None else o["tolerance"]
        ok = bool(np.all(gaps <= tol))
        rows = [[t, e, int(e <= tol)] for t, e in zip(bur.snapshot_times, gaps)]
        summary = {"oracle": oracle, "tolerance": tol, "max_gap": float(gaps.max()), "passed": ok, **meta}
        return {"files": {f"oracle_seed{seed}.csv": _table(["t", "gap_L2", "pass"], rows)},
                "summary": summary, "passed": ok}
    if oracle == "cole_hopf":
        if not cfg.operator.is_zero:
            raise OracleError("the Cole-Hopf oracle needs the noise switched off")
        tol = 1e-4 if o["tolerance"] is None else o["tolerance"]
    else:
        nu = float(cfg.operator.a[0].flat[0]) ** 2
        try:
            check_shift_operator(cfg.operator, nu)
        except ValueError as exc:
            raise OracleError(str(exc)) from None
        if np.any(cfg.V != 0):
            raise OracleError("the shift oracle needs V = 0")
        tol = 5e-3 if o["tolerance"] is None else o["tolerance"]
    path = _noise(cfg, seed)
    traj = integrate(cfg.replace(snapshot_stride=1), path)
    times = traj.snapshot_times if o["sample_times"] is None else np.asarray(o["sample_times"])
    cand = [traj.snapshot_at(t) for t in times]
    if oracle == "cole_hopf":
        ref = cole_hopf_exact(g, cfg.u0, cfg.mu, cfg.V, cfg.T, times, substep=cfg.dt / 10)
    else:
        ref = shift_oracle(g, cfg.u0, cfg.mu, nu, path, cfg.T, times)
    report = compare_to_reference(oracle, g, times, cand, ref, tol, beta=cfg.k - 1, metadata=meta)
    summary = {"oracle": oracle, "tolerance": tol, "max_error": report.max_error,
               "passed": report.passed, **meta}
    return {"files": {f"oracle_seed{seed}.csv": report.to_csv()}, "summary": summary,
            "passed": report.passed}


def _task_maxprin(rc: RunConfig, seed: int) -> dict:
    cfg = rc.solver_config()
    path = _noise(cfg, seed)
    traj = integrate(cfg, path)
    rep = max_principle_check(traj, cfg, path, rc.options["tolerance"])
    return {"files": {f"trajectory_seed{seed}.csv": traj.to_csv()},
            "summary": dict(rep.as_dict(), seed=seed), "passed": rep.passed}


def _task_uniqueness(rc: RunConfig, seed: int) -> dict:
    cfg = rc.solver_config()
    path = _noise(cfg, seed)
    reports = [uniqueness_experiment(cfg, path, d) for d in rc.options["deltas"]]
    summary = {"seed": seed, "runs": [r.as_dict() for r in reports]}
    ok = all(r.passed for r in reports)
    positive = [r for r in reports if r.delta > 0]
    if len(positive) >= 2:
        lo, hi = min(positive, key=lambda r: r.delta), max(positive, key=lambda r: r.delta)
        scale = hi.delta / lo.delta
        ratio = hi.terminal_gap / lo.terminal_gap if lo.terminal_gap > 0 else float("inf")
        linear = 0.5 <= ratio / scale <= 2.0
        summary["gap_ratio"] = {"deltas": [lo.delta, hi.delta], "ratio": ratio,
                                "linear_scale": scale, "linear": linear}
        ok = ok and linear
    return {"summary": summary, "passed": ok}


def _task_picard(rc: RunConfig, seed: int) -> dict:
    cfg = rc.solver_config()
    g = cfg.grid
    path = _noise(cfg, seed)
    try:
        res = fixed_point_solve(MildProblem(cfg, path), rc.options["picard_tol"], rc.options["max_iter"])
    except ConvergenceError as exc:
        return {"summary": {"seed": seed, "picard": exc.report, "converged": False}, "passed": False}
    traj = integrate(cfg.replace(sample_stride=1, snapshot_stride=1), path)
    gaps = [g.l2_norm(a - b) for a, b in zip(res.fields, traj.snapshots)]
    tol = 10 * cfg.dt if rc.options["tolerance"] is None else rc.options["tolerance"]
    ok = res.converged and all(r < 1 for r in res.ratios) and max(gaps) <= tol
    summary = {"seed": seed, "picard": res.report(), "sup_gap_L2": max(gaps), "tolerance": tol,
               "passed": ok}
    return {"summary": summary, "passed": ok}


_TASKS = {
    "single": _task_single, "ensemble": _task_single, "dt_refine": _task_dt_refine,
    "gamma_refine": _task_gamma, "oracle_check": _task_oracle, "maxprin_check": _task_maxprin,
    "uniqueness": _task_uniqueness, "picard_crosscheck": _task_picard,
}


def _run_task(args):
    data, base_dir, seed = args
    rc = validate(data, base_dir)
    return _TASKS[rc.campaign](rc, seed)


# -- reduce -----------------------------------------------------------------

def _reduce_ensemble(results) -> tuple[dict, dict, bool]:
    m = min(len(r["times"]) for r in results)
    times = results[0]["times"][:m]
    Hk = np.array([r["Hk"][:m] for r in results])
    L2 = np.array([r["L2"][:m] for r in results])
    hk4 = np.mean(Hk**4, axis=0)
    l2sq = np.mean(L2**2, axis=0)
    blowups = sum(1 for r in results if not r["passed"])
    rows = [[t, a, b] for t, a, b in zip(times, l2sq, hk4)]
    files = {"moments.csv": _table(["t", "mean_L2_sq", "mean_Hk_4"], rows)}
    worst = float(np.max(hk4))
    summary = {"max_mean_Hk_4": worst, "max_mean_L2_sq": float(np.max(l2sq)),
               "blowups": blowups, "members": len(results)}
    return files, summary, blowups == 0 and bool(np.isfinite(worst))


def _reduce_dt(rc, results) -> tuple[dict, dict, bool]:
    dts = results[0]["summary"]["dts"]
    errs = np.array([r["summary"]["errors"] for r in results])
    rms = np.sqrt(np.mean(errs**2, axis=0))
    monotone = all(b < a for a, b in zip(rms, rms[1:]))
    order = observed_order(dts, rms) if len(dts) >= 2 and np.all(rms > 0) else float("nan")
    ok = monotone and order >= rc.options["min_order"]
    rows = [[dt, e] + list(errs[:, j]) for j, (dt, e) in enumerate(zip(dts, rms))]
    header = ["dt", "rms_error"] + [f"seed{r['summary']['seed']}" for r in results]
    summary = {"reference": rc.options["reference"], "dts": dts, "rms_errors": rms.tolist(),
               "observed_order": order, "monotone": monotone, "min_order": rc.options["min_order"]}
    return {"errors.csv": _table(header, rows)}, summary, ok


def run_tasks(rc: RunConfig, workers: int | None = None) -> list[dict]:
    workers = rc.data["workers"] if workers is None else workers
    jobs = [(rc.data, str(rc.base_dir), s) for s in rc.seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_task, jobs))
    return [_run_task(j) for j in jobs]


def execute(rc: RunConfig) -> tuple[dict, dict, bool]:
    """Run the campaign in memory: returns (files, summary, passed)."""
    results = run_tasks(rc)
    files: dict[str, str] = {}
    for r in results:
        files.update(r.get("files", {}))
    if rc.campaign == "ensemble":
        extra, summary, ok = _reduce_ensemble(results)
        files.update(extra)
    elif rc.campaign == "dt_refine":
        extra, summary, ok = _reduce_dt(rc, results)
        files.update(extra)
    else:
        flags = [r["passed"] for r in results]
        asserted = [f for f in flags if f is not None]
        ok = all(asserted)
        summary = {"seeds": [r["summary"] for r in results],
                   "asserted": len(asserted), "failures": sum(1 for f in asserted if not f)}
    summary = {"campaign": rc.campaign, "passed": bool(ok), **summary}
    return files, summary, bool(ok)


# -- artifact tree ----------------------------------------------------------

def file_hash(path: Path) -> str | None:
    """Config hash embedded in an output file, or None if it carries none."""
    if path.suffix == ".csv":
        first = path.read_text().split("\n", 1)[0]
        return first.partition("config_hash=")[2].strip() or None
    if path.suffix == ".json":
        try:
            return json.loads(path.read_text()).get("config_hash")
        except (json.JSONDecodeError, AttributeError):
            return None
    return None


def check_directory(directory: Path, expected: str | None = None) -> str | None:
    """Return the single config hash found in ``directory``; refuse mixtures."""
    found = set()
    for p in sorted(directory.glob("*")):
        if p.suffix in (".csv", ".json"):
            found.add(file_hash(p))
    if expected is not None:
        found.add(expected)
    if len(found) > 1:
        raise OutputConflict(f"{directory} mixes outputs from config hashes {sorted(map(str, found))}")
    return next(iter(found)) if found else None


def _versions() -> dict:
    try:
        pkg = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        pkg = "unknown"
    return {"python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "artifact": pkg}


def run_campaign(rc: RunConfig) -> CampaignOutcome:
    h = rc.hash
    target = Path(rc.data["output"]) / h
    if target.exists():
        check_directory(target, h)
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    files, summary, ok = execute(rc)
    wall = time.perf_counter() - t0
    target.mkdir(parents=True, exist_ok=True)
    header = f"# config_hash={h}\n"
    for name, text in sorted(files.items()):
        (target / name).write_text(header + text)
    (target / SUMMARY).write_text(_dumps({"config_hash": h, **summary}))
    manifest = {
        "config_hash": h, "config": rc.data, "campaign": rc.campaign, "seeds": rc.seeds,
        "versions": _versions(), "started": started.isoformat(),
        "finished": datetime.now(timezone.utc).isoformat(), "wall_time_s": wall,
        "files": sorted(files) + [SUMMARY], "passed": ok, "summary": summary,
    }
    (target / MANIFEST).write_text(_dumps(manifest))
    return CampaignOutcome(ok, target, summary)


def load_reports(root: Path) -> list[dict]:
    """Summaries below ``root`` (a hash directory or a parent of several)."""
    root = Path(root)
    dirs = [root] if (root / SUMMARY).exists() else sorted(p.parent for p in root.glob(f"*/{SUMMARY}"))
    out = []
    for d in dirs:
        h = check_directory(d)
        summary = json.loads((d / SUMMARY).read_text())
        out.append({"directory": str(d), "config_hash": h, "summary": summary})
    return out
