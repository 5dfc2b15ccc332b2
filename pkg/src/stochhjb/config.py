"""Run configuration: YAML file, JSON schema, presets and the config hash."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from .errors import ConfigError
from .fieldio import SpectralField, load
from .solver import SCHEMES, SolverConfig
from .spectral import TorusGrid
from .transport import TransportOperator
from .truncation import CutoffSpec

CAMPAIGNS = ("single", "ensemble", "dt_refine", "gamma_refine", "oracle_check",
             "maxprin_check", "uniqueness", "picard_crosscheck")
FIELD_PRESETS = ("zero", "constant", "sin", "gaussian_bump", "file")
OPERATOR_PRESETS = ("none", "constant", "shift", "sine", "file")
ORACLES = ("cole_hopf", "shift", "feynman_kac", "burgers")

_num = {"type": "number"}
_int = {"type": "integer"}
_num_list = {"type": "array", "items": _num}

_FIELD = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "preset": {"enum": list(FIELD_PRESETS)},
        "value": _num,
        "amplitude": _num,
        "width": {"type": "number", "exclusiveMinimum": 0},
        "center": _num_list,
        "modes": {"type": "integer", "minimum": 1},
        "path": {"type": "string"},
    },
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["campaign"],
    "properties": {
        "campaign": {"enum": list(CAMPAIGNS)},
        "seed": {"type": "integer", "minimum": 0},
        "n_seeds": {"type": "integer", "minimum": 1},
        "workers": {"type": "integer", "minimum": 1},
        "output": {"type": "string"},
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"dim": {"type": "integer", "minimum": 1, "maximum": 3},
                           "points": {"type": "integer", "minimum": 8}},
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mu": _num, "gamma": _num, "k": _num, "k_prime": {"type": ["integer", "null"]},
                "dt": _num, "T": _num, "scheme": {"enum": list(SCHEMES)},
                "nonlinear": {"type": "boolean"}, "truncation_respecting": {"type": "boolean"},
                "sample_stride": _int, "snapshot_stride": _int, "blowup_threshold": _num,
            },
        },
        "cutoff": {
            "type": ["object", "null"],
            "additionalProperties": False,
            "required": ["r"],
            "properties": {"r": {"type": "number", "exclusiveMinimum": 0}},
        },
        "initial": _FIELD,
        "potential": _FIELD,
        "operator": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "preset": {"enum": list(OPERATOR_PRESETS)},
                "a": _num_list, "b": _num_list,
                "nu": {"type": "number", "minimum": 0},
                "a_amplitude": _num, "b_amplitude": _num,
                "mode": {"type": "integer", "minimum": 1},
                "a_paths": {"type": "array", "items": {"type": "string"}},
                "b_paths": {"type": "array", "items": {"type": "string"}},
            },
        },
        "options": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dts": _num_list,
                "gammas": _num_list,
                "deltas": _num_list,
                "reference": {"enum": ["finest", "scheme_gap"]},
                "min_order": _num,
                "oracle": {"enum": list(ORACLES)},
                "tolerance": {"type": ["number", "null"]},
                "beta": _num,
                "slack": _num,
                "n_paths": {"type": "integer", "minimum": 2},
                "probes": {"type": ["array", "null"], "items": _num_list},
                "picard_tol": _num,
                "max_iter": {"type": "integer", "minimum": 1},
                "sample_times": {"type": ["array", "null"], "items": _num},
            },
        },
    },
}

DEFAULTS = {
    "seed": 0,
    "n_seeds": 1,
    "workers": 1,
    "output": "out",
    "grid": {"dim": 1, "points": 128},
    "solver": {
        "mu": 0.1, "gamma": 0.0, "k": 3.0, "k_prime": None, "dt": 1e-4, "T": 0.1,
        "scheme": "ito_exp_em", "nonlinear": True, "truncation_respecting": False,
        "sample_stride": 10, "snapshot_stride": 1, "blowup_threshold": 1e6,
    },
    "cutoff": None,
    "initial": {"preset": "sin", "amplitude": 1.0},
    "potential": {"preset": "zero"},
    "operator": {"preset": "none"},
    "options": {
        "dts": [4e-4, 2e-4, 1e-4], "gammas": [1e-8, 1e-9, 1e-10], "deltas": [0.0, 1e-6],
        "reference": "finest", "min_order": 0.5, "oracle": "cole_hopf", "tolerance": None,
        "beta": 2.0, "slack": 1.05, "n_paths": 100_000, "probes": None, "picard_tol": 1e-10,
        "max_iter": 50, "sample_times": None,
    },
}

# keys that do not change results and are left out of the hash
_UNHASHED = ("output", "workers")


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(data: dict) -> str:
    payload = {k: v for k, v in data.items() if k not in _UNHASHED}
    return hashlib.sha256(_canonical(payload).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class RunConfig:
    data: dict              # normalised: every default filled in
    base_dir: Path          # relative field files resolve against this

    @property
    def campaign(self) -> str:
        return self.data["campaign"]

    @property
    def seeds(self) -> list[int]:
        return list(range(self.data["seed"], self.data["seed"] + self.data["n_seeds"]))

    @property
    def options(self) -> dict:
        return self.data["options"]

    @property
    def hash(self) -> str:
        return config_hash(self.data)

    @property
    def grid(self) -> TorusGrid:
        return TorusGrid(self.data["grid"]["dim"], self.data["grid"]["points"])

    def with_overrides(self, seed: int | None = None, output: str | None = None,
                       workers: int | None = None) -> RunConfig:
        data = copy.deepcopy(self.data)
        if seed is not None:
            data["seed"] = int(seed)
        if output is not None:
            data["output"] = str(output)
        if workers is not None:
            data["workers"] = int(workers)
        return validate(data, self.base_dir)

    def solver_config(self, **changes) -> SolverConfig:
        return build_solver_config(self, **changes)


def _field(grid: TorusGrid, spec: dict, base_dir: Path, where: str) -> np.ndarray:
    preset = spec.get("preset", "zero")
    amp = float(spec.get("amplitude", 1.0))
    if preset == "zero":
        return np.zeros(grid.shape)
    if preset == "constant":
        return np.full(grid.shape, float(spec.get("value", 0.0)))
    if preset == "sin":
        return amp * sum(np.sin(x) for x in grid.coords)
    if preset == "gaussian_bump":
        width = float(spec.get("width", 0.5))
        modes = int(spec.get("modes", grid.points // 3))
        center = np.asarray(spec.get("center", [np.pi] * grid.dim), dtype=float)
        if center.shape != (grid.dim,):
            raise ConfigError([f"{where}.center: need {grid.dim} entries"])
        keep = np.all(np.abs(grid.wavenumbers) <= modes, axis=0)
        phase = sum(xi * c for xi, c in zip(grid.wavenumbers, center))
        weights = np.where(keep, np.exp(-0.5 * width**2 * grid.xi_squared), 0.0)
        # peak value at the centre is the coefficient sum
        return amp * grid._ifft(weights * np.exp(-1j * phase)) / weights.sum()
    if preset == "file":
        if "path" not in spec:
            raise ConfigError([f"{where}.path: required for the file preset"])
        path = Path(spec["path"])
        obj = load(path if path.is_absolute() else base_dir / path)
        if obj.grid != grid:
            raise ConfigError([f"{where}.path: field grid {obj.grid} differs from {grid}"])
        return grid.to_physical(obj.coefficients) if isinstance(obj, SpectralField) else obj.values
    raise ConfigError([f"{where}.preset: unknown preset {preset!r}"])


def _axis_list(values, n, where):
    vals = list(values)
    if len(vals) == 1:
        vals = vals * n
    if len(vals) != n:
        raise ConfigError([f"{where}: need 1 or {n} entries, got {len(vals)}"])
    return [float(v) for v in vals]


def build_operator(grid: TorusGrid, spec: dict, base_dir: Path) -> TransportOperator:
    preset = spec.get("preset", "none")
    n = grid.dim
    if preset == "none":
        return TransportOperator.zero(grid)
    if preset == "constant":
        return TransportOperator.constant(grid, _axis_list(spec.get("a", [0.0]), n, "operator.a"),
                                          _axis_list(spec.get("b", [0.0]), n, "operator.b"))
    if preset == "shift":
        return TransportOperator.constant(grid, [-np.sqrt(spec.get("nu", 0.04))] * n, [0.0] * n)
    if preset == "sine":
        m = int(spec.get("mode", 1))
        a0 = _axis_list(spec.get("a", [0.0]), n, "operator.a")
        b0 = _axis_list(spec.get("b", [0.0]), n, "operator.b")
        aa = float(spec.get("a_amplitude", 0.0))
        ba = float(spec.get("b_amplitude", 0.0))
        xs = grid.coords
        return TransportOperator(grid, [a0[i] + aa * np.cos(m * xs[i]) for i in range(n)],
                                 [b0[i] + ba * np.sin(m * xs[i]) for i in range(n)])
    if preset == "file":
        a_paths, b_paths = spec.get("a_paths", []), spec.get("b_paths", [])
        if len(a_paths) != n or len(b_paths) != n:
            raise ConfigError([f"operator.a_paths, operator.b_paths: need {n} files each"])
        a = [_field(grid, {"preset": "file", "path": p}, base_dir, "operator.a_paths") for p in a_paths]
        b = [_field(grid, {"preset": "file", "path": p}, base_dir, "operator.b_paths") for p in b_paths]
        return TransportOperator(grid, a, b)
    raise ConfigError([f"operator.preset: unknown preset {preset!r}"])


def build_solver_config(rc: RunConfig, **changes) -> SolverConfig:
    d = rc.data
    grid = rc.grid
    s = d["solver"]
    cutoff = CutoffSpec.for_grid(d["cutoff"]["r"], grid, s["k"]) if d["cutoff"] else None
    kwargs = dict(
        grid=grid,
        u0=_field(grid, d["initial"], rc.base_dir, "initial"),
        V=_field(grid, d["potential"], rc.base_dir, "potential"),
        operator=build_operator(grid, d["operator"], rc.base_dir),
        cutoff=cutoff, **s,
    )
    kwargs.update(changes)
    try:
        return SolverConfig(**kwargs)
    except ConfigError as exc:
        raise ConfigError([_qualify(v) for v in exc.violations]) from None


def _qualify(message: str) -> str:
    head, _, rest = message.partition(":")
    if head in ("u0",):
        return f"initial: {rest.strip()}"
    if head in ("V",):
        return f"potential: {rest.strip()}"
    if head == "operator":
        return message
    names = [f"solver.{h.strip()}" for h in head.split(",")]
    return f"{', '.join(names)}: {rest.strip()}"


def _schema_errors(data: dict) -> list[str]:
    validator = jsonschema.Draft7Validator(SCHEMA)
    out = []
    for err in sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path)):
        where = ".".join(str(p) for p in err.absolute_path) or "<root>"
        out.append(f"{where}: {err.message}")
    return out


def _option_errors(rc: RunConfig) -> list[str]:
    o = rc.options
    errs = []
    if any(x <= 0 for x in o["dts"]):
        errs.append("options.dts: entries must be positive")
    if any(x <= 0 for x in o["gammas"]) or o["gammas"] != sorted(o["gammas"], reverse=True):
        errs.append("options.gammas: must be positive and sorted in descending order")
    if any(x < 0 for x in o["deltas"]):
        errs.append("options.deltas: entries must be non-negative")
    if o["probes"] is not None and any(len(p) != rc.grid.dim for p in o["probes"]):
        errs.append(f"options.probes: each probe needs {rc.grid.dim} coordinates")
    if rc.campaign == "picard_crosscheck" and not rc.data["solver"]["gamma"] > 0:
        errs.append("solver.gamma: picard_crosscheck needs gamma > 0")
    return errs


def validate(data: dict, base_dir: Path | str = ".") -> RunConfig:
    """Fill defaults, check the schema and the solver constraints.

    Raises ``ConfigError`` listing every violation with its field path.
    """
    if not isinstance(data, dict):
        raise ConfigError(["<root>: config must be a mapping"])
    errs = _schema_errors(data)
    if errs:
        raise ConfigError(errs)
    rc = RunConfig(_merge(DEFAULTS, data), Path(base_dir))
    if rc.data["grid"]["points"] & (rc.data["grid"]["points"] - 1):
        raise ConfigError(["grid.points: must be a power of two"])
    errs = _option_errors(rc)
    try:
        build_solver_config(rc)
    except ConfigError as exc:
        errs.extend(exc.violations)
    if errs:
        raise ConfigError(errs)
    return rc


def parse_config(path: Path | str) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError([f"<file>: {path} does not exist"])
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError([f"<file>: not valid YAML ({exc})"]) from None
    return validate(data if data is not None else {}, path.parent)
