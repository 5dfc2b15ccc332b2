"""Field snapshots and their on-disk exchange formats.

Binary layout (little endian)::

    magic   4 bytes  b"TFLD"
    version uint8    1
    repr    uint8    0 = physical (float64), 1 = spectral (complex128)
    dim     uint32   n
    points  uint32   N
    values  row-major, N**n entries

Text layout: one header comment line
``# torus-field dim=<n> points=<N> repr=<physical|spectral>``, optional further
``#`` lines, then one value per line (``re im`` for spectral). Values are written
with ``float.hex`` so the round trip is bit exact.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .spectral import TorusGrid

MAGIC = b"TFLD"
VERSION = 1
_HEADER = struct.Struct("<4sBBII")
_TAGS = {"physical": 0, "spectral": 1}
_DTYPES = {"physical": np.dtype("<f8"), "spectral": np.dtype("<c16")}


@dataclass(frozen=True, eq=False)
class SpatialField:
    grid: TorusGrid
    values: np.ndarray

    representation = "physical"

    def __post_init__(self):
        v = np.asarray(self.grid.check_field(self.values), dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", v)

    def to_spectral(self) -> SpectralField:
        return SpectralField(self.grid, self.grid.to_spectral(self.values))


@dataclass(frozen=True, eq=False)
class SpectralField:
    grid: TorusGrid
    coefficients: np.ndarray

    representation = "spectral"

    def __post_init__(self):
        c = np.asarray(self.grid.check_field(self.coefficients, "coefficients"), dtype=complex)
        object.__setattr__(self, "coefficients", c)

    @property
    def values(self) -> np.ndarray:
        return self.coefficients

    def to_physical(self) -> SpatialField:
        return SpatialField(self.grid, self.grid.to_physical(self.coefficients))


Field = SpatialField | SpectralField


def to_bytes(field: Field) -> bytes:
    rep = field.representation
    g = field.grid
    head = _HEADER.pack(MAGIC, VERSION, _TAGS[rep], g.dim, g.points)
    return head + np.ascontiguousarray(field.values, dtype=_DTYPES[rep]).tobytes()


def from_bytes(data: bytes) -> Field:
    magic, version, tag, dim, points = _HEADER.unpack_from(data)
    if magic != MAGIC or version != VERSION:
        raise ValueError("not a torus field file (bad magic or version)")
    rep = {v: k for k, v in _TAGS.items()}.get(tag)
    if rep is None:
        raise ValueError(f"unknown representation tag {tag}")
    grid = TorusGrid(dim, points)
    body = np.frombuffer(data, dtype=_DTYPES[rep], offset=_HEADER.size)
    if body.size != grid.size:
        raise ValueError(f"expected {grid.size} values, found {body.size}")
    values = body.reshape(grid.shape).copy()
    return SpatialField(grid, values) if rep == "physical" else SpectralField(grid, values)


def to_text(field: Field, comments: tuple[str, ...] = ()) -> str:
    g = field.grid
    lines = [f"# torus-field dim={g.dim} points={g.points} repr={field.representation}"]
    lines += [f"# {c}" for c in comments]
    flat = field.values.ravel()
    if field.representation == "physical":
        lines += [float(v).hex() for v in flat]
    else:
        lines += [f"{float(v.real).hex()} {float(v.imag).hex()}" for v in flat]
    return "\n".join(lines) + "\n"


def from_text(text: str) -> Field:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# torus-field"):
        raise ValueError("missing '# torus-field' header line")
    meta = dict(tok.split("=", 1) for tok in lines[0][1:].split()[1:])
    grid = TorusGrid(int(meta["dim"]), int(meta["points"]))
    rep = meta.get("repr", "physical")
    body = [ln for ln in lines[1:] if ln.strip() and not ln.startswith("#")]
    if len(body) != grid.size:
        raise ValueError(f"expected {grid.size} values, found {len(body)}")
    if rep == "physical":
        vals = np.array([_parse_float(s) for s in body]).reshape(grid.shape)
        return SpatialField(grid, vals)
    if rep == "spectral":
        pairs = [s.split() for s in body]
        vals = np.array([complex(_parse_float(a), _parse_float(b)) for a, b in pairs])
        return SpectralField(grid, vals.reshape(grid.shape))
    raise ValueError(f"unknown representation {rep!r}")


def _parse_float(s: str) -> float:
    s = s.strip()
    return float.fromhex(s) if "0x" in s.lower() else float(s)


def save(field: Field, path, comments: tuple[str, ...] = ()) -> Path:
    """Write ``field``; ``.txt`` selects the text format, anything else binary."""
    path = Path(path)
    if path.suffix == ".txt":
        path.write_text(to_text(field, comments))
    else:
        path.write_bytes(to_bytes(field))
    return path


def load(path) -> Field:
    path = Path(path)
    if path.suffix == ".txt":
        return from_text(path.read_text())
    return from_bytes(path.read_bytes())
