"""Snapshot, series and run-configuration files.

Snapshot (little-endian)::

    b"CMF1" | u32 n | f64 L | f64 t | u8 tag | 2n x f64 (Re, Im) samples

Series: comma-separated with a header row; numbers use 17 significant
digits so that parsing back reproduces the binary value.

Config: UTF-8, one ``key = value`` per line, ``#`` starts a comment.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .spectral import Field, GaugeTag, Grid1D

__all__ = [
    "MAGIC",
    "write_snapshot",
    "read_snapshot",
    "snapshot_bytes",
    "SERIES_BASE_COLUMNS",
    "series_header",
    "format_number",
    "write_series",
    "read_series",
    "RunConfig",
    "ConfigError",
    "parse_config",
    "load_config",
]

MAGIC = b"CMF1"
_HEADER = struct.Struct("<4sIddB")


# snapshots --------------------------------------------------------------------------

def snapshot_bytes(f: Field, t: float) -> bytes:
    if f.gauge is None:
        raise ValueError("snapshot requires a gauge-tagged field")
    head = _HEADER.pack(MAGIC, f.grid.n, float(f.grid.L), float(t), f.gauge.byte)
    body = np.ascontiguousarray(f.physical, dtype="<c16").tobytes()
    return head + body


def write_snapshot(path, f: Field, t: float) -> Path:
    path = Path(path)
    path.write_bytes(snapshot_bytes(f, t))
    return path


def read_snapshot(path) -> tuple[Field, float]:
    """Return ``(field, t)``; validates magic, tag and length."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated snapshot header")
    magic, n, L, t, tag = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 16 * n
    if len(raw) != expected:
        raise ValueError(f"{path}: length {len(raw)} does not match 25 + 16n = {expected}")
    data = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size, count=n).astype(complex)
    return Field(Grid1D(n, L), data, gauge=GaugeTag.from_byte(tag)), t


# series -----------------------------------------------------------------------------

SERIES_BASE_COLUMNS = ("t", "mass", "energy", "momentum", "v1", "v2", "hnorm")


def series_header(bubbles: int = 0) -> list[str]:
    cols = list(SERIES_BASE_COLUMNS)
    for j in range(1, bubbles + 1):
        cols += [f"lambda_{j}", f"gamma_{j}", f"x_{j}", f"dichotomy_{j}"]
    return cols


def format_number(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def write_series(path, rows, bubbles: int = 0) -> Path:
    """Write rows (sequences of numbers matching :func:`series_header`)."""
    path = Path(path)
    header = series_header(bubbles)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"row has {len(row)} values, header has {len(header)}")
            w.writerow([format_number(v) for v in row])
    return path


def read_series(path) -> tuple[list[str], np.ndarray]:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, len(header))
    return header, data


# config -----------------------------------------------------------------------------

class ConfigError(ValueError):
    """Carries every offending key in ``problems``."""

    def __init__(self, problems: list[str]):
        super().__init__("invalid config: " + "; ".join(problems))
        self.problems = problems


def _nonneg_int(s):
    v = int(s)
    if v < 0:
        raise ValueError("must be nonnegative")
    return v


def _pos_float(s):
    v = float(s)
    if not (v > 0 and math.isfinite(v)):
        raise ValueError("must be positive and finite")
    return v


def _float(s):
    v = float(s)
    if not math.isfinite(v):
        raise ValueError("must be finite")
    return v


def _equation(s):
    key = s.strip().lower()
    table = {"ungauged": GaugeTag.UNGAUGED, "ungauged_u": GaugeTag.UNGAUGED, "u": GaugeTag.UNGAUGED,
             "gauged": GaugeTag.GAUGED, "gauged_v": GaugeTag.GAUGED, "v": GaugeTag.GAUGED}
    if key not in table:
        raise ValueError("expected 'ungauged' or 'gauged'")
    return table[key]


def _dealias(s):
    v = int(s)
    if v not in (1, 2, 3):
        raise ValueError("must be 1, 2 or 3")
    return v


def _grid_n(s):
    v = int(s)
    if v < 8 or v & (v - 1):
        raise ValueError("must be a power of two >= 8")
    return v


_PARSERS = {
    "equation": _equation,
    "n": _grid_n,
    "L": _pos_float,
    "dt_max": _pos_float,
    "c_cfl": _pos_float,
    "c_lambda": _pos_float,
    "t_start": _float,
    "t_end": _float,
    "hstop": _pos_float,
    "dealias": _dealias,
    "output_every": _pos_float,
    "drift_budget": _pos_float,
    "R": _pos_float,
    "theta": _pos_float,
    "alpha_star": _pos_float,
    "max_bubbles": _nonneg_int,
    "snapshot_every": _nonneg_int,
    "initial": str.strip,
    "out_dir": str.strip,
}


@dataclass
class RunConfig:
    equation: GaugeTag = GaugeTag.GAUGED
    n: int = 4096
    L: float = 50.0
    dt_max: float = 1e-3
    c_cfl: float = 0.25
    c_lambda: float = 0.05
    t_start: float = 0.0
    t_end: float = 1.0
    hstop: float = 1e6
    dealias: int = 2
    output_every: float = 0.1
    drift_budget: float = 1e-6
    R: float = 20.0
    theta: float = 0.1
    alpha_star: float = 0.1
    max_bubbles: int = 0
    snapshot_every: int = 0
    initial: str = "gaussian"
    out_dir: str = "run_out"
    source: str = field(default="", repr=False)

    def sim_config(self):
        from .evolution import SimConfig

        return SimConfig(
            equation=self.equation, n=self.n, L=self.L, dt_max=self.dt_max, c_cfl=self.c_cfl,
            c_lambda=self.c_lambda, t_start=self.t_start, t_end=self.t_end, hstop=self.hstop,
            dealias=self.dealias, output_every=self.output_every, drift_budget=self.drift_budget,
        )


def parse_config(text: str) -> RunConfig:
    """Parse config text; collects all problems before raising :class:`ConfigError`."""
    problems: list[str] = []
    values: dict = {}
    seen: set = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected 'key = value'")
            continue
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _PARSERS:
            problems.append(f"{key}: unknown key")
            continue
        if key in seen:
            problems.append(f"{key}: duplicate key")
            continue
        seen.add(key)
        try:
            values[key] = _PARSERS[key](val)
        except ValueError as exc:
            problems.append(f"{key}: {exc} (got {val!r})")
    cfg = RunConfig(**values, source=text)
    bad = {p.split(":", 1)[0] for p in problems}
    if not {"t_start", "t_end"} & bad and cfg.t_end <= cfg.t_start:
        problems.append("t_end: must exceed t_start")
    if problems:
        raise ConfigError(problems)
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    return parse_config(path.read_text(encoding="utf-8"))
