"""Builtin initial data and synthetic decomposition fixtures.

An ``initial`` spec is either a snapshot path or ``name key=value ...``,
e.g. ``S t0=0.5`` or ``gaussian amp=1.2 width=1.5 k=0.5``.
"""

from __future__ import annotations

import shlex
from pathlib import Path

import numpy as np

from .spectral import Field, GaugeTag, Grid1D, szego_project
from .states import (
    ModulationParams,
    explicit_blowup_S,
    ground_state_Q,
    ground_state_Q_box,
    ground_state_R,
)

__all__ = [
    "gaussian",
    "chiral_gaussian",
    "two_bubble_fixture",
    "TWO_BUBBLE_PARAMS",
    "BUILTINS",
    "make_initial",
]

#: two bubbles, scales 100x apart, centres 10 apart
TWO_BUBBLE_PARAMS = (ModulationParams(0.001, 0.0, -5.0), ModulationParams(0.1, 1.0, 5.0))


def gaussian(grid: Grid1D, amp: float = 1.0, width: float = 1.0, center: float = 0.0, k: float = 0.0,
             gauge=GaugeTag.GAUGED) -> Field:
    """``amp exp(-(x-c)^2/(2 width^2) + i k x)``."""
    x = grid.x
    return Field(grid, amp * np.exp(-((x - center) ** 2) / (2.0 * width**2) + 1j * k * x), gauge=gauge)


def chiral_gaussian(grid: Grid1D, amp: float = 1.0, width: float = 1.0, k: float = 2.0) -> Field:
    """Szego projection of a boosted Gaussian, tagged ungauged."""
    g = gaussian(grid, amp, width, 0.0, k, gauge=GaugeTag.UNGAUGED)
    return szego_project(g).to_physical()


def two_bubble_fixture(grid: Grid1D | None = None, radiation_amp: float = 0.5, radiation_k: float = 3.0):
    """``[Q]_{g1} + [Q]_{g2}`` plus a unit-width wave packet centred at 0.

    Returns ``(v, (g1, g2), radiation)``.  The default grid ``n = 2^18``,
    ``L = 16`` gives about eight samples per unit of the smaller scale.
    """
    grid = Grid1D(2**18, 16.0) if grid is None else grid
    g1, g2 = TWO_BUBBLE_PARAMS
    rad = gaussian(grid, radiation_amp, 1.0, 0.0, radiation_k)
    v = ground_state_Q(grid, g1) + ground_state_Q(grid, g2) + rad
    return v.with_gauge(GaugeTag.GAUGED), (g1, g2), rad


def _q(grid, lam=1.0, gamma=0.0, x=0.0):
    return ground_state_Q(grid, ModulationParams(lam, gamma, x))


def _r(grid, lam=1.0, gamma=0.0, x=0.0):
    return ground_state_R(grid, ModulationParams(lam, gamma, x))


BUILTINS = {
    "Q": _q,
    "Q_box": lambda grid: ground_state_Q_box(grid),
    "R": _r,
    "S": lambda grid, t0=0.5: explicit_blowup_S(t0, grid),
    "gaussian": gaussian,
    "chiral": chiral_gaussian,
    "two_bubble": lambda grid, **kw: two_bubble_fixture(grid, **kw)[0],
}


def make_initial(spec: str, grid: Grid1D):
    """Build initial data from ``spec``; returns ``(field, t0)``.

    ``t0`` is the snapshot time for files, ``t0`` for ``S`` and ``None``
    otherwise.
    """
    parts = shlex.split(spec)
    if not parts:
        raise ValueError("empty initial spec")
    name, args = parts[0], parts[1:]
    if name not in BUILTINS:
        path = Path(name)
        if path.is_file():
            from .io import read_snapshot

            f, t = read_snapshot(path)
            if f.grid != grid:
                raise ValueError(f"snapshot grid (n={f.grid.n}, L={f.grid.L:g}) differs from config")
            return f, t
        raise ValueError(f"unknown initial '{name}' (builtins: {', '.join(sorted(BUILTINS))}; or a snapshot path)")
    kw = {}
    for a in args:
        if "=" not in a:
            raise ValueError(f"initial parameter '{a}' is not key=value")
        key, val = a.split("=", 1)
        kw[key] = float(val)
    try:
        f = BUILTINS[name](grid, **kw)
    except TypeError as exc:
        raise ValueError(f"bad parameters for initial '{name}': {exc}") from None
    t0 = kw.get("t0", 0.5) if name == "S" else None
    return f, t0
