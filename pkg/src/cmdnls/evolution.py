"""Time integration of the ungauged and gauged flows.

Ungauged:  ``i u_t + u_xx + 2 D_+(|u|^2) u = 0``
Gauged:    ``i v_t + v_xx + |D|(|v|^2) v - (1/4)|v|^4 v = 0``

Fourth-order integrating-factor Runge-Kutta: the linear semigroup
``exp(-i xi^2 h)`` is applied exactly in Fourier space and the classical
four-stage rule acts on the transformed nonlinearity.  Products are formed on
a zero-padded grid (``dealias`` = padding factor); factor 2 removes all
aliasing from the cubic terms, factor 3 also from the quintic one.

Step size: the integrating factor turns the coupling between the modes
``+xi`` and ``-xi`` into an oscillation of frequency ``2 xi^2``; when
``xi^2 dt`` reaches a multiple of ``pi`` the sampled oscillation freezes and
RK4 amplifies that pair exponentially.  ``c_cfl dx^2`` with ``c_cfl < 1/pi``
keeps ``xi_max^2 dt = pi^2 c_cfl`` below ``pi``; the default is 0.25.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .functionals import (
    Q_HDOT1,
    ConservedSet,
    VirialPair,
    conserved,
    hdot1,
    virial,
)
from .spectral import Field, GaugeTag, Grid1D, pad_spectrum, truncate_spectrum

__all__ = [
    "SimConfig",
    "Snapshot",
    "Trajectory",
    "BlowUpDetected",
    "rhs",
    "nonlinear_spectral",
    "step",
    "run",
    "choose_dt",
]

log = logging.getLogger(__name__)

#: fault-injection switch used by the verification suite; never set in production
SABOTAGE_DEALIAS = False


class BlowUpDetected(RuntimeError):
    """Non-finite samples appeared; ``state`` is the last finite field at time ``t``."""

    def __init__(self, state: Field, t: float, message: str = "non-finite state"):
        super().__init__(f"{message} at t = {t:.6g}")
        self.state = state
        self.t = t


@dataclass
class SimConfig:
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

    def __post_init__(self):
        self.equation = GaugeTag(self.equation)
        if not self.dt_max > 0:
            raise ValueError("dt_max must be positive")
        if self.dealias not in (1, 2, 3):
            raise ValueError("dealias padding factor must be 1, 2 or 3")
        for name in ("c_cfl", "c_lambda", "hstop", "output_every"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.t_end > self.t_start:
            raise ValueError("t_end must exceed t_start")

    @property
    def grid(self) -> Grid1D:
        return Grid1D(self.n, self.L)


@dataclass
class Snapshot:
    t: float
    field: Field
    conserved: ConservedSet
    virial: VirialPair
    hnorm: float
    report: object = None


@dataclass
class Trajectory:
    snapshots: list = field(default_factory=list)
    status: str = "running"
    flags: list = field(default_factory=list)
    steps: int = 0

    @property
    def times(self) -> list[float]:
        return [s.t for s in self.snapshots]

    @property
    def fields(self) -> list[Field]:
        return [s.field for s in self.snapshots]

    @property
    def final(self) -> Snapshot:
        return self.snapshots[-1]

    def append(self, snap: Snapshot):
        if self.snapshots:
            if snap.t <= self.snapshots[-1].t:
                raise ValueError("snapshot times must increase strictly")
            if snap.field.grid != self.snapshots[0].field.grid:
                raise ValueError("snapshot grids differ")
        self.snapshots.append(snap)

    def drift(self, name: str, floor: float = 1e-12) -> float:
        """Largest deviation of a conserved quantity from its initial value.

        Relative to ``|initial|``, or absolute when ``|initial| <= floor``.
        """
        vals = np.array([getattr(s.conserved, name) for s in self.snapshots])
        ref = abs(vals[0])
        scale = ref if ref > floor else 1.0
        return float(np.abs(vals - vals[0]).max() / scale)


# nonlinearity ------------------------------------------------------------------------

def _to_padded(spec: np.ndarray, factor: int) -> np.ndarray:
    big = pad_spectrum(spec, factor)
    if SABOTAGE_DEALIAS and factor > 1:
        big /= factor
    return np.fft.ifft(big)


def nonlinear_spectral(spec: np.ndarray, grid: Grid1D, tag: GaugeTag, factor: int = 2) -> np.ndarray:
    """Spectrum of ``i N(f)`` for the tagged equation, dealiased by padding."""
    n = grid.n
    big_n = factor * n
    u = _to_padded(spec, factor)
    rho = np.abs(u) ** 2
    k = np.fft.fftfreq(big_n, d=1.0 / big_n) * (np.pi / grid.L)
    rho_hat = np.fft.fft(rho)
    if tag is GaugeTag.UNGAUGED:
        sym = np.where(k > 0, k, 0.0)
        pot = np.fft.ifft(sym * rho_hat)  # D_+(|u|^2), complex
        prod = 2.0 * pot * u
    else:
        pot = np.fft.ifft(np.abs(k) * rho_hat).real  # |D|(|v|^2)
        prod = (pot - 0.25 * rho * rho) * u
    return 1j * truncate_spectrum(np.fft.fft(prod), n)


def rhs(f: Field, tag=None, dealias: int = 2) -> Field:
    """Nonlinear part ``i N(f)`` of ``d_t f`` as a physical field."""
    tag = GaugeTag(f.gauge if tag is None else tag)
    out = nonlinear_spectral(f.spectral, f.grid, tag, dealias)
    return f.replace(np.fft.ifft(out), gauge=tag)


def _if_rk4(spec: np.ndarray, grid: Grid1D, dt: float, tag: GaugeTag, factor: int) -> np.ndarray:
    k2 = grid.k**2
    half = np.exp(-0.5j * k2 * dt)
    full = half * half
    N = lambda s: nonlinear_spectral(s, grid, tag, factor)
    a = N(spec)
    b = N(half * (spec + 0.5 * dt * a))
    c = N(half * spec + 0.5 * dt * b)
    d = N(full * spec + dt * half * c)
    return full * spec + (dt / 6.0) * (full * a + 2.0 * half * (b + c) + d)


def step(f: Field, t: float, dt: float, tag=None, dealias: int = 2) -> Field:
    """Advance ``f`` from ``t`` to ``t + dt`` (``dt`` may be negative)."""
    tag = GaugeTag(f.gauge if tag is None else tag)
    out = _if_rk4(f.spectral, f.grid, dt, tag, dealias)
    if not np.all(np.isfinite(out)):
        raise BlowUpDetected(f, t)
    return Field(f.grid, np.fft.ifft(out), gauge=tag)


def choose_dt(f: Field, cfg: SimConfig) -> float:
    """``min(dt_max, c_cfl dx^2, c_lambda lam_est^2)`` with ``lam_est = ||Q||/||f||`` (H^1 dot)."""
    h = hdot1(f)
    lam_est = Q_HDOT1 / h if h > 0 else math.inf
    return min(cfg.dt_max, cfg.c_cfl * f.grid.dx**2, cfg.c_lambda * lam_est**2)


def _snapshot(f: Field, t: float, tag: GaugeTag) -> Snapshot:
    return Snapshot(t, f, conserved(f, t, tag), virial(f), hdot1(f))


def run(
    cfg: SimConfig,
    initial: Field,
    callback: Callable[[Snapshot], None] | None = None,
) -> Trajectory:
    """Integrate ``initial`` according to ``cfg`` and record monitors at the output cadence.

    Stops at ``t_end``, when the H^1-dot norm crosses ``hstop`` (status
    ``"blowup"``) or on a non-finite state (status ``"nonfinite"``).
    """
    tag = cfg.equation
    if initial.grid != cfg.grid:
        raise ValueError("initial field is not on the configured grid")
    if not np.all(np.isfinite(initial.physical)):
        raise ValueError("initial state is not finite")
    f = initial.with_gauge(tag).to_physical()
    t = cfg.t_start
    traj = Trajectory()
    snap = _snapshot(f, t, tag)
    traj.append(snap)
    if callback:
        callback(snap)
    next_out = t + cfg.output_every
    eps_t = 1e-12 * max(1.0, abs(cfg.t_end))
    while t < cfg.t_end - eps_t:
        dt = choose_dt(f, cfg)
        target = min(next_out, cfg.t_end)
        if t + dt > target - eps_t:
            dt = target - t
        try:
            f = step(f, t, dt, tag, cfg.dealias)
        except BlowUpDetected as exc:
            traj.status = "nonfinite"
            traj.flags.append(str(exc))
            if traj.final.t < t:
                traj.append(_snapshot(exc.state, t, tag))
            return traj
        t += dt
        traj.steps += 1
        crossed = hdot1(f) > cfg.hstop
        if abs(t - target) <= eps_t or crossed:
            if abs(t - target) <= eps_t:
                t = target
            snap = _snapshot(f, t, tag)
            traj.append(snap)
            if callback:
                callback(snap)
            if abs(t - next_out) <= eps_t:
                next_out += cfg.output_every
            if crossed:
                traj.status = "blowup"
                return traj
    traj.status = "finished"
    for name in ("mass", "energy"):
        d = traj.drift(name)
        if d > cfg.drift_budget:
            traj.flags.append(f"{name} drift {d:.3g} exceeds budget {cfg.drift_budget:g}")
            log.warning("run flagged: %s drift %.3g", name, d)
    return traj
