"""Closed-form states and symmetry transforms.

Modulation convention::

    [f]_{lam, gamma, x0}(x) = exp(i gamma) lam^{-1/2} f((x - x0)/lam)

Resampling for non-grid-commensurate rescalings/shifts goes through the
trigonometric interpolant (:func:`cmdnls.spectral.resample`); points that
leave the box are zero-filled and reported through ``Field.warnings``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import Field, GaugeTag, Grid1D, chi_profile, resample

__all__ = [
    "ModulationParams",
    "IDENTITY",
    "compose_params",
    "relative_params",
    "inverse_params",
    "phase_distance",
    "Q_profile",
    "R_profile",
    "ground_state_Q",
    "ground_state_R",
    "ground_state_Q_box",
    "box_frequency",
    "modulated",
    "modulate",
    "demodulate",
    "galilean",
    "gauge",
    "gauge_inverse",
    "gauge_phase",
    "pseudo_conformal",
    "explicit_blowup_S",
    "blowup_required_n",
    "kernel_elements",
    "truncated_kernels",
    "LOST_TOLERANCE",
]

TWO_PI = 2.0 * math.pi

#: modulus above which zero-filled samples outside the box raise a warning
LOST_TOLERANCE = 1e-8


@dataclass(frozen=True)
class ModulationParams:
    """Scale ``lam > 0``, phase ``gamma`` in ``[0, 2pi)`` and translation ``x``."""

    lam: float
    gamma: float
    x: float

    def __post_init__(self):
        lam = float(self.lam)
        if not (lam > 0 and math.isfinite(lam)):
            raise ValueError(f"scale must be positive and finite, got {self.lam}")
        gamma = math.fmod(float(self.gamma), TWO_PI)
        if gamma < 0:
            gamma += TWO_PI
        if gamma >= TWO_PI:
            gamma = 0.0
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "x", float(self.x))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.lam, self.gamma, self.x)


IDENTITY = ModulationParams(1.0, 0.0, 0.0)


def compose_params(outer: ModulationParams, inner: ModulationParams) -> ModulationParams:
    """Parameters of ``[[f]_inner]_outer``."""
    return ModulationParams(outer.lam * inner.lam, outer.gamma + inner.gamma, outer.x + outer.lam * inner.x)


def relative_params(gi: ModulationParams, gj: ModulationParams) -> ModulationParams:
    """``g_{i,j}`` such that ``compose_params(gj, g_{i,j}) == gi``."""
    return ModulationParams(gi.lam / gj.lam, gi.gamma - gj.gamma, (gi.x - gj.x) / gj.lam)


def inverse_params(g: ModulationParams) -> ModulationParams:
    return ModulationParams(1.0 / g.lam, -g.gamma, -g.x / g.lam)


def phase_distance(a: float, b: float) -> float:
    """Distance on the circle R / 2pi Z."""
    d = math.fmod(abs(a - b), TWO_PI)
    return min(d, TWO_PI - d)


# profiles -----------------------------------------------------------------

def Q_profile(y):
    """Gauged ground state ``sqrt(2)/sqrt(1+y^2)``."""
    y = np.asarray(y, dtype=float)
    return math.sqrt(2.0) / np.sqrt(1.0 + y * y)


def R_profile(y):
    """Ungauged ground state ``sqrt(2)/(y+i)``."""
    y = np.asarray(y, dtype=float)
    return math.sqrt(2.0) / (y + 1j)


def _Q_deriv(y):
    return -math.sqrt(2.0) * y * (1.0 + y * y) ** -1.5


def _Lambda_Q(y):
    # Q/2 + y Q'
    return 0.5 * math.sqrt(2.0) * (1.0 - y * y) * (1.0 + y * y) ** -1.5


def _sample(grid: Grid1D, profile, g: ModulationParams | None, gauge) -> Field:
    if g is None:
        return Field(grid, profile(grid.x), gauge=gauge)
    y = (grid.x - g.x) / g.lam
    values = np.exp(1j * g.gamma) / math.sqrt(g.lam) * profile(y)
    return Field(grid, values, gauge=gauge)


def ground_state_Q(grid: Grid1D, g: ModulationParams | None = None) -> Field:
    """``Q`` (or ``[Q]_g``) sampled pointwise, tagged gauged."""
    return _sample(grid, Q_profile, g, GaugeTag.GAUGED)


def ground_state_R(grid: Grid1D, g: ModulationParams | None = None) -> Field:
    """``R`` (or ``[R]_g``) sampled pointwise, tagged ungauged."""
    return _sample(grid, R_profile, g, GaugeTag.UNGAUGED)


def box_frequency(L: float) -> float:
    """Rotation frequency ``(pi/L)^2 / 4`` of :func:`ground_state_Q_box`."""
    return 0.25 * (math.pi / L) ** 2


def ground_state_Q_box(grid: Grid1D) -> Field:
    """Zero-energy ground state of the periodic box ``[-L, L)``.

    ``q^2 = (pi/L) P_r(pi x/L)`` with the Poisson kernel
    ``P_r(th) = (1 - r^2)/(1 - 2r cos th + r^2)`` and ``r = exp(-pi/L)``.
    It solves the periodic Bogomol'nyi equation, has mass exactly ``2 pi``,
    tends to ``Q`` as ``L -> inf`` and evolves under the periodic gauged flow
    as ``exp(-i w t) q`` with ``w`` = :func:`box_frequency`.
    """
    L = grid.L
    r = math.exp(-math.pi / L)
    th = math.pi * grid.x / L
    rho = (math.pi / L) * (1.0 - r * r) / (1.0 - 2.0 * r * np.cos(th) + r * r)
    return Field(grid, np.sqrt(rho), gauge=GaugeTag.GAUGED)


def modulated(grid: Grid1D, profile, g: ModulationParams, gauge=None) -> Field:
    """Closed-form ``[profile]_g`` for any vectorized callable profile."""
    return _sample(grid, profile, g, gauge)


# modulation of sampled fields ---------------------------------------------

def _check_scale(grid: Grid1D, lam: float):
    if not (grid.dx <= lam <= grid.L):
        raise ValueError(f"scale {lam:g} outside the resolvable range [{grid.dx:g}, {grid.L:g}]")


def _lost_warning(lost: float, what: str) -> tuple[str, ...]:
    if lost > LOST_TOLERANCE:
        return (f"{what}: support leaves the box (discarded modulus up to {lost:.3g})",)
    return ()


def modulate(f: Field, g: ModulationParams) -> Field:
    """``[f]_g`` by spectral interpolation of ``f``."""
    grid = f.grid
    if g == IDENTITY:
        return f.to_physical()
    _check_scale(grid, g.lam)
    start = (-grid.L - g.x) / g.lam
    step = grid.dx / g.lam
    values, lost = resample(f, start, step)
    values *= np.exp(1j * g.gamma) / math.sqrt(g.lam)
    return f.replace(values, warnings=f.warnings + _lost_warning(lost, "modulate"))


def demodulate(f: Field, g: ModulationParams) -> Field:
    """``[f]_g^{-1}(y) = exp(-i gamma) lam^{1/2} f(lam y + x)``."""
    grid = f.grid
    if g == IDENTITY:
        return f.to_physical()
    _check_scale(grid, g.lam)
    start = g.lam * (-grid.L) + g.x
    step = g.lam * grid.dx
    values, lost = resample(f, start, step)
    values *= np.exp(-1j * g.gamma) * math.sqrt(g.lam)
    return f.replace(values, warnings=f.warnings + _lost_warning(lost, "demodulate"))


def galilean(f: Field, c: float, t: float = 0.0) -> Field:
    """``exp(icx - ic^2 t) f(x - 2ct)``; the shift is a periodic Fourier phase."""
    if c == 0.0:
        return f.to_physical()
    grid = f.grid
    shifted = np.fft.ifft(np.exp(-1j * grid.k * (2.0 * c * t)) * f.spectral)
    values = np.exp(1j * (c * grid.x - c * c * t)) * shifted
    return f.replace(values)


# gauge --------------------------------------------------------------------

def gauge_phase(f: Field, lower_tail: float = 0.0) -> np.ndarray:
    """``(1/2) int_{-L}^{x} |f|^2`` by the trapezoid rule from the left edge.

    ``lower_tail`` is an optional estimate of the mass left of ``-L``; it only
    adds a constant to the phase.
    """
    rho = np.abs(f.physical) ** 2
    cum = np.empty_like(rho)
    cum[0] = 0.0
    cum[1:] = np.cumsum(0.5 * (rho[1:] + rho[:-1])) * f.grid.dx
    return 0.5 * (cum + lower_tail)


def gauge(u: Field, lower_tail: float = 0.0) -> Field:
    """``G(u) = -u exp(-(i/2) int_{-inf}^x |u|^2)``; returns a gauged field."""
    if u.gauge is GaugeTag.GAUGED:
        raise ValueError("gauge() expects an ungauged field")
    phase = gauge_phase(u, lower_tail)
    return u.replace(-u.physical * np.exp(-1j * phase), gauge=GaugeTag.GAUGED)


def gauge_inverse(v: Field, lower_tail: float = 0.0) -> Field:
    """Exact discrete inverse of :func:`gauge` (same cumulative sum)."""
    if v.gauge is GaugeTag.UNGAUGED:
        raise ValueError("gauge_inverse() expects a gauged field")
    phase = gauge_phase(v, lower_tail)
    return v.replace(-v.physical * np.exp(1j * phase), gauge=GaugeTag.UNGAUGED)


# pseudo-conformal -----------------------------------------------------------

def pseudo_conformal(f: Field, t: float) -> tuple[Field, float]:
    """Map the snapshot ``f = u(t)`` to ``(Cu)(tau)`` with ``tau = -1/t``.

    ``(Cu)(tau, x) = |tau|^{-1/2} exp(i x^2/(4 tau)) u(-1/tau, x/|tau|)``.
    """
    if t == 0:
        raise ValueError("pseudo-conformal transform is undefined at t = 0")
    grid = f.grid
    tau = -1.0 / t
    a = abs(t)  # = 1/|tau|
    if a == 1.0:
        values = f.physical.copy()
        warns = f.warnings
    else:
        values, lost = resample(f, -grid.L * a, grid.dx * a)
        warns = f.warnings + _lost_warning(lost, "pseudo_conformal")
    values = values * math.sqrt(a) * np.exp(1j * grid.x**2 / (4.0 * tau))
    return f.replace(values, warnings=warns), tau


def blowup_required_n(L: float, t: float) -> int:
    """Smallest power-of-two grid size resolving the chirp of ``S(t)`` on ``[-L, L)``."""
    kmax = L / (2.0 * t)
    n_min = 2.0 * (kmax * L / math.pi + 1.0)
    n = 8
    while n < n_min:
        n *= 2
    return n


def explicit_blowup_S(t: float, grid: Grid1D) -> Field:
    """``S(t, x) = t^{-1/2} exp(i x^2/(4t)) R(x/t)``, tagged ungauged."""
    if not t > 0:
        raise ValueError(f"S(t) is defined for t > 0, got {t}")
    chirp = grid.L / (2.0 * t)
    if chirp > grid.k_max:
        raise ValueError(
            f"chirp wavenumber {chirp:.4g} exceeds grid k_max {grid.k_max:.4g}; "
            f"need n >= {blowup_required_n(grid.L, t)} for L = {grid.L:g}"
        )
    x = grid.x
    values = np.exp(1j * x * x / (4.0 * t)) * R_profile(x / t) / math.sqrt(t)
    return Field(grid, values, gauge=GaugeTag.UNGAUGED)


# kernel -------------------------------------------------------------------

def kernel_elements(grid: Grid1D) -> tuple[Field, Field, Field]:
    """``(iQ, Lambda Q, d_x Q)`` sampled from closed forms."""
    x = grid.x
    return (
        Field(grid, 1j * Q_profile(x), gauge=GaugeTag.GAUGED),
        Field(grid, _Lambda_Q(x), gauge=GaugeTag.GAUGED),
        Field(grid, _Q_deriv(x), gauge=GaugeTag.GAUGED),
    )


def _Z1(y):
    return _Lambda_Q(y) * chi_profile(y)


def _Z2(y):
    return 1j * Q_profile(y) * chi_profile(y)


def _Z3(y):
    return _Q_deriv(y) * chi_profile(y)


def truncated_kernels(grid: Grid1D, g: ModulationParams | None = None) -> tuple[Field, Field, Field]:
    """``(Z1, Z2, Z3) = (Lambda Q chi, iQ chi, Q' chi)`` with the unit cutoff, optionally modulated."""
    return tuple(_sample(grid, p, g, GaugeTag.GAUGED) for p in (_Z1, _Z2, _Z3))
