"""Conserved quantities, linearized operators, adapted norms and diagnostics.

All quadratures are ``dx``-weighted grid sums.  Energies are evaluated as
``0.5 * ||.||^2`` of a first-order expression, so nonnegativity holds by
construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import (
    Field,
    GaugeTag,
    Grid1D,
    cutoff_chi,
    derivative,
    hilbert,
    inner_r,
    l2_norm,
    szego_project,
)
from .states import ground_state_Q, kernel_elements, truncated_kernels

__all__ = [
    "ConservedSet",
    "VirialPair",
    "mass",
    "energy",
    "momentum",
    "conserved",
    "hdot1",
    "bogomolnyi",
    "linearized",
    "linearized_adjoint",
    "nonlinear_part",
    "linearized_LQ",
    "adjoint_LQ",
    "nonlinear_NQ",
    "adapted_norm",
    "adapted_norm_truncated",
    "Q_HDOT1",
    "CoercivityStats",
    "coercivity_probe",
    "random_smooth_field",
    "project_out_kernels",
    "virial",
    "VirialReport",
    "virial_rate_check",
    "local_mass_rate",
    "lax_matrix",
    "lax_spectrum",
]

#: ||Q||_{H^1 dot} = sqrt(pi)/2, from int 2y^2/(1+y^2)^3 dy = pi/4
Q_HDOT1 = math.sqrt(math.pi) / 2.0


@dataclass(frozen=True)
class ConservedSet:
    mass: float
    energy: float
    momentum: float
    t: float = 0.0
    gauge: GaugeTag = GaugeTag.GAUGED


@dataclass(frozen=True)
class VirialPair:
    v1: float
    v2: float


def _tag(f: Field, tag) -> GaugeTag:
    tag = f.gauge if tag is None else tag
    if tag is None:
        raise ValueError("field carries no gauge tag; pass tag explicitly")
    return GaugeTag(tag)


def mass(f: Field) -> float:
    return l2_norm(f) ** 2


def hdot1(f: Field) -> float:
    """Homogeneous seminorm ``||d_x f||_{L^2}``."""
    return l2_norm(derivative(f))


def bogomolnyi(v: Field) -> Field:
    """``D_v v = d_x v + (1/2) H(|v|^2) v``."""
    rho = v.replace(np.abs(v.physical) ** 2)
    h = hilbert(rho).physical.real
    return derivative(v) + v.replace(0.5 * h * v.physical)


def _ungauged_energy_density(u: Field) -> Field:
    # d_x u - i Pi_+(|u|^2) u, the complete square vanishing on R
    rho = u.replace(np.abs(u.physical) ** 2)
    p = szego_project(rho).physical
    return derivative(u) - u.replace(1j * p * u.physical)


def energy(f: Field, tag=None) -> float:
    """Gauged ``E(v)`` or ungauged ``E~(u)`` selected by the gauge tag."""
    if _tag(f, tag) is GaugeTag.GAUGED:
        return 0.5 * l2_norm(bogomolnyi(f)) ** 2
    return 0.5 * l2_norm(_ungauged_energy_density(f)) ** 2


def momentum(f: Field, tag=None) -> float:
    """Gauged ``P = int Im(conj(v) v_x)``; ungauged ``Re int(conj(u) Du - |u|^4/2)``."""
    u = f.physical
    du = derivative(f).physical
    dx = f.grid.dx
    if _tag(f, tag) is GaugeTag.GAUGED:
        return float(np.sum(np.imag(np.conj(u) * du)) * dx)
    Du = -1j * du
    return float(np.sum(np.real(np.conj(u) * Du) - 0.5 * np.abs(u) ** 4) * dx)


def conserved(f: Field, t: float = 0.0, tag=None) -> ConservedSet:
    tag = _tag(f, tag)
    return ConservedSet(mass(f), energy(f, tag), momentum(f, tag), t, tag)


# linearization about v (defaults to Q) -----------------------------------------

def _ground(grid: Grid1D, v: Field | None) -> Field:
    return ground_state_Q(grid) if v is None else v


def linearized(v: Field, eps: Field) -> Field:
    """``L_v eps = eps_x + (1/2) H(|v|^2) eps + v H(Re(conj(v) eps))``."""
    vv = v.physical
    h = hilbert(v.replace(np.abs(vv) ** 2)).physical.real
    hr = hilbert(v.replace(np.real(np.conj(vv) * eps.physical))).physical.real
    return derivative(eps) + eps.replace(0.5 * h * eps.physical + vv * hr)


def linearized_adjoint(v: Field, eps: Field) -> Field:
    """``L_v^* eps = -eps_x + (1/2) H(|v|^2) eps - v H(Re(conj(v) eps))``."""
    vv = v.physical
    h = hilbert(v.replace(np.abs(vv) ** 2)).physical.real
    hr = hilbert(v.replace(np.real(np.conj(vv) * eps.physical))).physical.real
    return eps.replace(-derivative(eps).physical + 0.5 * h * eps.physical - vv * hr)


def nonlinear_part(v: Field, eps: Field) -> Field:
    """``N_v(eps) = eps H(Re(conj(v) eps)) + (1/2)(v + eps) H(|eps|^2)``."""
    vv, e = v.physical, eps.physical
    hr = hilbert(v.replace(np.real(np.conj(vv) * e))).physical.real
    he = hilbert(v.replace(np.abs(e) ** 2)).physical.real
    return eps.replace(e * hr + 0.5 * (vv + e) * he)


def linearized_LQ(eps: Field) -> Field:
    return linearized(ground_state_Q(eps.grid), eps)


def adjoint_LQ(eps: Field) -> Field:
    return linearized_adjoint(ground_state_Q(eps.grid), eps)


def nonlinear_NQ(eps: Field) -> Field:
    return nonlinear_part(ground_state_Q(eps.grid), eps)


# adapted norms ----------------------------------------------------------------

def _weighted_mass(f: Field, center: float = 0.0, scale: float = 1.0) -> float:
    y = (f.grid.x - center) / scale
    return float(np.sum(np.abs(f.physical) ** 2 / (1.0 + y * y)) * f.grid.dx)


def adapted_norm(f: Field) -> float:
    """``(||f_x||^2 + ||<x>^{-1} f||^2)^{1/2}``."""
    return math.sqrt(hdot1(f) ** 2 + _weighted_mass(f))


def adapted_norm_truncated(f: Field, R: float) -> float:
    """``(||d_x(chi_R f)||^2 + ||<x>^{-1} f||^2)^{1/2}``."""
    chi = cutoff_chi(f.grid, R)
    return math.sqrt(hdot1(f * chi) ** 2 + _weighted_mass(f))


# coercivity -----------------------------------------------------------------------

def random_smooth_field(grid: Grid1D, rng: np.random.Generator, bumps: int = 4, spread: float = 5.0) -> Field:
    """Sum of a few Gaussian wave packets with random complex amplitudes."""
    x = grid.x
    out = np.zeros(grid.n, dtype=complex)
    for _ in range(bumps):
        c = rng.uniform(-spread, spread)
        w = rng.uniform(0.5, 3.0)
        k = rng.uniform(-2.0, 2.0)
        a = rng.normal() + 1j * rng.normal()
        out += a * np.exp(-((x - c) / w) ** 2 + 1j * k * x)
    return Field(grid, out, gauge=GaugeTag.GAUGED)


def project_out_kernels(f: Field, kernels=None) -> Field:
    """Subtract the span of ``Z1, Z2, Z3`` so that ``(f, Z_k)_r = 0``."""
    Z = truncated_kernels(f.grid) if kernels is None else kernels
    gram = np.array([[inner_r(a, b) for b in Z] for a in Z])
    rhs = np.array([inner_r(f, z) for z in Z])
    coef = np.linalg.solve(gram, rhs)
    out = f.physical.copy()
    for c, z in zip(coef, Z):
        out -= c * z.physical
    return f.replace(out)


@dataclass
class CoercivityStats:
    ratios: np.ndarray
    kernel_ratios: tuple[float, float, float]

    @property
    def min(self) -> float:
        return float(self.ratios.min())

    @property
    def max(self) -> float:
        return float(self.ratios.max())


def coercivity_probe(sample_count: int = 100, grid: Grid1D | None = None, seed: int = 0) -> CoercivityStats:
    """Empirical range of ``||L_Q v|| / ||v||_{adapted}`` on ``{Z_k}^perp``."""
    grid = grid or Grid1D(4096, 50.0)
    rng = np.random.default_rng(seed)
    Z = truncated_kernels(grid)
    ratios = []
    for _ in range(sample_count):
        v = project_out_kernels(random_smooth_field(grid, rng), Z)
        ratios.append(l2_norm(linearized_LQ(v)) / adapted_norm(v))
    kr = tuple(l2_norm(linearized_LQ(k)) / adapted_norm(k) for k in kernel_elements(grid))
    return CoercivityStats(np.array(ratios), kr)


# virial -----------------------------------------------------------------------------

def virial(v: Field) -> VirialPair:
    x = v.grid.x
    u = v.physical
    du = derivative(v).physical
    dx = v.grid.dx
    v1 = float(np.sum(x * x * np.abs(u) ** 2) * dx)
    v2 = float(np.sum(x * np.imag(np.conj(u) * du)) * dx)
    return VirialPair(v1, v2)


@dataclass
class VirialReport:
    times: np.ndarray
    dv1_dt: np.ndarray
    four_v2: np.ndarray
    dv2_dt: np.ndarray
    four_e: np.ndarray

    @property
    def v1_rel_error(self) -> float:
        scale = max(np.abs(self.four_v2).max(), 1e-300)
        return float(np.abs(self.dv1_dt - self.four_v2).max() / scale)

    @property
    def v2_rel_error(self) -> float:
        scale = max(np.abs(self.four_e).max(), 1e-300)
        return float(np.abs(self.dv2_dt - self.four_e).max() / scale)


def virial_rate_check(snapshots) -> VirialReport:
    """Centered differences of ``V1, V2`` against ``4 V2`` and ``4 E``.

    ``snapshots`` is a sequence of ``(t, Field)`` pairs (gauged fields) or a
    trajectory exposing ``times`` and ``fields``.
    """
    if hasattr(snapshots, "fields"):
        pairs = list(zip(snapshots.times, snapshots.fields))
    else:
        pairs = list(snapshots)
    if len(pairs) < 3:
        raise ValueError("virial rate check needs at least three snapshots")
    t = np.array([p[0] for p in pairs], dtype=float)
    vir = [virial(p[1]) for p in pairs]
    v1 = np.array([w.v1 for w in vir])
    v2 = np.array([w.v2 for w in vir])
    e = np.array([energy(p[1], GaugeTag.GAUGED) for p in pairs])
    dt_f = t[2:] - t[1:-1]
    dt_b = t[1:-1] - t[:-2]

    def centered(y):
        # second-order on nonuniform spacing
        return (
            dt_b**2 * y[2:] - dt_f**2 * y[:-2] + (dt_f**2 - dt_b**2) * y[1:-1]
        ) / (dt_f * dt_b * (dt_f + dt_b))

    return VirialReport(t[1:-1], centered(v1), 4.0 * v2[1:-1], centered(v2), 4.0 * e[1:-1])


# localized mass --------------------------------------------------------------------------

def local_mass_rate(v: Field, psi) -> tuple[float, float]:
    """Exact rate ``d/dt int psi |v|^2`` under the gauged flow and its energy bound.

    The rate is ``-2 Re int psi' (i conj(v) v_x)``; the discriminant of
    ``a -> E(exp(i a psi) v) >= 0`` bounds it by ``2 sqrt(2E) ||psi' v||``.
    """
    grid = v.grid
    psi_f = psi if isinstance(psi, Field) else Field(grid, np.asarray(psi, dtype=float))
    if np.abs(psi_f.physical.imag).max() > 0:
        raise ValueError("weight must be real")
    dpsi = derivative(psi_f).physical.real
    u = v.physical
    du = derivative(v).physical
    rate = float(-2.0 * np.sum(dpsi * np.real(1j * np.conj(u) * du)) * grid.dx)
    e0 = energy(v, GaugeTag.GAUGED)
    bound = 2.0 * math.sqrt(2.0 * e0) * l2_norm(v.replace(dpsi * u))
    return rate, bound


# Lax operator -------------------------------------------------------------------------------

def lax_matrix(u: Field, m: int) -> np.ndarray:
    """Compression of ``-i d_x - u Pi u_bar`` to the modes ``0 .. m-1``.

    The grid Hardy space is spanned by the nonnegative modes, so the inner
    projection keeps ``xi >= 0``.  The result is Hermitian-symmetrized.
    """
    grid = u.grid
    n = grid.n
    if m < 1 or m > n // 4:
        raise ValueError(f"mode count must lie in [1, n/4 = {n // 4}], got {m}")
    coeff = np.fft.fft(u.physical) / n  # Fourier-series coefficients, signed index via fftfreq order
    p = np.arange(0, n // 2)[:, None]
    k = np.arange(m)[None, :]
    idx = k - p
    valid = (idx > -n // 2) & (idx < n // 2)
    A = np.where(valid, np.conj(coeff[np.mod(idx, n)]), 0.0)
    M = A.conj().T @ A
    xi = np.pi * np.arange(m) / grid.L
    lax = np.diag(xi).astype(complex) - M
    return 0.5 * (lax + lax.conj().T)


def lax_spectrum(u: Field, m: int) -> np.ndarray:
    """Sorted real eigenvalues of :func:`lax_matrix`."""
    return np.linalg.eigvalsh(lax_matrix(u, m))
