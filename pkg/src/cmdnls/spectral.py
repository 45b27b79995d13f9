"""Periodic pseudospectral grid, fields and Fourier-multiplier operators.

The real line is replaced by the periodic box ``[-L, L)`` sampled at ``n``
points.  The forward transform carries no prefactor and the inverse carries
``1/n`` (numpy convention); grid functionals carry ``dx`` weights so that
sums approximate line integrals.

Sign conventions for the nonlocal multipliers:

* Hilbert transform ``-i sgn(xi)`` with ``sgn(0) = 0`` and the unpaired
  Nyquist mode killed, so ``H`` stays skew-adjoint and real-preserving.
* Szego projection ``1_{xi > 0}`` (Nyquist killed as well).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "Grid1D",
    "Field",
    "GaugeTag",
    "hilbert",
    "szego_project",
    "szego_minus",
    "abs_deriv",
    "dplus",
    "derivative",
    "cutoff_chi",
    "cutoff_phi",
    "chi_profile",
    "chi_profile_deriv",
    "CHI_DERIV_CONSTANT",
    "inner_r",
    "l2_norm",
    "evaluate_uniform",
    "resample",
    "pad_spectrum",
    "truncate_spectrum",
]


class GaugeTag(enum.Enum):
    UNGAUGED = "ungauged_u"
    GAUGED = "gauged_v"

    @property
    def byte(self) -> int:
        return 0 if self is GaugeTag.UNGAUGED else 1

    @classmethod
    def from_byte(cls, value: int) -> "GaugeTag":
        if value == 0:
            return cls.UNGAUGED
        if value == 1:
            return cls.GAUGED
        raise ValueError(f"unknown gauge tag byte {value}")


@dataclass(frozen=True)
class Grid1D:
    """Uniform periodic grid on ``[-L, L)`` with ``n`` samples."""

    n: int
    L: float

    def __post_init__(self):
        n = int(self.n)
        if n != self.n or n < 8 or n & (n - 1):
            raise ValueError(f"grid size must be a power of two >= 8, got {self.n}")
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ValueError(f"half width must be positive, got {self.L}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "L", float(self.L))

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.n

    @cached_property
    def x(self) -> np.ndarray:
        x = -self.L + self.dx * np.arange(self.n)
        x.flags.writeable = False
        return x

    @cached_property
    def k(self) -> np.ndarray:
        """Wavenumbers ``pi*m/L`` in FFT storage order."""
        k = np.fft.fftfreq(self.n, d=1.0 / self.n) * (np.pi / self.L)
        k.flags.writeable = False
        return k

    @property
    def nyquist_index(self) -> int:
        return self.n // 2

    @property
    def k_max(self) -> float:
        """Largest resolved (paired) wavenumber."""
        return np.pi * (self.n // 2 - 1) / self.L

    @cached_property
    def sign(self) -> np.ndarray:
        s = np.sign(self.k)
        s[self.nyquist_index] = 0.0
        s.flags.writeable = False
        return s

    @cached_property
    def positive(self) -> np.ndarray:
        p = (self.k > 0).astype(float)
        p[self.nyquist_index] = 0.0
        p.flags.writeable = False
        return p

    @cached_property
    def negative(self) -> np.ndarray:
        p = (self.k < 0).astype(float)
        p[self.nyquist_index] = 0.0
        p.flags.writeable = False
        return p

    def field(self, values, gauge: GaugeTag | None = None) -> "Field":
        return Field(self, values, gauge=gauge)

    def zeros(self, gauge: GaugeTag | None = None) -> "Field":
        return Field(self, np.zeros(self.n, dtype=complex), gauge=gauge)


@dataclass(frozen=True, eq=False)
class Field:
    """Complex samples on a :class:`Grid1D`.

    ``rep`` says whether ``data`` holds physical samples or the unnormalized
    DFT.  Either representation can be requested; conversions return new
    objects.  ``warnings`` carries soft diagnostics (e.g. support leaving the
    box) raised by the producing operation.
    """

    grid: Grid1D
    data: np.ndarray
    rep: str = "physical"
    gauge: GaugeTag | None = None
    warnings: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.rep not in ("physical", "spectral"):
            raise ValueError(f"unknown representation {self.rep!r}")
        arr = np.array(self.data, dtype=complex, copy=True).reshape(-1)
        if arr.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} samples, got {arr.shape[0]}")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def physical(self) -> np.ndarray:
        if self.rep == "physical":
            return self.data
        return np.fft.ifft(self.data)

    @property
    def spectral(self) -> np.ndarray:
        if self.rep == "spectral":
            return self.data
        return np.fft.fft(self.data)

    def to_physical(self) -> "Field":
        if self.rep == "physical":
            return self
        return self.replace(self.physical)

    def to_spectral(self) -> "Field":
        if self.rep == "spectral":
            return self
        return Field(self.grid, self.spectral, "spectral", self.gauge, self.warnings)

    def replace(self, values, *, gauge=..., warnings=None) -> "Field":
        """New physical field on the same grid, keeping the gauge tag by default."""
        return Field(
            self.grid,
            values,
            "physical",
            self.gauge if gauge is ... else gauge,
            self.warnings if warnings is None else tuple(warnings),
        )

    def with_gauge(self, gauge: GaugeTag | None) -> "Field":
        return Field(self.grid, self.data, self.rep, gauge, self.warnings)

    def __add__(self, other: "Field") -> "Field":
        return self.replace(self.physical + _values(other, self.grid))

    def __sub__(self, other: "Field") -> "Field":
        return self.replace(self.physical - _values(other, self.grid))

    def __mul__(self, scalar) -> "Field":
        if isinstance(scalar, Field):
            return self.replace(self.physical * _values(scalar, self.grid))
        return self.replace(self.physical * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return self.replace(-self.physical)

    def __len__(self) -> int:
        return self.grid.n


def _values(f, grid: Grid1D) -> np.ndarray:
    if isinstance(f, Field):
        if f.grid != grid:
            raise ValueError("fields live on different grids")
        return f.physical
    return np.asarray(f, dtype=complex)


def _multiply(f: Field, symbol: np.ndarray) -> Field:
    # result stays spectral so that chained multipliers compose exactly
    return Field(f.grid, symbol * f.spectral, "spectral", f.gauge, f.warnings)


def hilbert(f: Field) -> Field:
    """Hilbert transform, multiplier ``-i sgn(xi)``."""
    return _multiply(f, -1j * f.grid.sign)


def szego_project(f: Field) -> Field:
    """Cauchy-Szego projection onto strictly positive wavenumbers."""
    return _multiply(f, f.grid.positive)


def szego_minus(f: Field) -> Field:
    """Projection onto strictly negative wavenumbers."""
    return _multiply(f, f.grid.negative)


def abs_deriv(f: Field) -> Field:
    """``|D|``, multiplier ``|xi|``."""
    return _multiply(f, np.abs(f.grid.k))


def dplus(f: Field) -> Field:
    """``D_+ = -i d/dx Pi_+``, multiplier ``xi 1_{xi>0}``."""
    return _multiply(f, f.grid.k * f.grid.positive)


def derivative(f: Field) -> Field:
    """Spectral ``d/dx``.  The Nyquist mode is dropped."""
    sym = 1j * f.grid.k
    sym[f.grid.nyquist_index] = 0.0
    return _multiply(f, sym)


# cutoff -------------------------------------------------------------------

#: sup of |chi'|^2 / chi for the cos^2 ramp below (attained as |s| -> 2).
CHI_DERIV_CONSTANT = np.pi**2


def chi_profile(s) -> np.ndarray:
    """Unit cutoff: 1 on ``|s|<=1``, ``cos^2(pi(|s|-1)/2)`` ramp, 0 for ``|s|>=2``."""
    a = np.abs(np.asarray(s, dtype=float))
    out = np.where(a <= 1.0, 1.0, np.cos(0.5 * np.pi * (a - 1.0)) ** 2)
    return np.where(a >= 2.0, 0.0, out)


def chi_profile_deriv(s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    a = np.abs(s)
    ramp = -0.5 * np.pi * np.sin(np.pi * (a - 1.0)) * np.sign(s)
    return np.where((a > 1.0) & (a < 2.0), ramp, 0.0)


def cutoff_chi(grid: Grid1D, R: float, center: float = 0.0) -> Field:
    """``chi_R(x - center) = chi((x - center)/R)`` sampled on ``grid``."""
    if not R > 0:
        raise ValueError(f"cutoff radius must be positive, got {R}")
    values = chi_profile((grid.x - center) / R)
    warns = ()
    if abs(center) + 2.0 * R > grid.L:
        warns = (f"cutoff support radius {2.0 * R:g} about {center:g} exceeds the box [-{grid.L:g}, {grid.L:g})",)
    return Field(grid, values, warnings=warns)


def cutoff_phi(grid: Grid1D, R: float, center: float = 0.0) -> Field:
    """Outer cutoff ``1 - chi_R``."""
    chi = cutoff_chi(grid, R, center)
    return Field(grid, 1.0 - chi.physical, warnings=chi.warnings)


# quadrature ---------------------------------------------------------------

def inner_r(f, g, grid: Grid1D | None = None) -> float:
    """Real inner product ``(f, g)_r = int Re(conj(f) g) dx``."""
    if grid is None:
        grid = f.grid if isinstance(f, Field) else g.grid
    a = _values(f, grid)
    b = _values(g, grid)
    return float(np.real(np.vdot(a, b)) * grid.dx)


def l2_norm(f: Field) -> float:
    return float(np.linalg.norm(f.physical) * math.sqrt(f.grid.dx))


# interpolation ------------------------------------------------------------

def _chirp_sum(coeffs: np.ndarray, theta: float, m: int) -> np.ndarray:
    """``X_j = sum_q c_q exp(i theta q j)`` for ``j < m`` by Bluestein's algorithm.

    Chirp phases are formed from ``theta`` directly (not from powers of a
    rounded unit complex number) so the phase error stays at ``eps*theta*q^2``.
    """
    nq = coeffs.shape[0]
    q = np.arange(nq, dtype=float)
    j = np.arange(m, dtype=float)
    a = coeffs * np.exp(0.5j * theta * q * q)
    span = np.arange(-(nq - 1), m, dtype=float)
    b = np.exp(-0.5j * theta * span * span)
    size = 1 << int(math.ceil(math.log2(nq + m - 1)))
    fa = np.fft.fft(a, size)
    fb = np.fft.fft(b, size)
    conv = np.fft.ifft(fa * fb)[nq - 1 : nq - 1 + m]
    return np.exp(0.5j * theta * j * j) * conv


def evaluate_uniform(f: Field, start: float, step: float, count: int) -> np.ndarray:
    """Evaluate the trigonometric interpolant of ``f`` at ``start + step*j``.

    The Nyquist coefficient is split evenly between ``+-n/2`` so that grid
    points are reproduced exactly.  Points are interpreted periodically.
    """
    grid = f.grid
    n = grid.n
    spec = f.spectral
    # ladder m = -n/2 .. n/2 (n+1 entries) in ascending order
    c = np.empty(n + 1, dtype=complex)
    c[: n // 2] = spec[n // 2 :]
    c[n // 2 : n] = spec[: n // 2]
    c[0] *= 0.5
    c[n] = c[0]
    m = np.arange(-(n // 2), n // 2 + 1, dtype=float)
    xi = np.pi * m / grid.L
    shift = start + grid.L
    # reduce the start phase modulo the period to keep arguments small
    shift = math.fmod(shift, 2.0 * grid.L)
    c = c * np.exp(1j * xi * shift)
    theta = np.pi * step / grid.L
    out = _chirp_sum(c, theta, count)
    j = np.arange(count, dtype=float)
    out *= np.exp(-1j * (n // 2) * theta * j)
    return out / n


def resample(f: Field, start: float, step: float, *, fill_outside: bool = True) -> tuple[np.ndarray, float]:
    """Samples of ``f`` at ``start + step*j`` for ``j < n``.

    With ``fill_outside`` the points leaving ``[-L, L)`` are set to zero
    (the field is treated as supported in the box).  The second return value
    is a diagnostic for that assumption: when points leave the box it is the
    largest modulus of ``f`` in the outer 1/64 of the box on either side,
    otherwise 0.
    """
    grid = f.grid
    values = evaluate_uniform(f, start, step, grid.n)
    lost = 0.0
    if fill_outside:
        pts = start + step * np.arange(grid.n)
        outside = (pts < -grid.L) | (pts >= grid.L)
        if outside.any():
            band = max(grid.n // 64, 1)
            u = np.abs(f.physical)
            lost = float(max(u[:band].max(), u[-band:].max()))
            values[outside] = 0.0
    return values, lost


# dealiasing ---------------------------------------------------------------

def pad_spectrum(spec: np.ndarray, factor: int) -> np.ndarray:
    """Zero-pad a length-n spectrum to ``factor*n`` (Nyquist dropped)."""
    n = spec.shape[-1]
    if factor == 1:
        return spec.copy()
    big = np.zeros(factor * n, dtype=complex)
    h = n // 2
    big[:h] = spec[:h]
    big[-(h - 1) :] = spec[h + 1 :]
    return big * factor


def truncate_spectrum(big: np.ndarray, n: int) -> np.ndarray:
    """Inverse of :func:`pad_spectrum`: keep the central ``n`` modes."""
    factor = big.shape[-1] // n
    if factor == 1:
        return big.copy()
    spec = np.zeros(n, dtype=complex)
    h = n // 2
    spec[:h] = big[:h]
    spec[h + 1 :] = big[-(h - 1) :]
    return spec / factor
