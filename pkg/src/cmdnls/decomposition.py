"""Modulation fit, energy-bubbling report and iterative bubble extraction.

A bubble is a modulated ground state ``[Q]_g``.  The fit solves
``F(g) = ((eps~, Z_1)_r, (eps~, Z_2)_r, (eps~, Z_3)_r) = 0`` where
``eps~ = [v]_g^{-1} - Q``.  Since modulation is an L^2 isometry,
``(eps~, Z_k)_r = (v - [Q]_g, [Z_k]_g)_r``, which is what is evaluated: both
``[Q]_g`` and ``[Z_k]_g`` are sampled from closed forms on the support of the
truncated kernels, so no interpolation enters the residual.

Multi-bubble extraction works in absolute coordinates.  With ``w_0 = v`` and
``e_k = w_{k-1} - [Q]_{g_k}``, the inner radiation is ``chi_k e_k`` and the
outer radiation ``w_k = phi_k e_k`` (``chi_k``, ``phi_k`` the cutoffs of radius
``R lam_k`` about ``x_k``), so that

    v = sum_k [Q]_{g_k} + eps_N,    eps_N = sum_{k<N} chi_k e_k + e_N.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .functionals import Q_HDOT1, energy, hdot1, mass
from .spectral import Field, GaugeTag, Grid1D, chi_profile, cutoff_chi, cutoff_phi, l2_norm
from .states import (
    IDENTITY,
    ModulationParams,
    Q_profile,
    R_profile,
    _Lambda_Q,
    _Q_deriv,
    demodulate,
    gauge,
    gauge_phase,
    ground_state_Q,
    modulated,
    relative_params,
)

__all__ = [
    "Bubble",
    "FitFailure",
    "BubblingReport",
    "LedgerEntry",
    "DecompositionReport",
    "TrackingResult",
    "UngaugedSoliton",
    "initial_guess",
    "fit_residuals",
    "fit_modulation",
    "energy_bubbling_report",
    "extract_bubbles",
    "bubble_tree_check",
    "mass_ledger",
    "track_modulation",
    "ungauge_bubble_list",
    "DEFAULT_R",
    "DEFAULT_THETA",
    "DEFAULT_ALPHA_STAR",
]

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
DEFAULT_R = 20.0
DEFAULT_THETA = 0.1
DEFAULT_ALPHA_STAR = 0.1
#: fraction of 2pi by which the remaining mass may fall short and still host a bubble
MASS_SLACK = 0.05


@dataclass(frozen=True)
class Bubble:
    """Fitted bubble; ``params`` are absolute, ``relative`` w.r.t. the previous level."""

    params: ModulationParams
    residuals: tuple[float, float, float]
    eps_hdot1: float = math.nan
    eps_hdot1_R: float = math.nan
    iterations: int = 0
    relative: ModulationParams = IDENTITY


class FitFailure(RuntimeError):
    """Newton fit did not converge; carries the best iterate and its residuals."""

    def __init__(self, message: str, best: ModulationParams, residuals):
        super().__init__(message)
        self.best = best
        self.residuals = tuple(float(r) for r in residuals)


@dataclass(frozen=True)
class BubblingReport:
    hdot1_R_sq: float
    outer_energy: float
    q_weighted_sq: float
    scaled_energy: float
    ratio: float
    degenerate: bool = False


@dataclass(frozen=True)
class LedgerEntry:
    level: int
    mass_minus_bubbles: float
    radiation_mass: float

    @property
    def defect(self) -> float:
        return self.mass_minus_bubbles - self.radiation_mass


@dataclass
class DecompositionReport:
    bubbles: list
    radiation: Field
    dichotomy: list
    bubbling: list
    ledger: list
    separations: list
    theta: float
    R: float
    mass: float
    reconstruction_residual: float = 0.0
    failure: str | None = None
    fit_error: FitFailure | None = None
    scale_order_ok: bool = True

    @property
    def count(self) -> int:
        return len(self.bubbles)

    @property
    def params(self) -> list:
        return [b.params for b in self.bubbles]


# fitting ----------------------------------------------------------------------------

def initial_guess(v: Field) -> ModulationParams:
    """Scale from the H^1-dot ratio, centre at ``argmax |v|``, phase ``arg v`` there."""
    h = hdot1(v)
    if not h > 0:
        raise ValueError("initial_guess needs a field with nonzero H^1-dot norm")
    u = v.physical
    i = int(np.argmax(np.abs(u)))  # first maximum, i.e. smallest x
    return ModulationParams(Q_HDOT1 / h, float(np.angle(u[i])), float(v.grid.x[i]))


def _window(grid: Grid1D, g: ModulationParams) -> slice:
    # support of [Z_k]_g is |x - x0| <= 2 lam
    lo = int(math.floor((g.x - 2.0 * g.lam + grid.L) / grid.dx)) - 1
    hi = int(math.ceil((g.x + 2.0 * g.lam + grid.L) / grid.dx)) + 2
    return slice(max(lo, 0), min(hi, grid.n))


def _residual_vector(u: np.ndarray, grid: Grid1D, g: ModulationParams) -> np.ndarray:
    sl = _window(grid, g)
    y = (grid.x[sl] - g.x) / g.lam
    amp = np.exp(1j * g.gamma) / math.sqrt(g.lam)
    chi = chi_profile(y)
    q = Q_profile(y)
    diff = u[sl] - amp * q
    zs = (_Lambda_Q(y) * chi, 1j * q * chi, _Q_deriv(y) * chi)
    return np.array([np.real(np.vdot(amp * z, diff)) for z in zs]) * grid.dx


def fit_residuals(v: Field, g: ModulationParams) -> np.ndarray:
    """``(eps~, Z_k)_r`` for k = 1, 2, 3 with ``eps~ = [v]_g^{-1} - Q``."""
    return _residual_vector(v.physical, v.grid, g)


def _from_coords(p: np.ndarray) -> ModulationParams:
    return ModulationParams(math.exp(p[0]), p[1], p[2])


def fit_modulation(
    v: Field,
    g0: ModulationParams | None = None,
    *,
    tol: float = 1e-10,
    max_iter: int = 50,
    polish: int = 2,
    fd_step: float = 1e-6,
) -> tuple[Bubble, Field]:
    """Damped Newton solve of ``F(g; v) = 0`` in ``(log lam, gamma, x)``.

    Converged when ``max |F| <= tol * ||v||``; a few polishing steps follow.
    Returns the bubble and ``eps~ = [v - [Q]_g]_g^{-1}`` on ``v``'s grid.

    Raises
    ------
    FitFailure
        No convergence in ``max_iter`` iterations or the scale left ``[dx, L]``.
    """
    grid = v.grid
    u = v.physical
    g = initial_guess(v) if g0 is None else g0
    target = tol * l2_norm(v)
    p = np.array([math.log(g.lam), g.gamma, g.x])
    lo, hi = math.log(grid.dx), math.log(grid.L)

    def F(q):
        return _residual_vector(u, grid, _from_coords(q))

    def out_of_range(q):
        return not (lo <= q[0] <= hi)

    if out_of_range(p):
        raise FitFailure(f"initial scale {g.lam:g} outside [dx, L]", g, [math.nan] * 3)
    r = F(p)
    best = (np.max(np.abs(r)), p.copy(), r)
    # an exact warm start is already converged; Newton could not improve on it
    converged_at = 0 if best[0] <= target else None
    it = 0
    while it < max_iter:
        it += 1
        lam = math.exp(p[0])
        steps = np.array([fd_step, fd_step, fd_step * lam])
        J = np.empty((3, 3))
        for j in range(3):
            e = np.zeros(3)
            e[j] = steps[j]
            J[:, j] = (F(p + e) - F(p - e)) / (2.0 * steps[j])
        try:
            delta = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            delta = np.linalg.lstsq(J, -r, rcond=None)[0]
        # keep the scale change per step moderate
        delta *= min(1.0, 0.5 / max(abs(delta[0]), 1e-300))
        norm0 = np.max(np.abs(r))
        t = 1.0
        for _ in range(30):
            trial = p + t * delta
            if not out_of_range(trial):
                r_trial = F(trial)
                if np.max(np.abs(r_trial)) < norm0 or converged_at is not None:
                    break
            t *= 0.5
        else:
            break
        if out_of_range(trial):
            g_bad = _from_coords(best[1])
            raise FitFailure("scale left the resolvable range [dx, L]", g_bad, best[2])
        p, r = trial, r_trial
        if np.max(np.abs(r)) < best[0]:
            best = (np.max(np.abs(r)), p.copy(), r)
        if converged_at is None and np.max(np.abs(r)) <= target:
            converged_at = it
        if converged_at is not None and it - converged_at >= polish:
            break
    if converged_at is None:
        raise FitFailure(
            f"modulation fit did not converge in {max_iter} iterations (best max residual {best[0]:.3g})",
            _from_coords(best[1]),
            best[2],
        )
    p, r = best[1], best[2]
    g = _from_coords(p)
    eps = v - ground_state_Q(grid, g)
    # demodulating the residual (rather than v) keeps samples outside the box at 0
    eps_t = demodulate(eps, g)
    bub = Bubble(
        params=g,
        residuals=tuple(float(x) for x in r),
        eps_hdot1=_adapted_abs(eps, g),
        eps_hdot1_R=_adapted_abs(eps, g, DEFAULT_R),
        iterations=it,
    )
    return bub, eps_t.with_gauge(GaugeTag.GAUGED)


# energy bubbling --------------------------------------------------------------------

def _weighted_abs(eps: Field, g: ModulationParams, weight) -> float:
    y = (eps.grid.x - g.x) / g.lam
    return float(np.sum(weight(y) * np.abs(eps.physical) ** 2) * eps.grid.dx)


def _adapted_abs(eps: Field, g: ModulationParams, R: float | None = None) -> float:
    """``||eps~||_{H^1 dot}`` (or the ``R``-truncated version) from the absolute residual."""
    if R is None:
        d = hdot1(eps)
    else:
        d = hdot1(eps * cutoff_chi(eps.grid, R * g.lam, g.x))
    inv = _weighted_abs(eps, g, lambda y: 1.0 / (1.0 + y * y))
    return math.sqrt((g.lam * d) ** 2 + inv)


def _bubbling_abs(eps: Field, g: ModulationParams, E_v: float, R: float) -> BubblingReport:
    lam = g.lam
    h1R = _adapted_abs(eps, g, R) ** 2
    outer = eps * cutoff_phi(eps.grid, R * lam, g.x)
    e_out = lam**2 * energy(outer.with_gauge(GaugeTag.GAUGED))
    qw = _weighted_abs(eps, g, lambda y: Q_profile(y) ** 2)
    scaled = lam**2 * E_v
    num = h1R + e_out
    degenerate = scaled == 0.0
    if degenerate:
        ratio = 0.0 if num == 0.0 else math.inf
    else:
        ratio = num / scaled
    return BubblingReport(h1R, e_out, qw, scaled, ratio, degenerate)


def energy_bubbling_report(eps_tilde: Field, lam: float, E_v: float, R: float = DEFAULT_R) -> BubblingReport:
    """Energy-bubbling quantities for ``eps~`` given in the bubble frame.

    Reports ``||eps~||^2_{H^1_R}``, ``E(phi_R eps~)``, ``||Q eps~||^2``,
    ``lam^2 E(v)`` and the ratio of the first two (summed) to the last.
    A zero denominator with nonzero numerator is flagged ``degenerate``.
    """
    rep = _bubbling_abs(eps_tilde, IDENTITY, 0.0, R)
    scaled = lam**2 * E_v
    num = rep.hdot1_R_sq + rep.outer_energy
    degenerate = scaled == 0.0
    ratio = (0.0 if num == 0.0 else math.inf) if degenerate else num / scaled
    return BubblingReport(rep.hdot1_R_sq, rep.outer_energy, rep.q_weighted_sq, scaled, ratio, degenerate)


# extraction -------------------------------------------------------------------------

def extract_bubbles(
    v: Field,
    R: float = DEFAULT_R,
    theta: float = DEFAULT_THETA,
    max_bubbles: int = 8,
    *,
    alpha_star: float = DEFAULT_ALPHA_STAR,
    warm_start: list | None = None,
    check_energy: bool = True,
) -> DecompositionReport:
    """Iteratively fit bubbles on the outer radiation until the dichotomy stops.

    The dichotomy ratio at level ``k`` is ``lam_k / ||phi_R eps~_k||_{H^1 dot}``
    (bubble frame), i.e. ``1 / ||w_k||_{H^1 dot}`` in absolute units.  The loop
    stops when the ratio reaches ``theta``, at ``max_bubbles``, or when the
    remaining mass cannot host another ground state.

    Raises
    ------
    ValueError
        Small-energy gate ``sqrt(E(v)) <= alpha_star ||v||_{H^1 dot}`` fails.
    """
    if v.gauge is GaugeTag.UNGAUGED:
        raise ValueError("extract_bubbles expects a gauged field")
    v = v.with_gauge(GaugeTag.GAUGED).to_physical()
    grid = v.grid
    if check_energy:
        e, h = energy(v), hdot1(v)
        if not math.sqrt(e) <= alpha_star * h:
            raise ValueError(
                f"small-energy gate failed: sqrt(E) = {math.sqrt(e):.4g} > alpha* ||v|| = {alpha_star * h:.4g}"
            )
    M = mass(v)
    cap = min(max_bubbles, int(math.floor(M / TWO_PI + MASS_SLACK)))
    bubbles: list[Bubble] = []
    dich: list[float] = []
    bub_reports: list[BubblingReport] = []
    parts: list[Field] = []  # chi_k e_k for completed levels
    w = v
    eps_N = v
    failure = None
    fit_err = None
    prev = IDENTITY
    while len(bubbles) < cap:
        k = len(bubbles)
        if k > 0 and mass(w) < TWO_PI * (1.0 - MASS_SLACK):
            break
        g0 = warm_start[k] if warm_start is not None and k < len(warm_start) else None
        try:
            if hdot1(w) == 0:
                raise FitFailure("outer radiation vanishes", IDENTITY, [math.nan] * 3)
            bub, _ = fit_modulation(w, g0)
        except FitFailure as exc:
            failure = f"fit failed at level {k + 1}: {exc}"
            fit_err = exc
            log.warning(failure)
            break
        g = bub.params
        e_k = w - ground_state_Q(grid, g)
        chi = cutoff_chi(grid, R * g.lam, g.x)
        inner = e_k * chi
        outer = e_k - inner
        bub = Bubble(bub.params, bub.residuals, bub.eps_hdot1, _adapted_abs(e_k, g, R), bub.iterations,
                     relative_params(g, prev))
        bub_reports.append(_bubbling_abs(e_k, g, energy(w), R))
        bubbles.append(bub)
        eps_N = Field(grid, sum((p.physical for p in parts), np.zeros(grid.n, complex)) + e_k.physical,
                      gauge=GaugeTag.GAUGED)
        parts.append(inner)
        prev = g
        h_out = hdot1(outer)
        ratio = math.inf if h_out == 0 else 1.0 / h_out
        dich.append(ratio)
        w = outer
        if ratio >= theta:
            break
    recon = v.physical - eps_N.physical
    for b in bubbles:
        recon = recon - ground_state_Q(grid, b.params).physical
    report = DecompositionReport(
        bubbles=bubbles,
        radiation=eps_N,
        dichotomy=dich,
        bubbling=bub_reports,
        ledger=[],
        separations=[],
        theta=theta,
        R=R,
        mass=M,
        reconstruction_residual=float(np.linalg.norm(recon) * math.sqrt(grid.dx)),
        failure=failure,
        fit_error=fit_err,
    )
    lams = [b.params.lam for b in bubbles]
    report.scale_order_ok = all(lams[i] <= lams[i + 1] / theta for i in range(len(lams) - 1))
    report.ledger = mass_ledger(v, report)
    report.separations = bubble_tree_check(report)["table"]
    return report


def bubble_tree_check(report: DecompositionReport, floor: float = 10.0) -> dict:
    """``|x_i - x_j| / lam_i`` for all ordered pairs; pairs below ``floor`` are flagged."""
    table = []
    flagged = []
    ps = report.params
    for i, gi in enumerate(ps):
        for j, gj in enumerate(ps):
            if i == j:
                continue
            s = abs(gi.x - gj.x) / gi.lam
            table.append((i + 1, j + 1, s))
            if s < floor:
                flagged.append((i + 1, j + 1, s))
    min_sep = min((s for _, _, s in table), default=math.inf)
    return {"table": table, "flagged": flagged, "min": min_sep, "floor": floor}


def mass_ledger(v: Field, report: DecompositionReport) -> list[LedgerEntry]:
    """Per level ``k``: ``M(v) - k M(Q)`` next to ``||eps_k||^2``."""
    grid = v.grid
    M = mass(v)
    out = [LedgerEntry(0, M, M)]
    acc = np.zeros(grid.n, complex)
    w = v.physical
    for k, b in enumerate(report.bubbles, start=1):
        e_k = w - ground_state_Q(grid, b.params).physical
        eps_k = acc + e_k
        out.append(LedgerEntry(k, M - k * TWO_PI, float(np.sum(np.abs(eps_k) ** 2) * grid.dx)))
        chi = cutoff_chi(grid, report.R * b.params.lam, b.params.x).physical
        acc = acc + chi * e_k
        w = (1.0 - chi) * e_k
    return out


# tracking ---------------------------------------------------------------------------

@dataclass
class TrackingResult:
    times: np.ndarray
    reports: list
    lam: np.ndarray
    gamma: np.ndarray
    x: np.ndarray
    slope: float = math.nan
    intercept: float = math.nan
    t_end_estimate: float = math.nan
    failures: list = field(default_factory=list)


def track_modulation(
    trajectory,
    R: float = DEFAULT_R,
    theta: float = DEFAULT_THETA,
    *,
    max_bubbles: int = 8,
    warm: bool = True,
    check_energy: bool = False,
) -> TrackingResult:
    """Decompose every snapshot, warm-starting from the previous parameters.

    Ungauged snapshots are gauged first.  Columns are padded with NaN where a
    snapshot has fewer bubbles.  The last bubble's scale is fitted by least
    squares as ``lam = a + b t``; ``b`` is reported as ``slope`` and the zero
    crossing ``-a/b`` as the blow-up time estimate.
    """
    snaps = getattr(trajectory, "snapshots", trajectory)
    times, reports, failures = [], [], []
    prev = None
    for snap in snaps:
        t, f = (snap.t, snap.field) if hasattr(snap, "field") else snap
        if f.gauge is GaugeTag.UNGAUGED:
            f = gauge(f)
        try:
            rep = extract_bubbles(f, R, theta, max_bubbles, warm_start=prev if warm else None,
                                  check_energy=check_energy)
        except ValueError as exc:
            failures.append((t, str(exc)))
            continue
        if rep.failure:
            failures.append((t, rep.failure))
        times.append(t)
        reports.append(rep)
        if rep.count:
            prev = rep.params
    width = max((r.count for r in reports), default=0)
    cols = {name: np.full((len(reports), width), np.nan) for name in ("lam", "gamma", "x")}
    for i, r in enumerate(reports):
        for j, g in enumerate(r.params):
            cols["lam"][i, j] = g.lam
            cols["gamma"][i, j] = g.gamma
            cols["x"][i, j] = g.x
    res = TrackingResult(np.array(times), reports, cols["lam"], cols["gamma"], cols["x"], failures=failures)
    if width:
        last = np.array([r.params[-1].lam if r.count else np.nan for r in reports])
        ok = np.isfinite(last)
        if ok.sum() >= 2:
            b, a = np.polyfit(res.times[ok], last[ok], 1)
            res.slope, res.intercept = float(b), float(a)
            res.t_end_estimate = -a / b if b != 0 else math.nan
    return res


# ungauged side ----------------------------------------------------------------------

@dataclass(frozen=True)
class UngaugedSoliton:
    params: ModulationParams
    radiation_phase: float
    pair_phase: float


def ungauge_bubble_list(report: DecompositionReport, radiation: Field | None = None):
    """Map gauged bubbles ``[Q]_{g_j}`` to ungauged ``[R]_{lam_j, gamma_j + gamma*_j + gamma'_j, x_j}``.

    ``gamma*_j`` is half the radiation mass left of ``x_j``; ``gamma'_j`` adds
    ``pi`` for every other bubble centred to the left (exact ties: the bubble
    extracted earlier counts as left).  Returns the soliton list, the ungauged
    radiation ``-eps_N exp(i Phi)`` with ``Phi`` the gauge phase of the
    reconstruction, and the ungauged reconstruction.
    """
    eps = report.radiation if radiation is None else radiation
    grid = eps.grid
    cum = gauge_phase(eps)
    sols = []
    ps = report.params
    for j, g in enumerate(ps):
        gs = float(np.interp(g.x, grid.x, cum))
        shift = 0.0
        for l, h in enumerate(ps):
            if l == j:
                continue
            if h.x < g.x or (h.x == g.x and l < j):
                shift += math.pi
        sols.append(UngaugedSoliton(ModulationParams(g.lam, g.gamma + gs + shift, g.x), gs, shift))
    v_rec = eps.physical.copy()
    for g in ps:
        v_rec = v_rec + ground_state_Q(grid, g).physical
    phase = gauge_phase(Field(grid, v_rec))
    z = Field(grid, -eps.physical * np.exp(1j * phase), gauge=GaugeTag.UNGAUGED)
    u_rec = z.physical.copy()
    for s in sols:
        u_rec = u_rec + modulated(grid, R_profile, s.params).physical
    return sols, z, Field(grid, u_rec, gauge=GaugeTag.UNGAUGED)
