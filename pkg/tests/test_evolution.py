import math

import numpy as np
import pytest

from cmdnls import evolution
from cmdnls.evolution import SimConfig, Snapshot, Trajectory, choose_dt, rhs, run, step
from cmdnls.functionals import conserved, virial
from cmdnls.spectral import Field, GaugeTag, Grid1D
from cmdnls.states import box_frequency, ground_state_Q_box

from conftest import gaussian_values


def _brute_force_nonlinearity(spec, grid, tag):
    """Direct mode sums for ``i N(f)`` restricted to ``|q| < n/2``."""
    n = grid.n
    modes = np.fft.fftfreq(n, d=1.0 / n).astype(int)
    a = {m: spec[j] / n for j, m in enumerate(modes) if abs(m) < n // 2}
    k = lambda m: m * math.pi / grid.L
    rho = {}
    for m, am in a.items():
        for mp, amp in a.items():
            rho[m - mp] = rho.get(m - mp, 0) + am * np.conj(amp)
    if tag is GaugeTag.UNGAUGED:
        pot = {p: 2 * k(p) * r for p, r in rho.items() if p > 0}
    else:
        pot = {p: abs(k(p)) * r for p, r in rho.items()}
        for p, r in rho.items():
            for pp, rr in rho.items():
                pot[p + pp] = pot.get(p + pp, 0) - 0.25 * r * rr
    out = np.zeros(n, dtype=complex)
    for j, q in enumerate(modes):
        if abs(q) >= n // 2:
            continue
        out[j] = 1j * n * sum(pv * a.get(q - p, 0) for p, pv in pot.items())
    return out


@pytest.mark.parametrize("tag,factor", [(GaugeTag.UNGAUGED, 2), (GaugeTag.GAUGED, 3)])
def test_nonlinearity_matches_mode_sums(tag, factor):
    g = Grid1D(16, 3.0)
    r = np.random.default_rng(7)
    spec = r.normal(size=16) + 1j * r.normal(size=16)
    spec[8] = 0.0
    got = evolution.nonlinear_spectral(spec, g, tag, factor)
    want = _brute_force_nonlinearity(spec, g, tag)
    assert np.abs(got - want).max() <= 1e-12 * np.abs(want).max()


def test_rhs_of_zero():
    g = Grid1D(64, 5.0)
    for tag in GaugeTag:
        assert np.abs(rhs(g.zeros(tag)).physical).max() == 0.0


def test_rhs_of_box_ground_state():
    # d_t q = i q_xx + i N(q) = -i w q for the periodic standing wave
    g = Grid1D(512, 20.0)
    q = ground_state_Q_box(g)
    lin = 1j * np.fft.ifft(-(g.k**2) * q.spectral)
    resid = lin + rhs(q).physical + 1j * box_frequency(g.L) * q.physical
    # roundoff of the k^2 multiplier at k_max ~ 80
    assert np.abs(resid).max() < 1e-10


def test_box_ground_state_is_standing_wave():
    cfg = SimConfig(equation="gauged_v", n=256, L=10.0, t_end=0.5, dt_max=2e-3, output_every=0.25)
    q = ground_state_Q_box(cfg.grid)
    traj = run(cfg, q)
    assert traj.status == "finished" and traj.times == [0.0, 0.25, 0.5]
    want = np.exp(-1j * box_frequency(cfg.L) * 0.5) * q.physical
    assert np.abs(traj.final.field.physical - want).max() < 1e-9
    assert traj.drift("mass") < 1e-12


def test_linear_limit():
    g = Grid1D(512, 20.0)
    eps = 1e-5
    f = Field(g, eps * gaussian_values(g, 0.0, 1.0, 1.0), gauge=GaugeTag.UNGAUGED)
    cfg = SimConfig(equation="ungauged_u", n=g.n, L=g.L, t_end=0.3, output_every=0.3)
    out = run(cfg, f).final.field.spectral
    free = np.exp(-1j * g.k**2 * 0.3) * f.spectral
    # the nonlinear correction is O(eps^3) against an O(eps) signal
    assert np.linalg.norm(out - free) / np.linalg.norm(free) < 1e-8


def test_fourth_order_in_time():
    g = Grid1D(128, 10.0)
    f = Field(g, 1.2 * gaussian_values(g, 0.0, 1.0, 0.5), gauge=GaugeTag.GAUGED)
    T = 0.2

    def integrate(dt):
        v, t = f, 0.0
        for _ in range(round(T / dt)):
            v = step(v, t, dt)
            t += dt
        return v.physical

    ref = integrate(T / 640)
    e1 = np.abs(integrate(T / 20) - ref).max()
    e2 = np.abs(integrate(T / 40) - ref).max()
    assert e1 / e2 == pytest.approx(16.0, rel=0.2)


def test_time_reversal():
    g = Grid1D(256, 15.0)
    f = Field(g, gaussian_values(g, 1.0, 1.3, -0.4), gauge=GaugeTag.UNGAUGED)
    v = f
    for _ in range(100):
        v = step(v, 0.0, 1e-3)
    for _ in range(100):
        v = step(v, 0.0, -1e-3)
    assert np.abs(v.physical - f.physical).max() < 1e-9


def test_conservation_on_gaussian():
    g = Grid1D(512, 20.0)
    f = Field(g, gaussian_values(g, 0.0, 1.0, 0.5), gauge=GaugeTag.GAUGED)
    traj = run(SimConfig(n=g.n, L=g.L, t_end=0.2, dealias=3), f)
    for name in ("mass", "energy", "momentum"):
        assert traj.drift(name) < 1e-10
    assert not traj.flags


def test_sabotaged_dealiasing_breaks_conservation(monkeypatch):
    g = Grid1D(512, 20.0)
    f = Field(g, gaussian_values(g, 0.0, 1.0, 0.5), gauge=GaugeTag.GAUGED)
    monkeypatch.setattr(evolution, "SABOTAGE_DEALIAS", True)
    traj = run(SimConfig(n=g.n, L=g.L, t_end=0.1, dealias=3, drift_budget=1e-8), f)
    assert traj.drift("energy") > 1e-6
    assert traj.flags


def test_choose_dt_limits():
    g = Grid1D(256, 10.0)
    cfg = SimConfig(n=g.n, L=g.L)
    assert choose_dt(g.zeros(GaugeTag.GAUGED), cfg) == min(cfg.dt_max, cfg.c_cfl * g.dx**2)
    narrow = Field(g, 10 * gaussian_values(g, 0.0, 0.05), gauge=GaugeTag.GAUGED)
    assert choose_dt(narrow, cfg) < cfg.c_cfl * g.dx**2


def test_blowup_stop():
    g = Grid1D(256, 10.0)
    f = Field(g, 3 * gaussian_values(g, 0.0, 0.5), gauge=GaugeTag.GAUGED)
    traj = run(SimConfig(n=g.n, L=g.L, hstop=1.0, t_end=1.0), f)
    assert traj.status == "blowup"
    assert len(traj.snapshots) == 2


@pytest.mark.parametrize(
    "kw",
    [
        {"dt_max": 0.0},
        {"dealias": 4},
        {"c_cfl": -1.0},
        {"hstop": 0.0},
        {"output_every": 0.0},
        {"t_start": 1.0, "t_end": 1.0},
        {"equation": "other"},
    ],
)
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SimConfig(**kw)


def test_run_rejects_bad_initial():
    cfg = SimConfig(n=64, L=5.0)
    with pytest.raises(ValueError):
        run(cfg, Grid1D(128, 5.0).zeros(GaugeTag.GAUGED))
    bad = cfg.grid.zeros(GaugeTag.GAUGED).physical.copy()
    bad[3] = np.nan
    with pytest.raises(ValueError):
        run(cfg, Field(cfg.grid, bad, gauge=GaugeTag.GAUGED))


def test_trajectory_append_order():
    g = Grid1D(64, 5.0)
    f = g.zeros(GaugeTag.GAUGED)
    snap = lambda t, h=f: Snapshot(t, h, conserved(h, t), virial(h), 0.0)
    traj = Trajectory()
    traj.append(snap(0.0))
    with pytest.raises(ValueError):
        traj.append(snap(0.0))
    with pytest.raises(ValueError):
        traj.append(snap(1.0, Grid1D(32, 5.0).zeros(GaugeTag.GAUGED)))
