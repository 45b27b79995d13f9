import math

import numpy as np
import pytest

from cmdnls import io
from cmdnls.cli import main
from cmdnls.fixtures import gaussian, make_initial
from cmdnls.spectral import Field, GaugeTag, Grid1D
from cmdnls.states import ModulationParams, ground_state_Q


def _write_cfg(path, **kw):
    path.write_text("".join(f"{k} = {v}\n" for k, v in kw.items()), encoding="utf-8")
    return path


# snapshots ---------------------------------------------------------------------------------

def test_snapshot_round_trip_is_bit_exact(tmp_path):
    g = Grid1D(64, 3.7)
    r = np.random.default_rng(1)
    f = Field(g, r.normal(size=64) + 1j * r.normal(size=64), gauge=GaugeTag.UNGAUGED)
    p = io.write_snapshot(tmp_path / "a.cmf", f, 0.1 + 0.2)
    h, t = io.read_snapshot(p)
    assert t == 0.1 + 0.2
    assert h.grid == g and h.gauge is GaugeTag.UNGAUGED
    assert h.physical.tobytes() == f.physical.tobytes()
    # 4 + 4 + 8 + 8 + 1 header bytes
    assert p.stat().st_size == 25 + 16 * 64


def test_snapshot_rejects_corruption(tmp_path):
    g = Grid1D(16, 1.0)
    raw = io.snapshot_bytes(g.zeros(GaugeTag.GAUGED), 0.0)
    bad = tmp_path / "bad.cmf"
    bad.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(ValueError, match="magic"):
        io.read_snapshot(bad)
    bad.write_bytes(raw[:-1])
    with pytest.raises(ValueError, match="length"):
        io.read_snapshot(bad)
    bad.write_bytes(raw[:10])
    with pytest.raises(ValueError):
        io.read_snapshot(bad)
    with pytest.raises(ValueError):
        io.snapshot_bytes(g.zeros(), 0.0)


# series ----------------------------------------------------------------------------------------

def test_series_round_trip(tmp_path):
    r = np.random.default_rng(2)
    rows = r.normal(size=(5, 11)) * 10.0 ** r.integers(-300, 300, size=(5, 11))
    rows[0, 7] = math.nan
    rows[1, 8] = math.inf
    p = io.write_series(tmp_path / "s.csv", rows.tolist(), bubbles=1)
    header, data = io.read_series(p)
    assert header == list(io.SERIES_BASE_COLUMNS) + ["lambda_1", "gamma_1", "x_1", "dichotomy_1"]
    assert np.array_equal(data, rows, equal_nan=True)
    with pytest.raises(ValueError):
        io.write_series(tmp_path / "t.csv", [[1.0, 2.0]])


# config -------------------------------------------------------------------------------------------

def test_config_defaults_and_parsing():
    cfg = io.parse_config("# comment\nn = 256  # trailing\nequation = ungauged\nL = 12.5\n")
    assert cfg.n == 256 and cfg.L == 12.5 and cfg.equation is GaugeTag.UNGAUGED
    assert cfg.sim_config().grid == Grid1D(256, 12.5)


def test_config_reports_every_bad_key():
    text = "n = 100\nL = -1\nbogus = 3\ndealias = 5\nt_end = 0\nnot a pair\nn = 64\n"
    with pytest.raises(io.ConfigError) as info:
        io.parse_config(text)
    keys = {p.split(":", 1)[0] for p in info.value.problems}
    assert {"n", "L", "bogus", "dealias", "t_end", "line 6"} <= keys
    assert any("duplicate" in p for p in info.value.problems)


def test_make_initial():
    g = Grid1D(256, 10.0)
    f, t0 = make_initial("Q lam=0.5", g)
    assert t0 is None
    assert np.array_equal(f.physical, ground_state_Q(g, ModulationParams(0.5, 0.0, 0.0)).physical)
    f, t0 = make_initial("S t0=0.8", g)
    assert t0 == 0.8 and f.gauge is GaugeTag.UNGAUGED
    for bad in ("", "nope", "gaussian amp", "gaussian colour=2"):
        with pytest.raises(ValueError):
            make_initial(bad, g)


# command line ----------------------------------------------------------------------------------

def test_simulate_missing_config(tmp_path, capsys):
    assert main(["simulate", str(tmp_path / "none.txt")]) == 1


def test_simulate_bad_config(tmp_path, capsys):
    cfg = _write_cfg(tmp_path / "c.txt", n=100, L=-2)
    assert main(["simulate", str(cfg)]) == 1
    err = capsys.readouterr().err
    assert "n:" in err and "L:" in err


def test_simulate_box_ground_state(tmp_path, capsys):
    cfg = _write_cfg(tmp_path / "c.txt", n=128, L=8.0, t_end=0.2, output_every=0.1, initial="Q_box",
                     max_bubbles=1, theta=0.5, snapshot_every=1, out_dir=tmp_path / "out")
    assert main(["simulate", str(cfg)]) == 0
    out = tmp_path / "out"
    header, data = io.read_series(out / "series.csv")
    assert header[-4:] == ["lambda_1", "gamma_1", "x_1", "dichotomy_1"]
    assert np.allclose(data[:, 0], [0.0, 0.1, 0.2])
    assert np.abs(data[:, 1] - 2 * math.pi).max() < 1e-10
    assert (out / "config.txt").read_text() == cfg.read_text()
    assert sorted(p.name for p in out.glob("snap_*.cmf")) == ["snap_00000.cmf", "snap_00001.cmf", "snap_00002.cmf"]
    f, t = io.read_snapshot(out / "final.cmf")
    assert t == pytest.approx(0.2)


def test_simulate_explicit_blowup_reports_error(tmp_path, capsys):
    cfg = _write_cfg(tmp_path / "c.txt", equation="ungauged", n=1024, L=5.0, t_end=0.55, output_every=0.05,
                     initial="S", out_dir=tmp_path / "out")
    assert main(["simulate", str(cfg)]) == 0
    text = capsys.readouterr().out
    assert "final-vs-exact relative L2 error" in text


def test_simulate_blowup_exit(tmp_path, capsys):
    cfg = _write_cfg(tmp_path / "c.txt", n=128, L=8.0, t_end=1.0, hstop=0.5, initial="gaussian amp=2",
                     out_dir=tmp_path / "out")
    assert main(["simulate", str(cfg)]) == 2


def test_decompose(tmp_path, capsys):
    g = Grid1D(4096, 16.0)
    v = ground_state_Q(g, ModulationParams(0.2, 0.4, 1.0)) + gaussian(g, 0.05, 1.0, -3.0, 1.0)
    snap = io.write_snapshot(tmp_path / "v.cmf", v.with_gauge(GaugeTag.GAUGED), 0.0)
    assert main(["decompose", str(snap), "--theta", "0.5", "--ungauge"]) == 0
    text = capsys.readouterr().out
    assert "N = 1" in text and "ungauged solitons" in text
    rows = (tmp_path / "v.report.csv").read_text().splitlines()
    assert rows[0].startswith("k,lambda,gamma,x,dichotomy") and len(rows) == 2
    assert float(rows[1].split(",")[1]) == pytest.approx(0.2, rel=1e-2)
    bad = tmp_path / "bad.cmf"
    bad.write_bytes(b"junk")
    assert main(["decompose", str(bad)]) == 1
    # the small-energy gate rejects a broad packet
    snap = io.write_snapshot(tmp_path / "w.cmf", gaussian(g, 0.3, 2.0, 0.0, 1.0), 0.0)
    assert main(["decompose", str(snap)]) == 1


def test_decompose_fit_failure_exit(tmp_path, capsys):
    # a bubble narrower than dx drives the fitted scale out of range
    g = Grid1D(256, 16.0)
    v = ground_state_Q(g, ModulationParams(0.01, 0.0, 0.0)).with_gauge(GaugeTag.GAUGED)
    snap = io.write_snapshot(tmp_path / "v.cmf", v, 0.0)
    code = main(["decompose", str(snap), "--alpha-star", "1e6"])
    assert code == 3
    assert "fit failure" in capsys.readouterr().err


def test_transform(tmp_path, capsys):
    g = Grid1D(512, 20.0)
    f = gaussian(g, 1.0, 1.5, 2.0, 0.5, gauge=GaugeTag.UNGAUGED)
    src = io.write_snapshot(tmp_path / "u.cmf", f, 0.7)
    out = tmp_path / "o.cmf"
    assert main(["transform", "--galilean", "0", str(src), "-o", str(out)]) == 0
    h, t = io.read_snapshot(out)
    assert t == 0.7 and np.array_equal(h.physical, f.physical)

    assert main(["transform", "--gauge", str(src), "-o", str(out)]) == 0
    assert io.read_snapshot(out)[0].gauge is GaugeTag.GAUGED
    assert main(["transform", "--gauge", str(out), "-o", str(tmp_path / "x.cmf")]) == 1

    one = tmp_path / "pc1.cmf"
    two = tmp_path / "pc2.cmf"
    assert main(["transform", "--pseudoconformal", str(src), "-o", str(one)]) == 0
    assert main(["transform", "--pseudoconformal", str(one), "-o", str(two)]) == 0
    h, t = io.read_snapshot(two)
    assert t == pytest.approx(0.7)
    assert np.abs(h.physical - f.physical).max() < 1e-8


def test_verify_cli(capsys):
    assert main(["verify", "nonsense"]) == 1
    assert "unknown suite" in capsys.readouterr().err
    assert main(["verify", "evolution", "--only", "0", "--sabotage-dealias"]) == 1
    lines = capsys.readouterr().out.splitlines()
    assert any(line.startswith("[FAIL] C0") for line in lines)
    assert main(["verify", "evolution", "--only", "0"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[-1] == f"{len(lines) - 1}/{len(lines) - 1} passed"


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "cmdnls", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "simulate" in res.stdout
