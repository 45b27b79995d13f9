import runpy
from pathlib import Path

SCRIPT = Path(__file__).resolve().parents[1] / "scripts" / "calibrate_R.py"


def test_calibration_script_recovers_default(capsys):
    main = runpy.run_path(str(SCRIPT))["main"]
    assert main(["--samples", "40"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[-1] == "suggested R = 20"


def test_calibration_ratio_insensitive_to_R(capsys):
    main = runpy.run_path(str(SCRIPT))["main"]
    main(["--n", "2048", "--L", "50", "--samples", "10", "--radii", "5", "40"])
    rows = [line.split() for line in capsys.readouterr().out.splitlines()[1:3]]
    a, b = float(rows[0][1]), float(rows[1][1])
    assert 0 < a < 10 and abs(a / b - 1) < 0.2
