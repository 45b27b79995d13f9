"""Command-line entry point: ``cmdnls {simulate,decompose,transform,verify}``.

Exit codes: 0 success, 1 error, 2 blow-up stop (simulate), 3 fit failure
(decompose).
"""

from __future__ import annotations

import argparse
import logging
import math
import shutil
import sys
from pathlib import Path

import numpy as np

from . import evolution, io
from .decomposition import extract_bubbles, ungauge_bubble_list
from .fixtures import make_initial
from .spectral import GaugeTag, l2_norm
from .states import explicit_blowup_S, galilean, gauge, gauge_inverse, pseudo_conformal

log = logging.getLogger("cmdnls")

EXIT_OK, EXIT_ERROR, EXIT_BLOWUP, EXIT_FIT = 0, 1, 2, 3


def _series_row(snap, report=None, width=0):
    c, vp = snap.conserved, snap.virial
    row = [snap.t, c.mass, c.energy, c.momentum, vp.v1, vp.v2, snap.hnorm]
    for j in range(width):
        if report is not None and j < report.count:
            g = report.bubbles[j].params
            row += [g.lam, g.gamma, g.x, report.dichotomy[j]]
        else:
            row += [math.nan] * 4
    return row


# simulate ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    try:
        cfg = io.load_config(args.config)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except io.ConfigError as exc:
        print("error: config rejected", file=sys.stderr)
        for p in exc.problems:
            print(f"  {p}", file=sys.stderr)
        return EXIT_ERROR
    out = Path(cfg.out_dir if args.out_dir is None else args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    shutil.copyfile(args.config, out / "config.txt")
    sim = cfg.sim_config()
    try:
        initial, t0 = make_initial(cfg.initial, sim.grid)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    is_S = cfg.initial.split()[0] == "S"
    if t0 is not None and cfg.t_start == 0.0:
        sim.t_start = t0
        if not sim.t_end > sim.t_start:
            print(f"error: t_end {sim.t_end} must exceed the initial time {t0}", file=sys.stderr)
            return EXIT_ERROR
    width = cfg.max_bubbles
    rows = []
    counter = [0]

    def on_snapshot(snap):
        rep = None
        if width:
            f = snap.field if snap.field.gauge is GaugeTag.GAUGED else gauge(snap.field)
            try:
                rep = extract_bubbles(f, cfg.R, cfg.theta, width, alpha_star=cfg.alpha_star, check_energy=False)
            except ValueError as exc:
                log.warning("decomposition at t=%g skipped: %s", snap.t, exc)
        rows.append(_series_row(snap, rep, width))
        if cfg.snapshot_every and counter[0] % cfg.snapshot_every == 0:
            io.write_snapshot(out / f"snap_{counter[0]:05d}.cmf", snap.field, snap.t)
        counter[0] += 1

    try:
        traj = evolution.run(sim, initial, on_snapshot)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    io.write_series(out / "series.csv", rows, width)
    final = traj.final
    io.write_snapshot(out / "final.cmf", final.field, final.t)
    print(f"status {traj.status}; t = {final.t:.6g}; steps {traj.steps}")
    for name in ("mass", "energy", "momentum"):
        print(f"  {name} drift {traj.drift(name):.3e}")
    for flag in traj.flags:
        print(f"  flag: {flag}")
    if is_S and traj.status == "finished":
        exact = explicit_blowup_S(final.t, final.field.grid)
        exact = exact if final.field.gauge is GaugeTag.UNGAUGED else gauge(exact)
        err = l2_norm(final.field - exact) / l2_norm(exact)
        print(f"  final-vs-exact relative L2 error {err:.3e}")
    if traj.status == "blowup":
        return EXIT_BLOWUP
    if traj.status != "finished":
        return EXIT_ERROR
    return EXIT_OK


# decompose --------------------------------------------------------------------------

def cmd_decompose(args) -> int:
    try:
        f, t = io.read_snapshot(args.snapshot)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if f.gauge is GaugeTag.UNGAUGED:
        f = gauge(f)
    try:
        rep = extract_bubbles(f, args.R, args.theta, args.max_bubbles, alpha_star=args.alpha_star)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(f"t = {t:.17g}  M = {rep.mass:.10g}  N = {rep.count}  (theta = {rep.theta:g}, R = {rep.R:g})")
    print(f"{'k':>3} {'lambda':>14} {'gamma':>12} {'x':>14} {'dichotomy':>12} {'max|F|':>10}")
    for k, b in enumerate(rep.bubbles, start=1):
        g = b.params
        print(f"{k:>3} {g.lam:14.8g} {g.gamma:12.8f} {g.x:14.8g} {rep.dichotomy[k - 1]:12.5g} "
              f"{max(abs(r) for r in b.residuals):10.2e}")
    print("mass ledger (k, M - k M(Q), ||eps_k||^2, defect):")
    for e in rep.ledger:
        print(f"  {e.level} {e.mass_minus_bubbles:.10g} {e.radiation_mass:.10g} {e.defect:.3e}")
    for i, j, s in rep.separations:
        print(f"  separation |x_{i} - x_{j}|/lambda_{i} = {s:.6g}")
    rows = [[k, b.params.lam, b.params.gamma, b.params.x, rep.dichotomy[k - 1]]
            for k, b in enumerate(rep.bubbles, start=1)]
    header = ["k", "lambda", "gamma", "x", "dichotomy"]
    sols = []
    if args.ungauge and rep.count:
        sols, _, _ = ungauge_bubble_list(rep)
        print("ungauged solitons (lambda, gamma, x, radiation phase, pair phase):")
        for k, s in enumerate(sols, start=1):
            g = s.params
            print(f"  {k} {g.lam:.8g} {g.gamma:.8f} {g.x:.8g} {s.radiation_phase:.6g} {s.pair_phase:.6g}")
            rows[k - 1] += [g.gamma, s.radiation_phase, s.pair_phase]
        header += ["gamma_ungauged", "radiation_phase", "pair_phase"]
    report_path = Path(args.report) if args.report else Path(args.snapshot).with_suffix(".report.csv")
    with report_path.open("w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(io.format_number(v) for v in r) + "\n")
    if rep.failure:
        err = rep.fit_error
        print(f"fit failure: {rep.failure}", file=sys.stderr)
        if err is not None:
            b = err.best
            print(f"  best iterate lambda={b.lam:.8g} gamma={b.gamma:.8f} x={b.x:.8g} residuals={err.residuals}",
                  file=sys.stderr)
        return EXIT_FIT
    return EXIT_OK


# transform --------------------------------------------------------------------------

def cmd_transform(args) -> int:
    try:
        f, t = io.read_snapshot(args.snapshot)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    try:
        if args.gauge:
            f = gauge(f)
        elif args.ungauge:
            f = gauge_inverse(f)
        elif args.pseudoconformal:
            f, t = pseudo_conformal(f, t)
        else:
            f = galilean(f, args.galilean, t)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    out = Path(args.output) if args.output else Path(args.snapshot).with_suffix(".out.cmf")
    io.write_snapshot(out, f, t)
    for w in f.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"wrote {out} (t = {t:.17g}, {f.gauge.value})")
    return EXIT_OK


# verify -----------------------------------------------------------------------------

def cmd_verify(args) -> int:
    from . import verify

    old = evolution.SABOTAGE_DEALIAS
    evolution.SABOTAGE_DEALIAS = bool(args.sabotage_dealias)
    try:
        checks = verify.run_suite(args.suite, args.only)
    except KeyError:
        print(f"error: unknown suite '{args.suite}'; choose from {', '.join(verify.SUITES)}", file=sys.stderr)
        return EXIT_ERROR
    finally:
        evolution.SABOTAGE_DEALIAS = old
    for c in checks:
        print(c.line())
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} passed")
    return EXIT_OK if not failed else EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cmdnls", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="integrate a configured run")
    s.add_argument("config")
    s.add_argument("--out-dir", default=None, help="override out_dir from the config")
    s.set_defaults(func=cmd_simulate)

    d = sub.add_parser("decompose", help="bubble decomposition of a snapshot")
    d.add_argument("snapshot")
    d.add_argument("--R", type=float, default=20.0)
    d.add_argument("--theta", type=float, default=0.1)
    d.add_argument("--max-bubbles", type=int, default=8)
    d.add_argument("--alpha-star", type=float, default=0.1)
    d.add_argument("--ungauge", action="store_true", help="append the phase-corrected ungauged soliton list")
    d.add_argument("--report", default=None, help="machine report path (CSV)")
    d.set_defaults(func=cmd_decompose)

    t = sub.add_parser("transform", help="apply a symmetry or the gauge map to a snapshot")
    g = t.add_mutually_exclusive_group(required=True)
    g.add_argument("--gauge", action="store_true")
    g.add_argument("--ungauge", action="store_true")
    g.add_argument("--pseudoconformal", action="store_true")
    g.add_argument("--galilean", type=float, metavar="C")
    t.add_argument("snapshot")
    t.add_argument("-o", "--output", default=None)
    t.set_defaults(func=cmd_transform)

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("suite")
    v.add_argument("--only", type=int, nargs="+", metavar="K", help="restrict to these criterion numbers")
    v.add_argument("--sabotage-dealias", action="store_true", help=argparse.SUPPRESS)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    np.seterr(over="ignore", invalid="ignore")
    try:
        return args.func(args)
    except Exception as exc:  # unexpected failures map to exit 1
        log.debug("unhandled", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
