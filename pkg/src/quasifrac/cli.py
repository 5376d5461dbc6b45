"""Command-line entry point: ``quasifrac <subcommand> ...``.

Every subcommand writes JSON/CSV into ``--out`` and prints one PASS/FAIL
line per validation.  The exit status is 0 only if every validation passes,
1 if one fails and 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from fractions import Fraction

from .errors import ConfigError, QuasifracError
from .evolution import delta_convergence_study
from .scenarios import (
    _json_default,
    example_oscillating,
    example_transmission,
    golab_demo,
    load_scenario,
    oracle_compare,
    resolve_config,
    run_scenario,
)


def _fraction(text):
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")


def _dump(out, name, obj):
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, name)
    with open(path, "w") as f:
        json.dump(obj, f, indent=1, sort_keys=True, default=_json_default)
        f.write("\n")
    return path


def _rows_csv(out, name, rows, cols):
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, name), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([r[c] for c in cols])


def _report(checks):
    for name, ok in checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    return 0 if all(checks.values()) else 1


def _scenario(args):
    sc = load_scenario(resolve_config(args.config))
    return sc.with_overrides(h=args.h, deltas=args.deltas)


def cmd_run(args):
    sc = _scenario(args)
    summary = run_scenario(sc, args.out)
    print(f"omega_hat per delta: {', '.join(f'{w:.4g}' for w in summary.info['omega_hat'])}")
    if "jump_times" in summary.info:
        print(f"jump times: {summary.info['jump_times']}")
    return _report(summary.checks)


def cmd_oscillating(args):
    ns = sorted(args.n)
    rows = example_oscillating(ns, h=args.h or 1 / 128)
    _dump(args.out, "oscillating.json", rows)
    _rows_csv(args.out, "oscillating.csv", rows, ["n", "l2_to_x2", "crack_face_flux", "bulk"])
    for r in rows:
        print(f"n={r['n']:3d}  |u_n - x2|_L2 = {r['l2_to_x2']:.5f}  crack flux = {r['crack_face_flux']:.4f}")
    d = [r["l2_to_x2"] for r in rows]
    return _report({"l2_strictly_decreasing": all(b < a for a, b in zip(d, d[1:]))})


def cmd_transmission(args):
    ns = sorted(args.n)
    rows = example_transmission(ns, h=args.h or 1 / 30, spacing=args.spacing)
    _dump(args.out, "transmission.json", rows)
    _rows_csv(args.out, "transmission.csv", rows, ["n", "c_n", "rel_error", "grating_reference"])
    for r in rows:
        print(f"n={r['n']}  c_n = {r['c_n']:.4f}  rel. error vs pi/2 = {r['rel_error']:.3f}"
              f"  grating reference = {r['grating_reference']:.4f}")
    checks = {
        "jumps_negative": all(r["jumps_negative"] for r in rows),
        "flux_signs_consistent": all(r["flux_signs_consistent"] for r in rows),
    }
    if len(rows) > 1:
        checks["error_trend"] = rows[-1]["rel_error"] <= rows[0]["rel_error"]
    for r in rows:
        if r["n"] == 4:
            checks["n4_within_30pct"] = r["rel_error"] <= 0.30
    return _report(checks)


def cmd_golab(args):
    rep = golab_demo()
    c, o = rep["connected"], rep["oscillating"]
    _dump(args.out, "golab.json", {
        "connected": c.__dict__, "connected_n": rep["connected_n"],
        "oscillating": o.__dict__, "oscillating_n": rep["oscillating_n"],
    })
    print(f"connected:   lengths {[round(float(x), 4) for x in c.lengths]} -> limit {c.limit_length}")
    print(f"oscillating: lengths {[round(float(x), 4) for x in o.lengths]} -> limit {o.limit_length}")
    return _report({
        "connected_semicontinuous": c.semicontinuous,
        "oscillating_not_semicontinuous": not o.semicontinuous,
        "oscillating_lengths_half": all(abs(x - 0.5) < 1e-12 for x in o.lengths),
        "limit_length_one": abs(o.limit_length - 1.0) < 1e-12,
    })


def cmd_oracle(args):
    sc = _scenario(args)
    rows = oracle_compare(sc)
    _dump(args.out, "oracle.json", rows)
    return _report({f"delta={r['delta']:.6g}.identical": r["identical_energies"] for r in rows})


def cmd_delta(args):
    sc = _scenario(args)
    study = delta_convergence_study(
        sc.program, sc.K0, sc.deltas, sc.policy, sc.evaluator(), sample_times=sc.sample_times
    )
    _dump(args.out, "delta_study.json", study.to_dict())
    for t, M, ok in zip(study.sample_times, study.distances, study.cauchy):
        print(f"t={t:.4f}  d_H to finest: {[round(float(x), 4) for x in M[:-1, -1]]}"
              f"  {'shrinking' if ok else 'not shrinking'}")
    print(f"jump times (threshold {study.threshold:.4g}): {study.jumps}")
    return _report({"monotone_in_t": all(study.monotone)})


def build_parser():
    p = argparse.ArgumentParser(prog="quasifrac", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, default_out, config=False):
        sp.add_argument("--out", default=os.path.join("out", default_out), help="output directory")
        sp.add_argument("--h", type=_fraction, default=None, help="mesh size (e.g. 1/24)")
        sp.add_argument("--deltas", type=_fraction, nargs="+", default=None,
                        help="decreasing time steps (e.g. 1/8 1/16 1/32)")
        if config:
            sp.add_argument("--config", default="midline",
                            help="scenario YAML path or bundled name (midline, zero)")

    r = sub.add_parser("run", help="run a scenario config")
    r.add_argument("config", help="scenario YAML path or bundled name")
    common(r, "run")
    r.set_defaults(func=cmd_run)

    o = sub.add_parser("example-oscillating", help="solutions cut by oscillating cracks")
    common(o, "oscillating")
    o.add_argument("--n", type=int, nargs="+", default=[1, 4, 8, 16, 32])
    o.set_defaults(func=cmd_oscillating)

    t = sub.add_parser("example-transmission", help="transmission coefficient of packed cracks")
    common(t, "transmission")
    t.add_argument("--n", type=int, nargs="+", default=[3, 4, 5])
    t.add_argument("--spacing", type=_fraction, default=1 / 600, help="midline lattice spacing")
    t.set_defaults(func=cmd_transmission)

    g = sub.add_parser("golab-demo", help="length semicontinuity with and without connectedness")
    common(g, "golab")
    g.set_defaults(func=cmd_golab)

    c = sub.add_parser("oracle-compare", help="pool policy against brute-force enumeration")
    common(c, "oracle", config=True)
    c.set_defaults(func=cmd_oracle)

    d = sub.add_parser("delta-study", help="cross-time-step Hausdorff convergence study")
    common(d, "delta_study", config=True)
    d.set_defaults(func=cmd_delta)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except QuasifracError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
