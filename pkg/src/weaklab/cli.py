"""Command-line runner: ``weaklab run | verify | regularity | list``.

Exit codes: 0 when every verdict matches what the scenario asserts, 1 on a
verdict failure, 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from pathlib import Path

from . import __version__
from .asymptotics import check_bounds, sweep
from .errors import ConfigError, InputError
from .levelset import LevelSetQuery, estimate, half_set_mass, resolve_workers
from .regularity import regularity_report
from .scenario import BUILTINS, load_scenario, suite

REPORT_VERSION = "1"
CSV_COLUMNS = ("lambda", "D_value", "std_err", "mass", "method", "n_samples")
OK_BY_DEFAULT = ("pass", "expected-fail")


def _clean(obj):
    """JSON-safe copy: non-finite floats become strings."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else ("inf" if obj > 0 else ("-inf" if obj < 0 else "nan"))
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item"):
        return _clean(obj.item())
    return obj


def dumps(report):
    return json.dumps(_clean(report), indent=2, sort_keys=True) + "\n"


def _symmetry_verdict(sc, workers):
    q = LevelSetQuery(sc.space, sc.u, sc.p, sc.symmetry_lambda, sc.growth)
    method = sc.method
    if method == "auto" and sc.space.is_line:
        method = "exact_1d"
    if method == "exact_1d":
        e = estimate(q, "exact_1d")
        h = half_set_mass(q, method="exact_1d")
        err = abs(e.mass - 2.0 * h.mass)
        tol = 1e-9 * max(e.mass, 1e-300)
    else:
        budget = sc.budget // 2 if sc.budget else None
        e = estimate(q, "monte_carlo", budget, sc.seed, workers, stream_key=(2,))
        h = half_set_mass(q, budget, sc.seed, workers, method="monte_carlo", stream_key=(3,))
        err = abs(e.mass - 2.0 * h.mass)
        tol = 3.0 * math.hypot(e.std_err, 2.0 * h.std_err) / sc.symmetry_lambda ** sc.p
    info = {"lambda": sc.symmetry_lambda, "E_mass": e.mass, "H_mass": h.mass, "method": e.method, "tolerance": tol}
    status = "pass" if err <= tol else "fail"
    detail = f"|E - 2H| = {err:.3g} against {tol:.3g}"
    return {"claim": "symmetry", "status": status, "margin": (tol - err) / max(e.mass, 1e-300), "detail": detail}, info


def outcome(verdicts, expect):
    for v in verdicts:
        want = expect.get(v["claim"])
        ok = v["status"] == want if want is not None else v["status"] in OK_BY_DEFAULT
        if not ok:
            return "fail"
    return "pass"


def run_scenario(sc, workers=None, with_timing=False):
    """Execute a parsed scenario and return the report dict."""
    workers = resolve_workers(workers)
    t0 = time.perf_counter()
    rep = sweep(sc.space, sc.u, sc.p, sc.grid, sc.growth, sc.method, sc.budget, sc.seed, workers)
    verdicts = [v.to_dict() for v in check_bounds(rep, sc.space.profile, sc.theorem, sc.limit_rtol)]
    report = {
        "version": REPORT_VERSION,
        "weaklab_version": __version__,
        "name": sc.name,
        "scenario_echo": sc.echo(),
        "seed": sc.seed,
        "norm_p": rep.norm_p,
        "estimates": [e.to_dict() for e in rep.estimates],
        "weak_norm_p": rep.weak_norm.to_dict(),
        "limit": rep.limit.to_dict(),
        "constants": rep.constants,
    }
    if sc.symmetry_lambda is not None:
        v, info = _symmetry_verdict(sc, workers)
        verdicts.append(v)
        report["symmetry"] = info
    if sc.regularity:
        reg = regularity_report(sc.space, sc.growth)
        report["regularity"] = reg.to_dict()
        verdicts.extend(v.to_dict() for v in reg.verdicts)
    report["verdicts"] = verdicts
    report["expect"] = dict(sc.expect)
    report["outcome"] = outcome(verdicts, sc.expect)
    report["timing"] = {"seconds": time.perf_counter() - t0} if with_timing else None
    return report


def write_csv(report, path):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for e in report["estimates"]:
        w.writerow([repr(e["lambda"]), repr(e["value"]), repr(e["std_err"]), repr(e["mass"]), e["method"], e["n_samples"]])
    Path(path).write_text(buf.getvalue())


def verify_suite(name, seed=None, workers=None, with_timing=False, log=None):
    names = suite(name)
    scenarios = {}
    for n in names:
        sc = load_scenario(n)
        if seed is not None:
            sc.seed = seed
            sc.raw["seed"] = seed
        rep = run_scenario(sc, workers, with_timing)
        scenarios[n] = rep
        if log:
            log(f"{rep['outcome'].upper():4s}  {n}")
    agg = {
        "version": REPORT_VERSION,
        "suite": name,
        "seed": seed,
        "scenarios": scenarios,
        "outcome": "pass" if all(r["outcome"] == "pass" for r in scenarios.values()) else "fail",
    }
    return agg


def _regularity_main(args):
    sc = load_scenario(args.scenario)
    reg = regularity_report(sc.space, sc.growth)
    verdicts = [v.to_dict() for v in reg.verdicts]
    report = {
        "version": REPORT_VERSION,
        "scenario_echo": sc.echo(),
        "regularity": reg.to_dict(),
        "verdicts": verdicts,
        "outcome": outcome(verdicts, {}),
    }
    Path(args.out).write_text(dumps(report))
    print(f"{report['outcome'].upper()}  regularity {sc.name}")
    return 0 if report["outcome"] == "pass" else 1


def build_parser():
    ap = argparse.ArgumentParser(prog="weaklab", description="Level-set functional sweeps and bound verification.")
    ap.add_argument("--version", action="version", version=f"weaklab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scenario (file path or builtin name)")
    r.add_argument("--scenario", required=True)
    r.add_argument("--out", required=True, help="report file (JSON)")
    r.add_argument("--csv", help="curve file with one row per grid point")
    r.add_argument("--workers", type=int, default=None)
    r.add_argument("--timing", action="store_true", help="record wall time (makes reports non-reproducible)")

    v = sub.add_parser("verify", help="run every builtin tagged for a suite")
    v.add_argument("--suite", required=True)
    v.add_argument("--out", help="aggregate report file (JSON)")
    v.add_argument("--seed", type=int, default=None, help="override every scenario's seed")
    v.add_argument("--workers", type=int, default=None)
    v.add_argument("--timing", action="store_true")

    g = sub.add_parser("regularity", help="probe regularity constants of a scenario's space")
    g.add_argument("--scenario", required=True)
    g.add_argument("--out", required=True)

    sub.add_parser("list", help="list builtin scenarios")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list":
            for name, d in BUILTINS.items():
                print(f"{name:30s} [{','.join(d['tags'])}] {d.get('description', '')}")
            return 0
        if args.command == "run":
            sc = load_scenario(args.scenario)
            report = run_scenario(sc, args.workers, args.timing)
            Path(args.out).write_text(dumps(report))
            if args.csv:
                write_csv(report, args.csv)
            for v in report["verdicts"]:
                print(f"{v['status']:15s} {v['claim']:12s} {v['detail']}")
            print(f"{report['outcome'].upper()}  {sc.name}")
            return 0 if report["outcome"] == "pass" else 1
        if args.command == "verify":
            agg = verify_suite(args.suite, args.seed, args.workers, args.timing, log=print)
            if args.out:
                Path(args.out).write_text(dumps(agg))
            print(f"{agg['outcome'].upper()}  suite {args.suite}")
            return 0 if agg["outcome"] == "pass" else 1
        if args.command == "regularity":
            return _regularity_main(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
