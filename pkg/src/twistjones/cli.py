"""Command-line interface.

Subcommands mirror the harness operations; results print as JSON records on
stdout.  Exit codes: 0 success, 2 domain error, 3 accuracy error, 4 solver
error.
"""

from __future__ import annotations

import argparse
import json
import sys

from mpmath import mp

from .errors import AccuracyError, DomainError, SolverError, WorkbenchError
from .harness import load_config, run_report


def _add_common(sub):
    sub.add_argument("--p", type=int, default=6, help="twist parameter")
    sub.add_argument("--bits", type=int, default=None, help="working precision bits")


def build_parser():
    ap = argparse.ArgumentParser(prog="twistjones",
                                 description="Colored Jones asymptotics workbench for twist knots")
    ap.add_argument("--config", default=None, help="path to key=value config file")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("jones", help="evaluate J_N(K_p) at e^{2 pi i/(N+1/M)}")
    _add_common(s)
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--M", default="2", help="integer >= 2 or 'inf'")
    s.add_argument("--check", action="store_true", help="doubling precision check")

    s = sub.add_parser("critical", help="critical point, zeta, omega")
    _add_common(s)

    s = sub.add_parser("predict", help="leading asymptotic term")
    _add_common(s)
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--M", default="2")
    s.add_argument("--d", type=int, default=0)

    s = sub.add_parser("fit", help="fit expansion coefficients over an N ladder")
    _add_common(s)
    s.add_argument("--M", default="2")
    s.add_argument("--N", required=True, help="comma-separated ladder, e.g. 50,100,200")
    s.add_argument("--d", type=int, default=1)

    s = sub.add_parser("growth", help="growth-rate extrapolation (2 pi/denom) log J_N")
    _add_common(s)
    s.add_argument("--M", default="inf")
    s.add_argument("--N", required=True, help="comma-separated ladder")

    s = sub.add_parser("fourier", help="Fourier coefficient h-hat (or h-tilde at M=inf)")
    _add_common(s)
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--M", default="2")
    s.add_argument("--m", type=int, default=0)
    s.add_argument("--n", type=int, default=0)
    s.add_argument("--tol", default="1e-10")

    s = sub.add_parser("volume", help="volume / Chern-Simons from 2 pi zeta")
    _add_common(s)

    s = sub.add_parser("report", help="re-run a stored command spec from JSON")
    s.add_argument("--spec", required=True, help="path to a JSON command spec")
    s.add_argument("--out", default=None, help="write the record JSON here")
    return ap


def _spec_from_args(args):
    spec = {"command": args.command, "p": args.p}
    if args.bits:
        spec["bits"] = args.bits
    if args.command in ("jones", "predict", "fourier"):
        spec["N"] = args.N
        spec["M"] = args.M
    if args.command == "jones":
        spec["check"] = args.check
    if args.command == "predict":
        spec["d"] = args.d
    if args.command in ("fit", "growth"):
        spec["M"] = args.M
        spec["Nlist"] = [int(x) for x in str(args.N).split(",")]
    if args.command == "fit":
        spec["d"] = args.d
    if args.command == "fourier":
        spec["m"] = args.m
        spec["n"] = args.n
        spec["tol"] = args.tol
    return spec


def main(argv=None):
    args = build_parser().parse_args(argv)
    config = load_config(args.config)
    out_path = None
    if args.command == "report":
        with open(args.spec) as fh:
            spec = json.load(fh)
        out_path = args.out
    else:
        spec = _spec_from_args(args)
    try:
        record = run_report(spec, config=config)
    except DomainError as exc:
        print(json.dumps({"error": str(exc), "kind": "domain"}), file=sys.stderr)
        return 2
    except AccuracyError as exc:
        print(json.dumps({"error": str(exc), "kind": "accuracy"}), file=sys.stderr)
        return 3
    except SolverError as exc:
        print(json.dumps({"error": str(exc), "kind": "solver"}), file=sys.stderr)
        return 4
    except WorkbenchError as exc:
        print(json.dumps({"error": str(exc), "kind": "other"}), file=sys.stderr)
        return 1
    payload = {
        "inputs": record.inputs,
        "outputs": record.outputs,
        "provenance": record.provenance,
        "timestamp": record.timestamp,
        "cache_hit": record.cache_hit,
    }
    print(json.dumps(payload, sort_keys=True, indent=1))
    if record.csv:
        if out_path:
            base = out_path
        elif args.command in ("fit", "growth"):
            base = None
        if out_path:
            with open(out_path + ".csv" if not out_path.endswith(".csv") else out_path, "w") as fh:
                fh.write(record.csv)
    if out_path and not record.csv:
        with open(out_path, "w") as fh:
            json.dump(payload, fh, sort_keys=True, indent=1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
