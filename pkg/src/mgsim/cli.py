"""Command line: ``mgsim validate|run|sweep``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import paradigms
from .casefile import ParseError, ValidationError, parse_case
from .grid import CaseInvalid
from .milp import SolverError
from .report import IoError, fmt, write_report

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mgsim", description="Microgrid and bulk-grid interaction simulator.")
    p.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("validate", help="parse and validate a case file")
    v.add_argument("case")

    r = sub.add_parser("run", help="run one paradigm and write a report bundle")
    r.add_argument("--case", required=True)
    r.add_argument("--paradigm", choices=paradigms.PARADIGMS)
    r.add_argument("--penetration", type=float)
    r.add_argument("--out", default="out")
    r.add_argument("--max-iter", type=int)

    s = sub.add_parser("sweep", help="run one paradigm over a range of penetrations")
    s.add_argument("--case", required=True)
    s.add_argument("--penetration", required=True, metavar="A:B:STEP")
    s.add_argument("--paradigm", choices=paradigms.PARADIGMS)
    s.add_argument("--out", default="sweep")
    return p


def penetration_range(spec: str) -> list[float]:
    """Values A, A+STEP, ... up to B inclusive, from ``A:B:STEP``."""
    try:
        a, b, step = (float(x) for x in spec.split(":"))
    except ValueError:
        raise UsageError(f"penetration range must look like A:B:STEP, got {spec!r}") from None
    if step <= 0 or b < a:
        raise UsageError("penetration range needs STEP > 0 and A <= B")
    n = int(np.floor((b - a) / step + 1e-9))
    return [round(a + k * step, 10) for k in range(n + 1)]


def _scenario(args):
    scn = parse_case(args.case)
    changes = {}
    if args.paradigm:
        changes["paradigm"] = args.paradigm
    if getattr(args, "max_iter", None) is not None:
        changes["max_iter"] = args.max_iter
    if isinstance(args.penetration, float):
        changes["penetration"] = args.penetration
    return scn.with_(**changes) if changes else scn


def _validate(args) -> int:
    scn = parse_case(args.case)
    net = scn.network
    print(
        f"{args.case}: ok ({len(net.buses)} buses, {len(net.branches)} branches, "
        f"{len(net.units)} units, {len(scn.microgrids)} microgrids, {net.horizon} hours)"
    )
    return EXIT_OK


def _run(args) -> int:
    scn = _scenario(args)
    rep = paradigms.run(scn)
    write_report(rep, args.out)
    m = rep.metrics
    print(f"{rep.paradigm} f={fmt(rep.penetration)}: total |mismatch| {fmt(m['total_abs_mwh'])} MWh -> {args.out}")
    return EXIT_OK


def _sweep(args) -> int:
    values = penetration_range(args.penetration)
    base = _scenario(args)
    out = Path(args.out)
    rows = []
    for f in values:
        rep = paradigms.run(base.with_(penetration=f))
        write_report(rep, out / f"f_{f:.6f}")
        m = rep.metrics
        rows.append((fmt(f), fmt(m["max_abs_mw"]), fmt(m["total_abs_mwh"])))
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "sweep_summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("penetration", "max_abs_mw", "total_abs_mwh"))
        w.writerows(rows)
    print(f"{base.paradigm}: {len(values)} penetrations -> {out}")
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
        if args.command == "sweep":
            penetration_range(args.penetration)
    except UsageError as exc:
        print(f"mgsim: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    handler = {"validate": _validate, "run": _run, "sweep": _sweep}[args.command]
    try:
        return handler(args)
    except UsageError as exc:
        print(f"mgsim: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"mgsim: cannot read {exc.filename}", file=sys.stderr)
        return EXIT_INPUT
    except (ParseError, ValidationError, CaseInvalid) as exc:
        print(f"mgsim: invalid case: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as exc:
        print(f"mgsim: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except IoError as exc:
        print(f"mgsim: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
