"""Command-line entry point: ``lcflow simulate | rigidity | check | spectrum``.

Exit codes: 0 completed, 2 blowup detected, 1 any error (or failed checks).
"""

from __future__ import annotations

import argparse
import glob
import math
import os
import sys

from .checks import SUITES, run_suites
from .config import load_config, run_config
from .dynamics import ABORTED, BLOWUP, COMPLETED, run
from .errors import LCFlowError, ParseError
from .fields import Grid2D
from .io import DiagnosticsWriter, read_diagnostics, read_snapshot, write_snapshot, write_spectrum
from .rigidity import SWEEP_COLUMNS, OptimizerSettings, RigidityProblem, SweepCell, estimate_delta0

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BLOWUP = 2

DIAGNOSTICS_FILE = "diagnostics.csv"
FINAL_SNAPSHOT = "final.hfld"


def _snapshot_name(index: int) -> str:
    return f"snapshot_{index:05d}.hfld"


def _resume_point(csv_path: str, t: float):
    """Records up to and including the one at time ``t``; the last one is the resume record."""
    if not os.path.exists(csv_path):
        raise ParseError(f"cannot resume: {csv_path} not found")
    records = read_diagnostics(csv_path)
    for i, rec in enumerate(records):
        if rec.t == t:
            return records[: i + 1]
    raise ParseError(f"cannot resume: no diagnostics row at snapshot time t={t!r} in {csv_path}")


def simulate(args) -> int:
    cfg = load_config(args.config)
    os.makedirs(cfg.output_dir, exist_ok=True)
    csv_path = os.path.join(cfg.output_dir, DIAGNOSTICS_FILE)

    hooks = {}
    snap_index = 0
    initial = None
    if args.resume:
        initial = read_snapshot(args.resume)
        if (initial.grid.n, initial.grid.length) != (cfg.n, cfg.L):
            raise ParseError("snapshot grid does not match the configuration")
        kept = _resume_point(csv_path, initial.t)
        hooks["initial_record"] = kept[-1]
        snap_index = len(glob.glob(os.path.join(cfg.output_dir, "snapshot_*.hfld")))
        with DiagnosticsWriter(csv_path) as w:
            for rec in kept:
                w.write(rec)

    writer = DiagnosticsWriter(csv_path, append=bool(args.resume))
    skip_first = [bool(args.resume)]

    def on_record(rec):
        if skip_first[0]:
            skip_first[0] = False
            return
        writer.write(rec)

    def on_snapshot(state):
        nonlocal snap_index
        snap_index += 1
        write_snapshot(state, os.path.join(cfg.output_dir, _snapshot_name(snap_index)))

    hooks["on_record"] = on_record
    hooks["on_snapshot"] = on_snapshot
    try:
        result = run(run_config(cfg, initial, **hooks))
    finally:
        writer.close()
    write_snapshot(result.final, os.path.join(cfg.output_dir, FINAL_SNAPSHOT))
    print(
        f"status={result.status} t={result.final.t:.6g} steps={result.steps} "
        f"growth={result.growth_factor:.3g} max_drift={result.max_drift:.3g}"
        + (f" reason={result.reason}" if result.reason else "")
    )
    return {COMPLETED: EXIT_OK, BLOWUP: EXIT_BLOWUP, ABORTED: EXIT_ERROR}[result.status]


def rigidity(args) -> int:
    grid = Grid2D(args.grid_n, args.length)
    settings = OptimizerSettings(max_iter=args.max_iter, starts=args.starts, seed=args.seed)
    result = estimate_delta0(RigidityProblem(args.epsilon0, args.c0, grid, settings))
    row = SweepCell(args.epsilon0, args.c0, result).row(grid)
    text = ",".join(SWEEP_COLUMNS) + "\n" + ",".join(str(v) if isinstance(v, int) else f"{v:.17g}" for v in row) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    sys.stdout.write(text)
    if not result.valid:
        print(f"warning: {result.audit}", file=sys.stderr)
    return EXIT_OK


def check(args) -> int:
    ok = True
    for rep in run_suites(args.suite):
        print(f"[{rep.name}] {'PASS' if rep.passed else 'FAIL'}")
        for c in rep.checks:
            print(f"  {c.line()}")
        ok &= rep.passed
    return EXIT_OK if ok else EXIT_ERROR


def spectrum(args) -> int:
    write_spectrum(read_snapshot(args.snapshot), args.out)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with 1: argparse's default 2 is reserved for blowup."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lcflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run a configured simulation")
    p.add_argument("--config", required=True, help="key = value configuration file")
    p.add_argument("--resume", metavar="SNAPSHOT", help="continue from a snapshot of the same run")
    p.set_defaults(func=simulate)

    p = sub.add_parser("rigidity", help="estimate the coercivity gap for one (epsilon0, C0) cell")
    p.add_argument("--epsilon0", type=float, required=True)
    p.add_argument("--c0", type=float, required=True)
    p.add_argument("--grid-n", type=int, default=64)
    p.add_argument("--length", type=float, default=2 * math.pi)
    p.add_argument("--starts", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iter", type=int, default=150)
    p.add_argument("--out", help="also write the CSV row here")
    p.set_defaults(func=rigidity)

    p = sub.add_parser("check", help="run property suites")
    p.add_argument("--suite", action="append", choices=sorted(SUITES), help="suite to run (repeatable; default all)")
    p.set_defaults(func=check)

    p = sub.add_parser("spectrum", help="radially binned energy spectra of a snapshot")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=spectrum)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (LCFlowError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
