"""Command-line entry point: run, verify, inspect."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .io import (
    ConfigError,
    SnapshotError,
    load_config,
    load_snapshot,
    save_snapshot,
    write_diagnostics_csv,
    write_report,
)
from .spectral import hs_norm, l2_norm, linf_norm
from .timestepping import BlowUpError

log = logging.getLogger("nsmlab")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nsmlab", description="Spectral Navier-Stokes-Maxwell / Hall-MHD experiments")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    r = sub.add_parser("run", help="run an experiment from a config file")
    r.add_argument("--config", required=True, type=Path)
    r.add_argument("--out", required=True, type=Path)
    v = sub.add_parser("verify", help="run a self-check suite")
    v.add_argument("--suite", required=True, choices=("invariants", "oracles", "calibration"))
    v.add_argument("--calibration-file", type=Path, default=None)
    i = sub.add_parser("inspect", help="print a snapshot header and norms")
    i.add_argument("--snapshot", required=True, type=Path)
    return p


def write_outputs(result, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    labels = list(result.runs)
    for n, label in enumerate(labels):
        tr = result.runs[label]
        base = out if n == 0 else out / "runs" / label
        write_diagnostics_csv(tr.records, base / "diagnostics.csv")
        snapdir = out / "snapshots"
        save_snapshot(tr.snapshots[0], snapdir / f"{label}_initial.nsms")
        save_snapshot(tr.final, snapdir / f"{label}_final.nsms")
    report = result.report()
    report["runs"] = labels
    write_report(report, out / "report.json")


def cmd_run(args) -> int:
    from .scenarios import run_scenario
    try:
        cfg = load_config(args.config, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        result = run_scenario(cfg)
    except BlowUpError as exc:
        path = save_snapshot(exc.last_state, args.out / "snapshots" / "blowup_last.nsms")
        if exc.trajectory is not None:
            write_diagnostics_csv(exc.trajectory.records, args.out / "diagnostics.csv")
        write_report({"scenario": cfg.scenario, "passed": False, "error": str(exc),
                      "last_snapshot": str(path)}, args.out / "report.json")
        print(f"blow-up: {exc}; last healthy snapshot at {path}", file=sys.stderr)
        return EXIT_FAIL
    except (ValueError, OSError, SnapshotError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    write_outputs(result, args.out)
    for c in result.checks:
        print(c.line())
    print(f"{cfg.scenario}: {'PASS' if result.passed else 'FAIL'}")
    return EXIT_OK if result.passed else EXIT_FAIL


def cmd_verify(args) -> int:
    from .verify import run_suite
    checks = run_suite(args.suite, args.calibration_file)
    for c in checks:
        print(c.line())
    ok = all(c.passed for c in checks if c.asserted)
    print(f"verify {args.suite}: {'PASS' if ok else 'FAIL'} ({sum(c.passed for c in checks)}/{len(checks)})")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_inspect(args) -> int:
    try:
        st = load_snapshot(args.snapshot)
    except (OSError, SnapshotError) as exc:
        print(f"cannot read snapshot: {exc}", file=sys.stderr)
        return EXIT_USAGE
    g = st.grid
    print(f"snapshot {args.snapshot}")
    print(f"  d={g.d} N={g.N} L={g.L:.12g} t={st.t:.12g} fields={','.join(st.fields())}")
    for name, f in st.fields().items():
        print(f"  {name}: L2={l2_norm(f):.12e} H1={hs_norm(f, 1):.12e} Linf={linf_norm(f):.12e} "
              f"mean={np.real(f.mean()).round(12).tolist()}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    handler = {"run": cmd_run, "verify": cmd_verify, "inspect": cmd_inspect}[args.command]
    return handler(args)


if __name__ == "__main__":
    raise SystemExit(main())
