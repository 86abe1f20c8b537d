"""Command line entry point.

Exit codes: 0 success, 1 gradient check failed or unexpected error,
2 bad usage or config, 3 dataset or metrics input problem, 4 some grid
cells failed (the rest were written).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .data import DataError
from .gradcheck import gradient_check
from .harness import ConfigError, MetricsError, emit_curves, load_config, parse_selector, read_metrics, run_grid, summarize
from .harness.report import curves_csv
from .models import MODEL_KINDS, Architecture

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_CELLS = 4


def _cmd_run(args) -> int:
    grid = load_config(args.config)
    for source in grid.datasets:
        if source.csv is not None and not source.csv.exists():
            print(f"error: dataset {source.name!r}: file not found: {source.csv}", file=sys.stderr)
            return EXIT_INPUT
    out = Path(args.out)
    cells = grid.cells()
    print(f"running {len(cells)} cells -> {out}", file=sys.stderr)
    failures = run_grid(grid, out, export_dir=args.export_dir, workers=args.workers)
    if failures:
        for f in failures:
            print(f"cell {f.cell.slug} failed: {f.error}", file=sys.stderr)
        return EXIT_CELLS
    return EXIT_OK


def _cmd_summarize(args) -> int:
    paths = summarize(args.metrics, args.out_prefix)
    sys.stdout.write(paths["table"].read_text(encoding="utf-8"))
    for kind, p in paths.items():
        print(f"wrote {kind}: {p}", file=sys.stderr)
    return EXIT_OK


def _cmd_curves(args) -> int:
    rows = emit_curves(read_metrics(args.metrics), parse_selector(args.select), args.metric)
    text = curves_csv(rows)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_gradcheck(args) -> int:
    widths = tuple(int(w) for w in args.widths.split(","))
    report = gradient_check(Architecture(args.model, widths), seed=args.seed, batch=args.batch,
                            tolerance=args.tol)
    status = "PASS" if report.passed else "FAIL"
    print(f"{status} {args.model} {list(widths)}: {report.n_checked}/{report.n_params} params checked, "
          f"max rel error {report.max_rel_error:.3e} (tol {report.tolerance:g}, worst {report.worst_param})")
    return EXIT_OK if report.passed else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fedkan", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment grid from a JSON config")
    run.add_argument("config")
    run.add_argument("--out", default="metrics.csv", help="metrics CSV path (default: metrics.csv)")
    run.add_argument("--workers", type=int, default=None, help="parallel cell workers")
    run.add_argument("--export-dir", default=None, help="write each cell's final weights here")
    run.set_defaults(func=_cmd_run)

    summ = sub.add_parser("summarize", help="final-round accuracy tables from a metrics CSV")
    summ.add_argument("metrics")
    summ.add_argument("--out-prefix", default=None)
    summ.set_defaults(func=_cmd_summarize)

    cur = sub.add_parser("curves", help="long-format per-round series for plotting")
    cur.add_argument("metrics")
    cur.add_argument("--select", required=True, help="key=value[,key=value...]")
    cur.add_argument("--metric", choices=("accuracy", "loss", "both"), default="accuracy")
    cur.add_argument("--out", default=None)
    cur.set_defaults(func=_cmd_curves)

    gc = sub.add_parser("gradcheck", help="compare analytic and finite-difference gradients")
    gc.add_argument("model", choices=MODEL_KINDS)
    gc.add_argument("--widths", default="8,25,50,2")
    gc.add_argument("--seed", type=int, default=0)
    gc.add_argument("--batch", type=int, default=16)
    gc.add_argument("--tol", type=float, default=1e-4)
    gc.set_defaults(func=_cmd_gradcheck)

    ver = sub.add_parser("version", help="print the package version")
    ver.set_defaults(func=lambda args: print(__version__) or EXIT_OK)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        if isinstance(exc, (DataError, MetricsError)):
            print(f"input error: {exc}", file=sys.stderr)
            return EXIT_INPUT
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
