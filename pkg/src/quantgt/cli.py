"""Command line entry point: ``run``, ``compare``, ``spectrum`` and ``validate``."""

from __future__ import annotations

import argparse
import logging
import sys

from .engine import DivergenceError, step_size_bound
from .experiment import ConfigError, load_config, run_experiment
from .graphnet import GraphError, laplacian, read_edgelist, spectrum
from .report import compare_report, format_table


def _cmd_run(args):
    status = 0
    for path in args.config:
        try:
            trace = run_experiment(path)
        except DivergenceError as exc:
            print(f"{path}: {exc}", file=sys.stderr)
            status = 3
            continue
        except (ValueError, OSError) as exc:
            print(f"{path}: error: {exc}", file=sys.stderr)
            status = max(status, 2)
            continue
        cfg = load_config(path)
        print(f"== {cfg.name} -> {cfg.output_dir / (cfg.name + '.csv')}")
        print(trace.summary())
    return status


def _cmd_compare(args):
    rows = compare_report(args.traces, out_svg=args.out)
    print(format_table(rows))
    if args.out:
        print(f"wrote {args.out}")
    return 0


def _cmd_spectrum(args):
    g = read_edgelist(args.edgelist)
    lam2 = spectrum(laplacian(g)).lambda2_real_abs
    print(f"lambda2   {lam2:.12g}")
    if args.L is not None:
        print(f"alpha_bar {step_size_bound(lam2, lam2, args.L, args.K):.12g}")
    return 0


def _cmd_validate(args):
    for path in args.config:
        cfg = load_config(path)
        print(f"{path}: ok ({cfg.name}, {cfg.cost_model}, {cfg.graph.kind}, {cfg.nonlinearity})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quantgt", description="Gradient tracking with quantized links.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress and warnings")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("run", help="run experiment configs and write CSV/SVG traces")
    s.add_argument("config", nargs="+")
    s.set_defaults(func=_cmd_run)

    s = sub.add_parser("compare", help="tabulate and plot two or more CSV traces")
    s.add_argument("traces", nargs="+")
    s.add_argument("--out", help="combined SVG path")
    s.set_defaults(func=_cmd_compare)

    s = sub.add_parser("spectrum", help="algebraic connectivity of an edge-list graph")
    s.add_argument("edgelist")
    s.add_argument("--L", type=float, help="smoothness constant; prints the step-size bound")
    s.add_argument("--K", type=float, default=1.0, help="upper sector slope (default 1)")
    s.set_defaults(func=_cmd_spectrum)

    s = sub.add_parser("validate", help="check configs without running them")
    s.add_argument("config", nargs="+")
    s.set_defaults(func=_cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, GraphError, FileNotFoundError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
