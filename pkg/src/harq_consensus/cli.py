"""Command-line front end.

Verbs: ``run`` (one scenario), ``sweep`` (error-rate x decay grid),
``derive-schedule`` (search the replay outcome schedule), and
``compare-lambda`` (paired runs under two decay values).

Exit codes: 0 converged / completed, 2 round cap hit, 1 usage or
configuration error.
"""
from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .channel import ChannelError, save_schedule_csv
from .config import (
    ConfigError,
    parse_scenario_config,
    parse_sweep_config,
    with_overrides,
)
from .digraph import GraphError
from .replay import derive_example1_schedule
from .scenarios import PRESETS, compare_lambda, run_scenario
from .sweep import run_sweep

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_MAX_ROUNDS = 2


class _Parser(argparse.ArgumentParser):
    """Argparse variant whose usage errors exit with code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="harq-consensus",
                     description="Quantized average consensus over lossy directed links.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario and export its trace")
    src = p_run.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=sorted(PRESETS))
    src.add_argument("--config", metavar="PATH")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--max-rounds", type=int, dest="max_rounds")
    p_run.add_argument("--out", metavar="DIR")

    p_sweep = sub.add_parser("sweep", help="grid of Monte Carlo runs")
    p_sweep.add_argument("--config", metavar="PATH", required=True)
    p_sweep.add_argument("--out", metavar="DIR")

    p_derive = sub.add_parser("derive-schedule",
                              help="derive the replay outcome schedule")
    p_derive.add_argument("--out", metavar="PATH", required=True)

    p_cmp = sub.add_parser("compare-lambda",
                           help="paired runs under two decay values")
    p_cmp.add_argument("--config", metavar="PATH", required=True)
    p_cmp.add_argument("--lambdas", metavar="A,B", required=True)
    p_cmp.add_argument("--replicas", type=int, default=100)
    p_cmp.add_argument("--out", metavar="DIR")

    return parser


def _cmd_run(args) -> int:
    if args.preset:
        cfg = PRESETS[args.preset]
    else:
        cfg = parse_scenario_config(Path(args.config).read_text())
    cfg = with_overrides(cfg, seed=args.seed, max_rounds=args.max_rounds,
                         out_dir=args.out)
    result = run_scenario(cfg)
    trace = result.trace
    print(f"rounds: {trace.rounds}")
    print(f"outcome: {trace.outcome}")
    if trace.first_converged is not None:
        print(f"first converged at round: {trace.first_converged}")
    print(f"final consensus error: {trace.errors[-1]!r}")
    if result.out_dir is not None:
        for name, path in {**result.csv_paths, **result.figure_paths}.items():
            print(f"wrote {name}: {path}")
    return EXIT_OK if result.converged else EXIT_MAX_ROUNDS


def _cmd_sweep(args) -> int:
    from dataclasses import replace

    from . import report

    cfg = parse_sweep_config(Path(args.config).read_text())
    if args.out is not None:
        cfg = replace(cfg, out_dir=args.out)
    result = run_sweep(cfg)
    print(f"graph: n={result.graph.n}, m={len(result.graph.edges)}")
    for rate in cfg.error_rates:
        cells = [result.cells[(rate, lam)] for lam in cfg.lambdas]
        medians = " ".join(f"{c.median:g}" for c in cells)
        flagged = sum(c.failures for c in cells)
        suffix = f"  ({flagged} non-converged runs)" if flagged else ""
        print(f"error rate {rate:g}: medians over decay grid: {medians}{suffix}")
    if cfg.out_dir:
        paths = report.write_sweep_outputs(result, cfg.out_dir)
        for name, path in paths.items():
            print(f"wrote {name}: {path}")
    return EXIT_OK


def _cmd_derive(args) -> int:
    derived = derive_example1_schedule()
    save_schedule_csv(derived.entries, args.out)
    print(derived.report)
    print(f"wrote schedule: {args.out}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    cfg = parse_scenario_config(Path(args.config).read_text())
    try:
        lam_a, lam_b = (float(tok) for tok in args.lambdas.split(","))
    except ValueError:
        raise ConfigError("--lambdas expects two comma-separated values") from None
    result = compare_lambda(cfg, lam_a, lam_b, args.replicas)
    print(f"median rounds at lambda={lam_a:g}: {result.median_a:g}")
    print(f"median rounds at lambda={lam_b:g}: {result.median_b:g}")
    print(f"median paired difference: {result.median_paired_diff:g}")
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        path = out / "lambda_pairs.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["replica", f"iters_lambda_{lam_a:g}", f"iters_lambda_{lam_b:g}"])
            for i, (a, b) in enumerate(result.pairs):
                writer.writerow([i, "" if a is None else a, "" if b is None else b])
        print(f"wrote pairs: {path}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "sweep": _cmd_sweep,
        "derive-schedule": _cmd_derive,
        "compare-lambda": _cmd_compare,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, GraphError, ChannelError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
