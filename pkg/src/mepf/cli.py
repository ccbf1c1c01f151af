"""Command line driver.

Four commands: ``run`` executes an experiment and writes the CSV, a text
summary, and a PNG figure next to it; ``alpha`` prints the theoretical
query-per-sample coefficients for a distribution; ``check`` runs the
built-in self checks or re-verifies a previously written CSV against its
config; ``dump-tree`` renders a code tree as text.

Exit codes: 0 success, 1 invalid configuration, 2 a check failed,
3 an I/O problem.  The ``MEPF_SEED`` environment variable overrides the
config-file seed and is itself overridden by ``--seed``.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

from .bench import (
    ALGORITHMS,
    ExperimentConfig,
    csv_text,
    execute_trials,
    parse_config,
    parse_distribution,
    run_experiment,
    summary_text,
    validate_config,
)
from .checks import run_all_checks
from .coding import build_huffman, dump_tree
from .distribution import query_complexity_coefficient, sample
from .errors import InvalidConfig, IoFailure, MepfError

__all__ = ["main"]

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_CHECK_FAILED = 2
EXIT_IO = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mepf",
        description="Mode estimation from pairwise-set membership queries.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", metavar="PATH", help="flat key=value config file")
        p.add_argument("--seed", type=int, metavar="U64")
        p.add_argument("--trials", type=int, metavar="N")
        p.add_argument("--delta", type=float, metavar="F")
        p.add_argument("--algo", metavar="LIST",
                       help=f"comma separated subset of {','.join(ALGORITHMS)}")
        p.add_argument("--dist", metavar="SPEC",
                       help="custom:w1,w2,... | zipf:s,m | footnote1:m | footnote2:m")
        p.add_argument("--jobs", type=int, metavar="N")
        p.add_argument("--out", metavar="PATH")
        p.add_argument("--trace", action="store_true", default=None,
                       help="also write every oracle query to a trace file")
        p.add_argument("--samples", type=int, metavar="N",
                       help="per-trial sample budget for the fixed-budget searches")
        p.add_argument("--max-rounds", type=int, metavar="N")
        p.add_argument("--budget", type=int, metavar="N",
                       help="raw query cap for the elimination family")

    p_run = sub.add_parser("run", help="run an experiment, write CSV/summary/figure")
    add_common(p_run)
    p_run.add_argument("--no-figure", action="store_true",
                       help="skip the PNG next to the CSV")

    p_alpha = sub.add_parser(
        "alpha", help="print theoretical query-per-sample coefficients")
    p_alpha.add_argument("--dist", metavar="SPEC", required=True)

    p_check = sub.add_parser(
        "check", help="run self checks, or re-verify a written CSV")
    p_check.add_argument("--config", metavar="PATH")
    p_check.add_argument("--out", metavar="PATH",
                         help="CSV to verify (defaults to the config's out=)")

    p_dump = sub.add_parser("dump-tree", help="render a code tree as text")
    p_dump.add_argument("--counts", metavar="LIST",
                        help="comma separated per-class counts")
    p_dump.add_argument("--dist", metavar="SPEC")
    p_dump.add_argument("--samples", type=int, default=256, metavar="N")
    p_dump.add_argument("--seed", type=int, default=0, metavar="U64")
    return parser


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    """Layered config: file defaults, then MEPF_SEED, then CLI flags."""
    if args.config is not None:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise IoFailure(f"cannot read config {args.config}: {exc}") from exc
        config = parse_config(text)
    else:
        if args.dist is None:
            raise InvalidConfig("either --config or --dist is required")
        config = ExperimentConfig(dist=args.dist)

    env_seed = os.environ.get("MEPF_SEED")
    if env_seed is not None:
        try:
            config = replace(config, seed=int(env_seed))
        except ValueError as exc:
            raise InvalidConfig(f"MEPF_SEED is not an integer: {env_seed!r}") from exc

    overrides = {}
    if args.dist is not None:
        overrides["dist"] = args.dist
    if args.algo is not None:
        overrides["algos"] = tuple(a.strip() for a in args.algo.split(","))
    for key in ("seed", "trials", "delta", "jobs", "out", "samples", "budget"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    if args.max_rounds is not None:
        overrides["max_rounds"] = args.max_rounds
    if args.trace is not None:
        overrides["trace"] = args.trace
    if overrides:
        config = replace(config, **overrides)
    validate_config(config)
    return config


def _cmd_run(args: argparse.Namespace) -> int:
    config = _load_config(args)
    summary = run_experiment(config)
    sys.stdout.write(summary_text(summary))
    out = Path(config.out)
    written = [str(out), str(out.with_suffix(".summary.txt"))]
    if config.trace:
        written.append(str(out.with_suffix(".trace.txt")))
    if not args.no_figure:
        from .report import render_figure  # matplotlib stays off the fast paths

        written.append(str(render_figure(summary, out.with_suffix(".png"))))
    sys.stdout.write("wrote: " + "  ".join(written) + "\n")
    return EXIT_OK


def _cmd_alpha(args: argparse.Namespace) -> int:
    pv = parse_distribution(args.dist)
    sys.stdout.write(f"distribution: {args.dist} (m={pv.m})\n")
    sys.stdout.write(f"{'algorithm':<16} {'alpha':>12}\n")
    for algo in ALGORITHMS:
        alpha = query_complexity_coefficient(pv, algo)
        sys.stdout.write(f"{algo:<16} {alpha:>12.6f}\n")
    return EXIT_OK


def _cmd_check(args: argparse.Namespace) -> int:
    if args.config is None:
        failures = run_all_checks()
        for line in failures:
            sys.stdout.write(f"FAIL {line}\n")
        sys.stdout.write("self checks: "
                         f"{'ok' if not failures else f'{len(failures)} failure(s)'}\n")
        return EXIT_OK if not failures else EXIT_CHECK_FAILED

    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read config {args.config}: {exc}") from exc
    config = parse_config(text)
    csv_path = Path(args.out if args.out is not None else config.out)
    try:
        on_disk = csv_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read results {csv_path}: {exc}") from exc
    records, _, _ = execute_trials(config)
    expected = csv_text(records)
    if on_disk != expected:
        sys.stdout.write(f"MISMATCH {csv_path} does not match a fresh run "
                         f"of {args.config}\n")
        return EXIT_CHECK_FAILED
    sys.stdout.write(f"ok: {csv_path} reproduces from {args.config}\n")
    return EXIT_OK


def _cmd_dump_tree(args: argparse.Namespace) -> int:
    if (args.counts is None) == (args.dist is None):
        raise InvalidConfig("dump-tree needs exactly one of --counts or --dist")
    if args.counts is not None:
        try:
            counts = [int(x) for x in args.counts.split(",")]
        except ValueError as exc:
            raise InvalidConfig(f"bad --counts: {exc}") from exc
        if not counts or any(c <= 0 for c in counts):
            raise InvalidConfig("--counts needs positive integers")
    else:
        pv = parse_distribution(args.dist)
        if args.samples < 1:
            raise InvalidConfig("--samples must be >= 1")
        draws = sample(pv, args.samples, args.seed)
        tallies = [0] * pv.m
        for cls in draws:
            tallies[cls] += 1
        counts = {c: n for c, n in enumerate(tallies) if n}
        if not counts:
            raise InvalidConfig("no observed classes to build a tree from")
    sys.stdout.write(dump_tree(build_huffman(counts)))
    return EXIT_OK


_COMMANDS = {
    "run": _cmd_run,
    "alpha": _cmd_alpha,
    "check": _cmd_check,
    "dump-tree": _cmd_dump_tree,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except InvalidConfig as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except IoFailure as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_IO
    except MepfError as exc:
        # anything else from the library means the inputs were unusable
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID


if __name__ == "__main__":
    raise SystemExit(main())
