"""Monte Carlo benchmark harness for the mode estimators.

An experiment is a flat text config (or the equivalent dataclass): one
distribution, a list of algorithms, a trial count, and a master seed.  Every
trial owns a fresh oracle seeded deterministically from (master seed,
algorithm, trial index), so the per-trial CSV is a pure function of the
config text no matter how many workers run it.

The CSV schema is fixed: trial_id, algorithm, m, delta, correct,
queries_raw, queries_paper, samples, rounds, wall_ns, with a header row and
LF line endings.  queries_paper charges one query per sample for membership
tests the elimination-family algorithms skipped while nothing was eliminated
yet; queries_raw is what the oracle actually billed.  wall_ns is always
written as 0 to keep the file reproducible byte for byte; measured timing
lives in the summary instead.
"""

from __future__ import annotations

import csv
import io
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .distribution import (
    ALGORITHMS,
    ProbabilityVector,
    half_mass_leader,
    probability_vector,
    query_complexity_coefficient,
    two_close_leaders,
    zipf,
)
from .errors import InvalidConfig, IoFailure, MepfError, MixedAxes
from .estimators import (
    ModeEstimate,
    adaptive_search,
    elimination,
    exhaustive_search,
    set_elimination,
    truncated_search,
)
from .oracle import new_oracle

__all__ = [
    "ALGORITHMS",
    "CSV_COLUMNS",
    "AlgorithmStats",
    "ExperimentConfig",
    "ExperimentSummary",
    "TrialRecord",
    "config_text",
    "csv_text",
    "emit_plot_data",
    "execute_trials",
    "parse_config",
    "parse_distribution",
    "run_experiment",
    "summarize",
    "summary_text",
]

CSV_COLUMNS = (
    "trial_id", "algorithm", "m", "delta", "correct",
    "queries_raw", "queries_paper", "samples", "rounds", "wall_ns",
)


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: what to run, on what, how often, and where to write.

    ``samples`` is the per-trial sample budget of the fixed-budget algorithms
    (exhaustive, adaptive); ``max_rounds`` caps the round-based ones;
    ``budget`` optionally caps raw queries for the elimination family.
    """

    dist: str
    algos: tuple[str, ...] = ALGORITHMS
    trials: int = 100
    seed: int = 0
    delta: float = 0.1
    budget: int | None = None
    samples: int = 1000
    max_rounds: int = 12
    jobs: int = 1
    trace: bool = False
    out: str = "mepf_results.csv"


@dataclass(frozen=True)
class TrialRecord:
    trial_id: int
    algorithm: str
    m: int
    delta: float
    correct: int
    queries_raw: int
    queries_paper: int
    samples: int
    rounds: int
    wall_ns: int


@dataclass(frozen=True)
class AlgorithmStats:
    """Aggregates for one algorithm, recomputable from the per-trial rows."""

    algorithm: str
    trials: int
    error_rate: float
    error_stderr: float
    mean_queries_raw: float
    median_queries_raw: float
    mean_queries_paper: float
    median_queries_paper: float
    mean_samples: float
    alpha_theory: float
    wall_seconds: float


@dataclass(frozen=True)
class ExperimentSummary:
    config: ExperimentConfig
    m: int
    stats: tuple[AlgorithmStats, ...]


# -- config text form ----------------------------------------------------------

_CONFIG_ORDER = ("dist", "algos", "trials", "seed", "delta", "budget",
                 "samples", "max_rounds", "jobs", "trace", "out")


def parse_distribution(spec: str) -> ProbabilityVector:
    """Build a distribution from its config string.

    Forms: ``custom:<w1,w2,...>``, ``zipf:<s>,<m>``, ``footnote1:<m>``
    (two nearly tied leaders over uniform rest), ``footnote2:<m>`` (one
    half-mass leader over uniform rest).
    """
    name, sep, arg = spec.partition(":")
    try:
        if name == "custom" and sep:
            return probability_vector(float(x) for x in arg.split(","))
        if name == "zipf" and sep:
            s, m = arg.split(",")
            return zipf(float(s), int(m))
        if name == "footnote1" and sep:
            return two_close_leaders(int(arg))
        if name == "footnote2" and sep:
            return half_mass_leader(int(arg))
    except MepfError:
        raise
    except ValueError as exc:
        raise InvalidConfig(f"malformed distribution spec {spec!r}: {exc}") from exc
    raise InvalidConfig(f"unknown distribution spec {spec!r}")


def parse_config(text: str) -> ExperimentConfig:
    """Parse the flat key=value form; '#' comments and blank lines are fine."""
    seen: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise InvalidConfig(f"line {lineno}: expected key=value, got {raw!r}")
        if key not in _CONFIG_ORDER:
            raise InvalidConfig(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise InvalidConfig(f"line {lineno}: duplicate key {key!r}")
        seen[key] = value
    if "dist" not in seen:
        raise InvalidConfig("config must set dist=")
    try:
        cfg = ExperimentConfig(
            dist=seen["dist"],
            algos=tuple(a.strip() for a in seen["algos"].split(",")) if "algos" in seen
            else ALGORITHMS,
            trials=int(seen.get("trials", 100)),
            seed=int(seen.get("seed", 0)),
            delta=float(seen.get("delta", 0.1)),
            budget=None if seen.get("budget", "none") == "none" else int(seen["budget"]),
            samples=int(seen.get("samples", 1000)),
            max_rounds=int(seen.get("max_rounds", 12)),
            jobs=int(seen.get("jobs", 1)),
            trace={"true": True, "false": False}[seen.get("trace", "false")],
            out=seen.get("out", "mepf_results.csv"),
        )
    except (ValueError, KeyError) as exc:
        raise InvalidConfig(f"bad config value: {exc}") from exc
    validate_config(cfg)
    return cfg


def config_text(config: ExperimentConfig) -> str:
    """Canonical text form; parse_config(config_text(c)) == c."""
    values = {
        "dist": config.dist,
        "algos": ",".join(config.algos),
        "trials": str(config.trials),
        "seed": str(config.seed),
        "delta": repr(config.delta),
        "budget": "none" if config.budget is None else str(config.budget),
        "samples": str(config.samples),
        "max_rounds": str(config.max_rounds),
        "jobs": str(config.jobs),
        "trace": "true" if config.trace else "false",
        "out": config.out,
    }
    return "".join(f"{k}={values[k]}\n" for k in _CONFIG_ORDER)


def validate_config(config: ExperimentConfig) -> ProbabilityVector:
    """Reject anything a run would trip over; returns the parsed distribution."""
    if config.trials < 1:
        raise InvalidConfig(f"trials must be >= 1, got {config.trials}")
    if not config.algos:
        raise InvalidConfig("no algorithms selected")
    for algo in config.algos:
        if algo not in ALGORITHMS:
            raise InvalidConfig(f"unknown algorithm {algo!r}; choose from {ALGORITHMS}")
    if len(set(config.algos)) != len(config.algos):
        raise InvalidConfig("duplicate algorithm selected")
    if not 0.0 < config.delta < 1.0:
        raise InvalidConfig(f"delta must be in (0, 1), got {config.delta}")
    if config.samples < 1:
        raise InvalidConfig(f"samples must be >= 1, got {config.samples}")
    if config.max_rounds < 1:
        raise InvalidConfig(f"max_rounds must be >= 1, got {config.max_rounds}")
    if config.jobs < 1:
        raise InvalidConfig(f"jobs must be >= 1, got {config.jobs}")
    if config.budget is not None and config.budget < 1:
        raise InvalidConfig(f"budget must be >= 1 when set, got {config.budget}")
    if not 0 <= config.seed < 2 ** 64:
        raise InvalidConfig("seed must fit in 64 bits")
    return parse_distribution(config.dist)


# -- trial execution -----------------------------------------------------------


def _trial_seed(master: int, algo_index: int, trial_id: int) -> int:
    ss = np.random.SeedSequence(entropy=master, spawn_key=(algo_index, trial_id))
    return int(ss.generate_state(1, np.uint64)[0])


def _run_trial(config: ExperimentConfig, algo: str, trial_id: int,
               pv: ProbabilityVector) -> tuple[TrialRecord, int, tuple[str, ...]]:
    seed = _trial_seed(config.seed, ALGORITHMS.index(algo), trial_id)
    oracle = new_oracle(pv, seed, trace=config.trace)
    start = time.perf_counter_ns()
    est: ModeEstimate
    if algo == "exhaustive":
        est = exhaustive_search(oracle, pv.m, config.samples)
    elif algo == "adaptive":
        est = adaptive_search(oracle, pv.m, config.samples)
    elif algo == "truncated":
        est = truncated_search(oracle, pv.m, max_rounds=config.max_rounds)
    elif algo == "elimination":
        est = elimination(oracle, pv.m, config.delta, max_queries=config.budget)
    else:
        est = set_elimination(oracle, pv.m, config.delta,
                              max_rounds=config.max_rounds, max_queries=config.budget)
    wall = time.perf_counter_ns() - start
    record = TrialRecord(
        trial_id=trial_id,
        algorithm=algo,
        m=pv.m,
        delta=config.delta,
        correct=int(est.mode == pv.mode),
        queries_raw=est.queries_used,
        queries_paper=est.queries_billed,
        samples=est.samples_used,
        rounds=est.rounds,
        wall_ns=0,  # kept constant so the CSV is a pure function of the config
    )
    return record, wall, oracle.trace_lines


def _run_trial_by_key(args: tuple[ExperimentConfig, str, int]) -> tuple[TrialRecord, int, tuple[str, ...]]:
    config, algo, trial_id = args
    return _run_trial(config, algo, trial_id, parse_distribution(config.dist))


def execute_trials(config: ExperimentConfig) -> tuple[
        list[TrialRecord], dict[str, int], list[tuple[str, int, tuple[str, ...]]]]:
    """Run every (algorithm, trial) cell; rows come back in output order.

    Returns (records, per-algorithm wall ns, per-trial trace sections).
    Worker scheduling cannot change any of the three: results are buffered
    and emitted algorithm-major, trial-id-minor.
    """
    pv = validate_config(config)
    tasks = [(algo, t) for algo in config.algos for t in range(config.trials)]
    results: dict[tuple[str, int], tuple[TrialRecord, int, tuple[str, ...]]] = {}
    if config.jobs == 1:
        for algo, t in tasks:
            results[(algo, t)] = _run_trial(config, algo, t, pv)
    else:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            chunk = max(1, len(tasks) // (config.jobs * 8))
            for out in pool.map(_run_trial_by_key,
                                [(config, a, t) for a, t in tasks], chunksize=chunk):
                results[(out[0].algorithm, out[0].trial_id)] = out
    records: list[TrialRecord] = []
    walls: dict[str, int] = {algo: 0 for algo in config.algos}
    traces: list[tuple[str, int, tuple[str, ...]]] = []
    for algo, t in tasks:
        record, wall, trace = results[(algo, t)]
        records.append(record)
        walls[algo] += wall
        if config.trace:
            traces.append((algo, t, trace))
    return records, walls, traces


def summarize(config: ExperimentConfig, records: Sequence[TrialRecord],
              walls: dict[str, int] | None = None) -> ExperimentSummary:
    """Aggregate per-trial rows; every statistic is a function of the rows."""
    pv = parse_distribution(config.dist)
    stats = []
    for algo in config.algos:
        rows = [r for r in records if r.algorithm == algo]
        if not rows:
            raise InvalidConfig(f"no rows for algorithm {algo!r}")
        n = len(rows)
        wrong = sum(1 - r.correct for r in rows)
        err = wrong / n
        stats.append(AlgorithmStats(
            algorithm=algo,
            trials=n,
            error_rate=err,
            error_stderr=(err * (1.0 - err) / n) ** 0.5,
            mean_queries_raw=statistics.fmean(r.queries_raw for r in rows),
            median_queries_raw=float(statistics.median(r.queries_raw for r in rows)),
            mean_queries_paper=statistics.fmean(r.queries_paper for r in rows),
            median_queries_paper=float(statistics.median(r.queries_paper for r in rows)),
            mean_samples=statistics.fmean(r.samples for r in rows),
            alpha_theory=query_complexity_coefficient(pv, algo),
            wall_seconds=(walls or {}).get(algo, 0) / 1e9,
        ))
    return ExperimentSummary(config=config, m=pv.m, stats=tuple(stats))


def csv_text(records: Iterable[TrialRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow([r.trial_id, r.algorithm, r.m, repr(r.delta), r.correct,
                         r.queries_raw, r.queries_paper, r.samples, r.rounds, r.wall_ns])
    return buf.getvalue()


def read_csv(path: str | Path) -> list[TrialRecord]:
    """Load per-trial rows back; inverse of csv_text for valid files."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != list(CSV_COLUMNS):
        raise InvalidConfig(f"unexpected CSV header in {path}: {header}")
    out = []
    for row in reader:
        out.append(TrialRecord(
            trial_id=int(row[0]), algorithm=row[1], m=int(row[2]),
            delta=float(row[3]), correct=int(row[4]), queries_raw=int(row[5]),
            queries_paper=int(row[6]), samples=int(row[7]), rounds=int(row[8]),
            wall_ns=int(row[9]),
        ))
    return out


def summary_text(summary: ExperimentSummary) -> str:
    lines = [
        f"distribution: {summary.config.dist} (m={summary.m})",
        f"trials per algorithm: {summary.config.trials}",
        f"delta: {summary.config.delta!r}",
        f"seed: {summary.config.seed}",
        "",
    ]
    for s in summary.stats:
        lines += [
            f"[{s.algorithm}]",
            f"  error_rate: {s.error_rate:.6f} +- {s.error_stderr:.6f}",
            f"  mean_queries_raw: {s.mean_queries_raw:.3f}"
            f" (median {s.median_queries_raw:.1f})",
            f"  mean_queries_paper: {s.mean_queries_paper:.3f}"
            f" (median {s.median_queries_paper:.1f})",
            f"  mean_samples: {s.mean_samples:.3f}",
            f"  alpha_theory: {s.alpha_theory:.6f}",
            f"  wall_seconds: {s.wall_seconds:.3f}",
        ]
    return "\n".join(lines) + "\n"


def run_experiment(config: ExperimentConfig) -> ExperimentSummary:
    """Run all trials, then write the CSV, the summary, and any trace file.

    Paths derive from ``config.out``: the CSV goes to ``out`` itself, the
    summary to ``out`` with a ``.summary.txt`` suffix, traces (only with
    ``trace=true``) to a ``.trace.txt`` suffix.
    """
    records, walls, traces = execute_trials(config)
    summary = summarize(config, records, walls)
    out = Path(config.out)
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(csv_text(records), encoding="utf-8", newline="")
        out.with_suffix(".summary.txt").write_text(
            summary_text(summary), encoding="utf-8", newline="")
        if config.trace:
            with out.with_suffix(".trace.txt").open("w", encoding="utf-8", newline="") as f:
                for algo, trial_id, lines in traces:
                    f.write(f"# {algo} trial {trial_id}\n")
                    for line in lines:
                        f.write(line + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write results under {out}: {exc}") from exc
    return summary


# -- sweep plot data -----------------------------------------------------------

_AXIS_OF = {
    "m": lambda s: s.m,
    "delta": lambda s: s.config.delta,
    "n": lambda s: s.config.samples,
}


def emit_plot_data(summaries: Sequence[ExperimentSummary], axis: str,
                   path: str | Path | None = None) -> str:
    """Render a sweep as gnuplot-ready TSV: axis value, then mean paper-convention
    queries and error rate per algorithm.  Rows keep the given sweep order."""
    if axis not in _AXIS_OF:
        raise MixedAxes(f"axis must be one of {sorted(_AXIS_OF)}, got {axis!r}")
    if len(summaries) < 2:
        raise MixedAxes(f"need at least two summaries to sweep, got {len(summaries)}")
    algos = summaries[0].config.algos
    for s in summaries[1:]:
        if s.config.algos != algos:
            raise MixedAxes("summaries select different algorithms")
    values = [_AXIS_OF[axis](s) for s in summaries]
    if len(set(values)) != len(values):
        raise MixedAxes(f"duplicate {axis} values in sweep: {values}")
    cols = [axis]
    for algo in algos:
        cols += [f"{algo}_queries", f"{algo}_error"]
    lines = ["# " + "\t".join(cols)]
    for s in summaries:
        cells = [repr(_AXIS_OF[axis](s))]
        for st in s.stats:
            cells += [repr(st.mean_queries_paper), repr(st.error_rate)]
        lines.append("\t".join(cells))
    text = "\n".join(lines) + "\n"
    if path is not None:
        try:
            Path(path).write_text(text, encoding="utf-8", newline="")
        except OSError as exc:
            raise IoFailure(f"cannot write plot data to {path}: {exc}") from exc
    return text
