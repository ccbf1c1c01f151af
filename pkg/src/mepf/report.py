"""Figure rendering for experiment results.

Lives apart from the benchmark core so that headless trial execution never
imports matplotlib.  The ``run`` command calls ``render_figure`` after the
CSV is written; the figure is a convenience view, never an input to anything.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .bench import ExperimentSummary
from .errors import IoFailure

__all__ = ["render_figure"]


def render_figure(summary: ExperimentSummary, path: str | Path) -> Path:
    """Write a two-panel PNG: mean query counts and error rates per algorithm.

    The query panel shows both accounting conventions side by side (raw =
    what the oracle billed, charged = one query per sample even while the
    elimination family had nothing to filter).  Error bars on the error
    panel are one binomial standard error.
    """
    algos = [s.algorithm for s in summary.stats]
    x = np.arange(len(algos))
    raw = [s.mean_queries_raw for s in summary.stats]
    charged = [s.mean_queries_paper for s in summary.stats]
    err = [s.error_rate for s in summary.stats]
    err_se = [s.error_stderr for s in summary.stats]

    fig, (ax_q, ax_e) = plt.subplots(1, 2, figsize=(10.0, 4.2))
    width = 0.38
    ax_q.bar(x - width / 2, raw, width, label="raw", color="#4878cf")
    ax_q.bar(x + width / 2, charged, width, label="charged", color="#d65f5f")
    ax_q.set_xticks(x, algos, rotation=20, ha="right")
    ax_q.set_ylabel("mean queries per trial")
    ax_q.set_yscale("log")
    ax_q.legend(frameon=False)
    ax_q.set_title(f"{summary.config.dist}  (m={summary.m}, "
                   f"trials={summary.config.trials})")

    ax_e.bar(x, err, 0.6, yerr=err_se, capsize=3, color="#6acc65")
    ax_e.axhline(summary.config.delta, linestyle="--", linewidth=1,
                 color="black", label="target failure rate")
    ax_e.set_xticks(x, algos, rotation=20, ha="right")
    ax_e.set_ylabel("error rate")
    ax_e.set_ylim(bottom=0.0)
    ax_e.legend(frameon=False)
    ax_e.set_title(f"delta = {summary.config.delta!r}")

    fig.tight_layout()
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(target, dpi=120)
    except OSError as exc:
        raise IoFailure(f"cannot write figure to {target}: {exc}") from exc
    finally:
        plt.close(fig)
    return target
