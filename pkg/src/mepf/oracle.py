"""Membership-query access to hidden samples, with exact query accounting.

A :class:`QueryOracle` holds a hidden i.i.d. class sequence and answers one
question only: is hidden sample ``j`` inside a given class set?  Each answer
costs exactly one query, tallied globally and per sample.  Degenerate sets
(empty or all classes) are rejected rather than answered, so no caller can
burn a free query.  Nothing else about a hidden sample is observable.

Two construction modes: :func:`new_oracle` draws samples lazily from a
probability vector (the hidden sequence depends only on the vector and the
seed, never on the order in which indices are first referenced), and
:func:`replay_oracle` wraps a fixed class sequence for golden tests.
"""

from __future__ import annotations

import os
from typing import Iterable, Sequence

import numpy as np

from .distribution import ProbabilityVector
from .errors import DegenerateSet, ReplayExhausted

__all__ = ["QueryOracle", "load_replay", "new_oracle", "replay_oracle"]

_CHUNK = 1024


class QueryOracle:
    """Answers 1{Y_j in S} and counts every answer.  Use the factory
    functions; the constructor wires one of the two modes."""

    def __init__(self, m: int, *, generator=None, cumulative=None, fixed=None,
                 trace: bool = False):
        if m < 2:
            raise ValueError(f"need at least two classes, got m={m}")
        self.m = m
        self._full = (1 << m) - 1
        self._gen = generator
        self._cum = cumulative
        self._fixed = fixed is not None
        self._trace: list[str] | None = [] if trace else None
        if self._fixed:
            self._samples = np.asarray(fixed, dtype=np.int64)
            if self._samples.ndim != 1 or len(self._samples) == 0:
                raise ValueError("replay sequence must be a non-empty 1-d list")
            if ((self._samples < 0) | (self._samples >= m)).any():
                raise ValueError("replay sequence holds an out-of-range class")
            self._len = len(self._samples)
        else:
            self._samples = np.empty(_CHUNK, dtype=np.int64)
            self._len = 0
        self._counts = np.zeros(max(len(self._samples), 1), dtype=np.int64)
        self._n_queries = 0

    def __repr__(self):  # never show sample values
        mode = "replay" if self._fixed else "lazy"
        return (f"QueryOracle(m={self.m}, mode={mode}, "
                f"queries={self._n_queries}, touched={self.samples_touched})")

    # -- hidden-sample plumbing ------------------------------------------------

    def _materialize(self, upto: int) -> None:
        """Ensure hidden samples 0..upto-1 exist.  Lazy mode draws uniform
        chunks; the draw order is fixed left to right, so the sequence is a
        pure function of (pv, seed) regardless of access pattern."""
        if upto <= self._len:
            return
        if self._fixed:
            raise ReplayExhausted(
                f"replay holds {self._len} samples, index {upto - 1} requested"
            )
        need = max(upto - self._len, _CHUNK)
        u = self._gen.random(need)
        drawn = np.searchsorted(self._cum, u, side="right")
        total = self._len + need
        if total > len(self._samples):
            grown = np.empty(max(total, 2 * len(self._samples)), dtype=np.int64)
            grown[: self._len] = self._samples[: self._len]
            self._samples = grown
            counts = np.zeros(len(grown), dtype=np.int64)
            counts[: len(self._counts)] = self._counts
            self._counts = counts
        self._samples[self._len : total] = drawn
        self._len = total

    def _mask_of(self, classes: Iterable[int]) -> int:
        mask = 0
        for c in classes:
            if not 0 <= c < self.m:
                raise DegenerateSet(f"class {c} outside 0..{self.m - 1}")
            mask |= 1 << c
        return mask

    # -- the query interface ------------------------------------------------------

    def query(self, j: int, classes: Iterable[int]) -> bool:
        """One membership question about hidden sample j: costs one query."""
        return self.query_mask(j, self._mask_of(classes))

    def query_mask(self, j: int, mask: int) -> bool:
        """Same contract as query with the set passed as a class bitmask."""
        if mask <= 0 or mask >= self._full:
            raise DegenerateSet("query set must be a non-empty proper subset")
        if j < 0:
            raise IndexError(f"sample index must be non-negative, got {j}")
        self._materialize(j + 1)
        self._n_queries += 1
        self._counts[j] += 1
        answer = bool(mask >> int(self._samples[j]) & 1)
        if self._trace is not None:
            self._trace.append(f"{j}\t{_render_mask(mask)}\t{int(answer)}")
        return answer

    def query_block(self, js: Sequence[int], mask: int) -> np.ndarray:
        """Membership of each listed sample in the masked set, one query per
        listed index (duplicates cost every time, as separate queries would).
        """
        if mask <= 0 or mask >= self._full:
            raise DegenerateSet("query set must be a non-empty proper subset")
        js = np.asarray(js, dtype=np.int64)
        if js.size == 0:
            return np.zeros(0, dtype=bool)
        if (js < 0).any():
            raise IndexError("sample indices must be non-negative")
        self._materialize(int(js.max()) + 1)
        self._n_queries += int(js.size)
        np.add.at(self._counts, js, 1)
        member = np.zeros(self.m, dtype=bool)
        for c in range(self.m):
            if mask >> c & 1:
                member[c] = True
        answers = member[self._samples[js]]
        if self._trace is not None:
            rendered = _render_mask(mask)
            self._trace.extend(
                f"{int(j)}\t{rendered}\t{int(a)}" for j, a in zip(js, answers)
            )
        return answers

    # -- accounting reads -----------------------------------------------------------

    @property
    def query_count(self) -> int:
        return self._n_queries

    @property
    def samples_touched(self) -> int:
        """Distinct hidden samples that have answered at least one query."""
        return int(np.count_nonzero(self._counts))

    @property
    def per_sample_query_count(self) -> np.ndarray:
        return self._counts[: self._len].copy()

    @property
    def trace_lines(self) -> tuple[str, ...]:
        """One line per answered query (sample index, sorted class indices,
        answer bit), in answer order.  Empty unless built with trace=True."""
        return tuple(self._trace) if self._trace is not None else ()


def _render_mask(mask: int) -> str:
    return ",".join(str(c) for c in range(mask.bit_length()) if mask >> c & 1)


def new_oracle(pv: ProbabilityVector, seed: int, *, trace: bool = False) -> QueryOracle:
    """Lazy oracle over i.i.d. samples from pv; fully determined by the seed."""
    cum = np.cumsum(np.asarray(pv.masses, dtype=np.float64))
    cum[-1] = 1.0  # guard against rounding in the final bin edge
    return QueryOracle(pv.m, generator=np.random.default_rng(seed),
                       cumulative=cum, trace=trace)


def replay_oracle(m: int, samples: Sequence[int], *, trace: bool = False) -> QueryOracle:
    """Oracle over a fixed, fully known class sequence (golden tests)."""
    return QueryOracle(m, fixed=samples, trace=trace)


def load_replay(m: int, path: str | os.PathLike) -> QueryOracle:
    """Replay oracle from a text file of newline-separated class indices."""
    with open(path, "r", encoding="utf-8") as fh:
        samples = [int(line) for line in fh if line.strip()]
    return replay_oracle(m, samples)
