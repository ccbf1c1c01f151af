"""Finite distributions with a unique mode and their mode-finding difficulty.

All objects live on classes 0..m-1.  The central quantity is the per-class
decay rate

    rate_i = -ln(1 - (sqrt(p_mode) - sqrt(p_i))**2)        (nats per sample)

which governs how fast the probability of confusing class i with the mode
vanishes: over n i.i.d. samples the confusion probability behaves like
exp(-n * rate_i).  The same exponent appears as the minimal KL divergence
over distributions in which class i ties the mode (see
:func:`information_projection`), which is why a single number serves both
as a tail bound and as a sample-complexity currency.

Rates are reported in nats; entropies and divergences shown to users are in
bits.  The distinction matters: rate / ln(2) is the divergence in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateGap,
    EmptyOrDegenerate,
    NegativeWeight,
    TiedMode,
)

__all__ = [
    "ALGORITHMS",
    "GapVector",
    "InformationProjection",
    "ProbabilityVector",
    "entropy_bits",
    "gaps",
    "half_mass_leader",
    "information_projection",
    "mode_error_bound",
    "probability_vector",
    "query_complexity_coefficient",
    "rate_margin_sandwich",
    "sample",
    "two_close_leaders",
    "zipf",
]

#: Estimator names understood by :func:`query_complexity_coefficient` and the
#: bench layer.  Order matters only for presentation.
ALGORITHMS = ("exhaustive", "adaptive", "truncated", "elimination", "set_elimination")


@dataclass(frozen=True)
class ProbabilityVector:
    """A normalized mass vector over classes 0..m-1 with a unique mode.

    Use :func:`probability_vector` to build one; the constructor assumes
    already-validated, already-normalized masses.
    """

    masses: tuple[float, ...]
    mode: int

    @property
    def m(self) -> int:
        return len(self.masses)

    def __getitem__(self, i: int) -> float:
        return self.masses[i]


@dataclass(frozen=True)
class GapVector:
    """Per-class decay rates and probability margins relative to the mode.

    ``rates[i]`` is the nats-per-sample exponent for confusing class i with
    the mode; ``margins[i]`` is the plain difference p(mode) - p(i).  At the
    mode's own index both fields hold the runner-up's value, so ``rates[mode]``
    is the rate that controls the overall error of the empirical mode.
    """

    rates: tuple[float, ...]
    margins: tuple[float, ...]
    mode: int
    runner_up: int


@dataclass(frozen=True)
class InformationProjection:
    """Closest distribution (in KL) under which the runner-up ties the mode.

    ``scale`` is the factor applied to every non-leading mass; the two leading
    masses are averaged after scaling the rest.  ``divergence_nats`` equals the
    runner-up decay rate exactly, which is the identity the tests pin down.
    """

    masses: tuple[float, ...]
    scale: float
    divergence_nats: float
    divergence_bits: float


def probability_vector(weights: Iterable[float]) -> ProbabilityVector:
    """Validate and normalize raw weights into a :class:`ProbabilityVector`.

    Requirements: at least two classes, at least two classes with positive
    weight, no negative weights, and a strictly unique maximal mass.  Zero
    weights are legal; they simply never win anything.

    Raises NegativeWeight, EmptyOrDegenerate, or TiedMode accordingly.
    """
    w = [float(x) for x in weights]
    if any(x < 0.0 for x in w):
        raise NegativeWeight(f"weights must be non-negative, got {min(w)}")
    if len(w) < 2:
        raise EmptyOrDegenerate("need at least two classes")
    if sum(1 for x in w if x > 0.0) < 2:
        raise EmptyOrDegenerate("need at least two classes with positive mass")
    total = sum(w)
    masses = tuple(x / total for x in w)
    top = max(masses)
    if masses.count(top) > 1:
        raise TiedMode(f"maximal mass {top} attained more than once")
    return ProbabilityVector(masses=masses, mode=masses.index(top))


def runner_up(pv: ProbabilityVector) -> int:
    """Index of the largest non-mode mass (lowest index on ties)."""
    best, best_i = -1.0, -1
    for i, p in enumerate(pv.masses):
        if i != pv.mode and p > best:
            best, best_i = p, i
    return best_i


def sample(pv: ProbabilityVector, n: int, seed: int) -> np.ndarray:
    """Draw n i.i.d. class indices, reproducibly for a given seed.

    Inverse-CDF over the cumulative masses so that one uniform draw maps to
    one class; the draw sequence depends only on (seed, n-prefix).
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    rng = np.random.default_rng(seed)
    cum = np.cumsum(np.asarray(pv.masses, dtype=np.float64))
    cum[-1] = 1.0  # guard the top edge against rounding
    return np.searchsorted(cum, rng.random(n), side="right").astype(np.int64)


def entropy_bits(pv: ProbabilityVector) -> float:
    """Shannon entropy in bits; zero masses contribute nothing."""
    return -sum(p * math.log2(p) for p in pv.masses if p > 0.0)


def _rate(p_mode: float, p_i: float) -> float:
    gap = math.sqrt(p_mode) - math.sqrt(p_i)
    return -math.log1p(-gap * gap)


def gaps(pv: ProbabilityVector) -> GapVector:
    """Decay rates and margins for every class, runner-up values at the mode.

    rates[i] = -ln(1 - (sqrt(p_mode) - sqrt(p_i))^2), margins[i] =
    p(mode) - p(i).  Both are zero only for a class tying the mode, which the
    :class:`ProbabilityVector` contract rules out.
    """
    p1 = pv.masses[pv.mode]
    ru = runner_up(pv)
    rates = [0.0] * pv.m
    margins = [0.0] * pv.m
    for i, p in enumerate(pv.masses):
        if i == pv.mode:
            continue
        rates[i] = _rate(p1, p)
        margins[i] = p1 - p
    rates[pv.mode] = rates[ru]
    margins[pv.mode] = margins[ru]
    return GapVector(rates=tuple(rates), margins=tuple(margins), mode=pv.mode, runner_up=ru)


def mode_error_bound(pv: ProbabilityVector, n: int) -> float:
    """Upper bound on P(empirical mode over n samples is wrong): exp(-n * rate)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return math.exp(-n * gaps(pv).rates[pv.mode])


def information_projection(pv: ProbabilityVector) -> InformationProjection:
    """Closed-form KL projection onto "the runner-up at least ties the mode".

    The minimizer scales every mass except the top two by
    scale = 1 / (1 - (sqrt(p1) - sqrt(p2))^2) >= 1 and splits the leftover
    evenly between the top two classes.  Its divergence from pv is exactly the
    runner-up decay rate in nats, i.e. log2(scale) bits.
    """
    p1 = pv.masses[pv.mode]
    ru = runner_up(pv)
    p2 = pv.masses[ru]
    gap = math.sqrt(p1) - math.sqrt(p2)
    scale = 1.0 / (1.0 - gap * gap)
    rest = 1.0 - p1 - p2
    leaders = (1.0 - scale * rest) / 2.0
    q = [scale * p for p in pv.masses]
    q[pv.mode] = leaders
    q[ru] = leaders
    nats = math.log(scale)
    return InformationProjection(
        masses=tuple(q),
        scale=scale,
        divergence_nats=nats,
        divergence_bits=nats / math.log(2.0),
    )


def rate_margin_sandwich(pv: ProbabilityVector, i: int) -> tuple[float, float, float]:
    """Bound 1/rates[i] between two margin-based expressions.

    Returns (lower, 1/rate_i, upper) with
    lower = (p1 / -ln(1 - p1)) * p1 / margin_i^2 and
    upper = 4 * p1 / margin_i^2.  Useful because margins are intuitive while
    rates are what the tail bounds actually use.

    Raises DegenerateGap for the mode itself or a class tying it.
    """
    if not 0 <= i < pv.m:
        raise IndexError(i)
    p1 = pv.masses[pv.mode]
    if i == pv.mode or pv.masses[i] == p1:
        raise DegenerateGap(f"class {i} does not trail the mode")
    margin = p1 - pv.masses[i]
    inv_rate = 1.0 / _rate(p1, pv.masses[i])
    lower = (p1 / -math.log1p(-p1)) * p1 / (margin * margin)
    upper = 4.0 * p1 / (margin * margin)
    return lower, inv_rate, upper


def query_complexity_coefficient(pv: ProbabilityVector, algorithm: str) -> float:
    """Leading query-count coefficient per unit of log(1/confidence).

    These are the structural coefficients with all universal constants
    dropped, so they are for comparing strategies on the same distribution,
    not for predicting absolute query counts.  Zero-mass classes contribute
    nothing to any of the sums.
    """
    g = gaps(pv)
    inv2 = 1.0 / g.rates[pv.mode]  # runner-up rate, the unavoidable part
    p1 = pv.masses[pv.mode]
    nz = [(p, g.rates[i]) for i, p in enumerate(pv.masses) if p > 0.0]
    if algorithm == "exhaustive":
        return inv2 + inv2 * math.log2(pv.m)
    if algorithm == "adaptive":
        return inv2 + inv2 * sum(p * abs(math.log2(p)) for p, _ in nz)
    if algorithm == "truncated":
        return inv2 + inv2 * abs(math.log2(p1))
    if algorithm == "elimination":
        return inv2 + sum(p * (1.0 / r) * abs(math.log2(p)) for p, r in nz)
    if algorithm == "set_elimination":
        return inv2 + sum(p * (1.0 / r) for p, r in nz) * abs(math.log2(p1))
    raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")


# --- named families ---------------------------------------------------------

def zipf(s: float, m: int) -> ProbabilityVector:
    """Power-law masses 1/k^s for k = 1..m; class 0 is the mode."""
    if m < 2:
        raise EmptyOrDegenerate("zipf needs m >= 2")
    if s <= 0.0:
        raise TiedMode("zipf with s <= 0 has no unique mode")
    return probability_vector(1.0 / float(k) ** s for k in range(1, m + 1))


def two_close_leaders(m: int) -> ProbabilityVector:
    """Two nearly tied leading classes over a uniform bulk.

    p(0) = 2/m, p(1) = 2/m - 1/m^2, remaining mass spread evenly over the
    other m-2 classes.  The leaders are 1/m^2 apart, so separating them is
    the hard part while the bulk is easy to discard.  Accepted in distribution
    specs under the family name "footnote1".
    """
    if m < 3:
        raise EmptyOrDegenerate("two_close_leaders needs m >= 3")
    p0 = 2.0 / m
    p1 = 2.0 / m - 1.0 / (m * m)
    rest = (1.0 - p0 - p1) / (m - 2)
    return probability_vector([p0, p1] + [rest] * (m - 2))


def half_mass_leader(m: int) -> ProbabilityVector:
    """One class holding half the mass, uniform bulk underneath.

    p(0) = 1/2 and p(k) = 1/(2(m-1)) for the rest: the mode is easy but every
    sample from the bulk is expensive to pin down exactly.  Accepted in
    distribution specs under the family name "footnote2".
    """
    if m < 2:
        raise EmptyOrDegenerate("half_mass_leader needs m >= 2")
    return probability_vector([0.5] + [0.5 / (m - 1)] * (m - 1))
