"""Independent reference computations used to pin expected test values.

Nothing in here may import the implementation's formulas: these routes are
deliberately different (extended precision, brute-force enumeration, grid
minimization, Monte Carlo) so that agreement with the package is evidence,
not tautology.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

LD = np.longdouble


# --- extended-precision scalar quantities ------------------------------------


def ld_rate(p_mode: float, p_i: float) -> float:
    """Decay rate via 80-bit floats: -ln(1 - (sqrt(p1) - sqrt(pi))^2)."""
    g = np.sqrt(LD(p_mode)) - np.sqrt(LD(p_i))
    return float(-np.log1p(-g * g))


def ld_entropy_bits(masses) -> float:
    total = LD(0)
    for p in masses:
        if p > 0:
            p = LD(p)
            total -= p * np.log2(p)
    return float(total)


def ld_projection(masses, mode: int, ru: int):
    """Closed-form projection recomputed in extended precision."""
    p1, p2 = LD(masses[mode]), LD(masses[ru])
    g = np.sqrt(p1) - np.sqrt(p2)
    scale = LD(1) / (LD(1) - g * g)
    rest = LD(1) - p1 - p2
    lead = (LD(1) - scale * rest) / LD(2)
    q = [float(scale * LD(p)) for p in masses]
    q[mode] = float(lead)
    q[ru] = float(lead)
    nats = float(np.log(scale))
    return q, float(scale), nats, nats / math.log(2.0)


# --- grid-search KL projection (independent of any closed form) --------------


def kl_nats(q, p) -> float:
    total = 0.0
    for qi, pi in zip(q, p):
        if qi > 0.0:
            if pi == 0.0:
                return math.inf
            total += qi * math.log(qi / pi)
    return total


def grid_projection_m3(p, step: float = 1e-3):
    """Minimize KL(q||p) over the m=3 simplex grid subject to "mode dethroned".

    Feasible points have some non-mode coordinate >= the mode coordinate.
    A coarse pass on the requested grid is followed by a local refinement
    around the best coarse point (still pure search, no calculus), because
    the coarse grid alone only localizes the optimum to O(step^2) in KL.
    """
    mode = max(range(3), key=lambda i: p[i])

    def feasible(q):
        return any(q[i] >= q[mode] for i in range(3) if i != mode)

    def scan(lo0, hi0, lo1, hi1, s):
        best, best_q = math.inf, None
        k0 = np.arange(max(0.0, lo0), min(1.0, hi0) + s / 2, s)
        k1 = np.arange(max(0.0, lo1), min(1.0, hi1) + s / 2, s)
        for q0 in k0:
            for q1 in k1:
                q2 = 1.0 - q0 - q1
                if q2 < -1e-12:
                    continue
                q = (float(q0), float(q1), max(0.0, float(q2)))
                if not feasible(q):
                    continue
                v = kl_nats(q, p)
                if v < best:
                    best, best_q = v, q
        return best, best_q

    val, q = scan(0.0, 1.0, 0.0, 1.0, step)
    for s in (step / 10, step / 100, step / 1000):
        val, q = scan(q[0] - 12 * s, q[0] + 12 * s, q[1] - 12 * s, q[1] + 12 * s, s)
    return val, q


# --- exhaustive optimal-tree cost (checks Huffman optimality) ----------------


def optimal_tree_cost(counts) -> float:
    """Minimum of sum(count * depth) over every full binary tree on the leaves.

    Recursion over subsets: a tree on S splits S into two non-empty halves,
    and each internal node contributes its subtree total once.  Exponential,
    fine for len(counts) <= 8.
    """
    counts = tuple(counts)
    n = len(counts)
    if n == 1:
        return 0.0
    totals = {}
    full = (1 << n) - 1

    def total(mask):
        if mask not in totals:
            totals[mask] = sum(counts[i] for i in range(n) if mask >> i & 1)
        return totals[mask]

    @lru_cache(maxsize=None)
    def best(mask):
        bits = [i for i in range(n) if mask >> i & 1]
        if len(bits) == 1:
            return 0.0
        lowest = 1 << bits[0]  # fix the lowest bit on the left to halve the work
        rest = mask ^ lowest
        sub, out = rest, 0
        cost = math.inf
        while True:
            left = lowest | sub
            right = mask ^ left
            if right:
                cost = min(cost, best(left) + best(right))
            if sub == 0:
                break
            sub = (sub - 1) & rest
        return cost + total(mask)

    return best(full)


def all_code_depth_profiles(counts):
    """Every achievable multiset of leaf depths, by brute force (small m)."""
    n = len(counts)

    def trees(leaves):
        if len(leaves) == 1:
            return [{leaves[0]: 0}]
        out = []
        first, rest = leaves[0], leaves[1:]
        for k in range(len(rest) + 1):
            for left_rest in itertools.combinations(rest, k):
                left = (first,) + left_rest
                right = tuple(x for x in rest if x not in left_rest)
                if not right:
                    continue
                for lt in trees(left):
                    for rt in trees(right):
                        d = {**{k: v + 1 for k, v in lt.items()},
                             **{k: v + 1 for k, v in rt.items()}}
                        out.append(d)
        return out

    return trees(tuple(range(n)))


# --- Monte Carlo helpers ------------------------------------------------------


def binomial_band(p: float, n: int, trials: int) -> tuple[float, float]:
    """Three-sigma band for a Monte Carlo frequency estimate of p."""
    se = math.sqrt(p * (1.0 - p) / trials)
    return p - 3.0 * se, p + 3.0 * se
