"""Mode estimation from membership queries alone.

Six strategies against a :class:`~mepf.oracle.QueryOracle`, ordered by how
much structure they exploit: fixed binary codes, adaptive Huffman coding,
round-based coarse partitioning, and confidence-radius elimination applied
per class or per partition block.  They share the partition admissibility
predicate and the heap-driven batch splitting routine.

Estimators see hidden data only through oracle queries, so the query counts
they report equal the oracle's own ledger.  With a fixed oracle seed every
estimate, count, and trace line is reproducible bit for bit.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .coding import (
    CodeTree,
    _iter_mask,
    _lowest_class,
    adaptive_tree,
    balanced_tree,
    insert_new_symbol,
    merge_groups,
    tree_from_counts,
    vitter_increment,
)
from .errors import InvalidConfig, NoData
from .oracle import QueryOracle

__all__ = [
    "CONFIDENCE_C",
    "ModeEstimate",
    "Partition",
    "Schedule",
    "adaptive_search",
    "batch_tree_rebalance",
    "elimination",
    "empirical_mode",
    "exhaustive_search",
    "is_admissible",
    "set_elimination",
    "truncated_search",
]

# Confidence-radius multiplier for the elimination family.
CONFIDENCE_C = 24.0


# -- shared result and parameter types ----------------------------------------


@dataclass(frozen=True)
class ModeEstimate:
    """One estimation run: the answer plus its full bill.

    ``queries_used`` is exactly what the oracle charged.  ``queries_billed``
    adds one query for every sample whose eliminated-set membership test was
    skipped because nothing had been eliminated yet; accounting conventions
    differ on whether that test is free, so both numbers are kept.  For
    estimators without an eliminated set the two are equal.  ``terminated``
    distinguishes a self-stopped run from one cut short by its round cap or
    query budget.
    """

    mode: int
    queries_used: int
    queries_billed: int
    samples_used: int
    rounds: int
    terminated: bool


@dataclass(frozen=True)
class Partition:
    """Disjoint class blocks covering the live classes.

    Blocks are ordered heaviest first (ties toward the lowest class index).
    ``block_count`` holds each block's sample count for the round that built
    it, and ``tree_node`` the vertex id its subtree hangs from in the working
    tree.
    """

    blocks: tuple[frozenset[int], ...]
    block_count: Mapping[frozenset[int], int]
    tree_node: Mapping[frozenset[int], int]


def _doubling_round_samples(r: int) -> int:
    return 2 ** r


def _shrinking_round_slack(r: int, m: int) -> float:
    return (2.0 / 3.0) ** (r / 2.0) / (4.0 * m)


@dataclass(frozen=True)
class Schedule:
    """Round sizes and slack for the round-based estimators.

    ``round_samples(r)`` must grow strictly and ``round_slack(r, m)`` must
    shrink strictly toward zero as the round index r = 1, 2, ... advances;
    both are checked on the fly.  Defaults double the round size and shrink
    the slack from 1/(4m) by a factor sqrt(2/3) per round.  ``c`` scales the
    elimination confidence radius.
    """

    delta: float = 0.1
    c: float = CONFIDENCE_C
    round_samples: Callable[[int], int] = _doubling_round_samples
    round_slack: Callable[[int, int], float] = _shrinking_round_slack

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise InvalidConfig(f"delta must be in (0, 1), got {self.delta}")
        if not self.c > 1.0:
            raise InvalidConfig(f"confidence constant must exceed 1, got {self.c}")


def _count_radius(c: float, top: int, log_term: float) -> float:
    """Confidence radius in count units: n * sigma(n, top/n) = sqrt(c*top*L)."""
    return math.sqrt(c * top * log_term)


# -- the estimators ------------------------------------------------------------


def empirical_mode(counts: Sequence[int]) -> int:
    """Index of the largest count; ties break toward the lowest index."""
    best, best_n = -1, 0
    for i, c in enumerate(counts):
        if c > best_n:
            best, best_n = i, int(c)
    if best < 0:
        raise NoData("all counts are zero")
    return best


def exhaustive_search(oracle: QueryOracle, m: int, n: int) -> ModeEstimate:
    """Identify samples 0..n-1 with the fixed ceil(log2 m)-bit class code.

    Bit k of a sample's code is one membership query against the classes
    whose index has that bit set, high bit first.  A sample stops early once
    its emitted prefix pins a unique class, which happens before the last
    bit only when m is not a power of two.  Returns the empirical mode.
    """
    if n < 1:
        raise ValueError(f"sample budget must be >= 1, got n={n}")
    if m != oracle.m:
        raise ValueError(f"class count {m} does not match the oracle's {oracle.m}")
    before = oracle.query_count
    depth = (m - 1).bit_length()
    classes = np.empty(n, dtype=np.int64)
    prefix = np.zeros(n, dtype=np.int64)
    active = np.arange(n, dtype=np.int64)
    for level in range(depth):
        shift = depth - level
        lo = prefix[active] << shift
        done = np.minimum(lo + (1 << shift), m) - lo == 1
        classes[active[done]] = lo[done]
        active = active[~done]
        if active.size == 0:
            break
        bit = depth - 1 - level
        mask = sum(1 << c for c in range(m) if c >> bit & 1)
        answers = oracle.query_block(active, mask)
        prefix[active] = (prefix[active] << 1) | answers
    classes[active] = prefix[active]  # full-length prefixes are class indices
    used = oracle.query_count - before
    mode = empirical_mode(np.bincount(classes, minlength=m))
    return ModeEstimate(mode, used, used, n, 1, True)


def adaptive_search(oracle: QueryOracle, m: int, n: int) -> ModeEstimate:
    """Identify each of n samples by walking the evolving Huffman tree.

    Each internal hop costs one query against the right child's class set;
    unseen classes resolve inside the pending subtree and are then split out
    of it, seen ones get their count bumped.  Returns the empirical mode.
    """
    if n < 1:
        raise ValueError(f"sample budget must be >= 1, got n={n}")
    if m != oracle.m:
        raise ValueError(f"class count {m} does not match the oracle's {oracle.m}")
    before = oracle.query_count
    tree = adaptive_tree(m)
    arena = tree._arena
    counts = [0] * m
    ask = oracle.query_mask
    for j in range(n):
        v = arena[tree.root]
        while v.leaf_class is None:
            v = arena[v.right if ask(j, arena[v.right].mask) else v.left]
        cls = v.leaf_class
        counts[cls] += 1
        if counts[cls] == 1:
            insert_new_symbol(tree, cls)
        else:
            vitter_increment(tree, cls)
        arena = tree._arena
    used = oracle.query_count - before
    return ModeEstimate(empirical_mode(counts), used, used, n, 1, True)


def batch_tree_rebalance(
    oracle: QueryOracle,
    sample_range: Sequence[int] | range,
    tree: CodeTree,
    gamma: float,
    eps: float,
) -> tuple[Partition, int, CodeTree]:
    """One coarse refinement round: split heavy blocks, pool light ones.

    Starting from the whole tree holding every listed sample, repeatedly pop
    the heaviest block.  A popped internal vertex is split by querying each
    of its samples against its right child (one query per sample); a popped
    leaf is final, and the first leaf popped is the empirical mode y, fixing
    the stop bound C = gamma*N(y) - eps*n.  A popped block lighter than C
    ends the loop with the rest of the heap left unsplit.  Finalized blocks
    are then re-merged smallest-first to rebuild the tree top; the partition
    is read mid-merge, after blocks lighter than C/2 have been pooled with
    their merge partners until at most one remains.

    Returns (partition, mode class, tree).  The tree is mutated in place:
    vertex values at and above the partition blocks hold this round's
    counts, anything deeper keeps what earlier rounds left there.
    """
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must be in (0, 1], got {gamma}")
    if eps < 0.0:
        raise ValueError(f"eps must be non-negative, got {eps}")
    arena = tree._arena
    samples = np.asarray(sample_range, dtype=np.int64)
    n = int(samples.size)
    root = tree.root
    # Heap keys (-count, lowest class) never collide: class sets are disjoint.
    heap = [(-n, _lowest_class(arena[root].mask), root)]
    members = {root: samples}
    finals: list[tuple[int, int]] = []
    mode_vid = -1
    cut = -math.inf
    while heap:
        negc, _, vid = heapq.heappop(heap)
        count = -negc
        if count < cut:
            finals.append((vid, count))
            while heap:  # everything left is at most this light
                negc, _, vid = heapq.heappop(heap)
                finals.append((vid, -negc))
            break
        v = arena[vid]
        if v.leaf_class is not None:
            if mode_vid < 0:
                mode_vid = vid
                cut = gamma * count - eps * n
            finals.append((vid, count))
            continue
        inside = members.pop(vid)
        went_right = oracle.query_block(inside, arena[v.right].mask)
        left_s, right_s = inside[~went_right], inside[went_right]
        members[v.left], members[v.right] = left_s, right_s
        heapq.heappush(heap, (-int(left_s.size), _lowest_class(arena[v.left].mask), v.left))
        heapq.heappush(heap, (-int(right_s.size), _lowest_class(arena[v.right].mask), v.right))
    mode_class = arena[mode_vid].leaf_class

    for vid, count in finals:
        arena[vid].value = count
    events = merge_groups(tree, [vid for vid, _ in finals])
    arena = tree._arena

    # The partition is a prefix of the merge: while two or more blocks sit
    # below C/2 the next merge joins two of them (they are the two lightest),
    # so replaying events pools the stragglers and stops at the cut.
    grouped = dict(finals)
    if cut > 0:
        below = sum(1 for c in grouped.values() if 2 * c < cut)
        for a, b, joint in events:
            if below <= 1:
                break
            ca, cb = grouped.pop(a), grouped.pop(b)
            joined = ca + cb
            grouped[joint] = joined
            below += (2 * joined < cut) - (2 * ca < cut) - (2 * cb < cut)

    blocks: list[frozenset[int]] = []
    block_count: dict[frozenset[int], int] = {}
    tree_node: dict[frozenset[int], int] = {}
    order = sorted(grouped.items(),
                   key=lambda it: (-it[1], _lowest_class(arena[it[0]].mask)))
    for vid, count in order:
        block = frozenset(_iter_mask(arena[vid].mask))
        blocks.append(block)
        block_count[block] = count
        tree_node[block] = vid
    return Partition(tuple(blocks), block_count, tree_node), mode_class, tree


def is_admissible(
    partition: Partition,
    counts: Sequence[int] | None,
    n: int,
    eta: float,
) -> bool:
    """Check the partition requirements at level eta.

    Always: a unique heaviest block exists and is a singleton.  For eta > 0
    also: every block of mass >= eta is a singleton, and at most one block
    has mass below eta/2.  Block masses come from per-class ``counts`` when
    given, otherwise from the partition's own block counts.
    """
    if counts is None:
        weights = [int(partition.block_count[b]) for b in partition.blocks]
    else:
        weights = [sum(int(counts[y]) for y in b) for b in partition.blocks]
    top = max(weights)
    heaviest = [b for b, w in zip(partition.blocks, weights) if w == top]
    if len(heaviest) != 1 or len(heaviest[0]) != 1:
        return False
    if eta > 0.0:
        level = eta * n
        for b, w in zip(partition.blocks, weights):
            if w >= level and len(b) > 1:
                return False
        if sum(1 for w in weights if 2 * w < level) > 1:
            return False
    return True


def truncated_search(
    oracle: QueryOracle,
    m: int,
    schedule: Schedule | None = None,
    max_rounds: int = 10,
    partition_hook: Callable[[Partition, int, int, float, float], None] | None = None,
) -> ModeEstimate:
    """Round-doubling coarse search; the answer is the last round's mode.

    Each round draws its fresh samples and re-splits the evolving tree via
    :func:`batch_tree_rebalance` with gamma=1 and that round's slack, so per
    sample spend tracks the depth at which heavy blocks settle rather than
    the full entropy.  Never self-stops; total spend is set by max_rounds.
    ``partition_hook`` (if given) sees every round as (partition, mode, n,
    gamma, eps).
    """
    if max_rounds < 1:
        raise ValueError(f"need at least one round, got {max_rounds}")
    if m != oracle.m:
        raise ValueError(f"class count {m} does not match the oracle's {oracle.m}")
    sched = schedule if schedule is not None else Schedule()
    before = oracle.query_count
    tree = balanced_tree(m)
    base = 0
    guess = -1
    prev_n, prev_eps = 0, math.inf
    for r in range(1, max_rounds + 1):
        n_r = int(sched.round_samples(r))
        eps_r = float(sched.round_slack(r, m))
        if n_r <= prev_n:
            raise InvalidConfig("round sizes must be strictly increasing")
        if not 0.0 <= eps_r < prev_eps:
            raise InvalidConfig("round slack must shrink strictly")
        prev_n, prev_eps = n_r, eps_r
        part, guess, tree = batch_tree_rebalance(
            oracle, range(base, base + n_r), tree, 1.0, eps_r)
        base += n_r
        if partition_hook is not None:
            partition_hook(part, guess, n_r, 1.0, eps_r)
    used = oracle.query_count - before
    return ModeEstimate(guess, used, used, base, max_rounds, True)


def elimination(
    oracle: QueryOracle,
    m: int,
    delta: float,
    max_queries: int | None = None,
) -> ModeEstimate:
    """Per-class elimination: keep only classes that could still lead.

    Sample by sample: test membership in the eliminated set (once it is
    non-empty), identify survivors through a Huffman tree over the live
    classes, then drop every live class whose empirical mass plus the
    confidence radius sqrt(c*max_mass*ln(pi^2*m*r^2/delta)/r) still trails
    the leader.  Self-stops when one class remains; with ``max_queries`` set
    it instead returns its current best with ``terminated=False`` once the
    budget is crossed (without a budget, tied top masses mean it never
    stops).
    """
    if not 0.0 < delta < 1.0:
        raise InvalidConfig(f"delta must be in (0, 1), got {delta}")
    if m != oracle.m:
        raise ValueError(f"class count {m} does not match the oracle's {oracle.m}")
    before = oracle.query_count
    skipped = 0  # membership tests not issued while nothing was eliminated
    counts = [0] * m
    live = list(range(m))
    tree = adaptive_tree(m)
    arena = tree._arena
    ask = oracle.query_mask
    gone_mask = 0
    log_const = math.log(math.pi * math.pi * m / delta)
    r = 0
    top = 0
    low_bound = 0.0  # counts only grow, so a stale minimum stays a lower bound
    while True:
        if max_queries is not None and oracle.query_count - before >= max_queries:
            used = oracle.query_count - before
            best = [y for y in live if counts[y] == max(counts[y] for y in live)][0]
            return ModeEstimate(best, used, used + skipped, r, r, False)
        j = r
        r += 1
        if gone_mask:
            identify = not ask(j, gone_mask)
        else:
            skipped += 1
            identify = True
        if identify:
            v = arena[tree.root]
            while v.leaf_class is None:
                v = arena[v.right if ask(j, arena[v.right].mask) else v.left]
            cls = v.leaf_class
            counts[cls] += 1
            if counts[cls] == 1:
                insert_new_symbol(tree, cls)
            else:
                vitter_increment(tree, cls)
            arena = tree._arena
            if counts[cls] > top:
                top = counts[cls]
        thr = top - _count_radius(CONFIDENCE_C, top, log_const + 2.0 * math.log(r))
        if thr > low_bound:
            survivors = [y for y in live if counts[y] >= thr]
            if len(survivors) < len(live):
                for y in live:
                    if counts[y] < thr:
                        gone_mask |= 1 << y
                live = survivors
                if len(live) == 1:
                    used = oracle.query_count - before
                    return ModeEstimate(live[0], used, used + skipped, r, r, True)
                tree = tree_from_counts(live, {y: counts[y] for y in live if counts[y]})
                arena = tree._arena
            low_bound = min(counts[y] for y in live)


def set_elimination(
    oracle: QueryOracle,
    m: int,
    delta: float,
    schedule: Schedule | None = None,
    max_rounds: int = 20,
    max_queries: int | None = None,
    partition_hook: Callable[[Partition, int, int, float, float], None] | None = None,
) -> ModeEstimate:
    """Block-wise elimination over coarse round partitions.

    Each round filters its fresh samples against the eliminated classes (one
    query per sample once any exist), partitions the survivors with gamma=1/2
    and slack eps_r rescaled by the surviving mass, then drops every block
    whose round mass plus the confidence radius sigma(n_r) trails the leading
    singleton; surviving blocks are re-merged as the next round's tree.
    Rounds whose samples all fall in the eliminated set change nothing.
    Self-stops when one class is left, else runs max_rounds and reports the
    last leader with ``terminated=False``.
    """
    if not 0.0 < delta < 1.0:
        raise InvalidConfig(f"delta must be in (0, 1), got {delta}")
    if m != oracle.m:
        raise ValueError(f"class count {m} does not match the oracle's {oracle.m}")
    if max_rounds < 1:
        raise ValueError(f"need at least one round, got {max_rounds}")
    sched = schedule if schedule is not None else Schedule(delta=delta)
    before = oracle.query_count
    skipped = 0
    tree = balanced_tree(m)
    live: set[int] = set(range(m))
    gone_mask = 0
    log_const = math.log(math.pi * math.pi * m / delta)
    base = 0
    best = -1
    rounds = 0
    prev_n, prev_eps = 0, math.inf
    for r in range(1, max_rounds + 1):
        if max_queries is not None and oracle.query_count - before >= max_queries:
            break
        n_r = int(sched.round_samples(r))
        eps_r = float(sched.round_slack(r, m))
        if n_r <= prev_n:
            raise InvalidConfig("round sizes must be strictly increasing")
        if not 0.0 <= eps_r < prev_eps:
            raise InvalidConfig("round slack must shrink strictly")
        prev_n, prev_eps = n_r, eps_r
        rounds = r
        idx = np.arange(base, base + n_r, dtype=np.int64)
        base += n_r
        if gone_mask:
            survivors = idx[~oracle.query_block(idx, gone_mask)]
        else:
            skipped += n_r
            survivors = idx
        alive = int(survivors.size)
        if alive == 0:
            continue  # the whole round fell in the eliminated set
        eps_eff = eps_r * n_r / alive  # slack rescaled by surviving mass
        part, best, tree = batch_tree_rebalance(oracle, survivors, tree, 0.5, eps_eff)
        if partition_hook is not None:
            partition_hook(part, best, alive, 0.5, eps_eff)
        top = part.block_count[frozenset((best,))]
        thr = top - _count_radius(sched.c, top, log_const + 2.0 * math.log(n_r))
        doomed = [b for b in part.blocks if part.block_count[b] < thr]
        if doomed:
            for b in doomed:
                for y in b:
                    gone_mask |= 1 << y
                live -= b
            if len(live) == 1:
                used = oracle.query_count - before
                return ModeEstimate(best, used, used + skipped, base, r, True)
            dropped = set(doomed)
            merge_groups(tree, [part.tree_node[b] for b in part.blocks if b not in dropped])
    if best < 0:
        best = min(live)
    used = oracle.query_count - before
    return ModeEstimate(best, used, used + skipped, base, rounds, False)
