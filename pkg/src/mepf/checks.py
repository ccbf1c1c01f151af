"""Fast built-in self checks, surfaced through the ``check`` CLI command.

Each suite returns a list of failure descriptions (empty means pass) and
finishes in well under a second, so the whole battery is cheap enough to run
before trusting a build.  These are smoke-level cross checks with pinned
expected values, not a replacement for the test suite.
"""

from __future__ import annotations

import heapq
import math

from .coding import (
    adaptive_tree,
    balanced_tree,
    build_huffman,
    check_balanced,
    insert_new_symbol,
    vitter_increment,
    weighted_path_length,
)
from .distribution import gaps, information_projection, probability_vector
from .errors import DegenerateSet
from .estimators import (
    CONFIDENCE_C,
    Partition,
    _count_radius,
    batch_tree_rebalance,
    is_admissible,
    truncated_search,
)
from .oracle import new_oracle, replay_oracle

__all__ = ["run_all_checks", "check_coding", "check_oracle",
           "check_estimators", "check_projection"]


def _rand(seed: int):
    # tiny deterministic generator; avoids importing numpy for the CLI path
    state = seed & 0xFFFFFFFFFFFFFFFF or 1

    def next_u64() -> int:
        nonlocal state
        state ^= (state << 13) & 0xFFFFFFFFFFFFFFFF
        state ^= state >> 7
        state ^= (state << 17) & 0xFFFFFFFFFFFFFFFF
        return state

    return next_u64


def _greedy_merge_cost(weights) -> int:
    # optimal weighted path length from values alone; fine with zero weights
    heap = list(weights)
    heapq.heapify(heap)
    cost = 0
    while len(heap) > 1:
        merged = heapq.heappop(heap) + heapq.heappop(heap)
        cost += merged
        heapq.heappush(heap, merged)
    return cost


def check_coding() -> list[str]:
    fails: list[str] = []
    tree = build_huffman((69, 14, 8, 6, 3))
    cost = weighted_path_length(tree)
    if cost != 157:
        fails.append(f"coding: worked-example tree cost {cost}, expected 157")
    if not check_balanced(tree, 2):
        fails.append("coding: worked-example tree is not 2-balanced")

    # online maintenance must stay cost-optimal after every single update
    rng = _rand(0xC0DE)
    tree = adaptive_tree(8)
    counts = [0] * 8
    for step in range(120):
        cls = rng() % 8
        counts[cls] += 1
        if counts[cls] == 1:
            insert_new_symbol(tree, cls)
        else:
            vitter_increment(tree, cls)
        observed = [n for n in counts if n]
        if tree.nyt is not None:
            observed.append(0)  # the placeholder leaf carries weight zero
        got = weighted_path_length(tree)
        want = _greedy_merge_cost(observed) if len(observed) > 1 else 0
        if got != want:
            fails.append(f"coding: step {step} online cost {got} != rebuilt {want}")
            break
        if sum(1 for n in counts if n) > 1 and not check_balanced(tree, 2):
            fails.append(f"coding: step {step} online tree lost 2-balance")
            break
    return fails


def check_oracle() -> list[str]:
    fails: list[str] = []
    pv = probability_vector([0.5, 0.3, 0.2])
    # answers must depend only on (seed, sample index, set), not access order
    a = new_oracle(pv, seed=7)
    b = new_oracle(pv, seed=7)
    fwd = [a.query(j, {0}) for j in range(64)]
    rev = [b.query(j, {0}) for j in reversed(range(64))]
    if fwd != rev[::-1]:
        fails.append("oracle: answers changed with access order")
    if a.query_count != 64 or b.query_count != 64:
        fails.append("oracle: query accounting drifted")

    replay = replay_oracle(3, [0, 1, 2, 1])
    bits = [replay.query(j, {1}) for j in range(4)]
    if bits != [False, True, False, True]:
        fails.append(f"oracle: replay membership bits {bits}")
    try:
        replay.query(0, set())
        fails.append("oracle: empty set accepted")
    except DegenerateSet:
        pass
    try:
        replay.query(0, {0, 1, 2})
        fails.append("oracle: full set accepted")
    except DegenerateSet:
        pass
    if replay.query_count != 4:
        fails.append("oracle: rejected sets were charged")
    return fails


def check_estimators() -> list[str]:
    fails: list[str] = []
    log_term = math.log(math.pi ** 2 * 10 * 100 ** 2 / 0.1)
    sigma = _count_radius(CONFIDENCE_C, 50, log_term) / 100
    if abs(sigma - 1.3901785639116901) > 1e-12:
        fails.append(f"estimators: confidence radius {sigma!r} off frozen value")

    oracle = replay_oracle(4, [0] * 5 + [1] * 3 + [2, 3])
    part, mode, _ = batch_tree_rebalance(oracle, range(10), balanced_tree(4), 1.0, 0.0)
    blocks = tuple(tuple(sorted(b)) for b in part.blocks)
    if mode != 0 or blocks != ((0,), (1,), (2, 3)) or oracle.query_count != 18:
        fails.append(f"estimators: rebalance example gave mode={mode} "
                     f"blocks={blocks} queries={oracle.query_count}")
    elif not is_admissible(part, [5, 3, 1, 1], 10, 0.5):
        fails.append("estimators: rebalance example partition not admissible")

    bad = Partition(
        blocks=(frozenset({0, 1}), frozenset({2})),
        block_count={frozenset({0, 1}): 8, frozenset({2}): 2},
        tree_node={frozenset({0, 1}): 0, frozenset({2}): 1},
    )
    if is_admissible(bad, None, 10, 0.5):
        fails.append("estimators: non-singleton heaviest block passed admissibility")

    est = truncated_search(new_oracle(probability_vector([0.7, 0.3]), seed=29),
                           2, max_rounds=6)
    if est.queries_used != sum(2 ** r for r in range(1, 7)):
        fails.append(f"estimators: two-class rounds cost {est.queries_used}")
    return fails


def check_projection() -> list[str]:
    """The projection's divergence must equal the runner-up decay rate."""
    fails: list[str] = []
    rng = _rand(0x9E37)
    for case in range(200):
        m = 2 + rng() % 7
        weights = [1 + rng() % 1000 for _ in range(m)]
        top = max(range(m), key=weights.__getitem__)
        weights[top] += 1  # breaks ties so the mode is unique
        pv = probability_vector(weights)
        rate = gaps(pv).rates[pv.mode]
        div = information_projection(pv).divergence_nats
        if abs(div - rate) > 1e-9:
            fails.append(f"projection: case {case} divergence {div} != rate {rate}")
            break
    return fails


def run_all_checks() -> list[str]:
    """Run every suite; returns the concatenated failure list."""
    fails: list[str] = []
    for suite in (check_coding, check_oracle, check_estimators, check_projection):
        fails.extend(suite())
    return fails
