"""Prefix-code trees over class indices, batch-built and incrementally updated.

A :class:`CodeTree` is a full binary tree whose leaves carry class indices and
whose vertices carry counts (or any non-negative values).  Walking left emits
bit 0, right emits bit 1.  Three construction routes exist:

* :func:`build_huffman` - bottom-up optimal tree for fixed positive counts;
* :func:`adaptive_tree` / :func:`tree_from_counts` - trees that also hold a
  subtree of never-observed classes and support count increments that keep
  the tree optimal at every step (:func:`vitter_increment`,
  :func:`insert_new_symbol`);
* :func:`balanced_tree` - count-free complete tree, the starting shape for
  the batch estimators, which restructure it with :func:`merge_groups`.

The incremental machinery maintains a bottom-up ordering of the vertices in
which values never decrease and, on equal values, leaves precede internal
vertices.  Increments swap a vertex with the top of its equal-value run
before bumping it, which is what keeps the weighted path length equal to a
from-scratch rebuild after every single update; the tests enforce exactly
that equality.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import (
    AlreadyObserved,
    EmptyInput,
    NonPositiveCount,
    NotYetObserved,
    UnknownClass,
    ZeroRootValue,
)

__all__ = [
    "CodeTree",
    "VertexCode",
    "adaptive_tree",
    "balanced_tree",
    "build_huffman",
    "check_balanced",
    "code_of",
    "depths",
    "dump_tree",
    "insert_new_symbol",
    "merge_groups",
    "tree_from_counts",
    "vitter_increment",
    "weighted_path_length",
]


@dataclass(frozen=True)
class VertexCode:
    """Bit path from the root: '0' = left child, '1' = right child."""

    bits: str

    @property
    def depth(self) -> int:
        return len(self.bits)

    def is_prefix_of(self, other: "VertexCode") -> bool:
        return other.bits.startswith(self.bits)

    def child(self, bit: int) -> "VertexCode":
        return VertexCode(self.bits + ("1" if bit else "0"))

    def sort_key(self):
        """Bottom-to-top, left-to-right order: deeper first, then lexicographic."""
        return (-len(self.bits), self.bits)


class _Vertex:
    __slots__ = ("vid", "parent", "left", "right", "value", "leaf_class", "mask", "pos")

    def __init__(self, vid, value, leaf_class=None, mask=0):
        self.vid = vid
        self.parent = None
        self.left = None
        self.right = None
        self.value = value
        self.leaf_class = leaf_class
        self.mask = mask
        self.pos = -1  # index in the rebalancing order; -1 while outside it

    @property
    def is_leaf(self) -> bool:
        return self.left is None


class CodeTree:
    """Arena-backed full binary tree; vertex ids are never reused.

    ``leaf_of`` maps every covered class to its leaf vertex id, including
    classes still inside the unobserved subtree (rooted at ``nyt`` when one
    exists).  ``_order`` is the bottom-up rebalancing sequence used by the
    incremental updates; batch-built trees get it from their merge order.
    """

    def __init__(self):
        self._arena: list[_Vertex | None] = []
        self.root: int = -1
        self.leaf_of: dict[int, int] = {}
        self.nyt: int | None = None
        self._order: list[int] = []

    # -- arena plumbing ------------------------------------------------------

    def _new(self, value, leaf_class=None, mask=0) -> int:
        vid = len(self._arena)
        self._arena.append(_Vertex(vid, value, leaf_class, mask))
        return vid

    def _v(self, vid: int) -> _Vertex:
        return self._arena[vid]

    def _free(self, vid: int) -> None:
        self._arena[vid] = None

    def _adopt(self, parent: int, left: int, right: int) -> None:
        p = self._arena[parent]
        p.left, p.right = left, right
        self._arena[left].parent = parent
        self._arena[right].parent = parent

    def classes_under(self, vid: int) -> int:
        """Bitmask of classes beneath a vertex (bit c set = class c present)."""
        return self._arena[vid].mask

    def right_mask(self, vid: int) -> int:
        """Query set for one walk step: the classes under the right child."""
        return self._arena[self._arena[vid].right].mask

    def vertices(self) -> Iterable[_Vertex]:
        return (v for v in self._arena if v is not None)

    def __contains__(self, cls: int) -> bool:
        return cls in self.leaf_of


def _lowest_class(mask: int) -> int:
    return (mask & -mask).bit_length() - 1


def _heap_key(tree: CodeTree, vid: int):
    # merge order: smaller value first; on ties a leaf precedes an internal
    # vertex, then the lowest class index underneath decides
    v = tree._v(vid)
    return (v.value, 0 if v.is_leaf else 1, _lowest_class(v.mask))


def _merge_by_value(tree: CodeTree, vids: Sequence[int],
                    events: list[tuple[int, int, int]] | None = None) -> int:
    """Repeatedly join the two smallest entries; first popped becomes the
    left child.  Returns the final root and records the pop order in
    ``tree._order`` (root appended last)."""
    heap = [(*_heap_key(tree, vid), vid) for vid in vids]
    heapq.heapify(heap)
    order = tree._order
    order.clear()
    while len(heap) > 1:
        a = heapq.heappop(heap)[-1]
        b = heapq.heappop(heap)[-1]
        va, vb = tree._v(a), tree._v(b)
        parent = tree._new(va.value + vb.value, mask=va.mask | vb.mask)
        tree._adopt(parent, a, b)
        if events is not None:
            events.append((a, b, parent))
        order.extend((a, b))
        heapq.heappush(heap, (*_heap_key(tree, parent), parent))
    root = heap[0][-1]
    order.append(root)
    for pos, vid in enumerate(order):
        tree._v(vid).pos = pos
    tree._v(root).parent = None
    return root


def build_huffman(counts: Sequence[float] | Mapping[int, float]) -> CodeTree:
    """Optimal prefix-code tree for fixed counts (classes are the indices).

    Counts must be strictly positive; merging pops the two smallest entries
    (value, then leaf-before-internal, then lowest class), so the result is
    deterministic.  A single class yields the bare leaf with the empty code.
    """
    if isinstance(counts, Mapping):
        items = sorted(counts.items())
    else:
        items = list(enumerate(counts))
    if not items:
        raise EmptyInput("no counts supplied")
    for cls, c in items:
        if not c > 0:
            raise NonPositiveCount(f"count for class {cls} must be > 0, got {c}")
    tree = CodeTree()
    leaves = []
    for cls, c in items:
        vid = tree._new(c, leaf_class=cls, mask=1 << cls)
        tree.leaf_of[cls] = vid
        leaves.append(vid)
    tree.root = _merge_by_value(tree, leaves)
    return tree


def _build_balanced(tree: CodeTree, classes: Sequence[int], reuse: bool = False) -> int:
    """Left-complete balanced subtree over the given classes, all values zero.

    With ``reuse`` the class leaves must already exist in the arena and are
    re-parented; otherwise fresh leaves are created and registered.
    """
    classes = sorted(classes)
    k = len(classes)
    if reuse:
        leaves = [tree.leaf_of[c] for c in classes]
        for vid in leaves:
            tree._v(vid).parent = None
    else:
        leaves = []
        for c in classes:
            vid = tree._new(0, leaf_class=c, mask=1 << c)
            tree.leaf_of[c] = vid
            leaves.append(vid)
    if k == 1:
        return leaves[0]
    height = math.ceil(math.log2(k))
    bottom = 2 * k - (1 << height)  # leaves on the deepest level, leftmost
    row: list[int] = []
    for i in range(0, bottom, 2):
        parent = tree._new(0, mask=tree._v(leaves[i]).mask | tree._v(leaves[i + 1]).mask)
        tree._adopt(parent, leaves[i], leaves[i + 1])
        row.append(parent)
    row.extend(leaves[bottom:])
    while len(row) > 1:
        nxt = []
        for i in range(0, len(row), 2):
            a, b = row[i], row[i + 1]
            parent = tree._new(0, mask=tree._v(a).mask | tree._v(b).mask)
            tree._adopt(parent, a, b)
            nxt.append(parent)
        row = nxt
    return row[0]


def balanced_tree(classes: int | Iterable[int]) -> CodeTree:
    """Complete left-filled tree with zero values; an int universe means
    classes 0..classes-1, an iterable names the leaf set explicitly.

    The starting shape for the batch estimators; it carries no counts and no
    rebalancing order until :func:`merge_groups` rebuilds its top.
    """
    universe = sorted(range(classes) if isinstance(classes, int) else set(classes))
    if not universe:
        raise EmptyInput("need at least one class")
    tree = CodeTree()
    tree.root = _build_balanced(tree, universe)
    tree._v(tree.root).parent = None
    return tree


def adaptive_tree(classes: int | Iterable[int]) -> CodeTree:
    """Tree over the given classes with every one still unobserved."""
    tree = balanced_tree(classes)
    tree.nyt = tree.root
    tree._order = [tree.root]
    tree._v(tree.root).pos = 0
    return tree


def tree_from_counts(classes: int | Iterable[int], counts: Mapping[int, int]) -> CodeTree:
    """Adaptive tree seeded with existing positive counts.

    ``classes`` is the leaf universe: an int means 0..classes-1, an iterable
    names an arbitrary class subset (estimators prune eliminated classes this
    way).  Observed classes become Huffman-merged leaves; the rest (if any)
    live in a balanced unobserved subtree that merges in as a zero-value
    pseudo-leaf.
    """
    universe = sorted(range(classes) if isinstance(classes, int) else set(classes))
    allowed = set(universe)
    for c, n in counts.items():
        if c not in allowed:
            raise UnknownClass(c)
        if n < 0:
            raise NonPositiveCount(f"count for class {c} must be >= 0, got {n}")
    observed = {c: n for c, n in counts.items() if n > 0}
    missing = [c for c in universe if c not in observed]
    if not observed:
        if not universe:
            raise EmptyInput("no classes")
        return adaptive_tree(universe)
    tree = CodeTree()
    tops = []
    for cls, n in sorted(observed.items()):
        vid = tree._new(int(n), leaf_class=cls, mask=1 << cls)
        tree.leaf_of[cls] = vid
        tops.append(vid)
    if missing:
        tree.nyt = _build_balanced(tree, missing)
        tops.append(tree.nyt)
    tree.root = _merge_by_value(tree, tops)
    return tree


# -- inspection ---------------------------------------------------------------


def code_of(tree: CodeTree, cls: int) -> VertexCode:
    vid = tree.leaf_of.get(cls)
    if vid is None:
        raise UnknownClass(cls)
    bits = []
    v = tree._v(vid)
    while v.parent is not None:
        p = tree._v(v.parent)
        bits.append("1" if p.right == v.vid else "0")
        v = p
    return VertexCode("".join(reversed(bits)))


def depths(tree: CodeTree) -> dict[int, int]:
    """Leaf depth per class, by one walk from the root."""
    out: dict[int, int] = {}
    stack = [(tree.root, 0)]
    while stack:
        vid, d = stack.pop()
        v = tree._v(vid)
        if v.is_leaf:
            out[v.leaf_class] = d
        else:
            stack.append((v.left, d + 1))
            stack.append((v.right, d + 1))
    return out


def weighted_path_length(tree: CodeTree):
    """Sum of value * depth over leaves; integer-exact for integer values."""
    d = depths(tree)
    return sum(tree._v(vid).value * d[cls] for cls, vid in tree.leaf_of.items())


def _ceil_log2_ratio(total, value) -> int:
    """Smallest k with value * 2^k >= total; exact for integers."""
    if isinstance(total, int) and isinstance(value, int):
        k = 0
        while (value << k) < total:
            k += 1
        return k
    # float route: forgive values sitting within rounding of a power boundary
    return max(0, math.ceil(math.log2(total / value) - 1e-9))


def check_balanced(tree: CodeTree, factor: float = 2.0) -> bool:
    """True when every positive-value vertex sits no deeper than
    factor * ceil(log2(total / value)).  Zero-value vertices are exempt."""
    total = tree._v(tree.root).value
    if not total > 0:
        raise ZeroRootValue("tree carries no mass")
    stack = [(tree.root, 0)]
    while stack:
        vid, d = stack.pop()
        v = tree._v(vid)
        if v.value > 0 and d > factor * _ceil_log2_ratio(total, v.value):
            return False
        if not v.is_leaf:
            stack.append((v.left, d + 1))
            stack.append((v.right, d + 1))
    return True


def dump_tree(tree: CodeTree) -> str:
    """Deterministic indented rendering, one vertex per line, left before right."""
    lines: list[str] = []

    def fmt(value):
        if isinstance(value, float):
            return format(value, "g")
        return str(value)

    def walk(vid: int, depth: int) -> None:
        v = tree._v(vid)
        pad = "  " * depth
        if v.is_leaf:
            lines.append(f"{pad}Leaf: {fmt(v.value)} (class {v.leaf_class})")
        else:
            tag = " (unobserved)" if vid == tree.nyt else ""
            lines.append(f"{pad}Node: {fmt(v.value)}{tag}")
            walk(v.left, depth + 1)
            walk(v.right, depth + 1)

    walk(tree.root, 0)
    return "\n".join(lines) + "\n"


# -- incremental updates -------------------------------------------------------


def _refresh_masks_up(tree: CodeTree, vid: int | None) -> None:
    arena = tree._arena
    while vid is not None:
        v = arena[vid]
        v.mask = arena[v.left].mask | arena[v.right].mask
        vid = v.parent


def _swap(tree: CodeTree, u: int, v: int) -> None:
    # equal values, neither an ancestor of the other, neither the root
    arena = tree._arena
    a, b = arena[u], arena[v]
    pa, pb = a.parent, b.parent
    a_left = arena[pa].left == u
    b_left = arena[pb].left == v
    if a_left:
        arena[pa].left = v
    else:
        arena[pa].right = v
    if b_left:
        arena[pb].left = u
    else:
        arena[pb].right = u
    a.parent, b.parent = pb, pa
    order = tree._order
    order[a.pos], order[b.pos] = v, u
    a.pos, b.pos = b.pos, a.pos
    _refresh_masks_up(tree, pa)
    if pb != pa:
        _refresh_masks_up(tree, pb)


def _slide(tree: CodeTree, i: int, j: int) -> None:
    """Cyclic rotation of order positions i..j: the vertex at i moves to j,
    everything between shifts down one position, each vertex taking the
    structural slot (parent and side) of the position it lands in.  All
    members carry equal values, so every touched sum is unchanged."""
    arena = tree._arena
    order = tree._order
    members = order[i : j + 1]
    slots = [(arena[x].parent, arena[arena[x].parent].left == x) for x in members]
    landed = members[1:] + members[:1]
    for idx, x in enumerate(landed):
        parent, is_left = slots[idx]
        if is_left:
            arena[parent].left = x
        else:
            arena[parent].right = x
        arena[x].parent = parent
        arena[x].pos = i + idx
        order[i + idx] = x
    for parent, _ in set(slots):
        _refresh_masks_up(tree, parent)


def _increment_cascade(tree: CodeTree, vid: int) -> None:
    """Add one to a vertex and each ancestor on its (possibly shifting) path,
    first moving the vertex to the top of its equal-value run.  An ordinary
    run top is reached by a subtree swap.  The run top can also be the
    vertex's own parent - only via a zero-value unobserved sibling - and then
    the vertex instead slides into the parent's slot, which drops the parent
    below it and keeps every sum intact.  This is what keeps the weighted
    path length equal to a from-scratch rebuild after every single update.
    """
    arena = tree._arena
    order = tree._order
    cur = vid
    while cur is not None:
        c = arena[cur]
        w = c.value
        i = c.pos
        j = i
        while j + 1 < len(order) and arena[order[j + 1]].value == w:
            j += 1
        if j > i:
            top = order[j]
            if top != c.parent:
                _swap(tree, cur, top)
            elif arena[top].parent is None:
                # the parent is the root and is about to gain one as well,
                # so the vertex only needs to clear the other run members
                if j - 1 > i:
                    _slide(tree, i, j - 1)
            elif j - i >= 2:
                _slide(tree, i, j)
            # a bare (vertex, parent) pair is already in place: both gain one
        c.value = w + 1
        cur = c.parent


def _inside_unobserved(tree: CodeTree, vid: int) -> bool:
    if tree.nyt is None:
        return False
    cur = vid
    while cur is not None:
        if cur == tree.nyt:
            return True
        cur = tree._arena[cur].parent
    return False


def vitter_increment(tree: CodeTree, cls: int) -> None:
    """Count one more observation of an already-observed class.

    After the update the tree is again an optimal prefix-code tree for the
    new counts: the weighted path length matches a from-scratch rebuild.
    """
    vid = tree.leaf_of.get(cls)
    if vid is None:
        raise UnknownClass(cls)
    if _inside_unobserved(tree, vid):
        raise NotYetObserved(f"class {cls} has no observations; insert it first")
    _increment_cascade(tree, vid)


def insert_new_symbol(tree: CodeTree, cls: int) -> None:
    """First observation of a class: pull it out of the unobserved subtree.

    The remaining unobserved classes are re-packed into a left-complete
    balanced subtree; a fresh internal vertex takes the old subtree's place
    with the shrunk subtree on the left and the new count-1 leaf on the
    right.  When the last unobserved class leaves, the subtree disappears.
    """
    vid = tree.leaf_of.get(cls)
    if vid is None:
        raise UnknownClass(cls)
    if not _inside_unobserved(tree, vid):
        raise AlreadyObserved(f"class {cls} already has count > 0")
    arena = tree._arena
    old_nyt = tree.nyt
    old = arena[old_nyt]
    anchor, anchor_left = old.parent, None
    if old.parent is not None:
        anchor_left = arena[old.parent].left == old_nyt
    remaining = [c for c in _iter_mask(old.mask) if c != cls]

    # drop the old unobserved skeleton (class leaves survive, re-parented)
    stack = [old_nyt]
    while stack:
        x = arena[stack.pop()]
        if x.is_leaf:
            x.parent = None
        else:
            stack.extend((x.left, x.right))
            tree._free(x.vid)

    leaf = arena[vid]
    leaf.value = 0  # the cascade below brings it to 1
    order = tree._order
    assert order[0] == old_nyt  # the unobserved root is pinned to slot 0

    if remaining:
        new_nyt = _build_balanced(tree, remaining, reuse=True)
        joint = tree._new(0, mask=arena[new_nyt].mask | leaf.mask)
        tree._adopt(joint, new_nyt, vid)
        tree.nyt = new_nyt
        top = joint
        order[0:1] = [new_nyt, vid, joint]
        for pos, x in enumerate(order):
            arena[x].pos = pos
    else:
        tree.nyt = None
        top = vid
        order[0] = vid
        leaf.pos = 0

    if anchor is None:
        tree.root = top
        arena[top].parent = None
    else:
        if anchor_left:
            arena[anchor].left = top
        else:
            arena[anchor].right = top
        arena[top].parent = anchor
        _refresh_masks_up(tree, anchor)

    _increment_cascade(tree, vid)


def _iter_mask(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def merge_groups(tree: CodeTree, group_vids: Sequence[int]) -> list[tuple[int, int, int]]:
    """Rebuild the tree top over the given subtree roots.

    The groups must jointly cover every class that should remain in the tree;
    vertices above them are discarded (classes whose leaves sit outside every
    group drop out of the tree entirely).  Group values are taken as-is, so
    callers set them to fresh counts beforehand.

    Returns the merge sequence as (left vid, right vid, joint vid) triples,
    smallest pairs first; callers wanting a partially merged view of the new
    top replay a prefix of it.
    """
    if not group_vids:
        raise EmptyInput("no groups to merge")
    keep = set(group_vids)
    # free everything reachable from the old root without entering a group
    stack = [tree.root]
    while stack:
        vid = stack.pop()
        if vid in keep:
            continue
        v = tree._arena[vid]
        if not v.is_leaf:
            stack.extend((v.left, v.right))
        else:
            del tree.leaf_of[v.leaf_class]
        tree._free(vid)
    for vid in group_vids:
        tree._arena[vid].parent = None
    events: list[tuple[int, int, int]] = []
    tree.root = _merge_by_value(tree, list(group_vids), events)
    return events
