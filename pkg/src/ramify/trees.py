"""Finite-depth truncations of levelled rooted trees.

A tree is stored as an ``id -> parent-id`` mapping with exactly one root
(parent ``None``).  Levels are derived from the parent chains: the root sits
on level 0, every other node one level below its parent, and ``depth`` is the
index of the last populated level.  Instances are immutable after
construction and every operation here is a pure function, so values can be
shared freely between threads.

Statements about trees of unbounded height are given truncated semantics
throughout the package: "the part of the tree above ``x`` is infinite"
becomes "the subtree above ``x`` reaches level ``depth``".
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from random import Random

from .errors import ValidationError

__all__ = [
    "TruncatedTree",
    "parse_tree",
    "tree_to_document",
    "levels",
    "induced_subtree",
    "truncate",
    "canonical_code",
    "complete_tree",
    "tree_from_child_counts",
    "random_tree",
    "generate",
    "to_dot",
]


class TruncatedTree:
    """Immutable rooted tree whose levels 0..depth are all non-empty."""

    __slots__ = (
        "name",
        "boundary_is_cut",
        "depth",
        "root",
        "_parent",
        "_children",
        "_level",
        "_levels",
        "_nodes",
    )

    def __init__(
        self,
        parent: Mapping[str, str | None],
        *,
        name: str = "",
        boundary_is_cut: bool | None = None,
        declared_depth: int | None = None,
    ):
        if not parent:
            raise ValidationError("empty node set")
        roots = sorted(x for x, p in parent.items() if p is None)
        if not roots:
            raise ValidationError("no root: every node names a parent")
        if len(roots) > 1:
            raise ValidationError("multiple roots: " + ", ".join(roots))
        for x, p in parent.items():
            if not isinstance(x, str):
                raise ValidationError(f"node id {x!r} is not a string")
            if p is not None and p not in parent:
                raise ValidationError(f"missing parent {p!r} of node {x!r}")

        self.root = roots[0]
        children: dict[str, list[str]] = {x: [] for x in parent}
        for x in sorted(parent):
            p = parent[x]
            if p is not None:
                children[p].append(x)

        level: dict[str, int] = {self.root: 0}
        level_list: list[tuple[str, ...]] = []
        frontier: tuple[str, ...] = (self.root,)
        d = 0
        while frontier:
            level_list.append(frontier)
            nxt = sorted(c for x in frontier for c in children[x])
            for c in nxt:
                level[c] = d + 1
            frontier = tuple(nxt)
            d += 1
        if len(level) != len(parent):
            stray = sorted(set(parent) - set(level))
            raise ValidationError(
                "nodes unreachable from the root (parent cycle): " + ", ".join(stray[:5])
            )

        self.depth = len(level_list) - 1
        if declared_depth is not None and declared_depth != self.depth:
            raise ValidationError(
                f"declared depth {declared_depth} but levels run 0..{self.depth}"
            )
        self.name = name
        self.boundary_is_cut = boundary_is_cut
        self._parent = dict(parent)
        self._children = {x: tuple(cs) for x, cs in children.items()}
        self._level = level
        self._levels = tuple(level_list)
        self._nodes = tuple(sorted(parent))

    @property
    def nodes(self) -> tuple[str, ...]:
        """All node ids in sorted order."""
        return self._nodes

    @property
    def levels(self) -> tuple[tuple[str, ...], ...]:
        """Level k as a sorted tuple, for k = 0..depth."""
        return self._levels

    def level(self, x: str) -> int:
        self._require(x)
        return self._level[x]

    def parent(self, x: str) -> str | None:
        self._require(x)
        return self._parent[x]

    def children(self, x: str) -> tuple[str, ...]:
        self._require(x)
        return self._children[x]

    def ancestors(self, x: str) -> tuple[str, ...]:
        """Strict ancestors of x, nearest first."""
        self._require(x)
        out = []
        p = self._parent[x]
        while p is not None:
            out.append(p)
            p = self._parent[p]
        return tuple(out)

    def descendants(self, x: str) -> frozenset[str]:
        """x together with everything above it."""
        self._require(x)
        seen = {x}
        stack = [x]
        while stack:
            for c in self._children[stack.pop()]:
                seen.add(c)
                stack.append(c)
        return frozenset(seen)

    def _require(self, x: str) -> None:
        if x not in self._parent:
            raise ValidationError(f"unknown node {x!r}")

    def __contains__(self, x: object) -> bool:
        return x in self._parent

    def __len__(self) -> int:
        return len(self._parent)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TruncatedTree):
            return NotImplemented
        return self._parent == other._parent

    def __hash__(self) -> int:
        return hash(frozenset(self._parent.items()))

    def __repr__(self) -> str:
        return f"TruncatedTree(nodes={len(self._parent)}, depth={self.depth})"


def parse_tree(document: Mapping) -> TruncatedTree:
    """Build a validated tree from a document, naming the first violated invariant."""
    if not isinstance(document, Mapping):
        raise ValidationError("tree document must be a JSON object")
    entries = document.get("nodes")
    if not isinstance(entries, list):
        raise ValidationError("field 'nodes' must be a list")
    parent: dict[str, str | None] = {}
    for entry in entries:
        if not isinstance(entry, Mapping) or "id" not in entry:
            raise ValidationError(f"node entry {entry!r} lacks an 'id'")
        nid = entry["id"]
        if not isinstance(nid, str):
            raise ValidationError(f"node id {nid!r} is not a string")
        if nid in parent:
            raise ValidationError(f"duplicate id {nid!r}")
        p = entry.get("parent")
        if p is not None and not isinstance(p, str):
            raise ValidationError(f"parent of {nid!r} must be a string or null")
        parent[nid] = p
    name = document.get("name", "")
    if not isinstance(name, str):
        raise ValidationError("field 'name' must be a string")
    declared = document.get("depth")
    if declared is not None and not isinstance(declared, int):
        raise ValidationError("field 'depth' must be an integer")
    boundary = document.get("boundary_is_cut")
    if boundary is not None and not isinstance(boundary, bool):
        raise ValidationError("field 'boundary_is_cut' must be a boolean")
    return TruncatedTree(
        parent, name=name, boundary_is_cut=boundary, declared_depth=declared
    )


def tree_to_document(t: TruncatedTree, name: str | None = None) -> dict:
    doc: dict = {
        "name": t.name if name is None else name,
        "depth": t.depth,
        "nodes": [
            {"id": x, "parent": t.parent(x)} for x in t.nodes
        ],
    }
    # recorded for callers that track whether the last level is a cut or genuine
    if t.boundary_is_cut is not None:
        doc["boundary_is_cut"] = t.boundary_is_cut
    return doc


def levels(t: TruncatedTree) -> list[frozenset[str]]:
    """The levels L_0..L_depth as a list of node sets."""
    return [frozenset(lv) for lv in t.levels]


def induced_subtree(t: TruncatedTree, keep: Iterable[str]) -> TruncatedTree:
    """Restrict to a downward-closed node set containing the root.

    Levels are preserved node by node: a kept node keeps its parent, hence
    its whole chain down to the root, hence its level.
    """
    kept = set(keep)
    for x in kept:
        t._require(x)
    if t.root not in kept:
        raise ValidationError("keep set must contain the root")
    for x in kept:
        p = t.parent(x)
        if p is not None and p not in kept:
            raise ValidationError(
                f"keep set is not downward-closed: {x!r} kept, parent {p!r} dropped"
            )
    sub = {x: t.parent(x) for x in kept}
    return TruncatedTree(sub, name=t.name, boundary_is_cut=t.boundary_is_cut)


def truncate(t: TruncatedTree, n: int) -> TruncatedTree:
    """The union of the first n+1 levels, as a tree."""
    if not 0 <= n <= t.depth:
        raise ValidationError(f"truncation level {n} out of range 0..{t.depth}")
    if n == t.depth:
        return t
    kept = [x for lv in t.levels[: n + 1] for x in lv]
    return induced_subtree(t, kept)


def canonical_code(t: TruncatedTree) -> str:
    """Canonical form: equal codes iff the rooted trees are isomorphic.

    Classic recursive code with sorted child codes, computed bottom-up.
    Invariant under relabelling of node ids.
    """
    code: dict[str, str] = {}
    for k in range(t.depth, -1, -1):
        for x in t.levels[k]:
            code[x] = "(" + "".join(sorted(code[c] for c in t.children(x))) + ")"
    return code[t.root]


def complete_tree(arity: int, depth: int) -> TruncatedTree:
    """Complete arity-regular tree with path-based ids (root "0")."""
    if arity < 1:
        raise ValidationError(f"arity must be >= 1, got {arity}")
    if depth < 0:
        raise ValidationError(f"depth must be >= 0, got {depth}")
    parent: dict[str, str | None] = {"0": None}
    frontier = ["0"]
    for _ in range(depth):
        nxt = []
        for pid in frontier:
            for i in range(arity):
                cid = f"{pid}.{i}"
                parent[cid] = pid
                nxt.append(cid)
        frontier = nxt
    return TruncatedTree(parent)


def tree_from_child_counts(counts: Sequence[Sequence[int]]) -> TruncatedTree:
    """Tree with explicit per-node child counts.

    ``counts[k][i]`` is the number of children of the i-th node (in id order)
    on level k; the implied level sizes must line up.
    """
    parent: dict[str, str | None] = {"0": None}
    frontier = ["0"]
    for k, row in enumerate(counts):
        if len(row) != len(frontier):
            raise ValidationError(
                f"level {k} has {len(frontier)} nodes but {len(row)} counts given"
            )
        nxt = []
        for pid, c in zip(frontier, row):
            if not isinstance(c, int) or c < 0:
                raise ValidationError(f"child count {c!r} at level {k} is invalid")
            for i in range(c):
                cid = f"{pid}.{i}"
                parent[cid] = pid
                nxt.append(cid)
        if not nxt and k + 1 < len(counts):
            raise ValidationError(f"level {k + 1} would be empty")
        frontier = nxt
    return TruncatedTree(parent)


def random_tree(depth: int, max_branch: int, seed: int) -> TruncatedTree:
    """Seeded random tree; identical seeds give identical trees.

    Child counts are drawn uniformly from 0..max_branch, so the tree may die
    out before the requested depth; the result's depth is the last level
    actually reached.
    """
    if depth < 0:
        raise ValidationError(f"depth must be >= 0, got {depth}")
    if max_branch < 1:
        raise ValidationError(f"max_branch must be >= 1, got {max_branch}")
    rng = Random(seed)
    parent: dict[str, str | None] = {"0": None}
    frontier = ["0"]
    for _ in range(depth):
        nxt = []
        for pid in frontier:
            for i in range(rng.randint(0, max_branch)):
                cid = f"{pid}.{i}"
                parent[cid] = pid
                nxt.append(cid)
        if not nxt:
            break
        frontier = nxt
    return TruncatedTree(parent)


def generate(kind: str, params: Mapping) -> TruncatedTree:
    """Dispatch for the tree generators, used by the command line."""
    try:
        if kind == "complete":
            return complete_tree(int(params["arity"]), int(params["depth"]))
        if kind == "counts":
            return tree_from_child_counts(params["counts"])
        if kind == "random":
            return random_tree(
                int(params["depth"]), int(params["max_branch"]), int(params.get("seed", 0))
            )
    except KeyError as missing:
        raise ValidationError(f"generator {kind!r} requires parameter {missing}") from None
    raise ValidationError(f"unknown generator kind {kind!r}")


def to_dot(t: TruncatedTree) -> str:
    """DOT digraph, one edge per non-root node, nodes ranked by level."""
    lines = ["digraph tree {"]
    for lv in t.levels:
        members = " ".join(f'"{x}";' for x in lv)
        lines.append("  { rank=same; " + members + " }")
    for x in t.nodes:
        p = t.parent(x)
        if p is not None:
            lines.append(f'  "{p}" -> "{x}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
