"""Meet-semilattice views of finite rooted trees.

A ``MeetTree`` is a rooted tree whose nodes are flagged as primary members
(``in_T``) or auxiliary points standing for meets of incomparable primary
nodes.  Any two nodes have a meet (the lowest common ancestor), branching
points split the order above them into cones, and per-node annotations may
declare that a cone "has a least element", namely the child heading it.
Dense chains cannot be represented at finite scale, so everything that would
follow from density is supplied through those annotations instead; whether a
given annotation set is realisable by an actual homogeneous dense tree is
deliberately not checked.

On top of the order operations the module computes two closures of a node
set: the plain meet closure, and the definable closure that additionally
absorbs the designated least cone points at exceptional branching points.
``relative_decomposition`` splits the whole tree relative to a closure into
upper sets over its maximal points, linear segments between consecutive
points, side pieces, and per-segment-point branch-off classes.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass

from .errors import ValidationError
from .trees import TruncatedTree, parse_tree

__all__ = [
    "MeetTree",
    "Code",
    "SegmentDecomposition",
    "RelativeDecomposition",
    "parse_meet_tree",
    "meet_tree_to_document",
    "meet",
    "semilattice_closure",
    "ramification_points",
    "cones_at",
    "ramification_order",
    "observed_code",
    "compare_codes",
    "exceptional_points",
    "definable_closure_semilattice",
    "relative_decomposition",
]


class MeetTree:
    """Finite rooted tree with primary/auxiliary flags and cone annotations."""

    __slots__ = ("tree", "_in_t", "_special", "_bears_primary")

    def __init__(
        self,
        tree: TruncatedTree,
        in_t: Mapping[str, bool] | None = None,
        special: Mapping[str, Iterable[str]] | None = None,
    ):
        self.tree = tree
        flags = {x: True for x in tree.nodes}
        for x, flag in (in_t or {}).items():
            tree._require(x)
            flags[x] = bool(flag)
        self._in_t = flags

        bears: dict[str, bool] = {}
        for k in range(tree.depth, -1, -1):
            for x in tree.levels[k]:
                bears[x] = flags[x] or any(bears[c] for c in tree.children(x))
        self._bears_primary = bears

        for x, flag in flags.items():
            if not flag:
                carriers = sum(bears[c] for c in tree.children(x))
                if carriers < 2:
                    raise ValidationError(
                        f"auxiliary node {x!r} is not the meet of two incomparable primary nodes"
                    )

        ram = self._ramification_points()
        cleaned: dict[str, tuple[str, ...]] = {}
        for x, heads in (special or {}).items():
            tree._require(x)
            if x not in ram:
                raise ValidationError(
                    f"special annotation on {x!r}, which is not a ramification point"
                )
            heads = tuple(sorted(set(heads)))
            for h in heads:
                if h not in tree.children(x):
                    raise ValidationError(
                        f"flagged cone head {h!r} is not a child of {x!r}"
                    )
            if heads:
                cleaned[x] = heads
        self._special = cleaned

    def in_t(self, x: str) -> bool:
        self.tree._require(x)
        return self._in_t[x]

    def special_cones(self, x: str) -> tuple[str, ...]:
        """Children heading the cones flagged as having a least element."""
        self.tree._require(x)
        return self._special.get(x, ())

    def _ramification_points(self) -> frozenset[str]:
        t = self.tree
        return frozenset(
            x
            for x in t.nodes
            if sum(self._bears_primary[c] for c in t.children(x)) >= 2
        )

    @property
    def nodes(self) -> tuple[str, ...]:
        return self.tree.nodes

    @property
    def root(self) -> str:
        return self.tree.root

    def __repr__(self) -> str:
        return f"MeetTree(nodes={len(self.tree)}, depth={self.tree.depth})"


def parse_meet_tree(document: Mapping) -> MeetTree:
    """Tree document extended with per-node "in_T" and a "special" list."""
    tree = parse_tree(document)
    in_t = {}
    for entry in document["nodes"]:
        if "in_T" in entry:
            if not isinstance(entry["in_T"], bool):
                raise ValidationError(f"'in_T' of {entry['id']!r} must be a boolean")
            in_t[entry["id"]] = entry["in_T"]
    special: dict[str, list[str]] = {}
    for item in document.get("special", []):
        if not isinstance(item, Mapping) or "node" not in item or "leastOfCone" not in item:
            raise ValidationError(f"special entry {item!r} needs 'node' and 'leastOfCone'")
        special.setdefault(item["node"], []).append(item["leastOfCone"])
    return MeetTree(tree, in_t, special)


def meet_tree_to_document(mt: MeetTree, name: str | None = None) -> dict:
    t = mt.tree
    return {
        "name": t.name if name is None else name,
        "depth": t.depth,
        "nodes": [
            {"id": x, "parent": t.parent(x), "in_T": mt.in_t(x)} for x in t.nodes
        ],
        "special": [
            {"node": x, "leastOfCone": h}
            for x in sorted(mt._special)
            for h in mt.special_cones(x)
        ],
    }


def meet(mt: MeetTree, a: str, b: str) -> str:
    """Greatest lower bound: the lowest common ancestor."""
    t = mt.tree
    da, db = t.level(a), t.level(b)
    while da > db:
        a = t.parent(a)
        da -= 1
    while db > da:
        b = t.parent(b)
        db -= 1
    while a != b:
        a = t.parent(a)
        b = t.parent(b)
    return a


def semilattice_closure(mt: MeetTree, points: Iterable[str]) -> frozenset[str]:
    """Least meet-closed superset; in a tree one round of pairwise meets suffices."""
    base = sorted(set(points))
    for x in base:
        mt.tree._require(x)
    closed = set(base)
    for i, a in enumerate(base):
        for b in base[i + 1 :]:
            closed.add(meet(mt, a, b))
    return frozenset(closed)


def ramification_points(mt: MeetTree) -> frozenset[str]:
    """Nodes that are meets of two incomparable primary nodes.

    Equivalently here: nodes with at least two children whose subtrees
    contain primary nodes.
    """
    return mt._ramification_points()


def cones_at(mt: MeetTree, x: str) -> dict[str, frozenset[str]]:
    """Partition of the strict up-set of x, one cone per child's subtree."""
    t = mt.tree
    return {c: t.descendants(c) for c in t.children(x)}


def ramification_order(mt: MeetTree, x: str) -> int:
    return len(mt.tree.children(x))


@dataclass(frozen=True)
class Code:
    """Observed branching data of a specimen.

    ``ramification_orders`` collects the cone counts at auxiliary
    ramification points, ``point_orders`` those at primary ramification
    points (the singleton {1} when no primary node ramifies).  Finite
    specimens only ever witness part of the structure they are cut from, so
    codes are marked observed: they are sound lower approximations.
    """

    ramification_orders: frozenset[int]
    point_orders: frozenset[int]
    observed: bool = True


def observed_code(mt: MeetTree) -> Code:
    ram = ramification_points(mt)
    aux_orders = frozenset(
        ramification_order(mt, x) for x in ram if not mt.in_t(x)
    )
    primary_orders = frozenset(
        ramification_order(mt, x) for x in ram if mt.in_t(x)
    )
    return Code(
        ramification_orders=aux_orders,
        point_orders=primary_orders or frozenset({1}),
    )


def compare_codes(c1: Code, c2: Code) -> str:
    """"consistent" when the observations agree, else "provably distinct".

    Only the distinctness direction carries weight: specimens observe their
    source faithfully, so disagreeing observations cannot come from the same
    fully homogeneous structure, while agreeing ones merely fail to separate.
    """
    same = (
        c1.ramification_orders == c2.ramification_orders
        and c1.point_orders == c2.point_orders
    )
    return "consistent" if same else "provably distinct"


def exceptional_points(mt: MeetTree) -> frozenset[str]:
    """Ramification points exactly one of whose cones is flagged least-bearing."""
    return frozenset(x for x in mt._special if len(mt._special[x]) == 1)


def definable_closure_semilattice(mt: MeetTree, points: Iterable[str]) -> frozenset[str]:
    """Meet closure plus least cone points at exceptional ramification points.

    Every exceptional point already in the closure contributes the designated
    least element of its flagged cone; contributions can cascade, so the rule
    is iterated to a fixpoint, re-closing under meets each round.
    """
    exceptional = exceptional_points(mt)
    closed = set(semilattice_closure(mt, points))
    while True:
        added = {
            mt.special_cones(x)[0]
            for x in closed & exceptional
            if mt.special_cones(x)[0] not in closed
        }
        if not added:
            return frozenset(closed)
        closed = set(semilattice_closure(mt, closed | added))


@dataclass(frozen=True)
class SegmentDecomposition:
    """Pieces between consecutive closure points ``lower < upper``.

    ``lower`` is None for the virtual point below the whole tree (used under
    the least closure point).  ``segment`` lists the nodes strictly between,
    bottom to top.  ``side`` is everything above ``lower`` that is not above
    or equal to ``upper``.  ``cones[x]`` collects the nodes whose meet with
    ``upper`` is the segment point x: the classes branching off at x.
    """

    lower: str | None
    upper: str
    segment: tuple[str, ...]
    side: frozenset[str]
    cones: Mapping[str, frozenset[str]]


@dataclass(frozen=True)
class RelativeDecomposition:
    """Split of the tree relative to the meet closure of a node set.

    ``placement`` assigns every node exactly one home: ("down",) below the
    closure, ("upper", a) above the maximal closure point a, or
    ("side", lower, upper) inside one side piece.  The literal upper and side
    sets may overlap across keys; the placement resolves each node to the
    piece it branches into, determined by its deepest meet with the closure.
    """

    closure: tuple[str, ...]
    down: frozenset[str]
    upper: Mapping[str | None, frozenset[str]]
    segments: tuple[SegmentDecomposition, ...]
    placement: Mapping[str, tuple]


def relative_decomposition(mt: MeetTree, points: Iterable[str]) -> RelativeDecomposition:
    t = mt.tree
    base = sorted(set(points))
    for x in base:
        t._require(x)
    all_nodes = frozenset(t.nodes)

    if not base:
        # single upper set over the virtual point below the tree
        return RelativeDecomposition(
            closure=(),
            down=frozenset(),
            upper={None: all_nodes},
            segments=(),
            placement={x: ("upper", None) for x in t.nodes},
        )

    closure = semilattice_closure(mt, base)
    closure_sorted = tuple(sorted(closure, key=lambda x: (t.level(x), x)))

    down = set()
    for c in closure:
        down.add(c)
        down.update(t.ancestors(c))

    anc_sets = {c: set(t.ancestors(c)) for c in closure}
    maximal = sorted(
        c for c in closure if not any(c in anc_sets[d] for d in closure if d != c)
    )
    upper: dict[str | None, frozenset[str]] = {
        a: frozenset(t.descendants(a) - {a}) for a in maximal
    }

    def nearest_closure_ancestor(x: str) -> str | None:
        for p in t.ancestors(x):
            if p in closure:
                return p
        return None

    segments = []
    segment_home: dict[str, tuple[str | None, str]] = {}
    children_in_closure: dict[str | None, list[str]] = {}
    for b in closure_sorted:
        a = nearest_closure_ancestor(b)
        children_in_closure.setdefault(a, []).append(b)
        between = []
        for p in t.ancestors(b):
            if p == a:
                break
            between.append(p)
        segment = tuple(reversed(between))
        above_lower = t.descendants(a) - {a} if a is not None else all_nodes
        side = frozenset(above_lower - t.descendants(b))
        cones: dict[str, frozenset[str]] = {}
        for x in segment:
            cones[x] = frozenset(y for y in side if meet(mt, b, y) == x)
            segment_home[x] = (a, b)
        segments.append(
            SegmentDecomposition(lower=a, upper=b, segment=segment, side=side, cones=cones)
        )

    placement: dict[str, tuple] = {}
    for x in t.nodes:
        if x in down:
            placement[x] = ("down",)
            continue
        meets = {meet(mt, x, c) for c in closure}
        deepest = max(meets, key=lambda m: t.level(m))
        if deepest in closure:
            succs = children_in_closure.get(deepest)
            if not succs:
                placement[x] = ("upper", deepest)
            else:
                placement[x] = ("side", deepest, min(succs))
        else:
            a, b = segment_home[deepest]
            placement[x] = ("side", a, b)

    return RelativeDecomposition(
        closure=closure_sorted,
        down=frozenset(down),
        upper=upper,
        segments=tuple(segments),
        placement=placement,
    )
