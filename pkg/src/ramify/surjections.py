"""Self-maps with explicit preimage oracles and the level trees they induce.

A non-injective self-map, restricted away from one point of a collision pair,
pulls back to a levelled tree: level 0 is the removed point's partner... more
precisely, level 0 is the chosen collision point x and level n+1 collects the
preimages (other than x) of level n.  ``surjection_to_tree`` materialises the
first ``depth+1`` levels of that tree; ``tree_to_surjection`` goes the other
way, sending every non-root node to its parent and fixing the root.

Preimages are never computed by inverting opaque code: built-in families ship
closed-form preimage oracles, and table maps must list their preimages
explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass
from collections.abc import Mapping, Sequence

from .errors import ValidationError
from .trees import TruncatedTree

__all__ = [
    "Endofunction",
    "WitnessPair",
    "surjection_to_tree",
    "tree_to_surjection",
    "is_finite_to_one_levels",
]

Point = "int | str"


@dataclass(frozen=True)
class Endofunction:
    """A self-map together with a preimage oracle.

    ``kind`` is "builtin" or "table".  Built-in families act on the natural
    numbers: "pred" maps n to max(n-1, 0) and "div" maps n to n // k for a
    parameter k >= 2.  Table maps are finite and carry explicit, validated
    preimage lists.
    """

    kind: str
    family: str | None = None
    k: int | None = None
    table: Mapping[str, str] | None = None
    preimage_table: Mapping[str, tuple[str, ...]] | None = None

    @classmethod
    def pred(cls) -> "Endofunction":
        return cls(kind="builtin", family="pred")

    @classmethod
    def div(cls, k: int) -> "Endofunction":
        if k < 2:
            raise ValidationError(f"div parameter must be >= 2, got {k}")
        return cls(kind="builtin", family="div", k=k)

    @classmethod
    def from_table(
        cls, mapping: Mapping[str, str], preimages: Mapping[str, Sequence[str]]
    ) -> "Endofunction":
        """Finite map with explicit preimages; both directions are checked."""
        table = dict(mapping)
        pre = {y: tuple(ps) for y, ps in preimages.items()}
        for x, y in table.items():
            if y not in table:
                raise ValidationError(f"value {y!r} of {x!r} is outside the domain")
            if x not in pre.get(y, ()):
                raise ValidationError(f"preimage list of {y!r} is missing {x!r}")
        for y, ps in pre.items():
            for p in ps:
                if table.get(p) != y:
                    raise ValidationError(
                        f"preimage list of {y!r} lists {p!r}, which maps to {table.get(p)!r}"
                    )
        return cls(kind="table", table=table, preimage_table=pre)

    @classmethod
    def from_json(cls, doc: Mapping) -> "Endofunction":
        if not isinstance(doc, Mapping) or "kind" not in doc:
            raise ValidationError("endofunction document needs a 'kind'")
        if doc["kind"] == "builtin":
            family = doc.get("family")
            if family == "pred":
                return cls.pred()
            if family == "div":
                return cls.div(int(doc.get("k", 0)))
            raise ValidationError(f"unknown builtin family {family!r}")
        if doc["kind"] == "table":
            return cls.from_table(doc.get("map", {}), doc.get("preimages", {}))
        raise ValidationError(f"unknown endofunction kind {doc['kind']!r}")

    def to_json(self) -> dict:
        if self.kind == "builtin":
            out: dict = {"kind": "builtin", "family": self.family}
            if self.k is not None:
                out["k"] = self.k
            return out
        return {
            "kind": "table",
            "map": dict(self.table or {}),
            "preimages": {y: list(ps) for y, ps in (self.preimage_table or {}).items()},
        }

    def apply(self, x):
        if self.kind == "builtin":
            if not isinstance(x, int) or x < 0:
                raise ValidationError(f"builtin families act on naturals, got {x!r}")
            if self.family == "pred":
                return max(x - 1, 0)
            return x // self.k
        if x not in self.table:
            raise ValidationError(f"point {x!r} is outside the table domain")
        return self.table[x]

    def preimages(self, y):
        """All x in the domain with f(x) = y."""
        if self.kind == "builtin":
            if not isinstance(y, int) or y < 0:
                raise ValidationError(f"builtin families act on naturals, got {y!r}")
            if self.family == "pred":
                return (0, 1) if y == 0 else (y + 1,)
            return tuple(range(self.k * y, self.k * y + self.k))
        if y not in self.table:
            raise ValidationError(f"point {y!r} is outside the table domain")
        return self.preimage_table.get(y, ())


@dataclass(frozen=True)
class WitnessPair:
    """A collision pair: two distinct points with the same image."""

    x: "int | str"
    y: "int | str"

    @classmethod
    def for_function(cls, fn: Endofunction, x, y) -> "WitnessPair":
        pair = cls(x, y)
        check_witness(fn, pair)
        return pair


def check_witness(fn: Endofunction, w: WitnessPair) -> None:
    if w.x == w.y:
        raise ValidationError(f"witness points must be distinct, got {w.x!r} twice")
    if fn.apply(w.x) != fn.apply(w.y):
        raise ValidationError(
            f"witness pair invalid: f({w.x!r}) = {fn.apply(w.x)!r} "
            f"but f({w.y!r}) = {fn.apply(w.y)!r}"
        )


def surjection_to_tree(fn: Endofunction, witness: WitnessPair, depth: int) -> TruncatedTree:
    """Level tree of the map restricted away from the witness point x.

    Level 0 is {x}; level n+1 holds the preimages of level n other than x,
    each attached below its image.  Levels are pairwise disjoint because x is
    outside the restricted domain.  If some level empties out before the
    requested depth the tree is returned with its actual height (the caller
    can compare ``result.depth`` with ``depth``); that is not an error, since
    a restriction of a non-surjective map may legitimately die out.
    """
    if depth < 0:
        raise ValidationError(f"depth must be >= 0, got {depth}")
    check_witness(fn, witness)
    x = witness.x
    parent: dict[str, str | None] = {str(x): None}
    seen = {x}
    current = [x]
    for _ in range(depth):
        gathered = set()
        for q in current:
            for p in fn.preimages(q):
                if p != x:
                    gathered.add(p)
        if not gathered:
            break
        for p in sorted(gathered):
            if p in seen:
                raise ValidationError(
                    f"preimage oracle is inconsistent: {p!r} appears on two levels"
                )
            seen.add(p)
            parent[str(p)] = str(fn.apply(p))
        current = sorted(gathered)
    return TruncatedTree(parent)


def tree_to_surjection(t: TruncatedTree) -> dict[str, str]:
    """Predecessor map on the node set: non-root to parent, root to itself.

    Surjective onto levels 0..depth-1 plus the root, and non-injective as
    soon as the tree has more than one node.  Defined on the tree's nodes
    only; points of any ambient set are not represented here.
    """
    return {x: (t.parent(x) if t.parent(x) is not None else x) for x in t.nodes}


def is_finite_to_one_levels(t: TruncatedTree) -> bool:
    """True when every level is a finite set.

    Truncated trees satisfy this by construction; the check is kept explicit
    so the distinction between arbitrary self-surjections and finite-to-one
    ones stays visible in the API.
    """
    return all(len(level) < float("inf") for level in t.levels)
