"""Embeddings and bounded-round comparison games between truncated trees.

``local_embeddable`` decides whether the first n+1 levels of one tree embed
into the first n+1 levels of another as a subtree (root to root, parents to
parents), via recursive child matching.  ``ef_equivalent`` plays the
r-round back-and-forth game on the two trees seen as strict partial orders
(the ancestor relation, no level predicates): the second player wins when
the picked pairs always form a partial order-isomorphism.  Both searches
break ties by node id so outputs are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import BudgetError, ValidationError
from .trees import TruncatedTree, canonical_code, truncate

__all__ = [
    "Embedding",
    "GameResult",
    "local_embeddable",
    "locally_isomorphic",
    "ef_equivalent",
    "distinguishing_rank",
    "embedding_counts",
    "DEFAULT_RANK_BUDGET",
]

DEFAULT_RANK_BUDGET = 8


@dataclass(frozen=True)
class Embedding:
    """Injective level-preserving map, root to root and parent to parent."""

    mapping: tuple[tuple[str, str], ...]

    def as_dict(self) -> dict[str, str]:
        return dict(self.mapping)


def _check_depth(t1: TruncatedTree, t2: TruncatedTree, n: int) -> None:
    if not 0 <= n <= min(t1.depth, t2.depth):
        raise ValidationError(
            f"level {n} out of range 0..{min(t1.depth, t2.depth)} for this pair"
        )


def _matchable(sources, targets, ok) -> bool:
    """Can every source be assigned a distinct feasible target? (augmenting paths)"""
    match: dict = {}

    def augment(s, seen):
        for d in targets:
            if d in seen or not ok(s, d):
                continue
            seen.add(d)
            if d not in match or augment(match[d], seen):
                match[d] = s
                return True
        return False

    return all(augment(s, set()) for s in sources)


def local_embeddable(t1: TruncatedTree, t2: TruncatedTree, n: int) -> Embedding | None:
    """Embedding of the first n+1 levels of t1 into those of t2, if any.

    A node u may map to v iff the children of u admit an injective assignment
    to children of v with embeddable subtrees; the assignment question is a
    bipartite matching.  Among all embeddings the returned one is
    lexicographically least: walking the source tree depth-first with
    children in id order, each node receives the smallest feasible image.
    """
    _check_depth(t1, t2, n)
    a = truncate(t1, n)
    b = truncate(t2, n)
    feasible: dict[tuple[str, str], bool] = {}

    def ok(u: str, v: str) -> bool:
        key = (u, v)
        if key not in feasible:
            cu = a.children(u)
            cv = b.children(v)
            feasible[key] = len(cu) <= len(cv) and _matchable(cu, cv, ok)
        return feasible[key]

    if not ok(a.root, b.root):
        return None

    mapping = {a.root: b.root}

    def place(u: str, v: str) -> None:
        cu = a.children(u)
        cv = b.children(v)
        used: set[str] = set()
        for i, c in enumerate(cu):
            rest = cu[i + 1 :]
            for d in cv:
                if d in used or not ok(c, d):
                    continue
                remaining = [e for e in cv if e not in used and e != d]
                if _matchable(rest, remaining, ok):
                    used.add(d)
                    mapping[c] = d
                    break
            else:
                raise AssertionError("feasible parent without feasible child assignment")
        for c in cu:
            place(c, mapping[c])

    place(a.root, b.root)
    return Embedding(tuple(sorted(mapping.items())))


def locally_isomorphic(t1: TruncatedTree, t2: TruncatedTree, n: int) -> bool:
    """Equality of canonical codes of the two n-level truncations.

    For finite truncations, mutual embeddability of equal-sized structures
    coincides with isomorphism; tests cross-check that against
    ``local_embeddable`` in both directions.
    """
    _check_depth(t1, t2, n)
    return canonical_code(truncate(t1, n)) == canonical_code(truncate(t2, n))


@dataclass(frozen=True)
class GameResult:
    """Outcome of the rank-round comparison game.

    When inequivalent, ``witness`` is a first-player strategy trace of
    (side, pick, reply) triples with optimal replies recorded; replaying it
    produces a violated pair set exactly at its last move, and its length is
    the least number of rounds that forces the violation.
    """

    equivalent: bool
    rank: int
    witness: tuple[tuple[str, str, str], ...] | None = None


class _Game:
    def __init__(self, t1: TruncatedTree, t2: TruncatedTree):
        self.names = (t1.nodes, t2.nodes)
        self.anc = []
        self.order = []
        for t in (t1, t2):
            idx = {x: i for i, x in enumerate(t.nodes)}
            masks = []
            for x in t.nodes:
                m = 0
                for p in t.ancestors(x):
                    m |= 1 << idx[p]
                masks.append(m)
            self.anc.append(masks)
        # reply ordering heuristic: try structurally similar nodes first
        keys = []
        for t in (t1, t2):
            codes = {}
            for k in range(t.depth, -1, -1):
                for x in t.levels[k]:
                    codes[x] = "(" + "".join(sorted(codes[c] for c in t.children(x))) + ")"
            keys.append([(t.level(x), codes[x]) for x in t.nodes])
        self.replies = []
        for side in (0, 1):
            per_pick = []
            for pick in range(len(self.names[side])):
                want = keys[side][pick]
                other = keys[1 - side]
                per_pick.append(
                    sorted(
                        range(len(other)),
                        key=lambda r: (other[r][0] != want[0], other[r][1] != want[1], r),
                    )
                )
            self.replies.append(per_pick)
        self.memo: dict = {}

    def compatible(self, pairs, i: int, j: int) -> bool:
        anc1, anc2 = self.anc
        for p, q in pairs:
            if (p == i) != (q == j):
                return False
            if bool(anc1[i] >> p & 1) != bool(anc2[j] >> q & 1):
                return False
            if bool(anc1[p] >> i & 1) != bool(anc2[q] >> j & 1):
                return False
        return True

    def pair(self, side: int, pick: int, reply: int) -> tuple[int, int]:
        return (pick, reply) if side == 0 else (reply, pick)

    def spoiler_rounds(self, pairs: frozenset, cap: int) -> int | None:
        """Least number of rounds the first player needs from here, None if
        the second player survives ``cap`` more rounds."""
        if cap == 0:
            return None
        key = (pairs, cap)
        if key in self.memo:
            return self.memo[key]
        best: int | None = None
        for side in (0, 1):
            for pick in range(len(self.names[side])):
                survives = False
                worst = 0
                for reply in self.replies[side][pick]:
                    i, j = self.pair(side, pick, reply)
                    if not self.compatible(pairs, i, j):
                        val = 1
                    else:
                        sub = self.spoiler_rounds(pairs | {(i, j)}, cap - 1)
                        if sub is None:
                            survives = True
                            break
                        val = 1 + sub
                    if val > worst:
                        worst = val
                if not survives and (best is None or worst < best):
                    best = worst
                    if best == 1:
                        break
            if best == 1:
                break
        self.memo[key] = best
        return best

    def trace(self, rounds: int) -> tuple[tuple[str, str, str], ...]:
        pairs: frozenset = frozenset()
        needed = rounds
        out = []
        side_names = ("left", "right")
        while needed:
            move = None
            for side in (0, 1):
                for pick in range(len(self.names[side])):
                    survives = False
                    worst = 0
                    for reply in range(len(self.names[1 - side])):
                        i, j = self.pair(side, pick, reply)
                        if not self.compatible(pairs, i, j):
                            val = 1
                        else:
                            sub = self.spoiler_rounds(pairs | {(i, j)}, needed - 1)
                            if sub is None:
                                survives = True
                                break
                            val = 1 + sub
                        worst = max(worst, val)
                    if not survives and worst == needed:
                        move = (side, pick)
                        break
                if move:
                    break
            assert move is not None
            side, pick = move
            # optimal reply: survive as long as possible, smallest id on ties
            best_reply = None
            best_val = 0
            for reply in range(len(self.names[1 - side])):
                i, j = self.pair(side, pick, reply)
                if not self.compatible(pairs, i, j):
                    val = 1
                else:
                    sub = self.spoiler_rounds(pairs | {(i, j)}, needed - 1)
                    assert sub is not None
                    val = 1 + sub
                if val > best_val:
                    best_val = val
                    best_reply = (reply, i, j)
            assert best_reply is not None and best_val == needed
            reply, i, j = best_reply
            out.append(
                (side_names[side], self.names[side][pick], self.names[1 - side][reply])
            )
            if needed == 1:
                break
            pairs = pairs | {(i, j)}
            needed -= 1
        return tuple(out)


def ef_equivalent(
    t1: TruncatedTree,
    t2: TruncatedTree,
    rank: int,
    *,
    max_rank: int = DEFAULT_RANK_BUDGET,
) -> GameResult:
    """Decide the rank-round game on the two trees as strict orders.

    Exhaustive memoised search over positions (sets of picked pairs).  Picks
    may repeat; a position is losing for the second player iff the pairs fail
    to be a partial order-isomorphism, and such a failure can never be
    repaired by further picks.
    """
    if rank < 0:
        raise ValidationError(f"rank must be >= 0, got {rank}")
    if rank > max_rank:
        raise BudgetError(f"rank {rank} exceeds the configured game budget {max_rank}")
    game = _Game(t1, t2)
    needed = game.spoiler_rounds(frozenset(), rank)
    if needed is None:
        return GameResult(equivalent=True, rank=rank)
    return GameResult(equivalent=False, rank=rank, witness=game.trace(needed))


def distinguishing_rank(
    t1: TruncatedTree,
    t2: TruncatedTree,
    max_rank: int,
    *,
    budget: int = DEFAULT_RANK_BUDGET,
) -> int | None:
    """Least rank <= max_rank at which the trees can be told apart, if any."""
    if max_rank < 0:
        raise ValidationError(f"max rank must be >= 0, got {max_rank}")
    if max_rank > budget:
        raise BudgetError(f"max rank {max_rank} exceeds the configured game budget {budget}")
    return _Game(t1, t2).spoiler_rounds(frozenset(), max_rank)


def embedding_counts(t1: TruncatedTree, t2: TruncatedTree, n: int) -> tuple[int, ...]:
    """Number of level-prefix embeddings, per prefix length 0..n.

    Diagnostic view of the tree of partial embeddings ordered by extension:
    entry k counts the embeddings of the first k+1 levels of t1 into the
    first k+1 levels of t2.
    """
    _check_depth(t1, t2, n)
    out = []
    for k in range(n + 1):
        a = truncate(t1, k)
        b = truncate(t2, k)
        memo: dict[tuple[str, str], int] = {}

        def count(u: str, v: str) -> int:
            key = (u, v)
            if key in memo:
                return memo[key]
            cu = a.children(u)
            cv = b.children(v)

            def assign(i: int, used: frozenset) -> int:
                if i == len(cu):
                    return 1
                total = 0
                for d in cv:
                    if d in used:
                        continue
                    ways = count(cu[i], d)
                    if ways:
                        total += ways * assign(i + 1, used | {d})
                return total

            memo[key] = assign(0, frozenset())
            return memo[key]

        out.append(count(a.root, b.root))
    return tuple(out)
