"""Balanced subtrees and ordered-partition templates.

A finite-depth tree is *balanced* when all nodes on a level carry the same
number of children.  ``balance`` prunes any full-height tree down to a
balanced, leafless-before-the-boundary subtree.  ``extract_template``
quotients a tree by the coarsest ordered partitions of its levels that are
stable under child counting, recording a multiplicity label per block edge;
``decode_template`` rebuilds a canonical representative tree from such a
quotient.  Trees sharing a template agree level prefix by level prefix, which
is what the comparison games in :mod:`ramify.equivalence` detect.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass

from .errors import ValidationError
from .trees import TruncatedTree, induced_subtree

__all__ = [
    "TemplateBlock",
    "Template",
    "is_balanced",
    "balance",
    "extract_template",
    "decode_template",
    "eventually_singleton_branches",
    "branch_subtree",
    "template_to_json",
    "template_from_json",
    "block_id",
]


def is_balanced(t: TruncatedTree) -> bool:
    """True iff on every level below the boundary all child counts agree."""
    for k in range(t.depth):
        degrees = {len(t.children(x)) for x in t.levels[k]}
        if len(degrees) > 1:
            return False
    return True


def balance(t: TruncatedTree) -> TruncatedTree:
    """Balanced full-height subtree obtained by a fixed pruning schedule.

    Passes run over levels 0..depth-1 and repeat until a whole sweep changes
    nothing.  A pass at level k keeps only the nodes whose subtree still
    reaches the last level and, among those, only the ones of minimum child
    count; the other nodes on the level are removed together with everything
    above them.  Removals at a level can unbalance the level below, hence the
    outer repetition; each changing pass strictly shrinks the node set, so
    the sweep terminates.  The result is downward-closed, contains the root,
    reaches the last level, and has no childless node before it.
    """
    nodes = set(t.nodes)
    while True:
        changed = False
        for k in range(t.depth):
            # nodes whose subtree (within the current selection) reaches depth
            reach = set(x for x in t.levels[t.depth] if x in nodes)
            for back in range(t.depth - 1, k - 1, -1):
                reach.update(
                    x
                    for x in t.levels[back]
                    if x in nodes and any(c in reach for c in t.children(x))
                )
            level_nodes = [x for x in t.levels[k] if x in nodes]
            full = [x for x in level_nodes if x in reach]
            degree = {x: sum(c in nodes for c in t.children(x)) for x in full}
            least = min(degree[x] for x in full)
            keep = {x for x in full if degree[x] == least}
            drop = [x for x in level_nodes if x not in keep]
            if drop:
                changed = True
                stack = list(drop)
                while stack:
                    x = stack.pop()
                    if x in nodes:
                        nodes.remove(x)
                        stack.extend(c for c in t.children(x) if c in nodes)
        if not changed:
            break
    result = induced_subtree(t, nodes)
    assert is_balanced(result) and result.depth == t.depth
    return result


@dataclass(frozen=True)
class TemplateBlock:
    """One block of a level partition.

    ``size`` is the number of tree nodes the block stands for.  ``labels``
    pairs each successor block (by index on the next level, ascending) with
    the number of children every node of this block has inside it; zero
    labels are never stored.
    """

    size: int
    labels: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class Template:
    """Ordered level partitions with multiplicity labels.

    ``levels[k]`` lists the blocks of level k in their linear order.  When a
    template was extracted from a concrete tree, ``partitions`` carries the
    node sets behind the blocks (never serialised).  The last level is a
    single unsplit block: no level above it exists in the truncation to
    justify a finer split.
    """

    depth: int
    levels: tuple[tuple[TemplateBlock, ...], ...]
    partitions: tuple[tuple[frozenset[str], ...], ...] | None = None


def block_id(level: int, index: int) -> str:
    return f"{level}.{index}"


def _validate_template(tpl: Template) -> None:
    if tpl.depth != len(tpl.levels) - 1:
        raise ValidationError(
            f"template depth {tpl.depth} does not match {len(tpl.levels)} level lists"
        )
    if len(tpl.levels[0]) != 1 or tpl.levels[0][0].size != 1:
        raise ValidationError("level 0 must be a single block of size 1")
    for k, blocks in enumerate(tpl.levels):
        if not blocks:
            raise ValidationError(f"level {k} has no blocks")
        width_above = len(tpl.levels[k + 1]) if k < tpl.depth else 0
        for i, block in enumerate(blocks):
            if block.size < 1:
                raise ValidationError(f"block {block_id(k, i)} has size {block.size}")
            last_target = -1
            for target, count in block.labels:
                if k == tpl.depth:
                    raise ValidationError("blocks on the last level cannot carry labels")
                if count < 1:
                    raise ValidationError(
                        f"label {block_id(k, i)} -> {block_id(k + 1, target)} has count {count}"
                    )
                if not 0 <= target < width_above:
                    raise ValidationError(
                        f"label target {target} out of range on level {k + 1}"
                    )
                if target <= last_target:
                    raise ValidationError(
                        f"labels of block {block_id(k, i)} are not in ascending block order"
                    )
                last_target = target
    for k in range(tpl.depth):
        incoming = [0] * len(tpl.levels[k + 1])
        for block in tpl.levels[k]:
            for target, count in block.labels:
                incoming[target] += block.size * count
        for j, got in enumerate(incoming):
            want = tpl.levels[k + 1][j].size
            if got == 0:
                raise ValidationError(f"block {block_id(k + 1, j)} has no incoming edge")
            if got != want:
                raise ValidationError(
                    f"size recurrence fails at {block_id(k + 1, j)}: {got} != {want}"
                )


def extract_template(t: TruncatedTree) -> Template:
    """Stable ordered partitions of the levels, with multiplicity labels.

    Blocks group nodes with equal signature, the vector of child counts
    toward the ordered blocks one level up.  Refinement at a level depends
    only on the level above, so one sweep from the boundary down reaches the
    stable system; blocks within a level are ordered by ascending signature.
    """
    D = t.depth
    parts: list[list[tuple[str, ...]]] = [[] for _ in range(D + 1)]
    parts[D] = [t.levels[D]]
    for k in range(D - 1, -1, -1):
        above_index = {x: i for i, block in enumerate(parts[k + 1]) for x in block}
        width = len(parts[k + 1])
        by_signature: dict[tuple[int, ...], list[str]] = {}
        for x in t.levels[k]:
            vec = [0] * width
            for c in t.children(x):
                vec[above_index[c]] += 1
            by_signature.setdefault(tuple(vec), []).append(x)
        parts[k] = [tuple(by_signature[sig]) for sig in sorted(by_signature)]

    level_blocks: list[tuple[TemplateBlock, ...]] = []
    for k in range(D + 1):
        blocks = []
        for block_nodes in parts[k]:
            if k < D:
                above_index = {x: i for i, b in enumerate(parts[k + 1]) for x in b}
                vec = [0] * len(parts[k + 1])
                for c in t.children(block_nodes[0]):
                    vec[above_index[c]] += 1
                labels = tuple((j, vec[j]) for j in range(len(vec)) if vec[j])
            else:
                labels = ()
            blocks.append(TemplateBlock(size=len(block_nodes), labels=labels))
        level_blocks.append(tuple(blocks))

    tpl = Template(
        depth=D,
        levels=tuple(level_blocks),
        partitions=tuple(tuple(frozenset(b) for b in level) for level in parts),
    )
    _validate_template(tpl)
    return tpl


def decode_template(tpl: Template, depth: int | None = None) -> TruncatedTree:
    """Canonical tree realising the first ``depth+1`` levels of a template.

    Every node realised in a block gets, per label (Y, n), n fresh children
    assigned to Y; ids are path-based and children are ordered by successor
    block then copy index, so the output is reproducible byte for byte.
    """
    _validate_template(tpl)
    if depth is None:
        depth = tpl.depth
    if not 0 <= depth <= tpl.depth:
        raise ValidationError(f"decode depth {depth} out of range 0..{tpl.depth}")
    parent: dict[str, str | None] = {"0": None}
    current: list[tuple[str, int]] = [("0", 0)]
    for k in range(depth):
        nxt: list[tuple[str, int]] = []
        for nid, bi in current:
            counter = 0
            for target, count in tpl.levels[k][bi].labels:
                for _ in range(count):
                    cid = f"{nid}.{counter}"
                    counter += 1
                    parent[cid] = nid
                    nxt.append((cid, target))
        realised = [0] * len(tpl.levels[k + 1])
        for _, bi in nxt:
            realised[bi] += 1
        expected = [b.size for b in tpl.levels[k + 1]]
        if realised != expected:
            raise ValidationError(
                f"realised sizes {realised} on level {k + 1} differ from {expected}"
            )
        current = nxt
    return TruncatedTree(parent)


def eventually_singleton_branches(tpl: Template, tail_start: int) -> list[tuple[int, ...]]:
    """Full block branches whose labels are 1 from ``tail_start`` upward.

    A branch is a root-to-boundary chain of blocks linked by labelled edges;
    edges on levels below ``tail_start`` may carry any positive label, edges
    from ``tail_start`` on must carry exactly 1.  Branch entries are block
    indices per level, listed in lexicographic order.
    """
    _validate_template(tpl)
    if not 0 <= tail_start <= tpl.depth:
        raise ValidationError(f"tail start {tail_start} out of range 0..{tpl.depth}")
    found: list[tuple[int, ...]] = []

    def grow(level: int, path: list[int]) -> None:
        if level == tpl.depth:
            found.append(tuple(path))
            return
        for target, count in tpl.levels[level][path[-1]].labels:
            if level >= tail_start and count != 1:
                continue
            path.append(target)
            grow(level + 1, path)
            path.pop()

    grow(0, [0])
    return found


def branch_subtree(
    t: TruncatedTree, tpl: Template, branch: Sequence[int]
) -> TruncatedTree:
    """Balanced subtree of ``t`` tracked along a template branch.

    Starting from the root block, each level keeps the branch block's nodes
    whose parent was kept on the previous level.  (The plain union of the
    branch's blocks is not downward-closed whenever a block has several
    predecessor blocks, so membership is tracked through parents instead.)
    Each kept node then has exactly the edge label's number of kept children,
    which makes the result balanced and full-height by construction.
    """
    if tpl.partitions is None:
        raise ValidationError("template carries no node partition; extract it from a tree")
    branch = tuple(branch)
    if len(branch) != tpl.depth + 1 or branch[0] != 0:
        raise ValidationError("branch must name one block per level, starting at the root block")
    for k in range(tpl.depth):
        if not 0 <= branch[k] < len(tpl.levels[k]):
            raise ValidationError(f"branch block index {branch[k]} out of range on level {k}")
        targets = dict(tpl.levels[k][branch[k]].labels)
        if branch[k + 1] not in targets:
            raise ValidationError(
                f"branch is not a chain: no edge {block_id(k, branch[k])} -> "
                f"{block_id(k + 1, branch[k + 1])}"
            )
    kept: set[str] = set(tpl.partitions[0][0])
    selected = set(kept)
    for k in range(1, tpl.depth + 1):
        block_nodes = tpl.partitions[k][branch[k]]
        kept = {x for x in block_nodes if t.parent(x) in kept}
        selected |= kept
    result = induced_subtree(t, selected)
    assert is_balanced(result)
    return result


def template_to_json(tpl: Template) -> dict:
    return {
        "depth": tpl.depth,
        "levels": [
            [
                {
                    "block": block_id(k, i),
                    "size": b.size,
                    "labels": [[block_id(k + 1, j), c] for j, c in b.labels],
                }
                for i, b in enumerate(blocks)
            ]
            for k, blocks in enumerate(tpl.levels)
        ],
    }


def template_from_json(doc: Mapping) -> Template:
    if not isinstance(doc, Mapping) or "levels" not in doc:
        raise ValidationError("template document needs a 'levels' field")
    raw_levels = doc["levels"]
    if not isinstance(raw_levels, list) or not raw_levels:
        raise ValidationError("'levels' must be a non-empty list")
    levels = []
    for k, raw_blocks in enumerate(raw_levels):
        blocks = []
        for i, raw in enumerate(raw_blocks):
            labels = []
            for target, count in raw.get("labels", []):
                if isinstance(target, str):
                    lvl, idx = target.split(".")
                    if int(lvl) != k + 1:
                        raise ValidationError(
                            f"label target {target!r} of {block_id(k, i)} is not on level {k + 1}"
                        )
                    target = int(idx)
                labels.append((int(target), int(count)))
            blocks.append(TemplateBlock(size=int(raw["size"]), labels=tuple(labels)))
        levels.append(tuple(blocks))
    tpl = Template(depth=int(doc.get("depth", len(levels) - 1)), levels=tuple(levels))
    _validate_template(tpl)
    return tpl
