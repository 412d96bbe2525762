"""Command-line interface.

One subcommand per library operation, JSON in and JSON out (DOT for tree
drawings).  Exit codes: 0 success or positive decision, 1 negative decision,
2 usage or malformed input, 3 resource budget exceeded.  All randomness
flows through an explicit --seed flag, and identical invocations produce
byte-identical stdout.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import equivalence, groups, meets, surjections, templates, trees
from .errors import BudgetError, ValidationError

__all__ = ["main", "run"]


def _emit(out, payload) -> None:
    out.write(json.dumps(payload, sort_keys=True, indent=2))
    out.write("\n")


def _load(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _load_tree(path: str) -> trees.TruncatedTree:
    return trees.parse_tree(_load(path))


def _split_ids(raw: str) -> list[str]:
    return [part for part in raw.split(",") if part != ""]


def _tree_payload(t: trees.TruncatedTree, dot: bool, out) -> None:
    if dot:
        out.write(trees.to_dot(t))
    else:
        _emit(out, trees.tree_to_document(t))


def _parse_endofunction(raw: str) -> surjections.Endofunction:
    if raw.startswith("@"):
        return surjections.Endofunction.from_json(_load(raw[1:]))
    if raw == "pred":
        return surjections.Endofunction.pred()
    if raw.startswith("div:"):
        return surjections.Endofunction.div(int(raw.split(":", 1)[1]))
    raise ValidationError(
        f"unknown function spec {raw!r}; use pred, div:K, or @file.json"
    )


def _witness_points(fn: surjections.Endofunction, raw: str):
    parts = raw.split(",")
    if len(parts) != 2:
        raise ValidationError(f"witness must be two comma-separated points, got {raw!r}")
    if fn.kind == "builtin":
        return int(parts[0]), int(parts[1])
    return parts[0], parts[1]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ramify",
        description="Level trees: balance, templates, comparison games, definable closure.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate trees and actions")
    gen_sub = gen.add_subparsers(dest="kind", required=True)
    g = gen_sub.add_parser("complete", help="complete k-ary tree")
    g.add_argument("--arity", type=int, required=True)
    g.add_argument("--depth", type=int, required=True)
    g.add_argument("--dot", action="store_true")
    g = gen_sub.add_parser("random", help="seeded random tree")
    g.add_argument("--depth", type=int, required=True)
    g.add_argument("--max-branch", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--dot", action="store_true")
    g = gen_sub.add_parser("counts", help="explicit per-node child counts")
    g.add_argument("--counts", required=True, help="JSON list of per-level count lists")
    g.add_argument("--dot", action="store_true")
    g = gen_sub.add_parser("wreath", help="level-uniform tree plus its automorphism action")
    g.add_argument("--sizes", required=True, help="comma-separated level sizes")
    g.add_argument("--groups", default="", help="comma-separated: sym or cyclic per level")
    g.add_argument("--budget", type=int, default=5000)
    g.add_argument("--dot", action="store_true")

    v = sub.add_parser("validate", help="validate a document")
    v.add_argument("file")
    v.add_argument("--kind", choices=["tree", "meets", "action", "template"], default="tree")

    d = sub.add_parser("dot", help="DOT drawing of a tree")
    d.add_argument("file")

    b = sub.add_parser("balance", help="balanced full-height subtree")
    b.add_argument("file")
    b.add_argument("--dot", action="store_true")

    tp = sub.add_parser("template", help="ordered-partition templates")
    tp_sub = tp.add_subparsers(dest="action", required=True)
    tx = tp_sub.add_parser("extract")
    tx.add_argument("file")
    tx = tp_sub.add_parser("decode")
    tx.add_argument("file")
    tx.add_argument("--depth", type=int, default=None)
    tx.add_argument("--dot", action="store_true")
    tx = tp_sub.add_parser("singleton-branches")
    tx.add_argument("file")
    tx.add_argument("--from", dest="tail_start", type=int, required=True)
    tx = tp_sub.add_parser("branch-subtree")
    tx.add_argument("file")
    tx.add_argument("--branch", required=True, help="comma-separated block ids, e.g. 0.0,1.1,2.0")
    tx.add_argument("--dot", action="store_true")

    e = sub.add_parser("embed", help="embed the first n+1 levels of one tree into another")
    e.add_argument("t1")
    e.add_argument("t2")
    e.add_argument("--depth", type=int, required=True)

    i = sub.add_parser("iso", help="isomorphism of level prefixes")
    i.add_argument("t1")
    i.add_argument("t2")
    i.add_argument("--depth", type=int, required=True)

    f = sub.add_parser("ef", help="bounded-round comparison game")
    f.add_argument("t1")
    f.add_argument("t2")
    f.add_argument("--rank", type=int, required=True)
    f.add_argument("--budget", type=int, default=equivalence.DEFAULT_RANK_BUDGET)

    r = sub.add_parser("rank", help="least distinguishing game rank")
    r.add_argument("t1")
    r.add_argument("t2")
    r.add_argument("--max-rank", type=int, required=True)
    r.add_argument("--budget", type=int, default=equivalence.DEFAULT_RANK_BUDGET)

    s = sub.add_parser("surj", help="self-maps and their level trees")
    s_sub = s.add_subparsers(dest="action", required=True)
    st = s_sub.add_parser("tree")
    st.add_argument("--fn", required=True, help="pred, div:K, or @file.json")
    st.add_argument("--witness", required=True, help="two comma-separated points")
    st.add_argument("--depth", type=int, required=True)
    st.add_argument("--dot", action="store_true")
    st = s_sub.add_parser("from-tree")
    st.add_argument("file")

    m = sub.add_parser("meets", help="meet of a pair, or the cones at a node")
    m.add_argument("file")
    m.add_argument("--pair", help="two comma-separated node ids")
    m.add_argument("--cones", help="node id")

    dc = sub.add_parser("dclsemi", help="meet closure and definable closure of a node set")
    dc.add_argument("file")
    dc.add_argument("--set", dest="points", required=True)

    c = sub.add_parser("code", help="observed branching code")
    c.add_argument("file")

    de = sub.add_parser("decompose", help="decomposition relative to a node set")
    de.add_argument("file")
    de.add_argument("--set", dest="points", required=True)

    gr = sub.add_parser("group", help="permutation action services")
    gr_sub = gr.add_subparsers(dest="action", required=True)
    go = gr_sub.add_parser("orbits")
    go.add_argument("file")
    go = gr_sub.add_parser("dcl")
    go.add_argument("file")
    go.add_argument("--set", dest="points", default="")
    go.add_argument("--budget", type=int, default=groups.DEFAULT_WORK_BUDGET)
    go = gr_sub.add_parser("probe")
    go.add_argument("file")
    go.add_argument("--maxA", dest="max_set_size", type=int, required=True)
    go.add_argument("--threshold", type=int, default=0)
    go.add_argument("--max-subsets", type=int, default=5000)
    go.add_argument("--seed", type=int, default=0)
    go.add_argument("--budget", type=int, default=groups.DEFAULT_WORK_BUDGET)

    return parser


def _dispatch(args, out, err) -> int:
    cmd = args.command

    if cmd == "gen":
        if args.kind == "wreath":
            sizes = [int(s) for s in args.sizes.split(",") if s]
            names = [g for g in args.groups.split(",") if g] or ["sym"] * len(sizes)
            if len(names) != len(sizes):
                raise ValidationError("--groups must name one group per level")
            spec = groups.WreathSpec(
                levels=tuple(
                    groups.WreathLevel(size=s, group=g) for s, g in zip(sizes, names)
                )
            )
            tree, action = groups.wreath_tree(spec, budget=args.budget)
            if args.dot:
                out.write(trees.to_dot(tree))
            else:
                _emit(out, {"tree": trees.tree_to_document(tree), "action": action.to_json()})
            return 0
        if args.kind == "complete":
            t = trees.complete_tree(args.arity, args.depth)
        elif args.kind == "random":
            t = trees.random_tree(args.depth, args.max_branch, args.seed)
        else:
            t = trees.tree_from_child_counts(json.loads(args.counts))
        _tree_payload(t, args.dot, out)
        return 0

    if cmd == "validate":
        doc = _load(args.file)
        if args.kind == "tree":
            t = trees.parse_tree(doc)
            _emit(out, {"valid": True, "kind": "tree", "nodes": len(t), "depth": t.depth})
        elif args.kind == "meets":
            mt = meets.parse_meet_tree(doc)
            _emit(out, {"valid": True, "kind": "meets", "nodes": len(mt.nodes)})
        elif args.kind == "action":
            a = groups.PermAction.from_json(doc)
            _emit(
                out,
                {
                    "valid": True,
                    "kind": "action",
                    "points": len(a.points),
                    "generators": len(a.generators),
                },
            )
        else:
            tpl = templates.template_from_json(doc)
            _emit(out, {"valid": True, "kind": "template", "depth": tpl.depth})
        return 0

    if cmd == "dot":
        out.write(trees.to_dot(_load_tree(args.file)))
        return 0

    if cmd == "balance":
        _tree_payload(templates.balance(_load_tree(args.file)), args.dot, out)
        return 0

    if cmd == "template":
        if args.action == "extract":
            tpl = templates.extract_template(_load_tree(args.file))
            _emit(out, templates.template_to_json(tpl))
            return 0
        if args.action == "decode":
            tpl = templates.template_from_json(_load(args.file))
            _tree_payload(templates.decode_template(tpl, args.depth), args.dot, out)
            return 0
        if args.action == "singleton-branches":
            tpl = templates.extract_template(_load_tree(args.file))
            branches = templates.eventually_singleton_branches(tpl, args.tail_start)
            _emit(
                out,
                {
                    "tailStart": args.tail_start,
                    "branches": [
                        [templates.block_id(k, b) for k, b in enumerate(branch)]
                        for branch in branches
                    ],
                },
            )
            return 0
        t = _load_tree(args.file)
        tpl = templates.extract_template(t)
        branch = []
        for part in _split_ids(args.branch):
            level, index = part.split(".")
            if int(level) != len(branch):
                raise ValidationError(f"branch ids out of level order at {part!r}")
            branch.append(int(index))
        _tree_payload(templates.branch_subtree(t, tpl, branch), args.dot, out)
        return 0

    if cmd == "embed":
        emb = equivalence.local_embeddable(
            _load_tree(args.t1), _load_tree(args.t2), args.depth
        )
        _emit(
            out,
            {"depth": args.depth, "embedding": None if emb is None else emb.as_dict()},
        )
        return 0 if emb is not None else 1

    if cmd == "iso":
        same = equivalence.locally_isomorphic(
            _load_tree(args.t1), _load_tree(args.t2), args.depth
        )
        _emit(out, {"depth": args.depth, "isomorphic": same})
        return 0 if same else 1

    if cmd == "ef":
        result = equivalence.ef_equivalent(
            _load_tree(args.t1), _load_tree(args.t2), args.rank, max_rank=args.budget
        )
        _emit(
            out,
            {
                "equivalent": result.equivalent,
                "rank": result.rank,
                "witness": None
                if result.witness is None
                else [list(move) for move in result.witness],
            },
        )
        return 0 if result.equivalent else 1

    if cmd == "rank":
        least = equivalence.distinguishing_rank(
            _load_tree(args.t1), _load_tree(args.t2), args.max_rank, budget=args.budget
        )
        _emit(out, {"maxRank": args.max_rank, "rank": least})
        return 0

    if cmd == "surj":
        if args.action == "tree":
            fn = _parse_endofunction(args.fn)
            x, y = _witness_points(fn, args.witness)
            witness = surjections.WitnessPair.for_function(fn, x, y)
            t = surjections.surjection_to_tree(fn, witness, args.depth)
            if t.depth < args.depth:
                err.write(
                    f"warning: levels die out at depth {t.depth} (requested {args.depth})\n"
                )
            _tree_payload(t, args.dot, out)
            return 0
        t = _load_tree(args.file)
        _emit(out, {"map": surjections.tree_to_surjection(t)})
        return 0

    if cmd == "meets":
        mt = meets.parse_meet_tree(_load(args.file))
        if (args.pair is None) == (args.cones is None):
            raise ValidationError("give exactly one of --pair or --cones")
        if args.pair is not None:
            ids = _split_ids(args.pair)
            if len(ids) != 2:
                raise ValidationError("--pair needs two comma-separated node ids")
            _emit(out, {"pair": ids, "meet": meets.meet(mt, ids[0], ids[1])})
        else:
            cones = meets.cones_at(mt, args.cones)
            _emit(
                out,
                {
                    "node": args.cones,
                    "ramificationOrder": meets.ramification_order(mt, args.cones),
                    "cones": {head: sorted(members) for head, members in cones.items()},
                },
            )
        return 0

    if cmd == "dclsemi":
        mt = meets.parse_meet_tree(_load(args.file))
        ids = _split_ids(args.points)
        _emit(
            out,
            {
                "set": ids,
                "closure": sorted(meets.semilattice_closure(mt, ids)),
                "definableClosure": sorted(meets.definable_closure_semilattice(mt, ids)),
            },
        )
        return 0

    if cmd == "code":
        mt = meets.parse_meet_tree(_load(args.file))
        code = meets.observed_code(mt)
        ram = meets.ramification_points(mt)
        _emit(
            out,
            {
                "ramificationOrders": sorted(code.ramification_orders),
                "pointOrders": sorted(code.point_orders),
                "observed": code.observed,
                "ramificationPoints": {
                    x: meets.ramification_order(mt, x) for x in sorted(ram)
                },
            },
        )
        return 0

    if cmd == "decompose":
        mt = meets.parse_meet_tree(_load(args.file))
        ids = _split_ids(args.points)
        dec = meets.relative_decomposition(mt, ids)
        _emit(
            out,
            {
                "set": ids,
                "closure": list(dec.closure),
                "down": sorted(dec.down),
                "upper": [
                    {"at": a, "nodes": sorted(nodes)}
                    for a, nodes in sorted(
                        dec.upper.items(), key=lambda kv: (kv[0] is not None, kv[0] or "")
                    )
                ],
                "segments": [
                    {
                        "lower": seg.lower,
                        "upper": seg.upper,
                        "segment": list(seg.segment),
                        "side": sorted(seg.side),
                        "cones": {x: sorted(ys) for x, ys in seg.cones.items()},
                    }
                    for seg in dec.segments
                ],
                "placement": {x: list(home) for x, home in sorted(dec.placement.items())},
            },
        )
        return 0

    if cmd == "group":
        action = groups.PermAction.from_json(_load(args.file))
        if args.action == "orbits":
            _emit(out, {"orbits": [list(o) for o in groups.orbits(action)]})
            return 0
        if args.action == "dcl":
            ids = _split_ids(args.points)
            closure = groups.pointwise_stabilizer_fixed_points(
                action, ids, budget=args.budget
            )
            _emit(out, {"set": ids, "dcl": sorted(closure)})
            return 0
        report = groups.dcl_is_locally_finite_probe(
            action,
            args.max_set_size,
            args.threshold,
            max_subsets=args.max_subsets,
            seed=args.seed,
            budget=args.budget,
        )
        _emit(out, report.to_json())
        return 0

    raise ValidationError(f"unknown command {cmd!r}")


def run(argv, out=None, err=None) -> int:
    """Parse and execute one command; returns the exit code."""
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as stop:
        return int(stop.code or 0)
    try:
        return _dispatch(args, out, err)
    except BudgetError as exc:
        err.write(f"resource error: {exc}\n")
        return 3
    except ValidationError as exc:
        err.write(f"error: {exc}\n")
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        err.write(f"error: {exc}\n")
        return 2


def main() -> None:
    raise SystemExit(run(sys.argv[1:]))
