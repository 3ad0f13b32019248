"""Command line front end.

Exit codes: 0 when a solution is found (or a check passes), 1 when the search
or check completes negatively, 2 on usage or input errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from .exprs import Dataset, LossKind, ParseError, StructureError, render
from .expr_graph import GraphSpec, build, count_arborescences, to_dot, to_json_doc
from .solver import WeightedDigraph, decide_dcsap, solve_sr, tree_weight
from .reductions import (UndirectedGraph, dcstp_to_dcsap, read_instance,
                         write_instance)
from .verify import SUITES, run_suite, threshold_oracle
from .reductions import bisect_min_weight


def _load_spec(path) -> GraphSpec:
    try:
        return GraphSpec.from_file(path)
    except (json.JSONDecodeError, ValueError) as exc:
        raise StructureError(f"{path}: {exc}") from None


def cmd_build(args) -> int:
    graph = build(_load_spec(args.spec))
    doc = to_json_doc(graph)
    if args.dot:
        with open(args.dot, "w") as fh:
            fh.write(to_dot(graph))
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    if not args.dot and not args.json:
        json.dump(doc, sys.stdout, indent=2, sort_keys=True)
        print()
    else:
        print(f"built graph: {len(graph.vertices)} vertices, "
              f"{len(graph.arc_set)} arcs")
    return 0


def cmd_solve(args) -> int:
    graph = build(_load_spec(args.spec))
    data = Dataset.from_csv(args.data, target=args.target)
    if args.threads > 1:
        print(f"note: running single-threaded ({args.threads} requested)",
              file=sys.stderr)
    result = solve_sr(graph, data, loss_kind=LossKind(args.loss),
                      eps=args.eps, budget=args.budget,
                      symmetry_breaking=not args.no_symmetry_breaking)
    if args.report:
        with open(args.report, "w") as fh:
            json.dump(result.to_json_doc(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    if result.found:
        print(render(result.expression))
        print(f"loss {result.loss:.12g}  nodes {result.stats.nodes}")
        return 0
    tail = "" if result.complete else " (search budget exhausted)"
    if result.expression is not None:
        print(f"no expression within eps; best candidate "
              f"{render(result.expression)} at loss {result.loss:.12g}{tail}")
    else:
        print(f"no expression found{tail}")
    return 1


def _load_directed(path) -> WeightedDigraph:
    g = read_instance(path)
    if not isinstance(g, WeightedDigraph):
        raise StructureError(f"{path}: expected a directed instance")
    return g


def cmd_decide(args) -> int:
    g = _load_directed(args.instance)
    arb = decide_dcsap(g, args.eps, tol=args.tol, budget=args.budget)
    if arb is None:
        print("no")
        return 1
    print("yes")
    print("weight", f"{tree_weight(g, arb):.12g}")
    for u, v in arb.arcs:
        print(f"{u} {v}")
    return 0


def cmd_reduce(args) -> int:
    g = read_instance(args.instance)
    if not isinstance(g, UndirectedGraph):
        raise StructureError(f"{args.instance}: expected an undirected instance")
    directed = dcstp_to_dcsap(g, args.root)
    if args.out:
        write_instance(directed, args.out)
        print(f"wrote {args.out}: {directed.num_vertices} vertices, "
              f"{len(directed.arcs)} arcs")
    else:
        from .reductions import instance_to_text
        sys.stdout.write(instance_to_text(directed))
    return 0


def cmd_bisect(args) -> int:
    g = _load_directed(args.instance)
    if any(w != int(w) or w < 0 for _, _, w in g.arcs):
        raise StructureError("bisect requires nonnegative integer weights")
    lo = args.lo
    hi = args.hi if args.hi is not None else int(sum(w for _, _, w in g.arcs))
    oracle = threshold_oracle(g)
    calls = [0]

    def counted(eps: int) -> bool:
        calls[0] += 1
        return oracle(eps)

    answer = bisect_min_weight(counted, lo, hi)
    if answer is None:
        print(f"infeasible in [{lo}, {hi}]  oracle_calls {calls[0]}")
        return 1
    print(f"minimum {answer}  oracle_calls {calls[0]}")
    return 0


def cmd_count(args) -> int:
    spec = _load_spec(args.spec)
    print(count_arborescences(spec, modulo_copy_symmetry=args.modulo))
    return 0


def cmd_verify(args) -> int:
    report = run_suite(args.suite, args.seed)
    json.dump(report, sys.stdout, indent=2, sort_keys=True)
    print()
    return 0 if report["passed"] else 1


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="srsteiner",
        description="Exact symbolic regression via degree-constrained "
                    "Steiner arborescence search.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="materialize an expression graph")
    p.add_argument("spec", help="graph spec JSON file")
    p.add_argument("--dot", help="write Graphviz DOT here")
    p.add_argument("--json", help="write the graph JSON document here")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("solve", help="fit a dataset by exhaustive tree search")
    p.add_argument("spec", help="graph spec JSON file")
    p.add_argument("data", help="CSV with header; last column is the target")
    p.add_argument("--eps", type=float, default=1e-6,
                   help="loss threshold for declaring a fit (default 1e-6)")
    p.add_argument("--budget", type=int, default=None,
                   help="cap on search node expansions")
    p.add_argument("--target", default=None,
                   help="name of the target column (default: last column)")
    p.add_argument("--loss", choices=[k.value for k in LossKind],
                   default=LossKind.MAX_ABS.value)
    p.add_argument("--threads", type=int, default=1,
                   help="accepted for compatibility; search is single-threaded")
    p.add_argument("--report", help="write a JSON result document here")
    p.add_argument("--no-symmetry-breaking", action="store_true",
                   help="search duplicate copy choices too")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("decide", help="is there a tree of given total weight?")
    p.add_argument("instance", help="directed instance file")
    p.add_argument("--eps", type=float, required=True, help="target weight")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--budget", type=int, default=None)
    p.set_defaults(func=cmd_decide)

    p = sub.add_parser("reduce",
                       help="double arcs: undirected instance to directed")
    p.add_argument("instance", help="undirected instance file")
    p.add_argument("--root", type=int, required=True,
                   help="terminal to use as the arborescence root")
    p.add_argument("--out", help="output path (default: stdout)")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("bisect",
                       help="recover the optimum from the decision oracle")
    p.add_argument("instance", help="directed instance file, integer weights")
    p.add_argument("--lo", type=int, default=0)
    p.add_argument("--hi", type=int, default=None,
                   help="default: total arc weight")
    p.set_defaults(func=cmd_bisect)

    p = sub.add_parser("count", help="count arborescences of a spec's graph")
    p.add_argument("spec", help="graph spec JSON file")
    p.add_argument("--modulo", action="store_true",
                   help="count distinct expressions (collapse copy symmetry)")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("verify", help="run a seeded verification sweep")
    p.add_argument("suite", choices=list(SUITES))
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (StructureError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
