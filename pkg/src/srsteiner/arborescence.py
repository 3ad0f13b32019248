"""Arborescences in an expression graph: validation, the tree <-> expression
bijection, telescoping edge weights, and canonical enumeration."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

from .exprs import (Apply, BudgetExhausted, Const, Expression, StructureError,
                    TopSum, Var, depth, render)
from .expr_graph import (ROOT_ID, ConstVertex, ExprGraph, OpVertex, RootVertex,
                         VarVertex, to_dot)

# Vertices that every valid solution must contain.
TerminalSet = frozenset


@dataclass(frozen=True)
class Arborescence:
    """A directed tree selected inside a host digraph.

    `arcs` is an ordered tuple of (from, to) pairs; the order is meaningful:
    it fixes operator argument order and the summation order of weights.
    """

    root: int
    arcs: tuple

    def __post_init__(self):
        object.__setattr__(self, "arcs", tuple((int(u), int(v)) for u, v in self.arcs))

    @property
    def vertices(self) -> frozenset:
        out = {self.root}
        for u, v in self.arcs:
            out.add(u)
            out.add(v)
        return frozenset(out)

    def children(self) -> dict:
        """Per-vertex ordered child lists, in stored arc order."""
        out = {}
        for u, v in self.arcs:
            out.setdefault(u, []).append(v)
        return out


# ---------------------------------------------------------------------------
# validation

def validate(graph: ExprGraph, arb: Arborescence, terminals: TerminalSet = frozenset()) -> list:
    """Return a list of violation messages; empty means the tree is valid."""
    arc_set = graph.arc_set
    for u, v in arb.arcs:
        if (u, v) not in arc_set:
            raise StructureError(f"arc ({u}, {v}) does not exist in the graph")
    if arb.root != ROOT_ID:
        raise StructureError(f"root must be vertex {ROOT_ID}, got {arb.root}")

    violations = []
    if len(set(arb.arcs)) != len(arb.arcs):
        violations.append("duplicate arcs")

    indeg = {}
    for _, v in arb.arcs:
        indeg[v] = indeg.get(v, 0) + 1
    for v, d in sorted(indeg.items()):
        if v == arb.root:
            violations.append(f"root vertex {v} has incoming arcs")
        elif d > 1:
            violations.append(f"vertex {v} has in-degree {d}")

    children = arb.children()
    reached = {arb.root}
    stack = [arb.root]
    while stack:
        u = stack.pop()
        for v in children.get(u, ()):
            if v not in reached:
                reached.add(v)
                stack.append(v)
    for v in sorted(arb.vertices - reached):
        violations.append(f"vertex {v} is not reachable from the root")

    for v in sorted(arb.vertices):
        out = len(children.get(v, ()))
        kind = graph.vertices[v]
        if isinstance(kind, RootVertex):
            if out > graph.degree_bound[v]:
                violations.append(
                    f"root out-degree {out} exceeds bound {graph.degree_bound[v]}")
        elif isinstance(kind, OpVertex):
            arity = graph.operator_of(v).arity
            if out != arity:
                violations.append(
                    f"operator vertex {v} ({kind.op}) has out-degree {out}, arity is {arity}")
        else:
            if out != 0:
                violations.append(f"leaf vertex {v} has outgoing arcs")

    for t in sorted(terminals):
        if t not in arb.vertices:
            violations.append(f"terminal {t} missing from the tree")
    return violations


def require_valid(graph: ExprGraph, arb: Arborescence,
                  terminals: TerminalSet = frozenset()) -> None:
    violations = validate(graph, arb, terminals)
    if violations:
        raise StructureError("invalid arborescence: " + "; ".join(violations))


# ---------------------------------------------------------------------------
# tree -> expression

def to_expression(graph: ExprGraph, arb: Arborescence) -> TopSum:
    """Decode a valid tree; inverse of `embed` on canonical embeddings."""
    require_valid(graph, arb)
    children = arb.children()

    def decode(vid: int) -> Expression:
        kind = graph.vertices[vid]
        if isinstance(kind, VarVertex):
            return Var(kind.var)
        if isinstance(kind, ConstVertex):
            return Const(kind.value)
        if isinstance(kind, OpVertex):
            return Apply(graph.operator_of(vid),
                         tuple(decode(c) for c in children[vid]))
        raise StructureError("root may not appear below the top")

    units = children.get(ROOT_ID, [])
    if not units:
        raise StructureError("tree has no arcs out of the root")
    return TopSum(tuple(decode(v) for v in units))


# ---------------------------------------------------------------------------
# expression -> tree (canonical embedding)

def embed_with_reason(graph: ExprGraph, expr: Expression):
    """Canonically embed: each node claims the lowest-index unused copy.

    Returns (Arborescence, None) on success or (None, reason) with reason in
    {'depth', 'copies', 'constant'}.  Operators absent from the spec raise.
    """
    if not isinstance(expr, TopSum):
        expr = TopSum((expr,))
    spec = graph.spec
    if depth(expr) > spec.levels:
        return None, "depth"
    op_names = {op.name for op in spec.operators}
    used = set()
    arcs = []

    def assign(node: Expression, level: int) -> Optional[str]:
        if isinstance(node, Var):
            if node.index >= spec.num_variables:
                raise StructureError(f"variable x{node.index + 1} not in the graph spec")
            for copy in range(spec.variable_copies):
                vid = graph.var_id(node.index, copy)
                if vid not in used:
                    used.add(vid)
                    arcs.append(vid)
                    return None
            return "copies"
        if isinstance(node, Const):
            vid = graph.const_id(node.value)
            if vid is None:
                return "constant"
            if vid in used:
                return "copies"
            used.add(vid)
            arcs.append(vid)
            return None
        if isinstance(node, Apply):
            if node.op.name not in op_names:
                raise StructureError(f"operator {node.op.name!r} not in the graph spec")
            chosen = None
            for copy in range(spec.copies_per_operator):
                vid = graph.op_id(level, node.op.name, copy)
                if vid not in used:
                    chosen = vid
                    break
            if chosen is None:
                return "copies"
            used.add(chosen)
            arcs.append(chosen)
            for child in node.args:
                fail = assign(child, level + 1)
                if fail:
                    return fail
            return None
        raise StructureError(f"cannot embed node {node!r}")

    # arcs are recorded as a pre-order vertex trail; rebuild (u, v) pairs by
    # replaying the same traversal.
    pairs = []

    def walk(node: Expression, parent: int, level: int, cursor: list) -> None:
        vid = arcs[cursor[0]]
        cursor[0] += 1
        pairs.append((parent, vid))
        if isinstance(node, Apply):
            for child in node.args:
                walk(child, vid, level + 1, cursor)

    for term in expr.terms:
        fail = assign(term, 1)
        if fail:
            return None, fail
    cursor = [0]
    for term in expr.terms:
        walk(term, ROOT_ID, 1, cursor)
    return Arborescence(ROOT_ID, tuple(pairs)), None


def embed(graph: ExprGraph, expr: Expression) -> Optional[Arborescence]:
    arb, _ = embed_with_reason(graph, expr)
    return arb


# ---------------------------------------------------------------------------
# telescoping edge weights

@dataclass(frozen=True)
class EdgeWeightReport:
    """Per-arc weights for one data row.

    A leaf arc carries the leaf value; the arc entering an operator vertex
    carries the operator's output minus the sum of its children's subtree
    values, so the weights telescope and `total` equals the decoded
    expression's output.  `defined` is False when a domain guard fired.
    """

    arcs: tuple                      # canonical arc order
    weights: dict                    # arc -> float; empty when undefined
    total: Optional[float]
    defined: bool

    def to_json_doc(self) -> dict:
        return {
            "schema_version": 1,
            "defined": self.defined,
            "total": self.total,
            "weights": [{"from": u, "to": v, "weight": self.weights[(u, v)]}
                        for u, v in self.arcs] if self.defined else [],
        }


def edge_weights(graph: ExprGraph, arb: Arborescence, row: Sequence[float]) -> EdgeWeightReport:
    require_valid(graph, arb)
    children = arb.children()
    values = {}

    def value(vid: int) -> Optional[float]:
        if vid in values:
            return values[vid]
        kind = graph.vertices[vid]
        if isinstance(kind, VarVertex):
            if kind.var >= len(row):
                raise StructureError(
                    f"variable x{kind.var + 1} out of range for a {len(row)}-column row")
            out = float(row[kind.var])
            out = out if math.isfinite(out) else None
        elif isinstance(kind, ConstVertex):
            out = kind.value
        else:
            args = [value(c) for c in children[vid]]
            out = None if any(a is None for a in args) else graph.operator_of(vid).apply(*args)
        values[vid] = out
        return out

    weights = {}
    for u, v in arb.arcs:
        val = value(v)
        if val is None:
            return EdgeWeightReport(arcs=arb.arcs, weights={}, total=None, defined=False)
        if graph.is_leaf(v):
            weights[(u, v)] = val
        else:
            weights[(u, v)] = val - math.fsum(value(c) for c in children[v])
    total = math.fsum(weights[arc] for arc in arb.arcs)
    return EdgeWeightReport(arcs=arb.arcs, weights=weights, total=total, defined=True)


def tree_to_dot(graph: ExprGraph, arb: Arborescence) -> str:
    """DOT rendering of the host graph with the chosen tree highlighted."""
    return to_dot(graph, highlight=arb.arcs)


# ---------------------------------------------------------------------------
# canonical enumeration

class SearchCounter:
    """Counts vertex expansions; enforces an optional node budget."""

    def __init__(self, budget: Optional[int] = None):
        self.nodes = 0
        self.budget = budget

    def tick(self) -> None:
        self.nodes += 1
        if self.budget is not None and self.nodes > self.budget:
            raise BudgetExhausted(f"node budget {self.budget} exhausted")


def _subtrees(graph, level, used, sb, counter, max_arcs):
    """Yield (vid, expr, sub_arcs, used') for every subtree rootable under an
    operator at `level - 1` (or the root when level == 1).

    `sub_arcs` excludes the incoming arc; len(sub_arcs) <= max_arcs.  With
    `sb`, only the lowest-index unused copy of a variable or operator may be
    newly selected.
    """
    if max_arcs < 0:
        return
    spec = graph.spec
    for var in range(spec.num_variables):
        for copy in range(spec.variable_copies):
            vid = graph.var_id(var, copy)
            if vid in used:
                continue
            counter.tick()
            yield vid, Var(var), (), used | {vid}
            if sb:
                break
    for value in spec.constants:
        vid = graph.const_id(value)
        if vid not in used:
            counter.tick()
            yield vid, Const(value), (), used | {vid}
    if level <= spec.levels:
        for op in spec.operators:
            if op.arity > max_arcs:
                continue
            for copy in range(spec.copies_per_operator):
                vid = graph.op_id(level, op.name, copy)
                if vid in used:
                    continue
                counter.tick()
                for args, arcs, used2 in _arg_seqs(graph, level, vid, op.arity,
                                                   used | {vid}, sb, counter, max_arcs):
                    yield vid, Apply(op, args), arcs, used2
                if sb:
                    break


def _arg_seqs(graph, parent_level, parent_vid, remaining, used, sb, counter, max_arcs):
    """Ordered argument sequences for an operator vertex; arcs include the
    parent->child arcs.  len(arcs) <= max_arcs, reserving one arc per
    outstanding argument."""
    if remaining == 0:
        yield (), (), used
        return
    child_budget = max_arcs - remaining
    for vid, expr, sub_arcs, used2 in _subtrees(graph, parent_level + 1, used,
                                                sb, counter, child_budget):
        cost = 1 + len(sub_arcs)
        for rest_args, rest_arcs, used3 in _arg_seqs(graph, parent_level, parent_vid,
                                                     remaining - 1, used2, sb, counter,
                                                     max_arcs - cost):
            yield ((expr,) + rest_args,
                   ((parent_vid, vid),) + sub_arcs + rest_arcs,
                   used3)


def _trees(graph, sb, counter, max_arcs, exact_size, require, var_ids):
    def rec(prev_key, used, units, arcs):
        if units and (used & var_ids) and require <= (used | {ROOT_ID}):
            if exact_size is None or len(arcs) == exact_size:
                yield Arborescence(ROOT_ID, arcs), TopSum(units)
        remaining = max_arcs - len(arcs)
        if remaining <= 0:
            return
        for vid, expr, sub_arcs, used2 in _subtrees(graph, 1, used, sb, counter,
                                                    remaining - 1):
            key = render(expr)
            if key < prev_key:
                continue
            yield from rec(key, used2, units + (expr,),
                           arcs + ((ROOT_ID, vid),) + sub_arcs)

    yield from rec("", frozenset(), (), ())


def iter_arborescences(graph: ExprGraph, *, symmetry_breaking: bool = True,
                       require: TerminalSet = frozenset(),
                       size_ordered: bool = False,
                       node_budget: Optional[int] = None,
                       counter: Optional[SearchCounter] = None
                       ) -> Iterator[tuple]:
    """Yield (Arborescence, TopSum) for every valid tree touching a variable.

    Canonical form: root terms appear in nondecreasing rendered-text order and
    operator arguments are ordered.  With symmetry breaking (the default) each
    canonical expression appears exactly once; without it, every copy
    assignment is visited.  `require` lists extra vertices every emitted tree
    must contain.  `size_ordered` runs iterative deepening on the arc count so
    smaller trees come first.
    """
    if counter is None:
        counter = SearchCounter(node_budget)
    var_ids = frozenset(i for i, k in enumerate(graph.vertices)
                        if isinstance(k, VarVertex))
    require = frozenset(require)
    max_total = graph.num_vertices - 1
    if size_ordered:
        for size in range(1, max_total + 1):
            yield from _trees(graph, symmetry_breaking, counter, size, size,
                              require, var_ids)
    else:
        yield from _trees(graph, symmetry_breaking, counter, max_total, None,
                          require, var_ids)
