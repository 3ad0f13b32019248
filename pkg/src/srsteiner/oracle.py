"""Independent brute-force ground truth: exhaustive expression enumeration by
grammar recursion, exhaustive tree solving by subset enumeration.

Everything here deliberately uses different algorithms from the main solvers
(grammar recursion instead of graph walks, arc subsets instead of
branch-and-bound) so that agreement is evidence rather than tautology.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterator, Optional

from .exprs import (Apply, Const, Dataset, Expression, LossKind, StructureError,
                    TopSum, Var, evaluate_dataset, loss, render)
from .expr_graph import (ROOT_ID, ExprGraph, GraphSpec, OpVertex, VarVertex)
from .solver import WeightedDigraph
from .reductions import SRInstance, UndirectedGraph


@dataclass(frozen=True)
class EnumerationBudget:
    max_items: int = 1_000_000
    max_depth: Optional[int] = None

    def __post_init__(self):
        if self.max_items < 1:
            raise StructureError("max_items must be positive")
        if self.max_depth is not None and self.max_depth < 1:
            raise StructureError("max_depth must be positive")


def expr_size(expr: Expression) -> int:
    """Node count below the top-level sum (equals the tree's arc count)."""
    if isinstance(expr, TopSum):
        return sum(expr_size(t) for t in expr.terms)
    if isinstance(expr, Apply):
        return 1 + sum(expr_size(a) for a in expr.args)
    return 1


def contains_variable(expr: Expression) -> bool:
    if isinstance(expr, Var):
        return True
    if isinstance(expr, TopSum):
        return any(contains_variable(t) for t in expr.terms)
    if isinstance(expr, Apply):
        return any(contains_variable(a) for a in expr.args)
    return False


# ---------------------------------------------------------------------------
# grammar enumeration

class _Budget:
    """Mutable copy-on-branch resource pool for one expression."""

    __slots__ = ("ops", "vars", "consts")

    def __init__(self, spec: GraphSpec):
        self.ops = {(level, op.name): spec.copies_per_operator
                    for level in range(1, spec.levels + 1)
                    for op in spec.operators}
        self.vars = {v: spec.variable_copies for v in range(spec.num_variables)}
        self.consts = frozenset(spec.constants)

    def clone(self) -> "_Budget":
        out = object.__new__(_Budget)
        out.ops = dict(self.ops)
        out.vars = dict(self.vars)
        out.consts = self.consts
        return out


def _gen_units(spec: GraphSpec, level: int, budget: _Budget, max_level: int):
    for var in range(spec.num_variables):
        if budget.vars[var] > 0:
            b = budget.clone()
            b.vars[var] -= 1
            yield Var(var), b
    for value in spec.constants:
        if value in budget.consts:
            b = budget.clone()
            b.consts = b.consts - {value}
            yield Const(value), b
    if level <= max_level:
        for op in spec.operators:
            if budget.ops[(level, op.name)] > 0:
                b = budget.clone()
                b.ops[(level, op.name)] -= 1
                for args, b2 in _gen_args(spec, level, op.arity, b, max_level):
                    yield Apply(op, args), b2


def _gen_args(spec: GraphSpec, level: int, remaining: int, budget: _Budget,
              max_level: int):
    if remaining == 0:
        yield (), budget
        return
    for expr, b in _gen_units(spec, level + 1, budget, max_level):
        for rest, b2 in _gen_args(spec, level, remaining - 1, b, max_level):
            yield (expr,) + rest, b2


def iter_expressions(spec: GraphSpec,
                     budget: Optional[EnumerationBudget] = None) -> Iterator[TopSum]:
    """Canonical expressions representable in the graph, each exactly once.

    Canonical form: top-level terms in nondecreasing rendered-text order,
    copy choices collapsed.  Truncation is handled by `enumerate_expressions`.
    """
    budget = budget or EnumerationBudget()
    max_level = spec.levels
    if budget.max_depth is not None:
        max_level = min(max_level, budget.max_depth)

    def rec(prev_key, pool, units, has_var):
        if units and has_var:
            yield TopSum(units)
        for expr, pool2 in _gen_units(spec, 1, pool, max_level):
            key = render(expr)
            if key < prev_key:
                continue
            yield from rec(key, pool2, units + (expr,),
                           has_var or contains_variable(expr))

    yield from rec("", _Budget(spec), (), False)


def enumerate_expressions(spec: GraphSpec,
                          budget: Optional[EnumerationBudget] = None):
    """Return (expressions, truncated)."""
    budget = budget or EnumerationBudget()
    out = []
    for expr in iter_expressions(spec, budget):
        if len(out) >= budget.max_items:
            return out, True
        out.append(expr)
    return out, False


# ---------------------------------------------------------------------------
# brute-force regression

@dataclass
class BruteForceResult:
    expression: Optional[TopSum]
    loss: float
    complete: bool


def brute_force_sr(inst: SRInstance, kind: LossKind = LossKind.MAX_ABS,
                   budget: Optional[EnumerationBudget] = None) -> BruteForceResult:
    """Global minimum loss over every representable expression.

    Tie-break: smaller loss, then fewer nodes, then lexicographic rendering.
    """
    budget = budget or EnumerationBudget()
    best = None
    best_key = None
    seen = 0
    truncated = False
    for expr in iter_expressions(inst.spec, budget):
        if seen >= budget.max_items:
            truncated = True
            break
        seen += 1
        val = loss(inst.dataset.Y, evaluate_dataset(expr, inst.dataset), kind)
        key = (val, expr_size(expr), render(expr))
        if best_key is None or key < best_key:
            best, best_key = expr, key
    if best is None:
        return BruteForceResult(None, math.inf, not truncated)
    return BruteForceResult(best, best_key[0], not truncated)


# ---------------------------------------------------------------------------
# brute-force tree problems

MAX_SUBSET_ARCS = 20


def _directed_subset_valid(g: WeightedDigraph, subset) -> bool:
    indeg = {}
    for u, v, _ in subset:
        indeg[v] = indeg.get(v, 0) + 1
    if indeg.get(g.root, 0) != 0:
        return False
    if any(d > 1 for d in indeg.values()):
        return False
    covered = {g.root}
    for u, v, _ in subset:
        covered.add(u)
        covered.add(v)
    reached = {g.root}
    frontier = [g.root]
    while frontier:
        x = frontier.pop()
        for u, v, _ in subset:
            if u == x and v not in reached:
                reached.add(v)
                frontier.append(v)
    if reached != covered:
        return False
    deg = {}
    for u, v, _ in subset:
        deg[u] = deg.get(u, 0) + 1
        deg[v] = deg.get(v, 0) + 1
    if any(deg.get(x, 0) > g.degree_bound[x] for x in covered):
        return False
    return g.terminals <= covered


def brute_force_dcsap(g: WeightedDigraph) -> Optional[float]:
    """Optimum weight by exhausting arc subsets; None when infeasible."""
    if len(g.arcs) > MAX_SUBSET_ARCS:
        raise StructureError(
            f"brute force capped at {MAX_SUBSET_ARCS} arcs, got {len(g.arcs)}")
    best = None
    max_size = min(len(g.arcs), g.num_vertices - 1)
    for size in range(0, max_size + 1):
        for subset in combinations(g.arcs, size):
            if _directed_subset_valid(g, subset):
                w = math.fsum(a[2] for a in subset)
                if best is None or w < best:
                    best = w
    return best


def _undirected_subset_valid(g: UndirectedGraph, subset) -> bool:
    if not subset:
        return len(g.terminals) <= 1
    covered = set()
    for u, v, _ in subset:
        covered.add(u)
        covered.add(v)
    if len(subset) != len(covered) - 1:
        return False
    start = next(iter(covered))
    reached = {start}
    frontier = [start]
    while frontier:
        x = frontier.pop()
        for u, v, _ in subset:
            other = v if u == x else (u if v == x else None)
            if other is not None and other not in reached:
                reached.add(other)
                frontier.append(other)
    if reached != covered:
        return False
    deg = {}
    for u, v, _ in subset:
        deg[u] = deg.get(u, 0) + 1
        deg[v] = deg.get(v, 0) + 1
    if any(deg.get(x, 0) > g.degree_bound[x] for x in covered):
        return False
    return g.terminals <= covered


def brute_force_dcstp(g: UndirectedGraph) -> Optional[float]:
    """Optimum weight over edge subsets forming a terminal-covering tree."""
    if len(g.edges) > MAX_SUBSET_ARCS:
        raise StructureError(
            f"brute force capped at {MAX_SUBSET_ARCS} edges, got {len(g.edges)}")
    best = None
    max_size = min(len(g.edges), g.num_vertices - 1)
    for size in range(0, max_size + 1):
        for subset in combinations(g.edges, size):
            if _undirected_subset_valid(g, subset):
                w = math.fsum(e[2] for e in subset)
                if best is None or w < best:
                    best = w
    return best


# ---------------------------------------------------------------------------
# raw arborescence sets in an expression graph

def enumerate_valid_arc_sets(graph: ExprGraph) -> set:
    """All arc sets forming a valid tree with at least one variable vertex.

    Frontier include/exclude enumeration, independent of the counting and
    canonical-walk code paths.
    """
    arcs = sorted(graph.arcs())
    var_ids = {i for i, k in enumerate(graph.vertices) if isinstance(k, VarVertex)}
    found = set()

    def valid(chosen, tree_vs):
        if not tree_vs & var_ids:
            return False
        outdeg = {}
        for u, _ in chosen:
            outdeg[u] = outdeg.get(u, 0) + 1
        for v in tree_vs:
            kind = graph.vertices[v]
            if isinstance(kind, OpVertex):
                if outdeg.get(v, 0) != graph.operator_of(v).arity:
                    return False
        return bool(chosen)

    def rec(tree_vs, chosen, excluded):
        pick = None
        for i, (u, v) in enumerate(arcs):
            if i not in excluded and u in tree_vs and v not in tree_vs:
                pick = i
                break
        if pick is None:
            if valid(chosen, tree_vs):
                found.add(frozenset(chosen))
            return
        u, v = arcs[pick]
        rec(tree_vs | {v}, chosen | {(u, v)}, excluded)
        rec(tree_vs, chosen, excluded | {pick})

    rec(frozenset({ROOT_ID}), frozenset(), frozenset())
    return found


# ---------------------------------------------------------------------------
# random expressions

def random_expression(spec: GraphSpec, rng, max_units: int = 3,
                      op_bias: float = 0.6, canonical: bool = True) -> TopSum:
    """Random expression representable in the graph, touching a variable."""
    for _ in range(1000):
        pool = _Budget(spec)
        units = []
        for _ in range(rng.randint(1, max_units)):
            unit = _random_unit(spec, 1, pool, rng, op_bias)
            if unit is not None:
                units.append(unit)
        if units and any(contains_variable(u) for u in units):
            if canonical:
                units.sort(key=render)
            return TopSum(tuple(units))
    raise StructureError("could not sample an expression for this spec")


def _random_unit(spec: GraphSpec, level: int, pool: _Budget, rng,
                 op_bias: float) -> Optional[Expression]:
    ops = [op for op in spec.operators
           if level <= spec.levels and pool.ops[(level, op.name)] > 0]
    if ops and rng.random() < op_bias:
        op = rng.choice(ops)
        pool.ops[(level, op.name)] -= 1
        args = []
        for _ in range(op.arity):
            child = _random_unit(spec, level + 1, pool, rng, op_bias * 0.7)
            if child is None:
                return None
            args.append(child)
        return Apply(op, tuple(args))
    leaves = [("var", v) for v in range(spec.num_variables) if pool.vars[v] > 0]
    leaves += [("const", c) for c in spec.constants if c in pool.consts]
    if not leaves:
        return None
    kind, payload = rng.choice(leaves)
    if kind == "var":
        pool.vars[payload] -= 1
        return Var(payload)
    pool.consts = pool.consts - {payload}
    return Const(payload)
