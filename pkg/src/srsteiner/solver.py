"""Exact solvers: minimum-weight degree-constrained arborescences on generic
digraphs, the matching decision procedure, and the expression search over an
expression graph."""
from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .exprs import (BudgetExhausted, Dataset, Expression, LossKind,
                    StructureError, TopSum, evaluate, render)
from .expr_graph import ROOT_ID, ExprGraph
from .arborescence import (Arborescence, SearchCounter, TerminalSet,
                           edge_weights, iter_arborescences)


# ---------------------------------------------------------------------------
# generic weighted digraphs

@dataclass(frozen=True)
class WeightedDigraph:
    """Digraph with static real arc weights, a root, terminals and per-vertex
    bounds on the total degree a tree may give the vertex."""

    num_vertices: int
    arcs: tuple                     # (u, v, w) triples
    root: int
    terminals: frozenset
    degree_bound: tuple = ()

    def __post_init__(self):
        arcs = tuple((int(u), int(v), float(w)) for u, v, w in self.arcs)
        object.__setattr__(self, "arcs", arcs)
        object.__setattr__(self, "terminals", frozenset(self.terminals))
        if not self.degree_bound:
            object.__setattr__(self, "degree_bound",
                               (self.num_vertices,) * self.num_vertices)
        else:
            object.__setattr__(self, "degree_bound",
                               tuple(int(b) for b in self.degree_bound))
        if self.num_vertices < 1:
            raise StructureError("graph needs at least one vertex")
        if not (0 <= self.root < self.num_vertices):
            raise StructureError(f"root {self.root} out of range")
        if len(self.degree_bound) != self.num_vertices:
            raise StructureError("degree_bound length does not match vertex count")
        for u, v, w in arcs:
            if not (0 <= u < self.num_vertices and 0 <= v < self.num_vertices):
                raise StructureError(f"arc ({u}, {v}) endpoint out of range")
            if u == v:
                raise StructureError(f"self-loop at vertex {u}")
            if not math.isfinite(w):
                raise StructureError(f"arc ({u}, {v}) weight must be finite")
        if any(t < 0 or t >= self.num_vertices for t in self.terminals):
            raise StructureError("terminal out of range")

    def sorted_arcs(self) -> tuple:
        return tuple(sorted(self.arcs))


@dataclass
class SearchStats:
    nodes: int = 0
    prunes: int = 0
    wall_time: float = 0.0

    def to_json_doc(self) -> dict:
        return {"nodes": self.nodes, "prunes": self.prunes,
                "wall_time": self.wall_time}


@dataclass
class SolveResult:
    status: str                     # "found" | "infeasible" | "budget_exhausted"
    arborescence: Optional[Arborescence]
    weight: Optional[float]
    stats: SearchStats = field(default_factory=SearchStats)


# ---------------------------------------------------------------------------
# shared enumeration over generic digraphs
#
# Decision-tree search over frontier arcs: repeatedly pick the first arc that
# could extend the current tree and branch on include / exclude.  Every
# subtree of the digraph rooted at `root` shows up at exactly one leaf of the
# decision tree, so the enumeration is complete.

class _Found(Exception):
    def __init__(self, payload):
        self.payload = payload


def _completion(g: WeightedDigraph, arcs, tree_vs, excluded):
    """(all_terminals_reachable, admissible extra weight) for the uncovered
    terminals, ignoring degree constraints.  Paths may only leave the current
    tree, mirroring how the tree can still grow."""
    uncovered = g.terminals - tree_vs
    if not uncovered:
        return True, 0.0
    nonneg = all(w >= 0 for _, _, w in arcs)
    dist = {v: 0.0 for v in tree_vs}
    heap = [(0.0, v) for v in tree_vs]
    heapq.heapify(heap)
    out = {}
    for i, (u, v, w) in enumerate(arcs):
        if i not in excluded and v not in tree_vs:
            out.setdefault(u, []).append((v, w if nonneg else 0.0))
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist.get(u, math.inf):
            continue
        for v, w in out.get(u, ()):
            nd = d + w
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    worst = 0.0
    for t in uncovered:
        if t not in dist:
            return False, math.inf
        worst = max(worst, dist[t])
    return True, worst


def _enumerate_trees(g: WeightedDigraph, visit, prune, counter: SearchCounter):
    """Drive the include/exclude enumeration.

    visit(chosen, tree_vs, weight) is called at each decision leaf;
    prune(chosen, tree_vs, weight, excluded) may cut a branch early.
    """
    arcs = g.sorted_arcs()
    n_arcs = len(arcs)
    tree_vs = {g.root}
    deg = [0] * g.num_vertices
    chosen = []
    excluded = set()
    weight = [0.0]

    def rec():
        counter.tick()
        if prune is not None and prune(chosen, tree_vs, weight[0], excluded):
            return
        pick = None
        for i in range(n_arcs):
            if i in excluded:
                continue
            u, v, _ = arcs[i]
            if u in tree_vs and v not in tree_vs:
                pick = i
                break
        if pick is None:
            visit(tuple(chosen), frozenset(tree_vs), weight[0])
            return
        u, v, w = arcs[pick]
        bound_ok = (deg[u] + 1 <= g.degree_bound[u]
                    and g.degree_bound[v] >= 1)
        if bound_ok:
            chosen.append(pick)
            tree_vs.add(v)
            deg[u] += 1
            deg[v] += 1
            weight[0] += w
            rec()
            weight[0] -= w
            deg[v] -= 1
            deg[u] -= 1
            tree_vs.discard(v)
            chosen.pop()
        excluded.add(pick)
        rec()
        excluded.discard(pick)

    rec()
    return arcs


def _as_arborescence(g: WeightedDigraph, arcs, chosen) -> Arborescence:
    return Arborescence(g.root, tuple((arcs[i][0], arcs[i][1]) for i in chosen))


def tree_weight(g: WeightedDigraph, arb: Arborescence) -> float:
    table = {}
    for u, v, w in g.arcs:
        table[(u, v)] = w
    return math.fsum(table[arc] for arc in arb.arcs)


def solve_min_dcsap(g: WeightedDigraph, budget: Optional[int] = None) -> SolveResult:
    """Exact minimum-weight degree-constrained arborescence covering the
    terminals; complete branch-and-bound unless the node budget runs out."""
    t0 = time.perf_counter()
    counter = SearchCounter(budget)
    stats = SearchStats()
    arcs = g.sorted_arcs()
    nonneg = all(w >= 0 for _, _, w in arcs)
    best = {"weight": math.inf, "chosen": None}

    def visit(chosen, tree_vs, weight):
        if g.terminals <= tree_vs and weight < best["weight"]:
            best["weight"] = weight
            best["chosen"] = chosen

    def prune(chosen, tree_vs, weight, excluded):
        reachable, extra = _completion(g, arcs, tree_vs, excluded)
        if not reachable:
            stats.prunes += 1
            return True
        if nonneg and weight + extra >= best["weight"]:
            stats.prunes += 1
            return True
        return False

    status = "found"
    try:
        _enumerate_trees(g, visit, prune, counter)
    except BudgetExhausted:
        status = "budget_exhausted"
    stats.nodes = counter.nodes
    stats.wall_time = time.perf_counter() - t0
    if best["chosen"] is None:
        return SolveResult(status if status == "budget_exhausted" else "infeasible",
                           None, None, stats)
    arb = _as_arborescence(g, arcs, best["chosen"])
    return SolveResult(status, arb, best["weight"], stats)


def decide_dcsap(g: WeightedDigraph, eps: float, tol: float = 1e-9,
                 budget: Optional[int] = None) -> Optional[Arborescence]:
    """Find a valid arborescence with |total weight - eps| <= tol, or None
    after complete search."""
    if tol < 0:
        raise StructureError("tol must be >= 0")
    t0 = time.perf_counter()
    counter = SearchCounter(budget)
    arcs = g.sorted_arcs()
    nonneg = all(w >= 0 for _, _, w in arcs)

    def visit(chosen, tree_vs, weight):
        if g.terminals <= tree_vs and abs(weight - eps) <= tol:
            raise _Found(chosen)

    def prune(chosen, tree_vs, weight, excluded):
        if nonneg and weight > eps + tol:
            return True
        reachable, _ = _completion(g, arcs, tree_vs, excluded)
        return not reachable

    try:
        _enumerate_trees(g, visit, prune, counter)
    except _Found as hit:
        return _as_arborescence(g, arcs, hit.payload)
    return None


# ---------------------------------------------------------------------------
# decision over an expression graph with data-driven weights

def decide_dcsap_functional(graph: ExprGraph, X: Sequence, target: Sequence[float],
                            tol: float, terminals: TerminalSet = frozenset(),
                            node_budget: Optional[int] = None):
    """Search the expression graph for a tree whose telescoped weight sum
    matches `target` on every row within `tol`.

    Returns (Arborescence, TopSum) or None.  The per-tree check goes through
    the edge-weight report, not expression evaluation.
    """
    require = frozenset(terminals) - {ROOT_ID}
    for arb, expr in iter_arborescences(graph, require=require, size_ordered=True,
                                        node_budget=node_budget):
        ok = True
        for row, y in zip(X, target):
            report = edge_weights(graph, arb, row)
            if not report.defined or abs(report.total - y) > tol:
                ok = False
                break
        if ok:
            return arb, expr
    return None


# ---------------------------------------------------------------------------
# expression search

DEFAULT_ZERO_TOL = 1e-6


@dataclass
class SRResult:
    status: str                     # "found" | "not_found"
    expression: Optional[TopSum]
    arborescence: Optional[Arborescence]
    loss: Optional[float]
    complete: bool
    stats: SearchStats = field(default_factory=SearchStats)

    @property
    def found(self) -> bool:
        return self.status == "found"

    def to_json_doc(self) -> dict:
        return {
            "schema_version": 1,
            "status": self.status,
            "expression": render(self.expression) if self.expression else None,
            "loss": self.loss,
            "complete": self.complete,
            "stats": self.stats.to_json_doc(),
        }


def _loss_with_cutoff(expr: Expression, data: Dataset, kind: LossKind,
                      cutoff: float) -> Optional[float]:
    """Loss, or None once the partial value provably exceeds `cutoff`."""
    if kind is LossKind.MAX_ABS:
        worst = 0.0
        for row, y in zip(data.X, data.Y):
            v = evaluate(expr, row)
            if v is None:
                return None if cutoff < math.inf else math.inf
            worst = max(worst, abs(y - v))
            if worst > cutoff:
                return None
        return worst
    acc = 0.0
    n = data.n
    for row, y in zip(data.X, data.Y):
        v = evaluate(expr, row)
        if v is None:
            return None if cutoff < math.inf else math.inf
        acc += (y - v) ** 2
        if acc / n > cutoff:
            return None
    return acc / n


def solve_sr(graph: ExprGraph, data: Dataset, loss_kind: LossKind = LossKind.MAX_ABS,
             eps: float = DEFAULT_ZERO_TOL, budget: Optional[int] = None,
             symmetry_breaking: bool = True,
             terminals: Optional[TerminalSet] = None) -> SRResult:
    """Search the expression space for a tree whose loss is <= eps.

    Trees are visited smallest first; among equal-size hits the
    lexicographically least rendered expression wins.  Without a hit the best
    incumbent is reported; `complete` is False when the budget ran out.
    """
    if data.d != graph.spec.num_variables:
        raise StructureError(
            f"dataset has {data.d} variables, graph spec has {graph.spec.num_variables}")
    if eps < 0:
        raise StructureError("eps must be >= 0")
    t0 = time.perf_counter()
    counter = SearchCounter(budget)
    stats = SearchStats()
    require = frozenset(terminals) - {ROOT_ID} if terminals is not None else frozenset()

    best = {"loss": math.inf, "expr": None, "arb": None, "key": None}
    hits = []                       # (render, expr, arb, loss) at the hit size
    hit_size = None
    complete = True
    try:
        for arb, expr in iter_arborescences(graph, symmetry_breaking=symmetry_breaking,
                                            require=require, size_ordered=True,
                                            counter=counter):
            if hit_size is not None and len(arb.arcs) > hit_size:
                break
            cutoff = max(eps, best["loss"])
            val = _loss_with_cutoff(expr, data, loss_kind, cutoff)
            if val is None:
                continue
            key = render(expr)
            if val < best["loss"] or (val == best["loss"]
                                      and best["arb"] is not None
                                      and (len(arb.arcs), key) < (len(best["arb"].arcs), best["key"])):
                best.update(loss=val, expr=expr, arb=arb, key=key)
            if val <= eps:
                hit_size = len(arb.arcs)
                hits.append((key, expr, arb, val))
    except BudgetExhausted:
        complete = False
    stats.nodes = counter.nodes
    stats.wall_time = time.perf_counter() - t0

    if hits:
        key, expr, arb, val = min(hits)
        return SRResult("found", expr, arb, val, complete, stats)
    return SRResult("not_found", best["expr"], best["arb"],
                    best["loss"] if best["expr"] is not None else None,
                    complete, stats)
