"""Executable reductions: undirected-to-directed arc doubling, minimum-weight
recovery from a decision oracle by bisection, and regression-to-decision
instance construction over the expression graph."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

from .exprs import Dataset, StructureError
from .expr_graph import ROOT_ID, ExprGraph, GraphSpec, build
from .arborescence import TerminalSet
from .solver import DEFAULT_ZERO_TOL, WeightedDigraph


@dataclass(frozen=True)
class UndirectedGraph:
    """Undirected weighted graph for the tree-problem setting."""

    num_vertices: int
    edges: tuple                    # (u, v, w) with u < v
    terminals: frozenset
    degree_bound: tuple = ()

    def __post_init__(self):
        edges = tuple((min(int(u), int(v)), max(int(u), int(v)), float(w))
                      for u, v, w in self.edges)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "terminals", frozenset(self.terminals))
        if not self.degree_bound:
            object.__setattr__(self, "degree_bound",
                               (self.num_vertices,) * self.num_vertices)
        else:
            object.__setattr__(self, "degree_bound",
                               tuple(int(b) for b in self.degree_bound))
        if self.num_vertices < 1:
            raise StructureError("graph needs at least one vertex")
        if len(self.degree_bound) != self.num_vertices:
            raise StructureError("degree_bound length does not match vertex count")
        for u, v, w in edges:
            if not (0 <= u < self.num_vertices and 0 <= v < self.num_vertices):
                raise StructureError(f"edge ({u}, {v}) endpoint out of range")
            if u == v:
                raise StructureError(f"self-loop at vertex {u}")
            if not math.isfinite(w):
                raise StructureError(f"edge ({u}, {v}) weight must be finite")
        if any(t < 0 or t >= self.num_vertices for t in self.terminals):
            raise StructureError("terminal out of range")


def dcstp_to_dcsap(g: UndirectedGraph, root: int) -> WeightedDigraph:
    """Replace every edge by two opposite arcs carrying the edge's weight.

    Trees through the terminals keep their weight in both directions, so the
    undirected and directed optima coincide for any terminal chosen as root.
    """
    if root not in g.terminals:
        raise StructureError(f"root {root} must be one of the terminals")
    arcs = []
    for u, v, w in sorted(g.edges):
        arcs.append((u, v, w))
        arcs.append((v, u, w))
    return WeightedDigraph(
        num_vertices=g.num_vertices,
        arcs=tuple(arcs),
        root=root,
        terminals=g.terminals,
        degree_bound=g.degree_bound,
    )


def bisect_min_weight(oracle: Callable[[int], bool], lo: int, hi: int) -> Optional[int]:
    """Least integer eps in [lo, hi] with oracle(eps) true, assuming the
    oracle is monotone ("is there a tree of weight <= eps").

    Uses at most ceil(log2(hi - lo + 1)) + 1 oracle calls; None when the
    oracle never answers yes in range.
    """
    if not (isinstance(lo, int) and isinstance(hi, int)):
        raise StructureError("bisection bounds must be integers")
    if lo > hi:
        raise StructureError(f"empty range [{lo}, {hi}]")
    answer = None
    while lo <= hi:
        mid = (lo + hi) // 2
        if oracle(mid):
            answer = mid
            hi = mid - 1
        else:
            lo = mid + 1
    return answer


@dataclass(frozen=True)
class SRInstance:
    dataset: Dataset
    spec: GraphSpec
    eps: float

    def __post_init__(self):
        if self.dataset.d != self.spec.num_variables:
            raise StructureError(
                f"dataset has {self.dataset.d} variables, spec has "
                f"{self.spec.num_variables}")
        if self.eps < 0:
            raise StructureError("eps must be >= 0")


@dataclass(frozen=True)
class ReducedInstance:
    """Decision instance produced from a regression instance: find a tree
    through the terminals whose row-wise weight sums equal the target."""

    graph: ExprGraph
    terminals: TerminalSet
    target: tuple
    tol: float


def sr_to_dcsap(inst: SRInstance) -> ReducedInstance:
    """Build the expression graph and pin the terminals to the root plus the
    first copy of the first variable; the target is the dataset's Y row-wise."""
    graph = build(inst.spec)
    terminals = frozenset({ROOT_ID, graph.var_id(0, 0)})
    tol = inst.eps if inst.eps > 0 else DEFAULT_ZERO_TOL
    return ReducedInstance(graph=graph, terminals=terminals,
                           target=tuple(inst.dataset.Y), tol=tol)


# ---------------------------------------------------------------------------
# instance file format
#
#   srsteiner-instance v1
#   type directed|undirected
#   vertices <n>
#   arcs <m>           (or: edges <m>)
#   <u> <v> <w>        x m
#   root <r>           (directed only)
#   terminals <t> ...
#   bounds <k0> ... <k(n-1)>

_MAGIC = "srsteiner-instance v1"

GraphInstance = Union[UndirectedGraph, WeightedDigraph]


def _format_weight(w: float) -> str:
    return repr(int(w)) if w == int(w) else repr(w)


def instance_to_text(g: GraphInstance) -> str:
    lines = [_MAGIC]
    if isinstance(g, WeightedDigraph):
        lines.append("type directed")
        lines.append(f"vertices {g.num_vertices}")
        arcs = g.sorted_arcs()
        lines.append(f"arcs {len(arcs)}")
        lines.extend(f"{u} {v} {_format_weight(w)}" for u, v, w in arcs)
        lines.append(f"root {g.root}")
    elif isinstance(g, UndirectedGraph):
        lines.append("type undirected")
        lines.append(f"vertices {g.num_vertices}")
        edges = tuple(sorted(g.edges))
        lines.append(f"edges {len(edges)}")
        lines.extend(f"{u} {v} {_format_weight(w)}" for u, v, w in edges)
    else:
        raise StructureError(f"cannot serialize {type(g).__name__}")
    lines.append("terminals " + " ".join(str(t) for t in sorted(g.terminals)))
    lines.append("bounds " + " ".join(str(b) for b in g.degree_bound))
    return "\n".join(lines) + "\n"


def instance_from_text(text: str) -> GraphInstance:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != _MAGIC:
        raise StructureError(f"instance file must start with {_MAGIC!r}")
    cursor = [1]

    def take(prefix: str) -> str:
        if cursor[0] >= len(lines):
            raise StructureError(f"instance file ends before {prefix!r} line")
        line = lines[cursor[0]]
        if not line.startswith(prefix + " "):
            raise StructureError(f"expected {prefix!r} line, got {line!r}")
        cursor[0] += 1
        return line[len(prefix) + 1:]

    kind = take("type")
    if kind not in ("directed", "undirected"):
        raise StructureError(f"unknown instance type {kind!r}")
    try:
        n = int(take("vertices"))
        m = int(take("arcs" if kind == "directed" else "edges"))
        links = []
        for _ in range(m):
            if cursor[0] >= len(lines):
                raise StructureError("instance file ends inside the edge list")
            parts = lines[cursor[0]].split()
            cursor[0] += 1
            if len(parts) != 3:
                raise StructureError(f"bad edge line {lines[cursor[0] - 1]!r}")
            links.append((int(parts[0]), int(parts[1]), float(parts[2])))
        root = int(take("root")) if kind == "directed" else None
        terminals = frozenset(int(t) for t in take("terminals").split())
        bounds = tuple(int(b) for b in take("bounds").split())
    except ValueError as exc:
        raise StructureError(f"malformed instance file: {exc}") from None
    if kind == "directed":
        return WeightedDigraph(num_vertices=n, arcs=tuple(links), root=root,
                               terminals=terminals, degree_bound=bounds)
    return UndirectedGraph(num_vertices=n, edges=tuple(links),
                           terminals=terminals, degree_bound=bounds)


def write_instance(g: GraphInstance, path) -> None:
    with open(path, "w") as fh:
        fh.write(instance_to_text(g))


def read_instance(path) -> GraphInstance:
    with open(path) as fh:
        return instance_from_text(fh.read())
