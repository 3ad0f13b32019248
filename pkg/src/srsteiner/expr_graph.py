"""Layered digraph over operator / variable / constant vertices.

The graph materializes a whole expression space: every degree-constrained
arborescence rooted at the top vertex that touches a variable is one
expression.  Layout: a single root, `levels` operator levels with
`copies_per_operator` interchangeable copies of each operator per level, and
a leaf layer of `variable_copies` copies per variable plus one vertex per
constant.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .exprs import (OPERATORS, OperatorDef, StructureError, _format_const)


# ---------------------------------------------------------------------------
# vertex kinds

@dataclass(frozen=True)
class RootVertex:
    pass


@dataclass(frozen=True)
class OpVertex:
    level: int
    op: str
    copy: int


@dataclass(frozen=True)
class VarVertex:
    var: int
    copy: int


@dataclass(frozen=True)
class ConstVertex:
    value: float


ROOT_ID = 0


# ---------------------------------------------------------------------------
# spec

@dataclass(frozen=True)
class GraphSpec:
    levels: int
    copies_per_operator: int
    variable_copies: int
    num_variables: int
    constants: tuple = ()
    operators: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "constants", tuple(float(c) for c in self.constants))
        object.__setattr__(self, "operators", tuple(self.operators))
        for name in ("levels", "copies_per_operator", "variable_copies", "num_variables"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise StructureError(f"spec field {name!r} must be a positive integer, got {v!r}")
        if any(not math.isfinite(c) for c in self.constants):
            raise StructureError("spec field 'constants' must contain finite values")
        if len(set(self.constants)) != len(self.constants):
            raise StructureError("spec field 'constants' has duplicates")
        names = [op.name for op in self.operators]
        if len(set(names)) != len(names):
            raise StructureError("spec field 'operators' has duplicate names")
        if not all(isinstance(op, OperatorDef) for op in self.operators):
            raise StructureError("spec field 'operators' must hold OperatorDef values")

    @classmethod
    def from_dict(cls, doc: dict) -> "GraphSpec":
        def need(key):
            if key not in doc:
                raise StructureError(f"spec file is missing key {key!r}")
            return doc[key]

        variables = need("variables")
        if isinstance(variables, list):
            num_variables = len(variables)
        else:
            num_variables = variables
        constants = []
        for c in doc.get("constants", []):
            if c == "pi":
                constants.append(math.pi)
            elif c == "e":
                constants.append(math.e)
            else:
                constants.append(float(c))
        operators = []
        for name in need("operators"):
            if name not in OPERATORS:
                raise StructureError(f"spec field 'operators': unknown operator {name!r}")
            operators.append(OPERATORS[name])
        return cls(
            levels=need("levels"),
            copies_per_operator=doc.get("copies", 1),
            variable_copies=doc.get("variable_copies", 1),
            num_variables=num_variables,
            constants=tuple(constants),
            operators=tuple(operators),
        )

    @classmethod
    def from_file(cls, path) -> "GraphSpec":
        with open(path) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise StructureError(f"{path}: not valid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise StructureError(f"{path}: spec file must hold a JSON object")
        return cls.from_dict(doc)


DEFAULT_CONSTANTS = (1.0, 2.0, math.pi, math.e)


# ---------------------------------------------------------------------------
# built graph

@dataclass(frozen=True)
class ExprGraph:
    spec: GraphSpec
    vertices: tuple                 # index = vertex id
    succ: tuple                     # per-vertex tuple of successor ids, ascending
    degree_bound: tuple             # per-vertex out-degree bound
    _op_ids: dict = field(repr=False, hash=False, compare=False, default_factory=dict)
    _var_ids: dict = field(repr=False, hash=False, compare=False, default_factory=dict)
    _const_ids: dict = field(repr=False, hash=False, compare=False, default_factory=dict)

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def arc_set(self) -> frozenset:
        return frozenset((u, v) for u in range(len(self.succ)) for v in self.succ[u])

    def arcs(self):
        for u in range(len(self.succ)):
            for v in self.succ[u]:
                yield (u, v)

    def op_id(self, level: int, op_name: str, copy: int) -> int:
        return self._op_ids[(level, op_name, copy)]

    def var_id(self, var: int, copy: int) -> int:
        return self._var_ids[(var, copy)]

    def const_id(self, value: float) -> Optional[int]:
        return self._const_ids.get(float(value))

    def is_leaf(self, vid: int) -> bool:
        return isinstance(self.vertices[vid], (VarVertex, ConstVertex))

    def operator_of(self, vid: int) -> OperatorDef:
        kind = self.vertices[vid]
        if not isinstance(kind, OpVertex):
            raise StructureError(f"vertex {vid} is not an operator vertex")
        return OPERATORS[kind.op]

    def level_ids(self, level: int) -> list:
        return [i for i, k in enumerate(self.vertices)
                if isinstance(k, OpVertex) and k.level == level]

    def leaf_ids(self) -> list:
        return [i for i, k in enumerate(self.vertices)
                if isinstance(k, (VarVertex, ConstVertex))]

    def vertex_label(self, vid: int) -> str:
        kind = self.vertices[vid]
        if isinstance(kind, RootVertex):
            return "sum"
        if isinstance(kind, OpVertex):
            return f"{kind.op}@{kind.level}.{kind.copy}"
        if isinstance(kind, VarVertex):
            return f"x{kind.var + 1}.{kind.copy}"
        return _format_const(kind.value)


def build(spec: GraphSpec) -> ExprGraph:
    """Materialize the layered graph with deterministic vertex numbering.

    Numbering is layer-major: root, then level 1..l (operators in spec order,
    copies in index order), then variables (index-major, copies in order),
    then constants in spec order.
    """
    vertices = [RootVertex()]
    op_ids, var_ids, const_ids = {}, {}, {}
    for level in range(1, spec.levels + 1):
        for op in spec.operators:
            for copy in range(spec.copies_per_operator):
                op_ids[(level, op.name, copy)] = len(vertices)
                vertices.append(OpVertex(level=level, op=op.name, copy=copy))
    for var in range(spec.num_variables):
        for copy in range(spec.variable_copies):
            var_ids[(var, copy)] = len(vertices)
            vertices.append(VarVertex(var=var, copy=copy))
    for value in spec.constants:
        const_ids[value] = len(vertices)
        vertices.append(ConstVertex(value=value))

    leaf_ids = sorted(var_ids.values()) + sorted(const_ids.values())
    level_ids = {
        level: [op_ids[(level, op.name, copy)]
                for op in spec.operators
                for copy in range(spec.copies_per_operator)]
        for level in range(1, spec.levels + 1)
    }

    succ = [()] * len(vertices)
    succ[ROOT_ID] = tuple(sorted(level_ids.get(1, []) + leaf_ids))
    for level in range(1, spec.levels + 1):
        nxt = level_ids.get(level + 1, [])
        targets = tuple(sorted(nxt + leaf_ids))
        for vid in level_ids[level]:
            succ[vid] = targets

    degree_bound = [0] * len(vertices)
    degree_bound[ROOT_ID] = len(succ[ROOT_ID])
    for level, ids in level_ids.items():
        for vid in ids:
            degree_bound[vid] = OPERATORS[vertices[vid].op].arity

    return ExprGraph(
        spec=spec,
        vertices=tuple(vertices),
        succ=tuple(succ),
        degree_bound=tuple(degree_bound),
        _op_ids=op_ids,
        _var_ids=var_ids,
        _const_ids=const_ids,
    )


def arc_kind(graph: ExprGraph, u: int, v: int) -> str:
    """Partition tag for an arc: 'op', 'var' or 'const' by its target."""
    kind = graph.vertices[v]
    if isinstance(kind, OpVertex):
        return "op"
    if isinstance(kind, VarVertex):
        return "var"
    if isinstance(kind, ConstVertex):
        return "const"
    raise StructureError("arcs never point at the root")


# ---------------------------------------------------------------------------
# counting

def count_arborescences(spec: GraphSpec, modulo_copy_symmetry: bool = False) -> int:
    """Count valid arborescences that touch at least one variable vertex.

    Raw mode counts distinct arc sets.  With `modulo_copy_symmetry`,
    interchangeable copies collapse and ordered operator arguments are
    distinguished, so the count equals the number of canonical expressions.
    """
    graph = build(spec)
    if modulo_copy_symmetry:
        from .arborescence import iter_arborescences
        return sum(1 for _ in iter_arborescences(graph))
    return _count_raw(graph)


def _count_raw(graph: ExprGraph) -> int:
    from itertools import combinations

    var_ids = {i for i, k in enumerate(graph.vertices) if isinstance(k, VarVertex)}

    def expand(queue, used):
        # queue: operator vertices still needing their full child set
        if not queue:
            return 1 if used & var_ids else 0
        v, rest = queue[0], queue[1:]
        arity = graph.operator_of(v).arity
        free = [w for w in graph.succ[v] if w not in used]
        total = 0
        for childset in combinations(free, arity):
            new_ops = tuple(w for w in childset
                            if isinstance(graph.vertices[w], OpVertex))
            total += expand(rest + new_ops, used | set(childset))
        return total

    root_succ = graph.succ[ROOT_ID]
    total = 0
    for size in range(1, len(root_succ) + 1):
        for childset in combinations(root_succ, size):
            ops = tuple(w for w in childset if isinstance(graph.vertices[w], OpVertex))
            total += expand(ops, set(childset))
    return total


# ---------------------------------------------------------------------------
# exports

def to_dot(graph: ExprGraph, highlight=()) -> str:
    """Deterministic DOT rendering, one rank per layer.

    `highlight` is an iterable of arcs to draw emphasized (a chosen tree).
    """
    chosen = set(highlight)
    chosen_vertices = {v for arc in chosen for v in arc}
    lines = ["digraph expression_space {", "  rankdir=TB;",
             "  node [shape=ellipse, fontsize=10];"]
    for vid, kind in enumerate(graph.vertices):
        attrs = [f'label="{graph.vertex_label(vid)}"']
        if isinstance(kind, RootVertex):
            attrs.append("shape=diamond")
        if vid in chosen_vertices:
            attrs.append("color=orange")
            attrs.append("penwidth=2")
        lines.append(f"  v{vid} [{', '.join(attrs)}];")
    layers = [[ROOT_ID]]
    for level in range(1, graph.spec.levels + 1):
        layers.append(graph.level_ids(level))
    layers.append(graph.leaf_ids())
    for ids in layers:
        if len(ids) > 1:
            lines.append("  { rank=same; " + " ".join(f"v{i};" for i in sorted(ids)) + " }")
    for u, v in sorted(graph.arcs()):
        if (u, v) in chosen:
            lines.append(f"  v{u} -> v{v} [color=orange, penwidth=2];")
        else:
            lines.append(f"  v{u} -> v{v} [color=gray70];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_json_doc(graph: ExprGraph) -> dict:
    vertices = []
    for vid, kind in enumerate(graph.vertices):
        if isinstance(kind, RootVertex):
            vertices.append({"id": vid, "kind": "root"})
        elif isinstance(kind, OpVertex):
            vertices.append({"id": vid, "kind": "op", "name": kind.op,
                             "level": kind.level, "copy": kind.copy})
        elif isinstance(kind, VarVertex):
            vertices.append({"id": vid, "kind": "var", "index": kind.var,
                             "copy": kind.copy})
        else:
            vertices.append({"id": vid, "kind": "const", "value": kind.value})
    return {
        "schema_version": 1,
        "levels": graph.spec.levels,
        "vertices": vertices,
        "arcs": sorted([u, v] for u, v in graph.arcs()),
        "degree_bound": list(graph.degree_bound),
    }
