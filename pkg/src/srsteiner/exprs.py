"""Expression trees, operator semantics, dataset evaluation, and the text grammar."""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

REL_TOL = 1e-9
ABS_TOL = 1e-12


class StructureError(Exception):
    """Malformed input: bad arity, unknown name, shape mismatch, invalid tree."""


class ParseError(StructureError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at offset {position})")
        self.position = position


class BudgetExhausted(Exception):
    """A search or enumeration ran out of its node budget."""


def nearly_equal(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=REL_TOL, abs_tol=ABS_TOL)


# ---------------------------------------------------------------------------
# operators

@dataclass(frozen=True, eq=False)
class OperatorDef:
    """A named real function of 1, 2 or 3 arguments.

    `guard` returns True when the arguments fall outside the domain; the
    evaluator then produces the undefined marker (None) instead of raising.
    """

    name: str
    arity: int
    fn: Callable[..., float]
    guard: Optional[Callable[..., bool]] = None
    infix: Optional[str] = None

    def __post_init__(self):
        if self.arity not in (1, 2, 3):
            raise StructureError(f"operator {self.name!r}: arity must be 1, 2 or 3")

    def apply(self, *args: float) -> Optional[float]:
        if self.guard is not None and self.guard(*args):
            return None
        try:
            out = self.fn(*args)
        except (OverflowError, ValueError, ZeroDivisionError):
            return None
        return out if math.isfinite(out) else None

    def __eq__(self, other):
        return isinstance(other, OperatorDef) and self.name == other.name and self.arity == other.arity

    def __hash__(self):
        return hash((self.name, self.arity))

    def __repr__(self):
        return f"OperatorDef({self.name!r}, arity={self.arity})"


def _build_operator_table() -> dict:
    ops = [
        OperatorDef("add", 2, lambda a, b: a + b, infix="+"),
        OperatorDef("sub", 2, lambda a, b: a - b, infix="-"),
        OperatorDef("mul", 2, lambda a, b: a * b, infix="*"),
        OperatorDef("div", 2, lambda a, b: a / b, guard=lambda a, b: b == 0.0, infix="/"),
        OperatorDef("sin", 1, math.sin),
        OperatorDef("cos", 1, math.cos),
        OperatorDef("exp", 1, math.exp),
        OperatorDef("log", 1, math.log, guard=lambda a: a <= 0.0),
        OperatorDef("sqrt", 1, math.sqrt, guard=lambda a: a < 0.0),
        OperatorDef("square", 1, lambda a: a * a),
        OperatorDef("fma", 3, lambda a, b, c: a * b + c),
    ]
    return {op.name: op for op in ops}


OPERATORS = _build_operator_table()
DEFAULT_OPERATORS = tuple(OPERATORS.values())


def get_operator(name: str) -> OperatorDef:
    try:
        return OPERATORS[name]
    except KeyError:
        raise StructureError(f"unknown operator {name!r}") from None


# ---------------------------------------------------------------------------
# expression nodes

class Expression:
    """Base class; concrete nodes are Const, Var, Apply and TopSum."""

    __slots__ = ()


@dataclass(frozen=True)
class Const(Expression):
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise StructureError("constants must be finite")


@dataclass(frozen=True)
class Var(Expression):
    index: int

    def __post_init__(self):
        if self.index < 0:
            raise StructureError("variable index must be >= 0")


@dataclass(frozen=True)
class Apply(Expression):
    op: OperatorDef
    args: tuple

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if len(self.args) != self.op.arity:
            raise StructureError(
                f"operator {self.op.name!r} takes {self.op.arity} args, got {len(self.args)}")
        if any(isinstance(a, TopSum) for a in self.args):
            raise StructureError("TopSum may only appear at the root")


@dataclass(frozen=True)
class TopSum(Expression):
    terms: tuple

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise StructureError("TopSum needs at least one term")
        if any(isinstance(t, TopSum) for t in self.terms):
            raise StructureError("TopSum may only appear at the root")


def depth(expr: Expression) -> int:
    """Operator nesting depth; leaves are 0, the top-level sum adds nothing."""
    if isinstance(expr, TopSum):
        return max(depth(t) for t in expr.terms)
    if isinstance(expr, Apply):
        return 1 + max(depth(a) for a in expr.args)
    return 0


# ---------------------------------------------------------------------------
# evaluation

def _eval_node(expr: Expression, row: Sequence[float]) -> Optional[float]:
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Var):
        if expr.index >= len(row):
            raise StructureError(
                f"variable x{expr.index + 1} out of range for a {len(row)}-column row")
        v = float(row[expr.index])
        return v if math.isfinite(v) else None
    if isinstance(expr, Apply):
        vals = []
        for a in expr.args:
            v = _eval_node(a, row)
            if v is None:
                return None
            vals.append(v)
        return expr.op.apply(*vals)
    raise StructureError(f"cannot evaluate node {expr!r}")


def evaluate(expr: Expression, row: Sequence[float]) -> Optional[float]:
    """Evaluate on one data row; None is the undefined marker."""
    if isinstance(expr, TopSum):
        vals = []
        for t in expr.terms:
            v = _eval_node(t, row)
            if v is None:
                return None
            vals.append(v)
        total = math.fsum(vals)
        return total if math.isfinite(total) else None
    return _eval_node(expr, row)


# ---------------------------------------------------------------------------
# datasets and losses

@dataclass(frozen=True)
class Dataset:
    X: tuple          # n rows, each a d-tuple of floats
    Y: tuple          # n targets
    column_names: Optional[tuple] = None

    def __post_init__(self):
        X = tuple(tuple(float(v) for v in row) for row in self.X)
        Y = tuple(float(v) for v in self.Y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        if len(X) < 1:
            raise StructureError("dataset needs at least one row")
        if len(X) != len(Y):
            raise StructureError(f"X has {len(X)} rows but Y has {len(Y)} entries")
        d = len(X[0])
        if d < 1:
            raise StructureError("dataset needs at least one input column")
        if any(len(row) != d for row in X):
            raise StructureError("ragged rows in X")
        if self.column_names is not None and len(self.column_names) != d:
            raise StructureError("column_names length does not match X")

    @property
    def n(self) -> int:
        return len(self.X)

    @property
    def d(self) -> int:
        return len(self.X[0])

    @classmethod
    def from_csv(cls, path, target: Optional[str] = None) -> "Dataset":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise StructureError(f"{path}: empty file")
        header = [h.strip() for h in rows[0]]
        body = [r for r in rows[1:] if any(cell.strip() for cell in r)]
        if not body:
            raise StructureError(f"{path}: no data rows")
        if target is None:
            y_col = len(header) - 1
        else:
            if target not in header:
                raise StructureError(f"{path}: no column named {target!r}")
            y_col = header.index(target)
        x_cols = [i for i in range(len(header)) if i != y_col]
        if not x_cols:
            raise StructureError(f"{path}: no input columns besides the target")
        try:
            X = tuple(tuple(float(r[i]) for i in x_cols) for r in body)
            Y = tuple(float(r[y_col]) for r in body)
        except (ValueError, IndexError) as exc:
            raise StructureError(f"{path}: malformed CSV row: {exc}") from None
        return cls(X=X, Y=Y, column_names=tuple(header[i] for i in x_cols))


def evaluate_dataset(expr: Expression, data: Dataset) -> list:
    """Element-wise evaluate over the dataset rows, order preserving."""
    return [evaluate(expr, row) for row in data.X]


class LossKind(enum.Enum):
    MAX_ABS = "max_abs"
    MEAN_SQUARED = "mean_squared"


def loss(Y: Sequence[float], Yhat: Sequence[Optional[float]],
         kind: LossKind = LossKind.MAX_ABS) -> float:
    if len(Y) != len(Yhat):
        raise StructureError(f"length mismatch: {len(Y)} targets vs {len(Yhat)} predictions")
    if any(v is None for v in Yhat):
        return math.inf
    if kind is LossKind.MAX_ABS:
        return max(abs(y - yh) for y, yh in zip(Y, Yhat))
    if kind is LossKind.MEAN_SQUARED:
        return math.fsum((y - yh) ** 2 for y, yh in zip(Y, Yhat)) / len(Y)
    raise StructureError(f"unknown loss kind {kind!r}")


# ---------------------------------------------------------------------------
# text grammar
#
#   top      := term ('+' term)*              -> TopSum over the terms
#   term     := mulchain ('-' mulchain)*      (no bare '+' outside parens)
#   inner    := mulchain (('+'|'-') mulchain)*    (inside parens / call args)
#   mulchain := atom (('*'|'/') atom)*
#   atom     := number | '-' number | 'pi' | 'e' | 'x'<digits>
#             | name '(' inner (',' inner)* ')' | '(' inner ')'

_SYMBOLS = ("+", "-", "*", "/", "(", ")", ",")


def _tokenize(text: str) -> list:
    tokens = []  # (kind, value, position)
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in _SYMBOLS:
            tokens.append(("sym", c, i))
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            if j < n and text[j] in "eE" and j + 1 < n and (
                    text[j + 1].isdigit() or (text[j + 1] in "+-" and j + 2 < n and text[j + 2].isdigit())):
                j += 2 if text[j + 1] in "+-" else 1
                while j < n and text[j].isdigit():
                    j += 1
            try:
                value = float(text[i:j])
            except ValueError:
                raise ParseError(f"bad number {text[i:j]!r}", i)
            tokens.append(("num", value, i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("name", text[i:j], i))
            i = j
            continue
        raise ParseError(f"unexpected character {c!r}", i)
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, value: str):
        kind, val, at = self.peek()
        if kind != "sym" or val != value:
            raise ParseError(f"expected {value!r}", at)
        return self.take()

    def at_sym(self, *values) -> bool:
        kind, val, _ = self.peek()
        return kind == "sym" and val in values

    def parse_top(self) -> TopSum:
        terms = [self.parse_term()]
        while self.at_sym("+"):
            self.take()
            terms.append(self.parse_term())
        kind, _, at = self.peek()
        if kind != "end":
            raise ParseError("trailing input", at)
        return TopSum(tuple(terms))

    def parse_term(self) -> Expression:
        node = self.parse_mulchain()
        while self.at_sym("-"):
            self.take()
            node = Apply(OPERATORS["sub"], (node, self.parse_mulchain()))
        return node

    def parse_inner(self) -> Expression:
        node = self.parse_mulchain()
        while self.at_sym("+", "-"):
            _, sym, _ = self.take()
            op = OPERATORS["add" if sym == "+" else "sub"]
            node = Apply(op, (node, self.parse_mulchain()))
        return node

    def parse_mulchain(self) -> Expression:
        node = self.parse_atom()
        while self.at_sym("*", "/"):
            _, sym, _ = self.take()
            op = OPERATORS["mul" if sym == "*" else "div"]
            node = Apply(op, (node, self.parse_atom()))
        return node

    def parse_atom(self) -> Expression:
        kind, val, at = self.peek()
        if kind == "sym" and val == "-":
            self.take()
            k2, v2, a2 = self.peek()
            if k2 != "num":
                raise ParseError("'-' may only prefix a number literal", a2)
            self.take()
            return Const(-v2)
        if kind == "num":
            self.take()
            return Const(val)
        if kind == "name":
            self.take()
            if val == "pi":
                return Const(math.pi)
            if val == "e":
                return Const(math.e)
            if val[0] == "x" and val[1:].isdigit():
                index = int(val[1:])
                if index < 1:
                    raise ParseError("variables are numbered from x1", at)
                return Var(index - 1)
            if not self.at_sym("("):
                raise ParseError(f"unknown name {val!r}", at)
            op = OPERATORS.get(val)
            if op is None:
                raise StructureError(f"unknown operator {val!r}")
            self.expect("(")
            args = [self.parse_inner()]
            while self.at_sym(","):
                self.take()
                args.append(self.parse_inner())
            self.expect(")")
            return Apply(op, tuple(args))
        if kind == "sym" and val == "(":
            self.take()
            node = self.parse_inner()
            self.expect(")")
            return node
        raise ParseError("expected an expression", at)


def parse(text: str) -> TopSum:
    """Parse expression text; the result is always rooted at a TopSum."""
    return _Parser(text).parse_top()


_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2}


def _format_const(value: float) -> str:
    if value == math.pi:
        return "pi"
    if value == math.e:
        return "e"
    return repr(value)


def _render_node(expr: Expression, context_prec: int, forbid_plus: bool) -> str:
    if isinstance(expr, Const):
        return _format_const(expr.value)
    if isinstance(expr, Var):
        return f"x{expr.index + 1}"
    if isinstance(expr, Apply):
        op = expr.op
        if op.infix is None:
            inner = ", ".join(_render_node(a, 0, False) for a in expr.args)
            return f"{op.name}({inner})"
        prec = _PREC[op.name]
        left = _render_node(expr.args[0], prec, forbid_plus)
        right = _render_node(expr.args[1], prec + 1, forbid_plus)
        sep = f" {op.infix} " if prec == 1 else op.infix
        text = f"{left}{sep}{right}"
        if prec < context_prec or (forbid_plus and op.name == "add"):
            return f"({text})"
        return text
    raise StructureError(f"cannot render node {expr!r}")


def render(expr: Expression) -> str:
    """Inverse of parse: parse(render(e)) is structurally equal to e."""
    if isinstance(expr, TopSum):
        return " + ".join(_render_node(t, 0, True) for t in expr.terms)
    return _render_node(expr, 0, True)
