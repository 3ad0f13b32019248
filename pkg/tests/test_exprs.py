import math
import random

import pytest

from srsteiner import (Apply, Const, Dataset, LossKind, OPERATORS, ParseError,
                       StructureError, TopSum, Var, depth, evaluate,
                       evaluate_dataset, loss, parse, render)


def test_operator_table_basics():
    assert OPERATORS["add"].arity == 2
    assert OPERATORS["sin"].arity == 1
    assert OPERATORS["fma"].arity == 3
    assert OPERATORS["mul"].apply(3.0, 4.0) == 12.0


def test_domain_guards_return_none():
    assert OPERATORS["div"].apply(1.0, 0.0) is None
    assert OPERATORS["log"].apply(0.0) is None
    assert OPERATORS["log"].apply(-2.0) is None
    assert OPERATORS["sqrt"].apply(-1.0) is None
    # overflow is a guard too, not an exception
    assert OPERATORS["exp"].apply(1e9) is None
    assert OPERATORS["mul"].apply(1e200, 1e200) is None


def test_evaluate_simple():
    expr = parse("x1*x2 + 1")
    assert evaluate(expr, (3.0, 4.0)) == 13.0
    expr = parse("sin(x1)")
    assert evaluate(expr, (0.5,)) == pytest.approx(math.sin(0.5))


def test_evaluate_undefined_propagates():
    expr = parse("log(x1) + x2")
    assert evaluate(expr, (-1.0, 2.0)) is None
    assert evaluate(expr, (math.e, 2.0)) == pytest.approx(3.0)


def test_evaluate_wrong_dimension_raises():
    with pytest.raises(StructureError):
        evaluate(parse("x3"), (1.0, 2.0))


def test_depth():
    assert depth(parse("x1")) == 0
    assert depth(parse("sin(x1)")) == 1
    assert depth(parse("sin(x1*x2) + x1")) == 2


def test_parse_render_fixed_points():
    for text in ["x1", "sin(x1)", "x1*x2", "x1*x2 + 1.0", "sin(x1*x2)",
                 "sin(square(x1)) + x2", "fma(x1, x2, 1.0)", "x1/x2 + (x1 + x2)",
                 "pi*x1", "-1.5 + x1"]:
        assert render(parse(text)) == text


def test_parse_rejects_garbage():
    for bad in ["", "x1 +", "sin(x1", "bogus(x1)", "x1 x2", "1..2"]:
        with pytest.raises((ParseError, StructureError)):
            parse(bad)


def test_parse_error_carries_position():
    with pytest.raises(ParseError) as err:
        parse("x1 + @")
    assert err.value.position == 5


def test_top_level_plus_vs_nested_add():
    flat = parse("x1 + x2")
    nested = parse("(x1+x2)")
    assert isinstance(flat, TopSum) and len(flat.terms) == 2
    assert isinstance(nested, TopSum) and len(nested.terms) == 1
    assert isinstance(nested.terms[0], Apply)
    assert render(flat) != render(nested)
    assert evaluate(flat, (2.0, 3.0)) == evaluate(nested, (2.0, 3.0)) == 5.0


def test_render_precedence():
    expr = TopSum((Apply(OPERATORS["mul"],
                         (Apply(OPERATORS["add"], (Var(0), Var(1))),
                          Var(0))),))
    assert render(expr) == "(x1 + x2)*x1"
    assert evaluate(expr, (2.0, 3.0)) == 10.0


def test_round_trip_random_expressions(rng):
    from srsteiner import random_expression
    from srsteiner.expr_graph import GraphSpec
    from srsteiner.exprs import DEFAULT_OPERATORS
    spec = GraphSpec(levels=4, copies_per_operator=2, variable_copies=3,
                     num_variables=3, constants=(1.0, 2.0, math.pi, math.e),
                     operators=DEFAULT_OPERATORS)
    for _ in range(1000):
        expr = random_expression(spec, rng, max_units=3)
        again = parse(render(expr))
        assert render(again) == render(expr)
        row = tuple(rng.uniform(-2, 2) for _ in range(3))
        assert evaluate(again, row) == evaluate(expr, row)


def test_loss_kinds():
    Y = (1.0, 2.0, 3.0)
    Yhat = (1.0, 2.5, 2.0)
    assert loss(Y, Yhat, LossKind.MAX_ABS) == 1.0
    assert loss(Y, Yhat, LossKind.MEAN_SQUARED) == pytest.approx((0.25 + 1.0) / 3)
    assert loss(Y, (1.0, None, 3.0)) == math.inf


def test_dataset_from_csv(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("x1,x2,y\n1,2,3\n4,5,9\n")
    data = Dataset.from_csv(p)
    assert data.d == 2
    assert data.X == ((1.0, 2.0), (4.0, 5.0))
    assert data.Y == (3.0, 9.0)


def test_dataset_target_override(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a,y,b\n1,10,2\n3,20,4\n")
    data = Dataset.from_csv(p, target="y")
    assert data.Y == (10.0, 20.0)
    assert data.X == ((1.0, 2.0), (3.0, 4.0))
    with pytest.raises(StructureError):
        Dataset.from_csv(p, target="nope")


def test_dataset_rejects_bad_csv(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("x1,y\n1\n")
    with pytest.raises(StructureError):
        Dataset.from_csv(p)


def test_evaluate_dataset():
    data = Dataset(X=((1.0,), (2.0,)), Y=(2.0, 4.0))
    out = evaluate_dataset(parse("x1 + x1"), data)
    assert tuple(out) == (2.0, 4.0)
