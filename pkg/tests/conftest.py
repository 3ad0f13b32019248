import math
import random

import pytest

from srsteiner import GraphSpec, OPERATORS


def ops(*names):
    return tuple(OPERATORS[n] for n in names)


@pytest.fixture
def rng():
    return random.Random(12345)


@pytest.fixture
def tiny_sin_spec():
    """One sin level, one variable, one copy of everything."""
    return GraphSpec(levels=1, copies_per_operator=1, variable_copies=1,
                     num_variables=1, constants=(), operators=ops("sin"))


@pytest.fixture
def small_spec():
    return GraphSpec(levels=2, copies_per_operator=1, variable_copies=1,
                     num_variables=2, constants=(1.0,),
                     operators=ops("sin", "mul", "add"))


@pytest.fixture
def medium_spec():
    return GraphSpec(levels=2, copies_per_operator=2, variable_copies=2,
                     num_variables=2, constants=(1.0, math.pi),
                     operators=ops("add", "mul", "sin", "log", "div"))
