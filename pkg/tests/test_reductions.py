import math

import pytest

from srsteiner import (Dataset, GraphSpec, ROOT_ID, StructureError,
                       UndirectedGraph, WeightedDigraph, bisect_min_weight,
                       dcstp_to_dcsap, instance_from_text, instance_to_text,
                       read_instance, sr_to_dcsap, write_instance)
from srsteiner.reductions import SRInstance
from srsteiner.oracle import brute_force_dcsap, brute_force_dcstp
from srsteiner.verify import random_connected_undirected
from conftest import ops


def square_graph():
    return UndirectedGraph(4, ((0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.0),
                               (0, 3, 5.0)), frozenset({0, 2}))


def test_undirected_validation():
    with pytest.raises(StructureError):
        UndirectedGraph(2, ((0, 0, 1.0),), frozenset({0}))
    with pytest.raises(StructureError):
        UndirectedGraph(2, ((0, 3, 1.0),), frozenset({0}))
    # edge endpoints are normalized to u < v
    g = UndirectedGraph(3, ((2, 0, 1.0),), frozenset({0}))
    assert g.edges == ((0, 2, 1.0),)


def test_arc_doubling_structure():
    g = square_graph()
    dg = dcstp_to_dcsap(g, 0)
    assert len(dg.arcs) == 2 * len(g.edges)
    assert dg.root == 0
    assert dg.terminals == g.terminals
    assert dg.degree_bound == g.degree_bound
    forward = {(u, v): w for u, v, w in dg.arcs}
    for u, v, w in g.edges:
        assert forward[(u, v)] == w and forward[(v, u)] == w


def test_arc_doubling_rejects_nonterminal_root():
    with pytest.raises(StructureError):
        dcstp_to_dcsap(square_graph(), 1)


def test_arc_doubling_preserves_optimum():
    g = square_graph()
    assert brute_force_dcstp(g) == 3.0
    for root in sorted(g.terminals):
        assert brute_force_dcsap(dcstp_to_dcsap(g, root)) == 3.0


def test_arc_doubling_preserves_optimum_random(rng):
    for _ in range(40):
        g = random_connected_undirected(rng)
        want = brute_force_dcstp(g)
        for root in sorted(g.terminals):
            assert brute_force_dcsap(dcstp_to_dcsap(g, root)) == want


def test_bisect_finds_least_yes():
    calls = []

    def oracle(eps):
        calls.append(eps)
        return eps >= 7

    assert bisect_min_weight(oracle, 0, 20) == 7
    assert len(calls) <= math.ceil(math.log2(21)) + 1


def test_bisect_all_no():
    assert bisect_min_weight(lambda e: False, 0, 10) is None


def test_bisect_single_point():
    assert bisect_min_weight(lambda e: True, 3, 3) == 3


def test_bisect_input_checks():
    with pytest.raises(StructureError):
        bisect_min_weight(lambda e: True, 5, 2)
    with pytest.raises(StructureError):
        bisect_min_weight(lambda e: True, 0.5, 2)


def test_sr_to_dcsap_terminals():
    spec = GraphSpec(levels=1, copies_per_operator=1, variable_copies=1,
                     num_variables=2, constants=(), operators=ops("mul"))
    data = Dataset(X=((1.0, 2.0),), Y=(2.0,))
    red = sr_to_dcsap(SRInstance(dataset=data, spec=spec, eps=0.5))
    assert ROOT_ID in red.terminals
    assert red.graph.var_id(0, 0) in red.terminals
    assert len(red.terminals) == 2
    assert red.target == (2.0,)
    assert red.tol == 0.5
    # eps = 0 means exact matching up to the default numeric slack
    red0 = sr_to_dcsap(SRInstance(dataset=data, spec=spec, eps=0.0))
    assert 0 < red0.tol <= 1e-6


def test_sr_instance_dimension_check():
    spec = GraphSpec(levels=1, copies_per_operator=1, variable_copies=1,
                     num_variables=2, constants=(), operators=ops("mul"))
    with pytest.raises(StructureError):
        SRInstance(dataset=Dataset(X=((1.0,),), Y=(1.0,)), spec=spec, eps=0.1)
    with pytest.raises(StructureError):
        SRInstance(dataset=Dataset(X=((1.0, 2.0),), Y=(1.0,)), spec=spec,
                   eps=-1.0)


def test_instance_text_round_trip_directed():
    g = WeightedDigraph(3, ((0, 1, 1.5), (1, 2, 2.0)), 0, frozenset({0, 2}),
                        degree_bound=(2, 2, 1))
    text = instance_to_text(g)
    back = instance_from_text(text)
    assert isinstance(back, WeightedDigraph)
    assert back.arcs == g.arcs
    assert back.root == g.root
    assert back.terminals == g.terminals
    assert back.degree_bound == g.degree_bound
    assert instance_to_text(back) == text


def test_instance_text_round_trip_undirected():
    g = square_graph()
    back = instance_from_text(instance_to_text(g))
    assert isinstance(back, UndirectedGraph)
    assert set(back.edges) == set(g.edges)
    assert back.terminals == g.terminals


def test_instance_file_io(tmp_path):
    g = square_graph()
    p = tmp_path / "inst.txt"
    write_instance(g, p)
    assert set(read_instance(p).edges) == set(g.edges)


def test_instance_text_rejects_malformed():
    for bad in ["", "wrong header\n", "srsteiner-instance v1\ntype nope\n",
                "srsteiner-instance v1\ntype directed\nvertices x\n"]:
        with pytest.raises(StructureError):
            instance_from_text(bad)


def test_instance_weights_serialized_compactly():
    g = WeightedDigraph(2, ((0, 1, 3.0),), 0, frozenset({0, 1}))
    assert "0 1 3\n" in instance_to_text(g)
