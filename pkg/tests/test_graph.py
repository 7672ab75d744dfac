import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cubenet.graph import (
    GenParams,
    GenTrace,
    Graph,
    GraphError,
    NodeAttr,
    NodeTable,
    read_edge_list,
    read_trace,
    write_edge_list,
    write_trace,
)


def test_single_insertion():
    g = Graph(3)
    assert g.add_edge(0, 1)
    assert g.m == 1
    assert g.adjacency[0] == [1]


def test_duplicate_insertion_is_idempotent():
    g = Graph(3)
    g.add_edge(0, 1)
    assert not g.add_edge(0, 1)
    assert not g.add_edge(1, 0)
    assert g.m == 1
    assert g.duplicates == 2


def test_self_loop_rejected():
    with pytest.raises(GraphError):
        Graph(3).add_edge(2, 2)
    with pytest.raises(GraphError):
        Graph(3).add_edges([0, 2], [1, 2])


def test_out_of_range_rejected():
    with pytest.raises(GraphError):
        Graph(3).add_edge(0, 3)
    with pytest.raises(GraphError):
        Graph(3).add_edges([0], [-1])


def test_frozen_graph_is_immutable():
    g = Graph.from_edges(3, [(0, 1)])
    with pytest.raises(GraphError):
        g.add_edge(1, 2)


def test_degrees(triangle, star5):
    assert [triangle.degree(u) for u in range(3)] == [2, 2, 2]
    assert star5.degree(0) == 5
    assert Graph(2).degree(1) == 0


def test_bulk_duplicates_counted():
    g = Graph(4)
    g.add_edges([0, 1, 2, 0], [1, 0, 3, 1])
    g.freeze()
    assert g.m == 2
    assert g.duplicates == 2


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 30).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=120))))
def test_csr_invariants(case):
    n, pairs = case
    pairs = [(u, v) for u, v in pairs if u != v]
    g = Graph.from_edges(n, pairs)
    expected = {(min(u, v), max(u, v)) for u, v in pairs}
    assert g.m == len(expected)
    assert int(g.degrees().sum()) == 2 * g.m
    assert {tuple(e) for e in g.edge_array().tolist()} == expected
    for u in range(n):
        nb = g.neighbors(u)
        assert np.all(np.diff(nb) > 0)
        assert u not in nb.tolist()
        for v in nb.tolist():
            assert g.has_edge(v, u)


def test_equality_is_order_independent():
    a = Graph.from_edges(4, [(0, 1), (2, 3), (1, 2)])
    b = Graph.from_edges(4, [(3, 2), (2, 1), (1, 0)])
    assert a == b
    assert a != Graph.from_edges(4, [(0, 1)])


def test_edge_list_round_trip(tmp_path):
    g = Graph.from_edges(6, [(0, 5), (1, 2), (2, 4)])
    path = tmp_path / "edges.csv"
    write_edge_list(g, path)
    assert path.read_text() == "0,5\n1,2\n2,4\n"
    assert read_edge_list(path, 6) == g


@pytest.mark.parametrize("bad", ["0,1\n1;2\n", "0,1\n1,x\n", "0,1\n1,2,3\n", "0,1\n3,3\n"])
def test_malformed_edge_list_cites_line(tmp_path, bad):
    path = tmp_path / "edges.csv"
    path.write_text(bad)
    with pytest.raises(GraphError, match="line 2"):
        read_edge_list(path)


def test_edge_list_node_count_check(tmp_path):
    path = tmp_path / "edges.csv"
    path.write_text("0,7\n")
    with pytest.raises(GraphError):
        read_edge_list(path, n=5)


def test_trace_round_trip(tmp_path):
    tr = GenTrace.from_lists([0, 1, 2], [[], [0], [0, 1]], [[], [0], [1]])
    path = tmp_path / "trace.txt"
    write_trace(tr, path)
    assert path.read_text().splitlines() == ["0,0,,", "1,1,0,0", "2,2,0|1,1"]
    assert read_trace(path) == tr
    assert tr.pnbr_of(2).tolist() == [0, 1]
    assert tr.accepted_of(0).tolist() == []


def test_trace_malformed(tmp_path):
    path = tmp_path / "trace.txt"
    path.write_text("0,0,,\n5,1,0,0\n")
    with pytest.raises(GraphError, match="line 2"):
        read_trace(path)


def test_node_attr_requires_positive_influence():
    with pytest.raises(ValueError):
        NodeAttr(0.0, (1.0,), 0.0)
    table = NodeTable.from_attrs([NodeAttr(1.0, (0.1, 0.2), 2.0), NodeAttr(0.5, (0.3, 0.4), 1.0)])
    assert table.geo_dim == 2
    assert table[1] == NodeAttr(0.5, (0.3, 0.4), 1.0)
    assert table.take([1, 0]).t.tolist() == [0.5, 1.0]


@pytest.mark.parametrize("kw", [dict(eta=0), dict(theta=-1), dict(minkowski_p=0.5), dict(gamma_coeff=0),
                                dict(mu_t=-1), dict(k_floor=-1), dict(seed=-1), dict(gamma_kind="bogus")])
def test_genparams_validation(kw):
    with pytest.raises(ValueError):
        GenParams(**kw)


def test_genparams_to_dict_round_trip():
    p = GenParams(eta=10, gamma_kind="constant", seed=3)
    assert GenParams(**p.to_dict()) == p
