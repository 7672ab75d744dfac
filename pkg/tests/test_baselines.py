import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cubenet.baselines import gen_ba, gen_configuration, gen_er, gen_small_world, powerlaw_degrees
from cubenet.metrics import clustering_avg


def test_er_extremes():
    assert gen_er(10, 0.0).m == 0
    assert gen_er(4, 1.0).m == 6
    with pytest.raises(ValueError):
        gen_er(4, 1.5)


def test_er_edge_count_within_four_sigma():
    pairs = 1000 * 999 // 2
    mean, sd = pairs * 0.01, math.sqrt(pairs * 0.01 * 0.99)
    assert abs(gen_er(1000, 0.01, seed=3).m - mean) <= 4 * sd


def test_small_world_edge_count():
    assert gen_small_world(1000, 8, 0.3, seed=0).m == 4000


def test_ring_lattice():
    g = gen_small_world(10, 4, 0.0)
    assert clustering_avg(g) == pytest.approx(3 * (4 - 2) / (4 * (4 - 1)), abs=1e-12)
    assert set(g.degrees().tolist()) == {4}


def test_small_world_validation():
    with pytest.raises(ValueError):
        gen_small_world(10, 3, 0.1)
    with pytest.raises(ValueError):
        gen_small_world(4, 4, 0.1)


@settings(max_examples=40, deadline=None)
@given(st.integers(5, 80), st.integers(1, 2), st.floats(0, 1), st.integers(0, 2**31))
def test_small_world_stays_simple(n, half, p_rw, seed):
    k_ring = 2 * half
    g = gen_small_world(n, k_ring, p_rw, seed)
    assert g.m == n * k_ring // 2
    assert g.duplicates == 0
    assert all(u not in g.neighbors(u).tolist() for u in range(n))


@pytest.mark.parametrize("n, m_attach, edges", [(500, 15, 7275), (1000, 15, 14775), (3, 1, 2)])
def test_ba_edge_counts(n, m_attach, edges):
    g = gen_ba(n, m_attach, seed=1)
    assert g.m == edges
    assert int(g.degrees().sum()) == 2 * m_attach * (n - m_attach)


def test_ba_small_is_tree():
    g = gen_ba(3, 1)
    assert g.m == 2 and np.all(g.degrees() >= 1)


def test_ba_validation():
    with pytest.raises(ValueError):
        gen_ba(5, 0)
    with pytest.raises(ValueError):
        gen_ba(5, 5)


def test_baselines_deterministic():
    assert gen_ba(400, 4, seed=5) == gen_ba(400, 4, seed=5)
    assert gen_er(200, 0.05, seed=5) == gen_er(200, 0.05, seed=5)
    assert gen_small_world(200, 6, 0.3, seed=5) == gen_small_world(200, 6, 0.3, seed=5)
    a, _ = gen_configuration([3, 2, 2, 1, 1, 1], seed=5)
    b, _ = gen_configuration([3, 2, 2, 1, 1, 1], seed=5)
    assert a == b


def test_configuration_single_edge():
    g, rep = gen_configuration([1, 1])
    assert g.edge_array().tolist() == [[0, 1]]
    assert (rep.raw_m, rep.simple_m, rep.self_loops, rep.multi_edges) == (1, 1, 0, 0)


def _matchings(stubs):
    if not stubs:
        yield []
        return
    first, rest = stubs[0], stubs[1:]
    for i, other in enumerate(rest):
        for tail in _matchings(rest[:i] + rest[i + 1:]):
            yield [(first, other)] + tail


def test_configuration_three_twos_matches_enumeration():
    outcomes = set()
    for pairs in _matchings([0, 0, 1, 1, 2, 2]):
        simple = frozenset((min(u, v), max(u, v)) for u, v in pairs if u != v)
        loops = sum(u == v for u, v in pairs)
        outcomes.add((simple, loops))
    seen = set()
    for seed in range(60):
        g, rep = gen_configuration([2, 2, 2], seed)
        key = (frozenset(tuple(e) for e in g.edge_array().tolist()), rep.self_loops)
        assert key in outcomes
        assert rep.raw_m == 3
        assert rep.simple_m + rep.self_loops + rep.multi_edges == rep.raw_m
        seen.add(key)
    assert (frozenset({(0, 1), (1, 2), (0, 2)}), 0) in seen
    assert len(seen) > 1


def test_configuration_odd_sum():
    with pytest.raises(ValueError):
        gen_configuration([1, 1, 1])
    with pytest.warns(UserWarning):
        _, rep = gen_configuration([1, 1, 1], auto_repair=True)
    assert rep.repaired and rep.degree_sum == 4


def test_powerlaw_sampler_raw_edge_count():
    deg = powerlaw_degrees(1000, 14.6, seed=0)
    if deg.sum() % 2:
        deg[int(np.argmax(deg))] += 1
    _, rep = gen_configuration(deg, seed=0)
    assert abs(rep.raw_m - 7296) / 7296 <= 0.20
