import math

import numpy as np
import pytest
from conftest import knn_oracle
from hypothesis import given, settings
from hypothesis import strategies as st

from cubenet.graph import NodeAttr
from cubenet.neighbors import (
    ExactKNNIndex,
    LSHIndex,
    NeighborConfigError,
    PrecomputedIndex,
    compute_k,
    compute_k_all,
    lsh_recall,
    make_query_point,
    minkowski_distance,
    read_pnbr_file,
    write_pnbr_file,
)

# Recall of the default LSH configuration (16 tables x 8 projections, bucket
# load 48) on 10^4 seeded uniform 2-D points with k = 40, measured at 0.9996.
# The threshold below keeps ample margin under that figure.
LSH_DEFAULT_RECALL_FLOOR = 0.5


def test_compute_k_examples():
    assert compute_k(1.0, 40, 1, 1000) == 40
    assert compute_k(30.0, 40, 1, 1000) == 1000
    assert compute_k(5.0, 40, 1, 0) == 0
    assert compute_k(0.001, 40, 1, 10, k_floor=1) == 1
    assert compute_k(0.001, 40, 1, 10, k_floor=0) == 0
    assert compute_k(0.999, 40, 1, 1000) == 39


def test_compute_k_all_matches_scalar():
    inf = np.random.default_rng(0).pareto(3, 300) + 1e-9
    vec = compute_k_all(inf, 40, 1.3, 1)
    assert vec.tolist() == [compute_k(x, 40, 1.3, t, 1) for t, x in enumerate(inf.tolist())]


def test_query_point_weights():
    a = NodeAttr(0.5, (0.2, 0.4), 1.0)
    assert make_query_point(a, 1, 1).tolist() == [0.5, 0.2, 0.4]
    assert make_query_point(a, 0, 1).tolist() == [0, 0.2, 0.4]
    assert make_query_point(a, 1, 0).tolist() == [0.5, 0, 0]


def test_minkowski_examples():
    assert minkowski_distance([1, 2], [1, 2]) == 0
    assert minkowski_distance([0, 0], [3, 4], 2) == 5
    assert minkowski_distance([0, 0], [3, 4], 1) == 7
    assert minkowski_distance([0, 0], [3, 4], math.inf) == 4
    assert minkowski_distance([0, 0], [3, 4], 3) == pytest.approx((27 + 64) ** (1 / 3))
    with pytest.raises(ValueError):
        minkowski_distance([0, 0], [1, 2, 3])


def test_exact_index_basics():
    idx = ExactKNNIndex(2)
    assert idx.query([0, 0], 3).tolist() == []
    idx.insert(0, [7.0, 7.0])
    assert idx.query([-100, 3], 1).tolist() == [0]
    with pytest.raises(KeyError):
        idx.insert(0, [1.0, 1.0])
    for i in range(1, 10):
        idx.insert(i, [float(i), 0.0])
    assert len(idx) == 10


def test_exact_index_small_pool():
    idx = ExactKNNIndex(2)
    for i, pt in enumerate([[0, 0], [1, 0], [5, 0]]):
        idx.insert(i, pt)
    assert idx.query([0.1, 0], 2).tolist() == [0, 1]
    assert idx.query([0.1, 0], 0).tolist() == []
    assert idx.query([0.1, 0], 10).tolist() == [0, 1, 2]


def test_ties_broken_by_smaller_id():
    idx = ExactKNNIndex(1)
    for i in (4, 2, 9, 1):
        idx.insert(i, [1.0])
    assert idx.query([0.0], 2).tolist() == [1, 2]


def test_exact_on_fifty_points():
    rng = np.random.default_rng(5)
    pts = rng.random((50, 3))
    idx = ExactKNNIndex(3)
    for i, x in enumerate(pts):
        idx.insert(i, x)
    pool = list(enumerate(pts.tolist()))
    for q in rng.random((20, 3)).tolist():
        assert idx.query(q, 10).tolist() == knn_oracle(pool, q, 10)


@settings(max_examples=80, deadline=None)
@given(
    st.integers(1, 200),
    st.integers(0, 2**32 - 1),
    st.sampled_from([1.0, 2.0, 3.0, math.inf]),
    st.booleans(),
)
def test_exact_matches_oracle_property(size, seed, p, coarse):
    rng = np.random.default_rng(seed)
    pts = rng.random((size, 2))
    if coarse:  # many exact distance ties
        pts = np.round(pts * 4) / 4
    ids = rng.permutation(10 * size)[:size]
    idx = ExactKNNIndex(2, p)
    for i, x in zip(ids.tolist(), pts):
        idx.insert(i, x)
    pool = list(zip(ids.tolist(), pts.tolist()))
    q = rng.random(2).tolist()
    for k in sorted({0, 1, size // 2, size, size + 3}):
        got = idx.query(q, k).tolist()
        assert got == knn_oracle(pool, q, k, p)
        assert len(got) == min(k, size)


def _pair(n, seed, bits=8, tables=16, bucket=48.0):
    rng = np.random.default_rng(seed)
    pts = rng.random((n, 2))
    lsh = LSHIndex.fitted(pts, tables, bits, bucket, rng=np.random.default_rng(seed + 1))
    exact = ExactKNNIndex(2)
    for i, x in enumerate(pts):
        lsh.insert(i, x)
        exact.insert(i, x)
    return lsh, exact, rng


def test_lsh_single_bucket_is_exhaustive():
    lsh, exact, rng = _pair(500, 1, bits=0, tables=1)
    assert lsh_recall(lsh, exact, rng.random((30, 2)), 25) == 1.0


def test_lsh_k_equal_pool_size():
    lsh, exact, rng = _pair(300, 2)
    assert lsh_recall(lsh, exact, rng.random((20, 2)), 300) == 1.0


def test_lsh_default_recall():
    lsh, exact, rng = _pair(10_000, 5)
    assert lsh_recall(lsh, exact, rng.random((200, 2)), 40) >= LSH_DEFAULT_RECALL_FLOOR


def test_lsh_result_size_and_padding():
    # a tiny bucket target forces underfilled buckets, so padding must kick in
    lsh, _, rng = _pair(2000, 3, bucket=2.0)
    for q in rng.random((20, 2)):
        res = lsh.query(q, 50)
        assert res.size == 50 == np.unique(res).size
        assert res.min() >= 0 and res.max() < 2000


def test_lsh_empty_and_zero():
    lsh = LSHIndex(2, 0.5)
    assert lsh.query([0, 0], 5).tolist() == []
    lsh.insert(0, [0.1, 0.1])
    assert lsh.query([0, 0], 0).tolist() == []
    assert lsh.query([9, 9], 3).tolist() == [0]


def test_lsh_validation():
    with pytest.raises(NeighborConfigError):
        LSHIndex(0, 1.0)
    with pytest.raises(NeighborConfigError):
        LSHIndex(2, 0.0)
    with pytest.raises(NeighborConfigError):
        LSHIndex(2, 1.0, tables=0)


def test_lsh_recall_needs_queries():
    lsh, exact, _ = _pair(10, 0)
    with pytest.raises(ValueError):
        lsh_recall(lsh, exact, [], 3)


def test_precomputed_filters_to_arrived():
    idx = PrecomputedIndex({3: [5, 0, 2, 0, 3, 1], 1: [0]})
    assert idx.query(None, 2, node=1).tolist() == []
    for i in range(3):
        idx.insert(i)
    assert idx.query(None, 10, node=3).tolist() == [0, 2, 1]
    assert idx.query(None, 2, node=3).tolist() == [0, 2]
    assert idx.query(None, 2, node=7).tolist() == []
    with pytest.raises(NeighborConfigError):
        idx.query(None, 2)


def test_pnbr_file_round_trip(tmp_path):
    lists = {0: [], 1: [0], 2: [1, 0]}
    path = tmp_path / "pnbr.txt"
    write_pnbr_file(lists, path)
    assert read_pnbr_file(path) == lists
    path.write_text("0: \n1 0,1\n")
    with pytest.raises(NeighborConfigError, match="line 2"):
        read_pnbr_file(path)
