"""Potential-neighbour search: candidate counts, search-space points and three index backends."""

from __future__ import annotations

import math
from enum import Enum
from pathlib import Path

import numpy as np

from cubenet.graph import NodeAttr, NodeTable


class Backend(str, Enum):
    KNN = "knn"
    LSH = "lsh"
    PRECOMPUTED = "precomputed"


class NeighborConfigError(ValueError):
    pass


def compute_k(inf: float, eta: float, theta: float, n_prev: int, k_floor: int = 1) -> int:
    """Number of potential neighbours for an arrival with influence ``inf``."""
    if n_prev <= 0:
        return 0
    return min(n_prev, max(k_floor, math.floor(eta * inf**theta)))


def compute_k_all(inf: np.ndarray, eta: float, theta: float, k_floor: int = 1) -> np.ndarray:
    """Vectorised :func:`compute_k` for arrivals 0..n-1 (arrival ``t`` has ``t`` predecessors)."""
    raw = np.floor(eta * np.asarray(inf, dtype=np.float64) ** theta)
    raw = np.maximum(raw, k_floor)
    n_prev = np.arange(raw.shape[0], dtype=np.float64)
    return np.minimum(raw, n_prev).astype(np.int64)


def make_query_point(attr: NodeAttr, mu_t: float, mu_c: float) -> np.ndarray:
    return np.array([mu_t * attr.t, *(mu_c * x for x in attr.c)], dtype=np.float64)


def query_points(nodes: NodeTable, mu_t: float, mu_c: float) -> np.ndarray:
    """All search-space points at once, shape (n, 1 + geo_dim)."""
    return np.column_stack([mu_t * nodes.t, mu_c * nodes.c])


def minkowski_distance(a, b, p: float = 2.0) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(_minkowski_rows(a[None, :], b, p)[0])


def _minkowski_rows(pts: np.ndarray, q: np.ndarray, p: float) -> np.ndarray:
    diff = np.abs(pts - q)
    if p == 2:
        return np.sqrt(np.einsum("ij,ij->i", diff, diff))
    if p == 1:
        return diff.sum(axis=1)
    if math.isinf(p):
        return diff.max(axis=1) if diff.shape[1] else np.zeros(diff.shape[0])
    return (diff**p).sum(axis=1) ** (1.0 / p)


def _k_smallest(d: np.ndarray, ids: np.ndarray, k: int) -> np.ndarray:
    """Indices into ``d`` of the k smallest values, ties broken by smaller id, distance-ranked."""
    if k <= 0 or d.size == 0:
        return np.zeros(0, dtype=np.int64)
    if k < d.size:
        kth = np.partition(d, k - 1)[k - 1]
        sel = np.flatnonzero(d <= kth)
    else:
        sel = np.arange(d.size)
    order = np.lexsort((ids[sel], d[sel]))
    return sel[order[:k]]


class _PointStore:
    """Growable buffer of (id, point) rows."""

    def __init__(self, dim: int, capacity: int = 1024):
        self.dim = dim
        self.size = 0
        self._pts = np.empty((max(capacity, 1), dim))
        self._ids = np.empty(max(capacity, 1), dtype=np.int64)
        self._known: set[int] = set()

    def add(self, node_id: int, q: np.ndarray) -> int:
        node_id = int(node_id)
        if node_id in self._known:
            raise KeyError(f"node {node_id} already inserted")
        q = np.asarray(q, dtype=np.float64)
        if q.shape != (self.dim,):
            raise ValueError(f"point has shape {q.shape}, index expects ({self.dim},)")
        if self.size == self._ids.shape[0]:
            cap = 2 * self.size
            self._pts = np.resize(self._pts, (cap, self.dim))
            self._ids = np.resize(self._ids, cap)
        self._pts[self.size] = q
        self._ids[self.size] = node_id
        self._known.add(node_id)
        self.size += 1
        return self.size - 1

    @property
    def pts(self) -> np.ndarray:
        return self._pts[: self.size]

    @property
    def ids(self) -> np.ndarray:
        return self._ids[: self.size]


class ExactKNNIndex:
    """Brute-force k nearest neighbours under a Minkowski distance."""

    kind = Backend.KNN

    def __init__(self, dim: int, p: float = 2.0, capacity: int = 1024):
        if dim < 1:
            raise NeighborConfigError("distance-based search needs at least one coordinate")
        self.p = p
        self._store = _PointStore(dim, capacity)

    def __len__(self) -> int:
        return self._store.size

    def insert(self, node_id: int, q) -> None:
        self._store.add(node_id, q)

    def query(self, q, k: int, node: int | None = None) -> np.ndarray:
        if k <= 0 or self._store.size == 0:
            return np.zeros(0, dtype=np.int64)
        d = _minkowski_rows(self._store.pts, np.asarray(q, dtype=np.float64), self.p)
        ids = self._store.ids
        return ids[_k_smallest(d, ids, k)]


class LSHIndex:
    """Approximate nearest neighbours with quantised random projections.

    Each of ``tables`` hash tables keys a point by ``bits`` projections
    ``floor((a . x + b) / width)`` with Gaussian ``a`` and ``b ~ U(0, width)``;
    each projection cuts space with a family of parallel random hyperplanes.
    A query ranks the union of its buckets by true distance and keeps the
    best ``k``.  If the buckets hold fewer than ``k`` points the result is
    padded with uniformly random inserted ids.

    ``bits = 0`` puts every point into one bucket, i.e. exhaustive search.
    """

    kind = Backend.LSH

    def __init__(self, dim: int, width: float, tables: int = 16, bits: int = 8,
                 p: float = 2.0, rng: np.random.Generator | None = None, capacity: int = 1024):
        if dim < 1:
            raise NeighborConfigError("distance-based search needs at least one coordinate")
        if tables < 1 or bits < 0:
            raise NeighborConfigError("need tables >= 1 and bits >= 0")
        if not width > 0:
            raise NeighborConfigError("bucket width must be positive")
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.p = p
        self.tables, self.bits, self.width = tables, bits, float(width)
        self._a = self.rng.standard_normal((tables * bits, dim))
        self._b = self.rng.uniform(0.0, self.width, tables * bits)
        self._mix = self.rng.integers(1, 2**62, size=bits, dtype=np.int64) | 1
        self._buckets: list[dict[int, list[int]]] = [{} for _ in range(tables)]
        self._store = _PointStore(dim, capacity)

    @classmethod
    def fitted(cls, points: np.ndarray, tables: int = 16, bits: int = 8, bucket_target: float = 48.0,
               p: float = 2.0, rng: np.random.Generator | None = None) -> LSHIndex:
        """Build an empty index whose width gives ``points`` the requested bucket load.

        Load is the mean bucket size seen by a random point, i.e. the
        size-biased occupancy sum(c^2)/n, averaged over the tables.
        """
        points = np.asarray(points, dtype=np.float64)
        rng = rng if rng is not None else np.random.default_rng(0)
        dim = points.shape[1]
        span = float(np.max(np.ptp(points, axis=0))) if points.shape[0] > 1 else 1.0
        span = span if span > 0 else 1.0
        # Width-independent hash parameters so each probe differs only in width.
        probe = cls(dim, 1.0, tables, bits, p, rng, capacity=max(points.shape[0], 1))
        if bits == 0 or points.shape[0] <= bucket_target:
            probe.width = span * 4
            probe._b *= probe.width
            return probe
        unit_b = probe._b.copy()

        def load(w: float) -> float:
            keys = probe._keys(points, w, unit_b * w)
            total = 0.0
            for j in range(min(tables, 4)):
                _, counts = np.unique(keys[:, j], return_counts=True)
                total += float(np.dot(counts, counts)) / points.shape[0]
            return total / min(tables, 4)

        lo, hi = span * 1e-4, span * 4
        for _ in range(40):
            mid = math.sqrt(lo * hi)
            if load(mid) < bucket_target:
                lo = mid
            else:
                hi = mid
            if hi / lo < 1.02:
                break
        w = math.sqrt(lo * hi)
        probe.width = w
        probe._b = unit_b * w
        return probe

    def _keys(self, pts: np.ndarray, width: float | None = None, b: np.ndarray | None = None) -> np.ndarray:
        """Bucket keys, shape (len(pts), tables)."""
        if self.bits == 0:
            return np.zeros((pts.shape[0], self.tables), dtype=np.int64)
        width = self.width if width is None else width
        b = self._b if b is None else b
        proj = np.floor((pts @ self._a.T + b) / width).astype(np.int64)
        proj = proj.reshape(pts.shape[0], self.tables, self.bits)
        return (proj * self._mix).sum(axis=2)

    def __len__(self) -> int:
        return self._store.size

    def insert(self, node_id: int, q) -> None:
        q = np.asarray(q, dtype=np.float64)
        pos = self._store.add(node_id, q)
        for table, key in zip(self._buckets, self._keys(q[None, :])[0].tolist()):
            bucket = table.get(key)
            if bucket is None:
                table[key] = [pos]
            else:
                bucket.append(pos)

    def candidates(self, q) -> np.ndarray:
        """Positions found in the query's buckets (deduplicated, ascending)."""
        q = np.asarray(q, dtype=np.float64)
        hits = [table.get(key) for table, key in zip(self._buckets, self._keys(q[None, :])[0].tolist())]
        hits = [h for h in hits if h]
        if not hits:
            return np.zeros(0, dtype=np.int64)
        return np.unique(np.fromiter((x for h in hits for x in h), dtype=np.int64))

    def query(self, q, k: int, node: int | None = None) -> np.ndarray:
        size = self._store.size
        if k <= 0 or size == 0:
            return np.zeros(0, dtype=np.int64)
        q = np.asarray(q, dtype=np.float64)
        ids = self._store.ids
        cand = self.candidates(q)
        if cand.size:
            d = _minkowski_rows(self._store.pts[cand], q, self.p)
            picked = cand[_k_smallest(d, ids[cand], k)]
        else:
            picked = cand
        need = min(k, size) - picked.size
        if need > 0:
            picked = np.concatenate([picked, self._pad(picked, need, size)])
        return ids[picked]

    def _pad(self, taken: np.ndarray, need: int, size: int) -> np.ndarray:
        if taken.size + need >= size:
            rest = np.ones(size, dtype=bool)
            rest[taken] = False
            return self.rng.permutation(np.flatnonzero(rest))[:need]
        chosen: list[int] = []
        seen = set(taken.tolist())
        while len(chosen) < need:
            for x in self.rng.integers(0, size, size=2 * (need - len(chosen))).tolist():
                if x not in seen:
                    seen.add(x)
                    chosen.append(x)
                    if len(chosen) == need:
                        break
        return np.array(chosen, dtype=np.int64)


class PrecomputedIndex:
    """Potential neighbours supplied up front, one id list per node.

    A query for ``node`` returns its stored list restricted to ids already
    inserted, in stored order, truncated to ``k``.
    """

    kind = Backend.PRECOMPUTED

    def __init__(self, lists: dict[int, list[int]]):
        self._lists = {int(u): np.asarray(v, dtype=np.int64) for u, v in lists.items()}
        self._arrived: set[int] = set()

    def __len__(self) -> int:
        return len(self._arrived)

    def insert(self, node_id: int, q=None) -> None:
        node_id = int(node_id)
        if node_id in self._arrived:
            raise KeyError(f"node {node_id} already inserted")
        self._arrived.add(node_id)

    def query(self, q, k: int, node: int | None = None) -> np.ndarray:
        if node is None:
            raise NeighborConfigError("precomputed search needs the querying node id")
        if k <= 0:
            return np.zeros(0, dtype=np.int64)
        stored = self._lists.get(int(node))
        if stored is None or stored.size == 0:
            return np.zeros(0, dtype=np.int64)
        seen: set[int] = set()
        out = []
        for x in stored.tolist():
            if x in self._arrived and x != node and x not in seen:
                seen.add(x)
                out.append(x)
                if len(out) == k:
                    break
        return np.array(out, dtype=np.int64)


def read_pnbr_file(path) -> dict[int, list[int]]:
    """Parse ``node_id: id,id,id`` lines."""
    lists: dict[int, list[int]] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        head, sep, tail = line.partition(":")
        try:
            if not sep:
                raise ValueError
            node = int(head)
            ids = [int(x) for x in tail.split(",") if x.strip()]
        except ValueError:
            raise NeighborConfigError(f"{path}: line {lineno}: expected 'node_id: id,id,...'") from None
        if node in lists:
            raise NeighborConfigError(f"{path}: line {lineno}: node {node} listed twice")
        lists[node] = ids
    return lists


def write_pnbr_file(lists: dict[int, list[int]], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for node in sorted(lists):
            fh.write(f"{node}: {','.join(map(str, lists[node]))}\n")


def lsh_recall(idx_lsh, idx_exact, queries, k: int) -> float:
    """Mean fraction of the exact k nearest neighbours the approximate index returns."""
    queries = np.asarray(queries, dtype=np.float64)
    if queries.size == 0:
        raise ValueError("no queries")
    queries = queries.reshape(len(queries), -1)
    scores = []
    for q in queries:
        exact = idx_exact.query(q, k)
        if exact.size == 0:
            scores.append(1.0)
            continue
        approx = idx_lsh.query(q, k)
        scores.append(np.intersect1d(approx, exact).size / exact.size)
    return float(np.mean(scores))
