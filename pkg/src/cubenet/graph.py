"""Shared domain types: node attributes, generation parameters, the graph and the generation trace."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class GraphError(ValueError):
    """Invalid graph operation (self-loop, out-of-range id, malformed file)."""


class GammaKind(str, Enum):
    SQRT_PRODUCT = "sqrt-product"
    CONSTANT = "constant"
    ALWAYS_ONE = "always-one"


@dataclass(frozen=True)
class NodeAttr:
    """Attributes of a single node: order key, geographic vector and influence."""

    t: float
    c: tuple[float, ...]
    inf: float

    def __post_init__(self):
        if not self.inf > 0:
            raise ValueError(f"influence must be positive, got {self.inf}")


class NodeTable:
    """Column-oriented node attributes for a whole cube, in arrival order.

    ``t`` has shape (n,), ``c`` has shape (n, dim) with ``dim`` possibly 0, and
    ``inf`` has shape (n,) with strictly positive entries.
    """

    def __init__(self, t, c, inf):
        t = np.asarray(t, dtype=np.float64).reshape(-1)
        inf = np.asarray(inf, dtype=np.float64).reshape(-1)
        n = t.shape[0]
        c = np.asarray(c, dtype=np.float64)
        if c.size == 0:
            c = np.zeros((n, 0))
        c = c.reshape(n, -1)
        if inf.shape[0] != n:
            raise ValueError("t, c and inf must have the same number of rows")
        if n and not np.all(inf > 0):
            raise ValueError("influence values must be strictly positive")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(c)) and np.all(np.isfinite(inf))):
            raise ValueError("node attributes must be finite")
        self.t, self.c, self.inf = t, c, inf

    @classmethod
    def from_attrs(cls, attrs: Sequence[NodeAttr]) -> NodeTable:
        dim = len(attrs[0].c) if attrs else 0
        if any(len(a.c) != dim for a in attrs):
            raise ValueError("all nodes need the same geographic dimension")
        return cls(
            [a.t for a in attrs],
            np.array([a.c for a in attrs], dtype=np.float64).reshape(len(attrs), dim),
            [a.inf for a in attrs],
        )

    def __len__(self) -> int:
        return self.t.shape[0]

    @property
    def geo_dim(self) -> int:
        return self.c.shape[1]

    def __getitem__(self, i: int) -> NodeAttr:
        return NodeAttr(float(self.t[i]), tuple(float(x) for x in self.c[i]), float(self.inf[i]))

    def take(self, order) -> NodeTable:
        order = np.asarray(order, dtype=np.int64)
        return NodeTable(self.t[order], self.c[order], self.inf[order])


@dataclass
class GenParams:
    """All knobs of one generation run.

    ``eta`` scales the global edge budget and ``theta`` sets how strongly
    influence spreads the per-node candidate count.  ``mu_t`` and ``mu_c``
    weight the order and geographic coordinates in the search space.
    ``gamma_coeff`` multiplies the pair acceptance probability and
    ``gamma_norm`` names the cube statistic influences are divided by.
    """

    eta: float = 40.0
    theta: float = 1.0
    mu_t: float = 3.0
    mu_c: float = 1.0
    minkowski_p: float = 2.0
    gamma_kind: GammaKind = GammaKind.SQRT_PRODUCT
    gamma_coeff: float = 0.3
    gamma_norm: str = "mean"
    k_floor: int = 1
    seed: int = 0

    def __post_init__(self):
        self.gamma_kind = GammaKind(self.gamma_kind)
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if not self.theta > 0:
            raise ValueError("theta must be positive")
        if self.mu_t < 0 or self.mu_c < 0:
            raise ValueError("attribute weights must be nonnegative")
        if not self.minkowski_p >= 1:
            raise ValueError("minkowski_p must be >= 1")
        if not self.gamma_coeff > 0:
            raise ValueError("gamma_coeff must be positive")
        if self.k_floor < 0:
            raise ValueError("k_floor must be nonnegative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["gamma_kind"] = self.gamma_kind.value
        return d


class Graph:
    """Undirected simple graph over nodes ``0..n-1``.

    Edges are collected while building and turned into a sorted CSR
    adjacency (``indptr``/``indices``) on :meth:`freeze`, which every read
    triggers implicitly.  After that the graph is immutable.

    >>> g = Graph(3)
    >>> g.add_edge(0, 1)
    True
    >>> g.add_edge(1, 0)
    False
    >>> g.m, g.degree(1), g.neighbors(0).tolist()
    (1, 1, [1])
    """

    def __init__(self, n: int):
        if n < 0:
            raise GraphError("node count must be nonnegative")
        self.n = int(n)
        self.duplicates = 0
        self._seen: set[int] = set()
        self._single: list[tuple[int, int]] = []
        self._chunks: list[tuple[np.ndarray, np.ndarray]] = []
        self._indptr: np.ndarray | None = None
        self._indices: np.ndarray | None = None

    # building

    def _check_open(self):
        if self._indptr is not None:
            raise GraphError("graph is frozen; no mutation after construction")

    def add_edge(self, u: int, v: int) -> bool:
        """Insert edge {u, v}; return False if it was already present."""
        self._check_open()
        u, v = int(u), int(v)
        if u == v:
            raise GraphError(f"self-loop on node {u} rejected")
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise GraphError(f"edge ({u}, {v}) out of range for n={self.n}")
        if u > v:
            u, v = v, u
        key = u * self.n + v
        if key in self._seen:
            self.duplicates += 1
            return False
        self._seen.add(key)
        self._single.append((u, v))
        return True

    def add_edges(self, us, vs) -> None:
        """Bulk insertion; duplicates are dropped and counted on freeze."""
        self._check_open()
        us = np.asarray(us, dtype=np.int64).reshape(-1)
        vs = np.asarray(vs, dtype=np.int64).reshape(-1)
        if us.shape != vs.shape:
            raise GraphError("endpoint arrays differ in length")
        if us.size == 0:
            return
        if np.any(us == vs):
            bad = int(us[np.argmax(us == vs)])
            raise GraphError(f"self-loop on node {bad} rejected")
        lo, hi = min(us.min(), vs.min()), max(us.max(), vs.max())
        if lo < 0 or hi >= self.n:
            raise GraphError(f"edge endpoint out of range for n={self.n}")
        self._chunks.append((np.minimum(us, vs), np.maximum(us, vs)))

    def freeze(self) -> Graph:
        if self._indptr is not None:
            return self
        parts_u = [c[0] for c in self._chunks]
        parts_v = [c[1] for c in self._chunks]
        if self._single:
            s = np.array(self._single, dtype=np.int64)
            parts_u.append(s[:, 0])
            parts_v.append(s[:, 1])
        if parts_u:
            u = np.concatenate(parts_u)
            v = np.concatenate(parts_v)
        else:
            u = v = np.zeros(0, dtype=np.int64)
        raw = u.size
        keys = np.unique(u * self.n + v)
        self.duplicates += raw - keys.size
        u, v = keys // self.n, keys % self.n
        self._chunks, self._single, self._seen = [], [], set()
        self._build_csr(u, v)
        return self

    def _build_csr(self, u: np.ndarray, v: np.ndarray) -> None:
        idx_dtype = np.int32 if self.n < 2**31 else np.int64
        src = np.concatenate([u, v])
        dst = np.concatenate([v, u])
        order = np.lexsort((dst, src))
        counts = np.bincount(src, minlength=self.n)
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        self._indptr = indptr
        self._indices = dst[order].astype(idx_dtype)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]] | np.ndarray) -> Graph:
        g = cls(n)
        arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        if arr.size:
            g.add_edges(arr[:, 0], arr[:, 1])
        return g.freeze()

    # reading

    @property
    def indptr(self) -> np.ndarray:
        self.freeze()
        return self._indptr

    @property
    def indices(self) -> np.ndarray:
        self.freeze()
        return self._indices

    @property
    def m(self) -> int:
        return int(self.indptr[-1]) // 2

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def degree(self, u: int) -> int:
        if not 0 <= u < self.n:
            raise GraphError(f"node {u} out of range for n={self.n}")
        return int(self.indptr[u + 1] - self.indptr[u])

    def neighbors(self, u: int) -> np.ndarray:
        if not 0 <= u < self.n:
            raise GraphError(f"node {u} out of range for n={self.n}")
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    @property
    def adjacency(self) -> list[list[int]]:
        return [self.neighbors(u).tolist() for u in range(self.n)]

    def edge_array(self) -> np.ndarray:
        """All edges as an (m, 2) array with u < v, in lexicographic order."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees())
        dst = self.indices.astype(np.int64)
        keep = src < dst
        return np.column_stack([src[keep], dst[keep]])

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        i = np.searchsorted(nb, v)
        return bool(i < nb.size and nb[i] == v)

    def to_scipy(self):
        from scipy.sparse import csr_matrix

        data = np.ones(self.indices.size, dtype=np.int32)
        return csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )

    def __repr__(self) -> str:
        state = f"m={self.m}" if self._indptr is not None else "building"
        return f"Graph(n={self.n}, {state})"


def write_edge_list(g: Graph, path) -> None:
    """Write "u,v" lines with u < v in ascending order, no header."""
    edges = g.edge_array()
    with open(path, "w", encoding="utf-8") as fh:
        if edges.size:
            np.savetxt(fh, edges, fmt="%d", delimiter=",")


def read_edge_list(path, n: int | None = None) -> Graph:
    """Read an edge list written by :func:`write_edge_list`.

    ``n`` defaults to one more than the largest id seen.  Malformed lines raise
    :class:`GraphError` naming the 1-based line number.
    """
    us, vs = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            try:
                if len(parts) != 2:
                    raise ValueError
                u, v = int(parts[0]), int(parts[1])
                if u < 0 or v < 0:
                    raise ValueError
            except ValueError:
                raise GraphError(f"{path}: line {lineno}: malformed edge {line!r}") from None
            if u == v:
                raise GraphError(f"{path}: line {lineno}: self-loop {line!r}")
            us.append(u)
            vs.append(v)
    top = max(max(us, default=-1), max(vs, default=-1)) + 1
    if n is None:
        n = top
    elif top > n:
        raise GraphError(f"{path}: node id {top - 1} out of range for n={n}")
    g = Graph(n)
    g.add_edges(np.array(us, dtype=np.int64), np.array(vs, dtype=np.int64))
    return g.freeze()


@dataclass
class GenTrace:
    """Per-arrival log: candidate count, potential neighbours and accepted edges.

    Stored flat: ids for arrival ``t`` live in ``pnbr[pnbr_ptr[t]:pnbr_ptr[t+1]]``
    and likewise for ``accepted``.  Node id equals arrival index.
    """

    k: np.ndarray
    pnbr_ptr: np.ndarray
    pnbr: np.ndarray
    acc_ptr: np.ndarray
    accepted: np.ndarray
    extra: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.k.shape[0]

    def pnbr_of(self, t: int) -> np.ndarray:
        return self.pnbr[self.pnbr_ptr[t]:self.pnbr_ptr[t + 1]]

    def accepted_of(self, t: int) -> np.ndarray:
        return self.accepted[self.acc_ptr[t]:self.acc_ptr[t + 1]]

    @classmethod
    def from_lists(cls, ks, pnbrs, accs) -> GenTrace:
        def flat(lists):
            ptr = np.zeros(len(lists) + 1, dtype=np.int64)
            np.cumsum([len(x) for x in lists], out=ptr[1:])
            ids = np.concatenate([np.asarray(x, dtype=np.int64) for x in lists]) if lists else np.zeros(0, np.int64)
            return ptr, ids.astype(np.int64)

        pp, p = flat(pnbrs)
        ap, a = flat(accs)
        return cls(np.asarray(ks, dtype=np.int64), pp, p, ap, a)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GenTrace):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in ("k", "pnbr_ptr", "pnbr", "acc_ptr", "accepted")
        )


def _join(ids: np.ndarray) -> str:
    return "|".join(map(str, ids.tolist()))


def write_trace(trace: GenTrace, path) -> None:
    """One line per arrival: ``node_id,k,pnbr_ids,edge_ids`` with ``|``-joined id lists."""
    with open(path, "w", encoding="utf-8") as fh:
        for t in range(trace.n):
            fh.write(f"{t},{int(trace.k[t])},{_join(trace.pnbr_of(t))},{_join(trace.accepted_of(t))}\n")


def read_trace(path) -> GenTrace:
    ks, pnbrs, accs = [], [], []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split(",")
        try:
            if len(parts) != 4 or int(parts[0]) != len(ks):
                raise ValueError
            ks.append(int(parts[1]))
            pnbrs.append([int(x) for x in parts[2].split("|")] if parts[2] else [])
            accs.append([int(x) for x in parts[3].split("|")] if parts[3] else [])
        except ValueError:
            raise GraphError(f"{path}: line {lineno}: malformed trace record") from None
    return GenTrace.from_lists(ks, pnbrs, accs)
