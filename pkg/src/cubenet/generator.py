"""The arrival loop: size each node's candidate set, search it, and accept edges by influence."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass

import numpy as np

from cubenet.graph import GammaKind, GenParams, GenTrace, Graph, NodeTable
from cubenet.neighbors import (
    Backend,
    ExactKNNIndex,
    LSHIndex,
    NeighborConfigError,
    PrecomputedIndex,
    compute_k_all,
    query_points,
)

log = logging.getLogger(__name__)

NORMALIZERS = {
    "max": np.max,
    "mean": np.mean,
    "median": np.median,
}


@dataclass(frozen=True)
class GammaFn:
    """Edge acceptance probability for a pair of influence values."""

    kind: GammaKind
    coeff: float
    normalizer: float

    @classmethod
    def for_nodes(cls, inf: np.ndarray, params: GenParams) -> GammaFn:
        try:
            stat = NORMALIZERS[params.gamma_norm]
        except KeyError:
            raise ValueError(f"unknown gamma normalizer {params.gamma_norm!r}") from None
        return cls(params.gamma_kind, params.gamma_coeff, float(stat(inf)))

    def __call__(self, a: float, b: float) -> float:
        if not (a > 0 and b > 0):
            raise ValueError("influence values must be positive")
        return float(self.many(a, np.array([b], dtype=np.float64))[0])

    def many(self, a: float, bs: np.ndarray) -> np.ndarray:
        if self.kind is GammaKind.ALWAYS_ONE:
            return np.ones(bs.shape[0])
        if self.kind is GammaKind.CONSTANT:
            return np.full(bs.shape[0], min(1.0, self.coeff))
        return np.minimum(1.0, self.coeff * np.sqrt(a * bs) / self.normalizer)


def gamma_eval(g: GammaFn, a: float, b: float) -> float:
    return g(a, b)


@dataclass
class LSHOptions:
    tables: int = 16
    bits: int = 8
    bucket_target: float = 48.0


def build_index(backend: Backend | str, points: np.ndarray, params: GenParams, rng: np.random.Generator,
                lsh: LSHOptions | None = None, pnbr_lists: dict | None = None):
    backend = Backend(backend)
    if backend is Backend.PRECOMPUTED:
        if pnbr_lists is None:
            raise NeighborConfigError("precomputed backend needs a potential-neighbour file")
        return PrecomputedIndex(pnbr_lists)
    if points.shape[1] < 2 and params.mu_t == 0:
        raise NeighborConfigError("search space is empty: no geographic columns and mu_t = 0")
    if points.shape[1] < 2:
        raise NeighborConfigError(f"{backend.value} backend needs at least one geographic column")
    if backend is Backend.KNN:
        return ExactKNNIndex(points.shape[1], params.minkowski_p, capacity=points.shape[0])
    lsh = lsh or LSHOptions()
    return LSHIndex.fitted(points, lsh.tables, lsh.bits, lsh.bucket_target, params.minkowski_p, rng)


def generate(nodes: NodeTable, params: GenParams, backend: Backend | str = Backend.KNN, *,
             lsh: LSHOptions | None = None, pnbr_lists: dict | None = None,
             record_trace: bool = True) -> tuple[Graph, GenTrace | None]:
    """Run the arrival loop over ``nodes`` (already in arrival order).

    Random stream consumption, from one generator seeded with ``params.seed``:
    LSH hash parameters first (LSH backend only), then for every arrival the
    LSH padding draws (if any) followed by one uniform per potential
    neighbour in ascending id order.
    """
    n = len(nodes)
    if n == 0:
        raise ValueError("cannot generate from an empty cube")
    rng = np.random.default_rng(params.seed)
    points = query_points(nodes, params.mu_t, params.mu_c)
    index = build_index(backend, points, params, rng, lsh, pnbr_lists)
    gamma = GammaFn.for_nodes(nodes.inf, params)
    ks = compute_k_all(nodes.inf, params.eta, params.theta, params.k_floor)
    inf = nodes.inf

    src_parts: list[np.ndarray] = []
    dst_parts: list[np.ndarray] = []
    pnbr_parts: list[np.ndarray] = []
    pnbr_len = np.zeros(n, dtype=np.int64)
    acc_len = np.zeros(n, dtype=np.int64)
    empty = np.zeros(0, dtype=np.int64)
    t0 = time.perf_counter()
    for t in range(n):
        k = int(ks[t])
        if k:
            cand = np.sort(index.query(points[t], k, node=t))
        else:
            cand = empty
        if cand.size:
            probs = gamma.many(inf[t], inf[cand])
            acc = cand[rng.random(cand.size) < probs]
            if acc.size:
                dst_parts.append(acc)
                src_parts.append(np.full(acc.size, t, dtype=np.int64))
                acc_len[t] = acc.size
            if record_trace:
                pnbr_parts.append(cand)
                pnbr_len[t] = cand.size
        index.insert(t, points[t])
    elapsed = time.perf_counter() - t0
    log.debug("generated %d arrivals in %.2fs", n, elapsed)

    g = Graph(n)
    if src_parts:
        g.add_edges(np.concatenate(src_parts), np.concatenate(dst_parts))
    g.freeze()
    if g.duplicates:
        log.warning("search backend produced %d duplicate edges", g.duplicates)

    trace = None
    if record_trace:
        def ptr(lengths):
            out = np.zeros(n + 1, dtype=np.int64)
            np.cumsum(lengths, out=out[1:])
            return out

        trace = GenTrace(
            k=ks,
            pnbr_ptr=ptr(pnbr_len),
            pnbr=np.concatenate(pnbr_parts) if pnbr_parts else empty,
            acc_ptr=ptr(acc_len),
            accepted=np.concatenate(dst_parts) if dst_parts else empty,
            extra={"model": "fgm", "loop_seconds": elapsed},
        )
    return g, trace


def _arrivals_containing(trace: GenTrace, gnode: int, ids: np.ndarray, ptr: np.ndarray) -> np.ndarray:
    pos = np.flatnonzero(ids == gnode)
    return np.searchsorted(ptr, pos, side="right") - 1


def per_arrival_probability(trace: GenTrace, inf: np.ndarray | None, gamma: GammaFn | None,
                            gnode: int, mode: str = "probability") -> np.ndarray:
    """Edge-forming probability between ``gnode`` and every later arrival.

    Entry ``i`` belongs to arrival ``gnode + 1 + i``.  For generator traces it
    is the acceptance probability when ``gnode`` was a potential neighbour and
    0 otherwise (``mode="membership"`` gives the 0/1 indicator instead).
    Preferential-attachment traces give ``m * deg(gnode) / sum(deg)`` at
    each arrival.
    """
    n = trace.n
    if not 0 <= gnode < n:
        raise IndexError(f"gnode {gnode} out of range for {n} arrivals")
    later = n - gnode - 1
    out = np.zeros(later)
    if later == 0:
        return out
    if trace.extra.get("model") == "ba":
        return _ba_probability(trace, gnode)
    taus = _arrivals_containing(trace, gnode, trace.pnbr, trace.pnbr_ptr)
    taus = taus[taus > gnode]
    if mode == "membership":
        out[taus - gnode - 1] = 1.0
    elif mode == "probability":
        if gamma is None or inf is None:
            raise ValueError("probability mode needs influence values and the acceptance function")
        out[taus - gnode - 1] = [gamma(inf[tau], inf[gnode]) for tau in taus]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return out


def _ba_probability(trace: GenTrace, gnode: int) -> np.ndarray:
    n = trace.n
    m_attach = int(trace.extra["m_attach"])
    # degree of gnode just before each arrival, and total degree before each arrival
    created = np.diff(trace.acc_ptr)
    total_before = 2 * np.concatenate([[0], np.cumsum(created)[:-1]])
    hits = np.zeros(n, dtype=np.int64)
    taus = _arrivals_containing(trace, gnode, trace.accepted, trace.acc_ptr)
    np.add.at(hits, taus, 1)
    hits[gnode] += created[gnode]
    deg_before = np.concatenate([[0], np.cumsum(hits)[:-1]])
    taus = np.arange(gnode + 1, n)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(total_before[taus] > 0, m_attach * deg_before[taus] / total_before[taus], 0.0)
    # the first attaching arrival links to every seed node
    p[taus == m_attach] = 1.0
    return np.minimum(p, 1.0)


def decay_probability_series(trace: GenTrace, inf: np.ndarray | None, gamma: GammaFn | None,
                             gnode: int, window: int, mode: str = "probability") -> list[tuple[int, float]]:
    """Per-arrival probabilities for ``gnode`` averaged over consecutive windows.

    Returns ``(offset, mean)`` pairs where ``offset`` is the first arrival
    offset (1-based, relative to ``gnode``) in each window.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    probs = per_arrival_probability(trace, inf, gamma, gnode, mode)
    out = []
    for start in range(0, probs.size, window):
        out.append((start + 1, float(probs[start:start + window].mean())))
    return out


def last_nonzero_offset(trace: GenTrace, gnode: int) -> int:
    """Largest arrival offset at which ``gnode`` is still a potential neighbour (0 if never)."""
    taus = _arrivals_containing(trace, gnode, trace.pnbr, trace.pnbr_ptr)
    taus = taus[taus > gnode]
    return int(taus.max() - gnode) if taus.size else 0


def edge_budget(nodes: NodeTable, params: GenParams) -> int:
    """Sum of candidate counts over all arrivals; an upper bound on the edge count."""
    return int(compute_k_all(nodes.inf, params.eta, params.theta, params.k_floor).sum())


def expected_saturated_edges(inf: np.ndarray, eta: float, theta: float) -> int:
    """Edge count when every candidate is accepted and there is no floor on k."""
    return sum(min(t, math.floor(eta * x**theta)) for t, x in enumerate(np.asarray(inf).tolist()))
