"""Reference generators: Erdos-Renyi, Watts-Strogatz small world, Barabasi-Albert and the configuration model."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from cubenet.graph import GenTrace, Graph


def gen_er(n: int, p: float, seed: int = 0) -> Graph:
    if not 0 <= p <= 1:
        raise ValueError("edge probability must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    g = Graph(n)
    for u in range(n - 1):
        hits = np.flatnonzero(rng.random(n - u - 1) < p)
        if hits.size:
            g.add_edges(np.full(hits.size, u), hits + u + 1)
    return g.freeze()


def gen_small_world(n: int, k_ring: int, p_rw: float, seed: int = 0) -> Graph:
    """Ring lattice with ``k_ring`` neighbours per node, each edge rewired with probability ``p_rw``.

    Rewiring keeps the near endpoint and moves the far one to a uniformly
    random node that is neither the near endpoint nor already adjacent, so
    the edge count stays ``n * k_ring / 2``.
    """
    if k_ring % 2:
        raise ValueError("k_ring must be even")
    if not 0 <= k_ring < n:
        raise ValueError("need 0 <= k_ring < n")
    if not 0 <= p_rw <= 1:
        raise ValueError("rewire probability must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    adj = [set() for _ in range(n)]
    for u in range(n):
        for j in range(1, k_ring // 2 + 1):
            v = (u + j) % n
            adj[u].add(v)
            adj[v].add(u)
    for j in range(1, k_ring // 2 + 1):
        for u in range(n):
            v = (u + j) % n
            if rng.random() >= p_rw or v not in adj[u]:
                continue
            if len(adj[u]) >= n - 1:
                continue
            w = int(rng.integers(n))
            while w == u or w in adj[u]:
                w = int(rng.integers(n))
            adj[u].discard(v)
            adj[v].discard(u)
            adj[u].add(w)
            adj[w].add(u)
    us = [u for u in range(n) for v in adj[u] if u < v]
    vs = [v for u in range(n) for v in adj[u] if u < v]
    g = Graph(n)
    g.add_edges(np.array(us, dtype=np.int64), np.array(vs, dtype=np.int64))
    return g.freeze()


def gen_ba(n: int, m_attach: int, seed: int = 0, record_trace: bool = False):
    """Preferential attachment: every arrival after the first ``m_attach`` nodes links to ``m_attach`` targets.

    The first ``m_attach`` nodes start without edges; node ``m_attach`` links
    to all of them and later arrivals draw distinct targets from the list of
    all edge endpoints (degree-proportional).  The result has exactly
    ``m_attach * (n - m_attach)`` edges.  With ``record_trace`` a
    :class:`GenTrace` of the chosen targets is returned alongside the graph.
    """
    if not 1 <= m_attach < n:
        raise ValueError("need 1 <= m_attach < n")
    rng = np.random.default_rng(seed)
    endpoints = np.empty(2 * m_attach * (n - m_attach), dtype=np.int64)
    filled = 0
    src = np.empty(m_attach * (n - m_attach), dtype=np.int64)
    dst = np.empty_like(src)
    e = 0
    targets = list(range(m_attach))
    ks, pnbrs = [0] * m_attach, [[] for _ in range(m_attach)]
    for v in range(m_attach, n):
        tg = np.array(sorted(targets), dtype=np.int64)
        src[e:e + m_attach] = v
        dst[e:e + m_attach] = tg
        e += m_attach
        endpoints[filled:filled + m_attach] = tg
        endpoints[filled + m_attach:filled + 2 * m_attach] = v
        filled += 2 * m_attach
        if record_trace:
            ks.append(m_attach)
            pnbrs.append(tg)
        chosen: set[int] = set()
        while len(chosen) < m_attach:
            chosen.add(int(endpoints[rng.integers(filled)]))
        targets = list(chosen)
    g = Graph(n)
    g.add_edges(src, dst)
    g.freeze()
    if not record_trace:
        return g
    trace = GenTrace.from_lists(ks, pnbrs, pnbrs)
    trace.extra = {"model": "ba", "m_attach": m_attach}
    return g, trace


@dataclass
class ConfigurationReport:
    raw_m: int
    self_loops: int
    multi_edges: int
    simple_m: int
    repaired: bool = False
    degree_sum: int = 0
    notes: list[str] = field(default_factory=list)


def gen_configuration(degrees, seed: int = 0, auto_repair: bool = False) -> tuple[Graph, ConfigurationReport]:
    """Random stub matching, then self-loops dropped and parallel edges merged.

    ``raw_m`` counts the multigraph edges before cleanup.  An odd degree sum
    is an error unless ``auto_repair`` adds one stub to a random node.
    """
    deg = np.array(degrees, dtype=np.int64)
    if np.any(deg < 0):
        raise ValueError("degrees must be nonnegative")
    rng = np.random.default_rng(seed)
    repaired = False
    if deg.sum() % 2:
        if not auto_repair:
            raise ValueError("degree sequence has an odd sum")
        deg[rng.integers(deg.size)] += 1
        repaired = True
        warnings.warn("odd degree sum repaired by adding one stub", stacklevel=2)
    stubs = np.repeat(np.arange(deg.size, dtype=np.int64), deg)
    rng.shuffle(stubs)
    u, v = stubs[0::2], stubs[1::2]
    loops = u == v
    g = Graph(deg.size)
    g.add_edges(u[~loops], v[~loops])
    g.freeze()
    report = ConfigurationReport(
        raw_m=int(u.size),
        self_loops=int(loops.sum()),
        multi_edges=int(g.duplicates),
        simple_m=g.m,
        repaired=repaired,
        degree_sum=int(deg.sum()),
    )
    return g, report


def powerlaw_degrees(n: int, mean_target: float, exponent: float = 2.5, seed: int = 0) -> np.ndarray:
    """Integer degrees ``floor(s * u ** (-1 / (exponent - 1)))`` capped at ``n - 1``.

    The scale ``s`` is bisected so the sample mean hits ``mean_target``; the
    uniforms are drawn once so the result is deterministic under ``seed``.
    """
    if exponent <= 1:
        raise ValueError("exponent must exceed 1")
    if not 0 < mean_target < n - 1:
        raise ValueError("mean degree target must lie in (0, n - 1)")
    rng = np.random.default_rng(seed)
    base = (1.0 - rng.random(n)) ** (-1.0 / (exponent - 1.0))

    def sample(s: float) -> np.ndarray:
        return np.minimum(np.floor(s * base), n - 1).astype(np.int64)

    lo, hi = 1e-6, float(n)
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if sample(mid).mean() < mean_target:
            lo = mid
        else:
            hi = mid
    return sample(hi)
