"""Network measurements: degree distribution and power-law fits, ANND, clustering, path length, reports."""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np
from scipy.sparse.csgraph import connected_components

from cubenet.graph import Graph

SCHEMA_VERSION = "cubenet.metrics/1"
DEFAULT_X_MIN = 4
EXACT_PATH_LIMIT = 2000


class MetricsError(ValueError):
    pass


@dataclass
class DegreeHistogram:
    degrees: np.ndarray  # distinct degrees >= 1, ascending
    counts: np.ndarray
    isolated: int

    @property
    def n(self) -> int:
        return int(self.counts.sum()) + self.isolated

    def as_dict(self) -> dict[int, int]:
        return dict(zip(self.degrees.tolist(), self.counts.tolist()))


@dataclass
class PowerLawFit:
    slope: float
    intercept: float
    r2: float
    x_min: float
    points: int


def degree_histogram(g: Graph) -> DegreeHistogram:
    deg = g.degrees()
    counts = np.bincount(deg) if deg.size else np.zeros(1, dtype=np.int64)
    ks = np.flatnonzero(counts)
    ks = ks[ks > 0]
    return DegreeHistogram(ks.astype(np.int64), counts[ks].astype(np.int64), int(counts[0]))


def loglog_fit(x, y) -> tuple[float, float, float]:
    """Ordinary least squares of log10(y) on log10(x): (slope, intercept, r2)."""
    lx = np.log10(np.asarray(x, dtype=np.float64))
    ly = np.log10(np.asarray(y, dtype=np.float64))
    if lx.size < 3:
        raise MetricsError(f"need at least 3 points for a log-log fit, got {lx.size}")
    xm, ym = lx.mean(), ly.mean()
    sxx = float(np.sum((lx - xm) ** 2))
    if sxx == 0:
        raise MetricsError("log-log fit needs at least two distinct x values")
    slope = float(np.sum((lx - xm) * (ly - ym)) / sxx)
    intercept = float(ym - slope * xm)
    resid = ly - (intercept + slope * lx)
    syy = float(np.sum((ly - ym) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / syy if np.ptp(ly) > 0 else 1.0
    return slope, intercept, r2


def powerlaw_fit(h: DegreeHistogram, x_min: float = DEFAULT_X_MIN, x_max: float | None = None) -> PowerLawFit:
    keep = (h.degrees >= x_min) & (h.counts > 0)
    if x_max is not None:
        keep &= h.degrees <= x_max
    slope, intercept, r2 = loglog_fit(h.degrees[keep], h.counts[keep])
    return PowerLawFit(slope, intercept, r2, float(x_min), int(keep.sum()))


def median_degree(g_or_h) -> float:
    h = g_or_h if isinstance(g_or_h, DegreeHistogram) else degree_histogram(g_or_h)
    if h.counts.sum() == 0:
        raise MetricsError("no non-isolated nodes")
    cum = np.cumsum(h.counts)
    half = cum[-1] / 2.0
    return float(h.degrees[np.searchsorted(cum, half)])


def log_binned(h: DegreeHistogram, ratio: float = 1.1) -> tuple[np.ndarray, np.ndarray]:
    """Average count per integer degree over bins whose edges grow by ``ratio``.

    Bins start at the smallest observed degree and always span at least one
    integer; degrees with zero count inside a bin lower its average, which is
    what removes the count-of-one plateau in sparse tails.  Returns the
    geometric centre of each non-empty bin and its mean count.
    """
    if h.degrees.size == 0:
        return np.zeros(0), np.zeros(0)
    kmin, kmax = int(h.degrees[0]), int(h.degrees[-1])
    edges = [kmin]
    while edges[-1] <= kmax:
        edges.append(max(edges[-1] + 1, int(math.floor(edges[-1] * ratio))))
    edges[-1] = kmax + 1
    full = np.zeros(kmax + 2)
    full[h.degrees] = h.counts
    cums = np.concatenate([[0.0], np.cumsum(full)])
    lo = np.array(edges[:-1])
    hi = np.array(edges[1:])
    totals = cums[hi] - cums[lo]
    keep = totals > 0
    centre = np.sqrt(lo * (hi - 1.0))
    return centre[keep], (totals / (hi - lo))[keep]


def head_tail_flatness(h: DegreeHistogram, split: float | None = None, binning: str = "log",
                       ratio: float = 1.1) -> tuple[float, float]:
    """Separate log-log slopes for degrees up to ``split`` and above it.

    ``split`` defaults to the median degree of non-isolated nodes.  With
    ``binning="log"`` both segments are fitted on :func:`log_binned` points;
    ``binning="none"`` fits the raw counts.
    """
    if split is None:
        split = median_degree(h)
    if binning == "log":
        x, y = log_binned(h, ratio)
    elif binning == "none":
        x, y = h.degrees.astype(np.float64), h.counts.astype(np.float64)
    else:
        raise ValueError(f"unknown binning {binning!r}")
    head = x <= split
    tail = ~head
    if head.sum() < 3 or tail.sum() < 3:
        raise MetricsError(f"split at degree {split} leaves a segment with fewer than 3 points")
    slope_head = loglog_fit(x[head], y[head])[0]
    slope_tail = loglog_fit(x[tail], y[tail])[0]
    return slope_head, slope_tail


def annd_per_node(g: Graph) -> np.ndarray:
    """Mean neighbour degree of every node (NaN for isolated nodes)."""
    deg = g.degrees()
    src = np.repeat(np.arange(g.n), deg)
    sums = np.bincount(src, weights=deg[g.indices], minlength=g.n) if g.n else np.zeros(0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(deg > 0, sums / np.maximum(deg, 1), np.nan)


def annd(g: Graph) -> tuple[np.ndarray, np.ndarray]:
    """Degree classes and the mean over each class of the per-node ANND."""
    deg = g.degrees()
    knn = annd_per_node(g)
    mask = deg > 0
    if not mask.any():
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    sums = np.bincount(deg[mask], weights=knn[mask])
    counts = np.bincount(deg[mask])
    ks = np.flatnonzero(counts)
    return ks.astype(np.int64), sums[ks] / counts[ks]


def annd_fit(g: Graph) -> tuple[float, float, float]:
    ks, knn = annd(g)
    return loglog_fit(ks, knn)


def triangles_per_node(g: Graph, nodes: np.ndarray | None = None, chunk: int = 4096) -> np.ndarray:
    a = g.to_scipy()
    nodes = np.arange(g.n) if nodes is None else np.asarray(nodes, dtype=np.int64)
    out = np.zeros(nodes.size, dtype=np.float64)
    for s in range(0, nodes.size, chunk):
        rows = a[nodes[s:s + chunk]]
        out[s:s + chunk] = np.asarray((rows @ a).multiply(rows).sum(axis=1)).ravel() / 2
    return out


def clustering_local(g: Graph, nodes: np.ndarray | None = None) -> np.ndarray:
    nodes = np.arange(g.n) if nodes is None else np.asarray(nodes, dtype=np.int64)
    tri = triangles_per_node(g, nodes)
    d = g.degrees()[nodes].astype(np.float64)
    pairs = d * (d - 1) / 2
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(pairs > 0, tri / np.maximum(pairs, 1), 0.0)


def clustering_avg(g: Graph, sample: int | None = None, seed: int = 0) -> float:
    """Mean local clustering; nodes of degree < 2 count as 0.

    With ``sample`` set (and smaller than n) the mean is taken over that many
    nodes drawn uniformly without replacement.
    """
    if g.n == 0:
        return 0.0
    nodes = None
    if sample is not None and sample < g.n:
        nodes = np.sort(np.random.default_rng(seed).choice(g.n, size=sample, replace=False))
    return float(clustering_local(g, nodes).mean())


def transitivity(g: Graph) -> float:
    d = g.degrees().astype(np.float64)
    triples = float(np.sum(d * (d - 1) / 2))
    if triples == 0:
        return 0.0
    return float(triangles_per_node(g).sum()) / triples


def bfs_distances(g: Graph, source: int) -> np.ndarray:
    """Hop distance from ``source`` to every node (-1 when unreachable)."""
    indptr, indices = g.indptr, g.indices
    dist = np.full(g.n, -1, dtype=np.int32)
    dist[source] = 0
    frontier = np.array([source], dtype=np.int64)
    level = 0
    while frontier.size:
        starts = indptr[frontier]
        counts = indptr[frontier + 1] - starts
        total = int(counts.sum())
        if total == 0:
            break
        offsets = np.repeat(starts - np.concatenate([[0], np.cumsum(counts)[:-1]]), counts)
        nb = indices[offsets + np.arange(total)]
        nb = nb[dist[nb] < 0]
        if nb.size == 0:
            break
        nb = np.unique(nb)
        level += 1
        dist[nb] = level
        frontier = nb.astype(np.int64)
    return dist


def largest_component(g: Graph) -> np.ndarray:
    _, labels = connected_components(g.to_scipy(), directed=False)
    biggest = np.argmax(np.bincount(labels))
    return np.flatnonzero(labels == biggest)


@dataclass
class PathLength:
    estimate: float
    exact: bool
    sources: int
    component_size: int


def avg_path_length(g: Graph, sample_sources: int = 500, seed: int = 0, threads: int = 1,
                    exact_limit: int = EXACT_PATH_LIMIT) -> PathLength:
    """Mean shortest-path length over ordered pairs of the largest component.

    Exact (BFS from every component node) when ``n <= exact_limit``;
    otherwise BFS from ``sample_sources`` random component nodes.  Results
    do not depend on ``threads``: per-source sums are combined in source order.
    """
    if g.m == 0:
        raise MetricsError("average path length undefined for an edgeless graph")
    comp = largest_component(g)
    exact = g.n <= exact_limit or sample_sources >= comp.size
    if exact:
        sources = comp
    else:
        sources = np.sort(np.random.default_rng(seed).choice(comp, size=sample_sources, replace=False))

    def one(s: int) -> int:
        d = bfs_distances(g, int(s))
        return int(d[d > 0].sum(dtype=np.int64))

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            totals = list(pool.map(one, sources.tolist()))
    else:
        totals = [one(s) for s in sources.tolist()]
    pairs = sources.size * (comp.size - 1)
    return PathLength(sum(totals) / pairs, bool(exact), int(sources.size), int(comp.size))


def _clean(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        x = float(x)
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


@dataclass
class MetricsReport:
    n: int
    m: int
    degree_histogram: dict[str, int]
    isolated: int
    powerlaw_tail: dict | None
    head_tail: dict | None
    annd: dict | None
    clustering_avg: float
    transitivity: float | None
    avg_path_length: dict | None
    decay: dict | None = None
    timings: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)
    schema: str = SCHEMA_VERSION

    def to_json(self) -> str:
        return json.dumps(_clean(asdict(self)), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> MetricsReport:
        return cls(**json.loads(text))


def assemble_report(g: Graph, trace_decay: dict | None = None, timings: dict | None = None, *,
                    x_min: float = DEFAULT_X_MIN, sources: int = 500, seed: int = 0, threads: int = 1,
                    clustering_sample: int | None = None, meta: dict | None = None) -> MetricsReport:
    """Compute every metric for ``g`` and bundle them.

    Fits that cannot be computed (too few points) are stored as null.  Wall
    clock timings are added only when ``timings`` is given, so that a report
    without them is reproducible byte for byte.
    """
    deg = g.degrees()
    if int(deg.sum()) != 2 * g.m:
        raise MetricsError("handshake check failed: degree sum != 2m")
    h = degree_histogram(g)
    record = timings is not None
    timings = dict(timings or {})

    def attempt(fn):
        try:
            return fn()
        except MetricsError:
            return None

    fit = attempt(lambda: powerlaw_fit(h, x_min))

    def head_tail():
        split = median_degree(h)
        sh, st = head_tail_flatness(h, split)
        return {"split": split, "slope_head": sh, "slope_tail": st}

    def annd_block():
        ks, knn = annd(g)
        slope, intercept, r2 = loglog_fit(ks, knn)
        return {"k": ks, "knn": knn, "fit": {"slope": slope, "intercept": intercept, "r2": r2}}

    ann = attempt(annd_block)
    if ann is None:
        ks, knn = annd(g)
        ann = {"k": ks, "knn": knn, "fit": None}
    t0 = time.perf_counter()
    clust = clustering_avg(g, clustering_sample, seed)
    trans = transitivity(g) if clustering_sample is None else None
    if record:
        timings["clustering_seconds"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    apl = attempt(lambda: asdict(avg_path_length(g, sources, seed, threads)))
    if record:
        timings["path_seconds"] = time.perf_counter() - t0
    return MetricsReport(
        n=g.n,
        m=g.m,
        degree_histogram={str(k): int(c) for k, c in zip(h.degrees.tolist(), h.counts.tolist())},
        isolated=h.isolated,
        powerlaw_tail=asdict(fit) if fit else None,
        head_tail=attempt(head_tail),
        annd=_clean(ann),
        clustering_avg=clust,
        transitivity=trans,
        avg_path_length=apl,
        decay=trace_decay,
        timings=timings,
        meta=dict(meta or {}),
    )


def plot_data(g: Graph) -> tuple[np.ndarray, np.ndarray]:
    """Two-column log10 arrays: (log k, log count) and (log k, log k_nn)."""
    h = degree_histogram(g)
    deg_xy = np.column_stack([np.log10(h.degrees), np.log10(h.counts)]) if h.degrees.size else np.zeros((0, 2))
    ks, knn = annd(g)
    ok = knn > 0
    annd_xy = np.column_stack([np.log10(ks[ok]), np.log10(knn[ok])]) if ok.any() else np.zeros((0, 2))
    return deg_xy, annd_xy
