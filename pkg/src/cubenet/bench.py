"""Proportional generation-time benchmark across models and scales."""

from __future__ import annotations

import gc
import time
from dataclasses import dataclass, field

import numpy as np

from cubenet import baselines
from cubenet.generator import LSHOptions, generate
from cubenet.graph import GenParams
from cubenet.ingest import SynthCubeSpec, cube_to_nodes, synth_cube, synth_schema
from cubenet.metrics import loglog_fit

UNIT_SCALE = 1000
MODELS = ("fgm-lsh", "fgm-knn", "ba", "small-world", "configuration")


def _linear_fit(x, y) -> tuple[float, float, float]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss if ss > 0 else 1.0
    return float(slope), float(intercept), r2


def time_model(model: str, n: int, seed: int = 0, params: GenParams | None = None,
               lsh: LSHOptions | None = None) -> float:
    """Wall-clock seconds to generate one ``model`` network with ``n`` nodes (cube synthesis excluded).

    As with :mod:`timeit`, the garbage collector is paused while the clock runs.
    """
    gc.collect()
    enabled = gc.isenabled()
    gc.disable()
    try:
        return _time_model(model, n, seed, params, lsh)
    finally:
        if enabled:
            gc.enable()


def _time_model(model, n, seed, params, lsh) -> float:
    if model.startswith("fgm"):
        nodes = cube_to_nodes(synth_cube(SynthCubeSpec(n, "fgm_p", seed=seed)), synth_schema(2))
        p = params or GenParams(seed=seed)
        backend = "lsh" if model == "fgm-lsh" else "knn"
        t0 = time.perf_counter()
        generate(nodes, p, backend, lsh=lsh, record_trace=False)
        return time.perf_counter() - t0
    t0 = time.perf_counter()
    if model == "ba":
        baselines.gen_ba(n, 15, seed)
    elif model == "small-world":
        baselines.gen_small_world(n, 8, 0.3, seed)
    elif model == "configuration":
        degrees = baselines.powerlaw_degrees(n, 14.6, seed=seed)
        if degrees.sum() % 2:
            degrees[int(np.argmax(degrees))] += 1
        baselines.gen_configuration(degrees, seed)
    else:
        raise ValueError(f"unknown model {model!r}; choose from {', '.join(MODELS)}")
    return time.perf_counter() - t0


@dataclass
class BenchResult:
    scales: list[int]
    seconds: dict[str, list[float]] = field(default_factory=dict)
    fits: dict[str, dict] = field(default_factory=dict)

    def proportional(self, model: str) -> list[float]:
        base = self.seconds[model][self.scales.index(UNIT_SCALE)]
        return [s / base for s in self.seconds[model]]

    def to_dict(self) -> dict:
        return {
            "unit_scale": UNIT_SCALE,
            "scales": self.scales,
            "seconds": self.seconds,
            "proportional": {m: self.proportional(m) for m in self.seconds},
            "fits": self.fits,
        }

    def table(self) -> str:
        head = f"{'# of Nodes':<16}" + "".join(f"{n:>12}" for n in self.scales)
        rows = [head]
        for model in self.seconds:
            rows.append(f"{model:<16}" + "".join(f"{x:>12.1f}" for x in self.proportional(model)))
        return "\n".join(rows)


def run_bench(scales, models=MODELS, seed: int = 0, repeats: int = 1,
              lsh: LSHOptions | None = None) -> BenchResult:
    """Time every model at every scale; report the median of ``repeats`` runs.

    The smallest scale must be the 1000-node unit.  For each model a linear
    fit of raw seconds against ``n`` and a log-log fit (growth exponent) are
    recorded.
    """
    scales = [int(s) for s in scales]
    if any(s < UNIT_SCALE for s in scales):
        raise ValueError(f"scales below {UNIT_SCALE} are not allowed (normalisation unit)")
    if scales != sorted(scales) or len(set(scales)) != len(scales):
        raise ValueError("scales must be strictly ascending")
    if UNIT_SCALE not in scales:
        raise ValueError(f"scales must include the {UNIT_SCALE}-node unit")
    result = BenchResult(scales)
    for model in models:
        times = []
        for n in scales:
            runs = [time_model(model, n, seed, lsh=lsh) for _ in range(repeats)]
            times.append(float(np.median(runs)))
        result.seconds[model] = times
        if len(scales) >= 3:
            slope, intercept, r2 = _linear_fit(scales, times)
            exponent = loglog_fit(scales, times)[0]
            result.fits[model] = {"slope": slope, "intercept": intercept, "r2": r2, "loglog_exponent": exponent}
    return result
