"""Cube loading, arrival ordering, influence derivation and synthetic test cubes."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from cubenet.graph import NodeTable

LOMAX_SHIFT = 1e-9


class CubeError(ValueError):
    """Malformed cube file or schema mismatch."""


class DegenerateInfluenceWarning(UserWarning):
    pass


@dataclass
class CubeSchema:
    """Which columns feed which node attribute.

    Influence comes either from ``influence_column`` passed through the affine
    map ``alpha * x + beta`` and min-max scaled to ``[scale_lo, scale_hi]``,
    or, when ``preassigned`` is set, straight from that column.
    """

    order_column: str
    geo_columns: list[str] = field(default_factory=list)
    influence_column: str = "infRt"
    preassigned: bool = False
    alpha: float = 1.0
    beta: float = 0.0
    scale_lo: float = 0.05
    scale_hi: float = 5.0

    def __post_init__(self):
        if isinstance(self.geo_columns, str):
            self.geo_columns = [c for c in self.geo_columns.split(",") if c]
        if not self.preassigned:
            if not self.scale_lo > 0:
                raise CubeError("scale_lo must be positive")
            if not self.scale_lo < self.scale_hi:
                raise CubeError("scale_lo must be smaller than scale_hi")

    @property
    def columns(self) -> list[str]:
        return [self.order_column, *self.geo_columns, self.influence_column]

    @classmethod
    def from_file(cls, path) -> CubeSchema:
        """Parse a flat ``key = value`` config (``#`` comments allowed)."""
        raw: dict[str, str] = {}
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            sep = "=" if "=" in line else ":"
            if sep not in line:
                raise CubeError(f"{path}: line {lineno}: expected key = value")
            key, value = (s.strip() for s in line.split(sep, 1))
            raw[key] = value
        return cls.from_mapping(raw)

    @classmethod
    def from_mapping(cls, raw: dict) -> CubeSchema:
        known = {"order_column", "geo_columns", "influence_column", "preassigned_column",
                 "alpha", "beta", "scale_lo", "scale_hi"}
        unknown = set(raw) - known
        if unknown:
            raise CubeError(f"unknown schema keys: {sorted(unknown)}")
        if "order_column" not in raw:
            raise CubeError("schema needs order_column")
        kw: dict = {"order_column": raw["order_column"], "geo_columns": raw.get("geo_columns", "")}
        if raw.get("preassigned_column"):
            kw.update(influence_column=raw["preassigned_column"], preassigned=True)
        elif raw.get("influence_column"):
            kw["influence_column"] = raw["influence_column"]
        for key in ("alpha", "beta", "scale_lo", "scale_hi"):
            if raw.get(key) not in (None, ""):
                kw[key] = float(raw[key])
        return cls(**kw)

    def to_dict(self) -> dict:
        return {
            "order_column": self.order_column,
            "geo_columns": list(self.geo_columns),
            "influence_column": self.influence_column,
            "preassigned": self.preassigned,
            "alpha": self.alpha,
            "beta": self.beta,
            "scale_lo": self.scale_lo,
            "scale_hi": self.scale_hi,
        }


@dataclass
class Cube:
    """Parsed cube: one float array per column, all of length ``n``."""

    columns: dict[str, np.ndarray]

    @property
    def n(self) -> int:
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]


def load_cube(path, schema: CubeSchema) -> Cube:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise CubeError(f"{path}: empty file")
        header = [h.strip() for h in header]
        missing = [c for c in schema.columns if c not in header]
        if missing:
            raise CubeError(f"{path}: schema columns missing from header: {missing}")
        pos = {c: header.index(c) for c in schema.columns}
        values: dict[str, list[float]] = {c: [] for c in schema.columns}
        for row_no, row in enumerate(reader, 1):
            if not row:
                continue
            for col, j in pos.items():
                cell = row[j].strip() if j < len(row) else ""
                try:
                    x = float(cell)
                except ValueError:
                    raise CubeError(f"{path}: row {row_no}, column {col!r}: cannot parse {cell!r}") from None
                if not math.isfinite(x):
                    raise CubeError(f"{path}: row {row_no}, column {col!r}: non-finite value {cell!r}")
                values[col].append(x)
    cube = Cube({c: np.array(v, dtype=np.float64) for c, v in values.items()})
    if cube.n == 0:
        raise CubeError(f"{path}: no data rows")
    return cube


def validate_order(cube: Cube, schema: CubeSchema) -> np.ndarray:
    """Arrival permutation: row indices ascending by order value, ties by row index."""
    return np.argsort(cube[schema.order_column], kind="stable")


def minmax_scale(y: np.ndarray, lo: float, hi: float) -> np.ndarray:
    ymin, ymax = float(np.min(y)), float(np.max(y))
    if ymax == ymin:
        warnings.warn(
            f"influence source is constant ({ymin}); every node gets {lo}",
            DegenerateInfluenceWarning,
            stacklevel=3,
        )
        return np.full(y.shape, lo, dtype=np.float64)
    out = lo + (y - ymin) * ((hi - lo) / (ymax - ymin))
    return np.clip(out, lo, hi)


def derive_influence(cube: Cube, schema: CubeSchema) -> np.ndarray:
    """Affine-transform the raw influence column, then min-max scale it."""
    if schema.preassigned:
        raise CubeError("schema uses a preassigned influence column; nothing to derive")
    y = schema.alpha * cube[schema.influence_column] + schema.beta
    return minmax_scale(y, schema.scale_lo, schema.scale_hi)


def cube_to_nodes(cube: Cube, schema: CubeSchema) -> NodeTable:
    """Node attributes in arrival order (row ``order[i]`` becomes node ``i``)."""
    if schema.preassigned:
        inf = cube[schema.influence_column]
        if not np.all(inf > 0):
            bad = int(np.argmax(~(inf > 0))) + 1
            raise CubeError(f"row {bad}: preassigned influence must be positive")
    else:
        inf = derive_influence(cube, schema)
    order = validate_order(cube, schema)
    c = np.column_stack([cube[g] for g in schema.geo_columns]) if schema.geo_columns else np.zeros((cube.n, 0))
    return NodeTable(cube[schema.order_column], c, inf).take(order)


class Scenario(str, Enum):
    FGM_P = "fgm_p"
    FGM_R = "fgm_r"


@dataclass
class SynthCubeSpec:
    n: int
    scenario: Scenario = Scenario.FGM_P
    lomax_mu: float = 1.0
    lomax_alpha: float = 3.0
    geo_dim: int = 2
    seed: int = 0

    def __post_init__(self):
        self.scenario = Scenario(self.scenario)
        if self.n < 1:
            raise ValueError("synthetic cube needs n >= 1")
        if not (self.lomax_mu > 0 and self.lomax_alpha > 0):
            raise ValueError("Lomax parameters must be positive")
        if self.geo_dim < 0:
            raise ValueError("geo_dim must be nonnegative")


def lomax_ppf(u, mu: float, alpha: float):
    """Inverse CDF of the Lomax (Pareto II) law with scale ``mu`` and shape ``alpha``."""
    return mu * ((1.0 - np.asarray(u)) ** (-1.0 / alpha) - 1.0)


def lomax_cdf(x, mu: float, alpha: float):
    return 1.0 - (1.0 + np.asarray(x) / mu) ** (-alpha)


def synth_cube(spec: SynthCubeSpec) -> Cube:
    """Random cube with columns ``t``, ``c1..c<geo_dim>`` and ``infRt``.

    Draw order from one seeded stream: all ``t``, then the geographic block
    row-major, then the influence uniforms.
    """
    rng = np.random.default_rng(spec.seed)
    t = rng.random(spec.n)
    c = rng.random((spec.n, spec.geo_dim))
    u = rng.random(spec.n)
    if spec.scenario is Scenario.FGM_P:
        inf = lomax_ppf(u, spec.lomax_mu, spec.lomax_alpha) + LOMAX_SHIFT
    else:
        inf = 1.0 - u
    cols = {"t": t}
    for j in range(spec.geo_dim):
        cols[f"c{j + 1}"] = c[:, j]
    cols["infRt"] = inf
    return Cube(cols)


def synth_schema(geo_dim: int) -> CubeSchema:
    return CubeSchema("t", [f"c{j + 1}" for j in range(geo_dim)], "infRt", preassigned=True)


def write_cube_csv(cube: Cube, path) -> None:
    names = list(cube.columns)
    cols = [cube[c] for c in names]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*(col.tolist() for col in cols)):
            w.writerow([repr(x) for x in row])
