"""Command-line entry point: ``cubenet <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
import time
from pathlib import Path

import numpy as np

from cubenet import __version__
from cubenet.baselines import gen_ba, gen_configuration, gen_er, gen_small_world, powerlaw_degrees
from cubenet.bench import MODELS, run_bench
from cubenet.generator import GammaFn, LSHOptions, decay_probability_series, generate
from cubenet.graph import GammaKind, GenParams, GraphError, read_edge_list, read_trace, write_edge_list, write_trace
from cubenet.ingest import CubeError, CubeSchema, SynthCubeSpec, cube_to_nodes, load_cube, synth_cube, write_cube_csv
from cubenet.metrics import MetricsReport, assemble_report, plot_data
from cubenet.neighbors import Backend, NeighborConfigError, read_pnbr_file

OUT_DIR_ENV = "CUBENET_OUT_DIR"
GEN_KEYS = ("eta", "theta", "mu_t", "mu_c", "minkowski_p", "gamma_kind", "gamma_coeff", "gamma_norm", "k_floor", "seed")


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _out_dir(args) -> Path:
    d = Path(args.out_dir or os.environ.get(OUT_DIR_ENV, "."))
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# synth-cube

def cmd_synth_cube(args) -> int:
    spec = SynthCubeSpec(args.n, args.scenario, args.lomax_mu, args.lomax_alpha, args.geo_dim, args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_cube_csv(synth_cube(spec), out)
    print(f"wrote {spec.n} rows to {out}")
    return 0


# generate

def _schema_from_args(args, header: list[str]) -> CubeSchema:
    if args.schema_file:
        return CubeSchema.from_file(args.schema_file)
    if args.schema_geo is None:
        geo = [h for h in header if re.fullmatch(r"c\d+", h)]
    else:
        geo = [g for g in args.schema_geo.split(",") if g]
    return CubeSchema(
        order_column=args.schema_order,
        geo_columns=geo,
        influence_column=args.schema_influence,
        preassigned=not args.schema_derive,
        alpha=args.schema_alpha,
        beta=args.schema_beta,
        scale_lo=args.schema_scale_lo,
        scale_hi=args.schema_scale_hi,
    )


def _read_header(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [h.strip() for h in fh.readline().strip().split(",")]


def _apply_summary(args) -> None:
    """Fill generation arguments from the ``config`` block of an earlier summary."""
    cfg = json.loads(Path(args.from_summary).read_text(encoding="utf-8"))["config"]
    for key in GEN_KEYS:
        setattr(args, key, cfg["params"][key])
    schema = cfg["schema"]
    args.schema_file = None
    args.schema_order = schema["order_column"]
    args.schema_geo = ",".join(schema["geo_columns"])
    args.schema_influence = schema["influence_column"]
    args.schema_derive = not schema["preassigned"]
    for key in ("alpha", "beta", "scale_lo", "scale_hi"):
        setattr(args, f"schema_{key}", schema[key])
    args.backend = cfg["backend"]
    args.lsh_tables, args.lsh_bits, args.lsh_bucket = cfg["lsh"]["tables"], cfg["lsh"]["bits"], cfg["lsh"]["bucket_target"]
    if args.cube is None:
        args.cube = cfg["cube"]
    if args.pnbr_file is None:
        args.pnbr_file = cfg.get("pnbr_file")


def cmd_generate(args) -> int:
    if args.from_summary:
        _apply_summary(args)
    if args.cube is None:
        raise UsageError("--cube is required")
    params = GenParams(**{k: getattr(args, k) for k in GEN_KEYS})
    schema = _schema_from_args(args, _read_header(args.cube))
    lsh = LSHOptions(args.lsh_tables, args.lsh_bits, args.lsh_bucket)
    backend = Backend(args.backend)
    pnbr = read_pnbr_file(args.pnbr_file) if args.pnbr_file else None
    if backend is Backend.PRECOMPUTED and pnbr is None:
        raise UsageError("--backend precomputed needs --pnbr-file")

    t0 = time.perf_counter()
    cube = load_cube(args.cube, schema)
    nodes = cube_to_nodes(cube, schema)
    t_load = time.perf_counter() - t0
    t0 = time.perf_counter()
    g, trace = generate(nodes, params, backend, lsh=lsh, pnbr_lists=pnbr, record_trace=not args.no_trace)
    t_gen = time.perf_counter() - t0

    out = _out_dir(args)
    write_edge_list(g, out / "edges.csv")
    if trace is not None:
        write_trace(trace, out / "trace.txt")
    summary = {
        "tool": f"cubenet {__version__}",
        "model": "fgm",
        "n": g.n,
        "m": g.m,
        "duplicates": g.duplicates,
        "backend": backend.value,
        "timings": {"load_seconds": t_load, "generate_seconds": t_gen},
        "config": {
            "cube": str(args.cube),
            "schema": schema.to_dict(),
            "params": params.to_dict(),
            "backend": backend.value,
            "lsh": {"tables": lsh.tables, "bits": lsh.bits, "bucket_target": lsh.bucket_target},
            "pnbr_file": str(args.pnbr_file) if args.pnbr_file else None,
        },
    }
    _write_json(summary, out / "summary.json")
    print(f"n={g.n} m={g.m} backend={backend.value} in {t_gen:.2f}s -> {out}")
    return 0


# baseline

def cmd_baseline(args) -> int:
    extra: dict = {}
    trace = None
    if args.kind == "er":
        g = gen_er(args.n, args.p, args.seed)
    elif args.kind == "small-world":
        g = gen_small_world(args.n, args.k_ring, args.p_rw, args.seed)
    elif args.kind == "ba":
        if args.trace:
            g, trace = gen_ba(args.n, args.m_attach, args.seed, record_trace=True)
        else:
            g = gen_ba(args.n, args.m_attach, args.seed)
    else:
        if args.degrees_file:
            degrees = [int(x) for x in Path(args.degrees_file).read_text().replace(",", " ").split()]
        else:
            degrees = powerlaw_degrees(args.n, args.pl_mean, args.pl_exponent, args.seed)
        g, report = gen_configuration(degrees, args.seed, auto_repair=args.auto_repair)
        extra["configuration"] = report.__dict__
    out = _out_dir(args)
    write_edge_list(g, out / "edges.csv")
    if trace is not None:
        write_trace(trace, out / "trace.txt")
    params = {k: getattr(args, k) for k in ("n", "p", "k_ring", "p_rw", "m_attach", "pl_exponent", "pl_mean", "seed")}
    _write_json({"tool": f"cubenet {__version__}", "model": args.kind, "n": g.n, "m": g.m,
                 "config": {"kind": args.kind, "params": params, "degrees_file": args.degrees_file}, **extra},
                out / "summary.json")
    print(f"{args.kind}: n={g.n} m={g.m} -> {out}")
    return 0


# metrics

def _fmt(x, spec=".3f") -> str:
    return "NA" if x is None else format(x, spec)


def comparison_table(reports: list[MetricsReport]) -> str:
    lines = [f"{'Model':<20}{'# of Nodes':>12}{'# of Edges':>12}{'Clustering':>12}{'Avg Path':>10}"]
    for r in reports:
        label = r.meta.get("model", "?")
        apl = r.avg_path_length["estimate"] if r.avg_path_length else None
        clust = None if r.meta.get("parallel_edges") else r.clustering_avg
        lines.append(f"{label:<20}{r.n:>12}{r.m:>12}{_fmt(clust):>12}{_fmt(apl):>10}")
    return "\n".join(lines)


def cmd_metrics(args) -> int:
    if args.compare:
        reports = [MetricsReport.from_json(Path(p).read_text(encoding="utf-8")) for p in args.compare]
        table = comparison_table(reports)
        if args.out:
            Path(args.out).write_text(table + "\n", encoding="utf-8")
        print(table)
        return 0
    if not args.edges:
        raise UsageError("metrics needs --edges (or --compare)")
    t0 = time.perf_counter()
    g = read_edge_list(args.edges, args.n)
    meta = {"model": args.label or Path(args.edges).parent.name or "graph", "edges": str(args.edges)}
    if args.summary:
        s = json.loads(Path(args.summary).read_text(encoding="utf-8"))
        meta["model"] = args.label or s.get("model", meta["model"])
        meta["parallel_edges"] = "configuration" in s
        if "configuration" in s:
            meta["raw_m"] = s["configuration"]["raw_m"]
    timings = {"read_seconds": time.perf_counter() - t0} if args.timings else None
    report = assemble_report(g, None, timings, x_min=args.x_min,
                             sources=args.sources, seed=args.seed, threads=args.threads,
                             clustering_sample=args.clustering_sample, meta=meta)
    out = Path(args.out) if args.out else _out_dir(args) / "report.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(report.to_json() + "\n", encoding="utf-8")
    if args.plot_dir:
        pd_ = Path(args.plot_dir)
        pd_.mkdir(parents=True, exist_ok=True)
        deg_xy, annd_xy = plot_data(g)
        np.savetxt(pd_ / "degree_loglog.txt", deg_xy, fmt="%.10g", header="log10_k log10_count")
        np.savetxt(pd_ / "annd_loglog.txt", annd_xy, fmt="%.10g", header="log10_k log10_knn")
    print(f"n={report.n} m={report.m} clustering={report.clustering_avg:.4f} -> {out}")
    return 0


# decay

def cmd_decay(args) -> int:
    trace = read_trace(args.trace)
    summary = json.loads(Path(args.summary).read_text(encoding="utf-8")) if args.summary else {}
    inf = gamma = None
    if summary.get("model") == "ba":
        trace.extra = {"model": "ba", "m_attach": summary["config"]["params"]["m_attach"]}
    elif args.mode == "probability":
        if not summary:
            raise UsageError("probability mode needs --summary from the generate run")
        cfg = summary["config"]
        schema = CubeSchema.from_mapping({
            "order_column": cfg["schema"]["order_column"],
            "geo_columns": ",".join(cfg["schema"]["geo_columns"]),
            ("preassigned_column" if cfg["schema"]["preassigned"] else "influence_column"): cfg["schema"]["influence_column"],
            **{k: str(cfg["schema"][k]) for k in ("alpha", "beta", "scale_lo", "scale_hi")},
        })
        nodes = cube_to_nodes(load_cube(args.cube or cfg["cube"], schema), schema)
        inf = nodes.inf
        gamma = GammaFn.for_nodes(inf, GenParams(**cfg["params"]))
    if args.gnode:
        gnodes = args.gnode
        for gn in gnodes:
            if not 0 <= gn < trace.n:
                raise UsageError(f"gnode {gn} out of range for {trace.n} arrivals")
    else:
        deg = np.bincount(np.repeat(np.arange(trace.n), np.diff(trace.acc_ptr)), minlength=trace.n)
        deg += np.bincount(trace.accepted, minlength=trace.n)
        gnodes = np.argsort(-deg, kind="stable")[: args.top].tolist()
    out = _out_dir(args)
    for gn in gnodes:
        series = decay_probability_series(trace, inf, gamma, gn, args.window, args.mode)
        path = out / f"decay_{gn}.txt"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("# offset probability\n")
            for off, p in series:
                fh.write(f"{off} {p:.10g}\n")
        print(f"gnode {gn}: {len(series)} windows -> {path}")
    return 0


# bench

def cmd_bench(args) -> int:
    res = run_bench(args.scales, args.models, args.seed, args.repeats,
                    LSHOptions(args.lsh_tables, args.lsh_bits, args.lsh_bucket))
    out = _out_dir(args)
    _write_json(res.to_dict(), out / "bench.json")
    (out / "bench.txt").write_text(res.table() + "\n", encoding="utf-8")
    print(res.table())
    for model, fit in res.fits.items():
        print(f"{model}: linear R^2={fit['r2']:.4f}, log-log exponent={fit['loglog_exponent']:.2f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cubenet", description=__doc__)
    p.add_argument("--version", action="version", version=f"cubenet {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth-cube", help="write a random test cube")
    s.add_argument("--n", type=_positive_int, required=True)
    s.add_argument("--scenario", choices=["fgm_p", "fgm_r"], default="fgm_p")
    s.add_argument("--lomax-mu", type=float, default=1.0)
    s.add_argument("--lomax-alpha", type=float, default=3.0)
    s.add_argument("--geo-dim", type=int, default=2)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth_cube)

    defaults = GenParams()
    s = sub.add_parser("generate", help="turn a cube into a network")
    s.add_argument("--cube")
    s.add_argument("--from-summary", help="replay the configuration of an earlier summary.json")
    s.add_argument("--schema-file")
    s.add_argument("--schema-order", default="t")
    s.add_argument("--schema-geo", default=None, help="comma-joined; default: every cN column")
    s.add_argument("--schema-influence", default="infRt")
    s.add_argument("--schema-derive", action="store_true", help="derive influence by affine map + min-max scaling")
    s.add_argument("--schema-alpha", type=float, default=1.0)
    s.add_argument("--schema-beta", type=float, default=0.0)
    s.add_argument("--schema-scale-lo", type=float, default=0.05)
    s.add_argument("--schema-scale-hi", type=float, default=5.0)
    s.add_argument("--eta", type=float, default=defaults.eta)
    s.add_argument("--theta", type=float, default=defaults.theta)
    s.add_argument("--mu-t", type=float, default=defaults.mu_t)
    s.add_argument("--mu-c", type=float, default=defaults.mu_c)
    s.add_argument("--minkowski-p", type=float, default=defaults.minkowski_p)
    s.add_argument("--gamma-kind", choices=[k.value for k in GammaKind], default=defaults.gamma_kind.value)
    s.add_argument("--gamma-coeff", type=float, default=defaults.gamma_coeff)
    s.add_argument("--gamma-norm", choices=["mean", "median", "max"], default=defaults.gamma_norm)
    s.add_argument("--k-floor", type=int, default=defaults.k_floor)
    s.add_argument("--seed", type=int, default=defaults.seed)
    _add_backend_flags(s)
    s.add_argument("--pnbr-file")
    s.add_argument("--no-trace", action="store_true")
    s.add_argument("--out-dir")
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("baseline", help="generate a reference network")
    s.add_argument("--kind", choices=["er", "small-world", "ba", "configuration"], required=True)
    s.add_argument("--n", type=_positive_int, required=True)
    s.add_argument("--p", type=float, default=0.01)
    s.add_argument("--k-ring", type=int, default=8)
    s.add_argument("--p-rw", type=float, default=0.3)
    s.add_argument("--m-attach", type=int, default=15)
    s.add_argument("--degrees-file")
    s.add_argument("--pl-exponent", type=float, default=2.5)
    s.add_argument("--pl-mean", type=float, default=14.6)
    s.add_argument("--auto-repair", action="store_true")
    s.add_argument("--trace", action="store_true", help="BA only: write a trace of attachment targets")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out-dir")
    s.set_defaults(func=cmd_baseline)

    s = sub.add_parser("metrics", help="measure an edge list")
    s.add_argument("--edges")
    s.add_argument("--n", type=int, default=None, help="node count (default: largest id + 1)")
    s.add_argument("--summary", help="summary.json of the run, for labels")
    s.add_argument("--label")
    s.add_argument("--x-min", type=float, default=4)
    s.add_argument("--sources", type=int, default=500)
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--clustering-sample", type=int, default=None)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.add_argument("--plot-dir")
    s.add_argument("--timings", action="store_true", help="record wall-clock timings in the report")
    s.add_argument("--compare", nargs="+", metavar="REPORT", help="merge reports into one table")
    s.add_argument("--out-dir")
    s.set_defaults(func=cmd_metrics)

    s = sub.add_parser("decay", help="edge-forming probability series of high-degree nodes")
    s.add_argument("--trace", required=True)
    s.add_argument("--summary", help="summary.json of the run that wrote the trace")
    s.add_argument("--cube", help="override the cube path recorded in the summary")
    s.add_argument("--gnode", type=int, action="append")
    s.add_argument("--top", type=int, default=5)
    s.add_argument("--window", type=_positive_int, default=20)
    s.add_argument("--mode", choices=["probability", "membership"], default="probability")
    s.add_argument("--out-dir")
    s.set_defaults(func=cmd_decay)

    s = sub.add_parser("bench", help="proportional generation time per model")
    s.add_argument("--scales", type=_int_list, default=[1000, 2000, 5000, 10000])
    s.add_argument("--models", type=lambda t: t.split(","), default=list(MODELS))
    s.add_argument("--repeats", type=_positive_int, default=1)
    s.add_argument("--seed", type=int, default=0)
    _add_backend_flags(s, backend=False)
    s.add_argument("--out-dir")
    s.set_defaults(func=cmd_bench)
    return p


def _add_backend_flags(s, backend: bool = True) -> None:
    opts = LSHOptions()
    if backend:
        s.add_argument("--backend", choices=[b.value for b in Backend], default=Backend.KNN.value)
    s.add_argument("--lsh-tables", type=_positive_int, default=opts.tables)
    s.add_argument("--lsh-bits", type=int, default=opts.bits)
    s.add_argument("--lsh-bucket", type=float, default=opts.bucket_target, help="target mean bucket load")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        parser.error(str(e))
    except (CubeError, GraphError, NeighborConfigError, ValueError, KeyError, OSError) as e:
        print(f"cubenet {args.command}: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
