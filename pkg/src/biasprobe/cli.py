"""Command-line entry point: ``biasprobe {run,report,theory,rngtest,algk,plot}``.

Results go to stdout as JSON.  Failures print one JSON object
``{"error": <kind>, "message": <text>}`` on stderr and exit nonzero:
2 usage or invalid parameter, 3 malformed trace, 4 exhausted source,
5 I/O failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .algk import algk_orbit, seed_scan
from .errors import BiasProbeError, InvalidParameter, SourceExhausted, TraceFormatError
from .harness import (ExperimentConfig, cmd_report, cmd_run, collect_traces, load_reports,
                      preset, with_overrides, write_report)
from .objectives import Objective
from .rng import Lcg48Engine, lag_pairs, make_engine, pearson, write_pairs_csv, read_pairs_csv
from .svg import (evolution_plot_svg, parallel_coordinates_svg, pvalue_strip_svg, scatter_svg)
from .theory import (TheoremQuantities, expected_drift_unabsorbed, paired_drift,
                     sample_variance)
from .traceio import read_first_snapshot, read_header_and_final, read_trace


class UsageError(BiasProbeError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True) + "\n")


def _pop_list(values: Optional[Sequence[str]]) -> Optional[list]:
    if values is None:
        return None
    out = []
    for v in values:
        for part in str(v).split(","):
            if part.strip():
                try:
                    out.append(int(part))
                except ValueError:
                    raise UsageError(f"--pop expects integers, got {part!r}") from None
    return out


# ---------------------------------------------------------------------------

def do_run(a) -> int:
    if a.config and a.preset:
        raise UsageError("--config and --preset are mutually exclusive")
    if a.config:
        cfg = ExperimentConfig.load(a.config)
    elif a.preset:
        cfg = preset(a.preset)
    else:
        cfg = ExperimentConfig()
    algs = None
    if a.alg:
        algs = [p for v in a.alg for p in v.split(",") if p]
    cfg = with_overrides(cfg, algorithms=algs, objective=a.objective, dim=a.dim,
                         popsizes=_pop_list(a.pop), runs=a.runs, budget=a.budget,
                         master_seed=a.seed, out=a.out, snapshot_every=a.snapshot_every)
    manifest = cmd_run(cfg, workers=a.workers)
    _emit({"out": cfg.out, "files": len(manifest["files"]),
           "config_hash": manifest["config_hash"],
           "manifest": os.path.join(cfg.out, "manifest.json")})
    return 0


def do_report(a) -> int:
    result = cmd_report(a.traces, a.alpha, bonferroni=a.bonferroni)
    if a.out:
        write_report(result, a.out, a.csv)
        _emit({"report": a.out, "csv": a.csv, "groups": len(result["reports"])})
    else:
        if a.csv:
            raise UsageError("--csv needs --out")
        _emit(result)
    return 0


def do_theory(a) -> int:
    q = TheoremQuantities.compute(a.N, a.d, a.sigma2)
    out = q.to_dict()
    if a.scan:
        rng = np.random.default_rng(a.seed)
        engine = Lcg48Engine(a.seed)
        rows = []
        for _ in range(a.scan):
            lo, hi = np.sort(rng.random(2))
            x = lo + (hi - lo) * rng.random(a.N)
            mc = paired_drift(x, a.d, float(np.sqrt(a.sigma2)), a.trials, engine)["unabsorbed"]
            rows.append((sample_variance(x), expected_drift_unabsorbed(x, a.d, a.sigma2),
                         mc.mean, mc.std_error))
        out["scan_rows"] = len(rows)
        if a.csv:
            with open(a.csv, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["S2", "drift_closed", "drift_mc_mean", "drift_mc_se"])
                for r in rows:
                    w.writerow([f"{v:.17g}" for v in r])
            out["csv"] = a.csv
        else:
            out["scan"] = [dict(zip(["S2", "drift_closed", "drift_mc_mean", "drift_mc_se"], r))
                           for r in rows]
    _emit(out)
    return 0


def do_rngtest(a) -> int:
    engine = make_engine(a.engine, a.seed)
    seq = engine.random_array(a.count)
    offset = a.offset if a.mode == "offset" else None
    pairs = lag_pairs(seq, a.period, offset)
    os.makedirs(a.out, exist_ok=True)
    stem = f"lag_{a.engine.split(':')[0]}_p{a.period}_{a.mode}"
    csv_path = os.path.join(a.out, stem + ".csv")
    svg_path = os.path.join(a.out, stem + ".svg")
    write_pairs_csv(csv_path, pairs)
    scatter_svg(pairs, title=f"{a.engine.split(':')[0]} lag {a.period} ({a.mode})").save(svg_path)
    r = pearson(pairs)
    _emit({"pairs": int(len(pairs)), "pearson_r": r, "abs_r_below_0.01": bool(abs(r) < 0.01),
           "csv": csv_path, "svg": svg_path, "draws": engine.draws})
    return 0


def do_algk(a) -> int:
    if a.scan:
        _emit(seed_scan(a.seed, a.scan, a.max_steps))
    else:
        _emit(algk_orbit(a.seed, a.max_steps).to_dict())
    return 0


def do_plot(a) -> int:
    os.makedirs(a.out, exist_ok=True)
    written = []
    if a.figure == "pcoords":
        files = collect_traces(a.inputs)
        firsts, finals, ffit, lfit = [], [], [], []
        objective = None
        for f in files:
            header, best = read_header_and_final(f)
            first = read_first_snapshot(f).best()
            objective = objective or header["objective"]
            firsts.append(first.position)
            ffit.append(first.fitness)
            finals.append(best.position)
            lfit.append(best.fitness)
        domain = Objective.from_dict(objective).domain
        for name, pts, fit in (("first", firsts, ffit), ("last", finals, lfit)):
            path = os.path.join(a.out, f"pcoords_{name}.svg")
            parallel_coordinates_svg(pts, domain, fit, title=f"best points, {name} population").save(path)
            written.append(path)
    elif a.figure == "evolution":
        if a.dimension is None:
            raise UsageError("--figure evolution needs --dimension")
        traces = [read_trace(f) for f in collect_traces(a.inputs)]
        path = os.path.join(a.out, f"evolution_d{a.dimension}.svg")
        evolution_plot_svg(traces, a.dimension - 1, title=f"coordinate {a.dimension}").save(path)
        written.append(path)
    elif a.figure == "scatter":
        for f in a.inputs:
            pairs = read_pairs_csv(f)
            stem = os.path.splitext(os.path.basename(f))[0]
            path = os.path.join(a.out, f"scatter_{stem}.svg")
            scatter_svg(pairs, title=stem).save(path)
            written.append(path)
    else:
        reports = [r for f in a.inputs for r in load_reports(f)]
        path = os.path.join(a.out, "pstrip.svg")
        pvalue_strip_svg(reports, log_scale=not a.linear, alpha=a.alpha).save(path)
        written.append(path)
    _emit({"svg": written})
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="biasprobe", description="Structural-bias probes for optimisers.")
    p.add_argument("--version", action="version", version=f"biasprobe {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    r = sub.add_parser("run", help="run an experiment suite and write traces")
    r.add_argument("--config")
    r.add_argument("--preset", help="named preset, e.g. paper-f0")
    r.add_argument("--alg", action="append", help="ga, pso, sga or ra (repeatable or comma list)")
    r.add_argument("--objective")
    r.add_argument("--dim", type=int)
    r.add_argument("--pop", nargs="+", help="population sizes")
    r.add_argument("--runs", type=int)
    r.add_argument("--budget", type=int)
    r.add_argument("--seed", type=int, help="master seed")
    r.add_argument("--out")
    r.add_argument("--snapshot-every", type=int)
    r.add_argument("--workers", type=int, help="process count (capped by BIASPROBE_THREADS)")
    r.set_defaults(func=do_run)

    rep = sub.add_parser("report", help="KS bias report over final best points")
    rep.add_argument("traces", nargs="+", help="trace files or directories")
    rep.add_argument("--alpha", type=float, default=0.05)
    rep.add_argument("--bonferroni", action="store_true")
    rep.add_argument("--out", help="report JSON path (default: stdout)")
    rep.add_argument("--csv", help="per-dimension p-value CSV path")
    rep.set_defaults(func=do_report)

    t = sub.add_parser("theory", help="threshold K, d bound and drift scan")
    t.add_argument("--N", type=int, required=True)
    t.add_argument("--d", type=float, required=True)
    t.add_argument("--sigma2", type=float, required=True)
    t.add_argument("--scan", type=int, default=0, help="number of random configurations")
    t.add_argument("--trials", type=int, default=100_000)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--csv", help="write the drift table here")
    t.set_defaults(func=do_theory)

    g = sub.add_parser("rngtest", help="lag-pair test on a random stream")
    g.add_argument("--engine", default="lcg48", help="lcg48 or recorded:<path>")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--period", type=int, default=65)
    g.add_argument("--count", type=int, default=100_000)
    g.add_argument("--mode", choices=["pooled", "offset"], default="pooled")
    g.add_argument("--offset", type=int, default=0)
    g.add_argument("--out", default=".")
    g.set_defaults(func=do_rngtest)

    k = sub.add_parser("algk", help="orbit of Algorithm K")
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--max-steps", type=int, default=100_000)
    k.add_argument("--scan", type=int, default=0, help="scan this many seeds from --seed")
    k.set_defaults(func=do_algk)

    pl = sub.add_parser("plot", help="SVG figures from traces, reports or pair CSVs")
    pl.add_argument("inputs", nargs="+")
    pl.add_argument("--figure", choices=["pcoords", "evolution", "scatter", "pstrip"],
                    required=True)
    pl.add_argument("--dimension", type=int, help="1-based coordinate for evolution plots")
    pl.add_argument("--alpha", type=float, default=0.05)
    pl.add_argument("--linear", action="store_true", help="linear p axis for pstrip")
    pl.add_argument("--out", default=".")
    pl.set_defaults(func=do_plot)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (BiasProbeError, OSError) as exc:
        kind, code = _classify(exc)
        msg = " ".join(str(exc).split())
        sys.stderr.write(json.dumps({"error": kind, "message": msg}) + "\n")
        return code


def _classify(exc: Exception) -> tuple[str, int]:
    if isinstance(exc, UsageError):
        return "usage", 2
    if isinstance(exc, InvalidParameter):
        return "invalid_parameter", 2
    if isinstance(exc, TraceFormatError):
        return "trace_format", 3
    if isinstance(exc, SourceExhausted):
        return "source_exhausted", 4
    if isinstance(exc, OSError):
        return "io", 5
    return "error", 1

if __name__ == "__main__":
    sys.exit(main())
