"""Experiment orchestration: suites of runs, manifests, reports and figures.

Config schema (JSON; every key optional except where the preset is silent)::

    {
      "algorithms": ["ga", "pso"],          # any of ga, pso, sga, ra
      "params": {"ga": {"d": 0.25}, ...},    # per-algorithm config overrides
      "objective": "f0",
      "dim": 30,
      "lower": null, "upper": null,          # scalar box; defaults per objective
      "popsizes": [5, 20, 100],
      "runs": 50,
      "budget": 300000,
      "master_seed": 0,
      "snapshot_every": null,                # null = ceil(budget / 100)
      "out": "runs"
    }

Run ``r`` of every (algorithm, popsize) cell uses the seed
``run_seed(master_seed, r)``, so cells share random streams run by run.
"""
from __future__ import annotations

import csv
import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidParameter
from .objectives import DEFAULT_BOXES, Objective
from .optimizers import CONFIG_TYPES, RUNNERS
from .rng import Lcg48Engine, run_seed
from .stats import (BiasReport, bias_report, dispersion_summary, sensitivity_classify)
from .traceio import TraceWriter, read_header_and_final

MANIFEST = "manifest.json"


@dataclass
class ExperimentConfig:
    algorithms: list = field(default_factory=lambda: ["ga"])
    params: dict = field(default_factory=dict)
    objective: str = "f0"
    dim: int = 30
    lower: Optional[float] = None
    upper: Optional[float] = None
    popsizes: list = field(default_factory=lambda: [5, 20, 100])
    runs: int = 50
    budget: int = 300_000
    master_seed: int = 0
    snapshot_every: Optional[int] = None
    out: str = "runs"

    def validate(self) -> None:
        if not self.algorithms:
            raise InvalidParameter("no algorithms selected")
        for a in self.algorithms:
            if a not in RUNNERS:
                raise InvalidParameter(f"unknown algorithm {a!r}; choose from {sorted(RUNNERS)}")
        for a in self.params:
            if a not in RUNNERS:
                raise InvalidParameter(f"params given for unknown algorithm {a!r}")
        if self.objective not in DEFAULT_BOXES:
            raise InvalidParameter(f"unknown objective {self.objective!r}")
        if self.dim < 1:
            raise InvalidParameter("dim must be >= 1")
        if self.runs < 1:
            raise InvalidParameter("runs must be >= 1")
        if not self.popsizes or any(int(n) < 1 for n in self.popsizes):
            raise InvalidParameter("popsizes must be a non-empty list of positive integers")
        if self.master_seed < 0:
            raise InvalidParameter("master_seed must be >= 0")
        if self.snapshot_every is not None and self.snapshot_every < 1:
            raise InvalidParameter("snapshot_every must be >= 1")
        self.objective_spec()
        for alg in self.algorithms:
            for n in self.popsizes:
                self.algorithm_config(alg, int(n)).validate()

    def objective_spec(self) -> Objective:
        return Objective.named(self.objective, self.dim, self.lower, self.upper)

    def algorithm_config(self, alg: str, n: int):
        cls = CONFIG_TYPES[alg]
        extra = dict(self.params.get(alg, {}))
        known = {f.name for f in fields(cls)}
        bad = set(extra) - known
        if bad:
            raise InvalidParameter(f"unknown {alg} parameters: {sorted(bad)}")
        if alg == "sga":
            extra.setdefault("steps", self.budget - n)
        else:
            extra.setdefault("budget", self.budget)
        try:
            return cls(N=n, **extra)
        except TypeError as exc:
            raise InvalidParameter(str(exc)) from None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        bad = set(d) - known
        if bad:
            raise InvalidParameter(f"unknown config keys: {sorted(bad)}")
        return cls(**d)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise InvalidParameter(f"{path}: cannot read config ({exc.strerror})") from None
        except json.JSONDecodeError as exc:
            raise InvalidParameter(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
        if not isinstance(data, dict):
            raise InvalidParameter(f"{path}: config must be a JSON object")
        return cls.from_dict(data)

    def hash(self) -> str:
        """sha256 of the canonical JSON config, ignoring the output directory."""
        d = self.to_dict()
        d.pop("out")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


PRESETS = {
    "paper-f0": dict(algorithms=["ga", "pso"], objective="f0", dim=30, budget=300_000,
                     popsizes=[5, 20, 100], runs=50),
}


def preset(name: str, **overrides) -> ExperimentConfig:
    if name not in PRESETS:
        raise InvalidParameter(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return ExperimentConfig(**{**PRESETS[name], **overrides})


def trace_name(alg: str, n: int, run: int) -> str:
    return f"{alg}_N{n}_r{run}.jsonl"


def sha256_file(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _task(args) -> dict:
    cfg_dict, alg, n, run = args
    cfg = ExperimentConfig.from_dict(cfg_dict)
    objective = cfg.objective_spec()
    config = cfg.algorithm_config(alg, n)
    seed = run_seed(cfg.master_seed, run)
    engine = Lcg48Engine(seed)
    path = os.path.join(cfg.out, trace_name(alg, n, run))
    header = {
        "type": "header", "algorithm": alg, "config": asdict(config),
        "objective": objective.to_dict(), "master_seed": cfg.master_seed,
        "run_index": run, "seed": seed,
    }
    writer = TraceWriter(path, header)
    trace = RUNNERS[alg](config, objective, None, engine, snapshot_every=cfg.snapshot_every,
                         sink=writer, keep_snapshots=False)
    writer.close(trace.final_best)
    return {"file": os.path.basename(path), "algorithm": alg, "N": n, "run_index": run,
            "seed": seed, "sha256": sha256_file(path)}


def worker_count(requested: Optional[int] = None) -> int:
    cap = os.environ.get("BIASPROBE_THREADS")
    n = requested if requested is not None else (os.cpu_count() or 1)
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise InvalidParameter(f"BIASPROBE_THREADS must be an integer, got {cap!r}") from None
    return max(1, n)


def cmd_run(cfg: ExperimentConfig, workers: Optional[int] = None) -> dict:
    """Execute every (algorithm, popsize, run) cell and write the manifest."""
    cfg.validate()
    os.makedirs(cfg.out, exist_ok=True)
    tasks = [(cfg.to_dict(), alg, int(n), r)
             for alg in cfg.algorithms for n in cfg.popsizes for r in range(cfg.runs)]
    nw = min(worker_count(workers), len(tasks))
    if nw <= 1:
        rows = [_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=nw) as pool:
            rows = list(pool.map(_task, tasks, chunksize=1))
    manifest = {"config": cfg.to_dict(), "config_hash": cfg.hash(), "files": rows}
    with open(os.path.join(cfg.out, MANIFEST), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return manifest


# ---------------------------------------------------------------------------
# reports

def collect_traces(paths: Sequence[str]) -> list[str]:
    """Expand directories into their ``*.jsonl`` files; keep explicit files."""
    out = []
    for p in paths:
        if os.path.isdir(p):
            out.extend(sorted(os.path.join(p, f) for f in os.listdir(p) if f.endswith(".jsonl")))
        elif os.path.exists(p):
            out.append(p)
        else:
            raise InvalidParameter(f"{p}: no such trace file or directory")
    if not out:
        raise InvalidParameter("no trace files found")
    return out


def _group_key(header: dict) -> tuple[str, int]:
    return header["algorithm"], int(header["config"]["N"])


def cmd_report(paths: Sequence[str], alpha: float = 0.05, *, bonferroni: bool = False) -> dict:
    """Bias report per (algorithm, N) group, plus sensitivity per algorithm."""
    groups: dict = {}
    for path in collect_traces(paths):
        header, best = read_header_and_final(path)
        key = _group_key(header)
        g = groups.setdefault(key, {"objective": header["objective"], "points": [], "runs": []})
        if g["objective"] != header["objective"]:
            raise InvalidParameter(f"{path}: objective differs from other traces of {key}")
        g["points"].append(best.position)
        g["runs"].append(header.get("run_index"))
    reports = []
    by_alg: dict = {}
    for (alg, n), g in sorted(groups.items()):
        if len(g["points"]) < 5:
            raise InvalidParameter(f"{alg} N={n}: need at least 5 traces, got {len(g['points'])}")
        domain = Objective.from_dict(g["objective"]).domain
        pts = np.array(g["points"])
        rep = bias_report(pts, domain, alpha, bonferroni=bonferroni,
                          metadata={"label": f"{alg}_N{n}", "algorithm": alg, "N": n,
                                    "objective": g["objective"]["kind"]})
        reports.append(rep)
        scaled = (pts - domain.lo) / domain.width
        by_alg.setdefault(alg, {})[n] = (rep, dispersion_summary(scaled))
    sensitivity = {alg: sensitivity_classify(e) for alg, e in sorted(by_alg.items()) if len(e) >= 2}
    return {"alpha": alpha, "reports": [r.to_dict() for r in reports], "sensitivity": sensitivity}


def write_report(result: dict, json_path: str, csv_path: Optional[str] = None) -> None:
    with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(result, fh, indent=1, sort_keys=True)
        fh.write("\n")
    if csv_path:
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["label", "dimension", "statistic", "p_value", "sample_size"])
            for rep in result["reports"]:
                for k, r in enumerate(rep["per_dimension"]):
                    w.writerow([rep["metadata"]["label"], k + 1, f"{r['statistic']:.17g}",
                                f"{r['p_value']:.17g}", r["sample_size"]])


def load_reports(path: str) -> list[tuple[str, BiasReport]]:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InvalidParameter(f"{path}: cannot read report ({exc.strerror})") from None
    except json.JSONDecodeError as exc:
        raise InvalidParameter(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    items = data.get("reports", [data]) if isinstance(data, dict) else None
    if not items:
        raise InvalidParameter(f"{path}: no reports found")
    try:
        return [(r.get("metadata", {}).get("label", f"#{i}"), BiasReport.from_dict(r))
                for i, r in enumerate(items)]
    except (KeyError, TypeError) as exc:
        raise InvalidParameter(f"{path}: malformed report ({exc})") from None


def with_overrides(cfg: ExperimentConfig, **flags) -> ExperimentConfig:
    """Apply command-line values that were actually given."""
    return replace(cfg, **{k: v for k, v in flags.items() if v is not None})
