"""JSON Lines persistence for :class:`~biasprobe.optimizers.RunTrace`.

Line 1 is the header::

    {"type": "header", "algorithm", "config", "objective", "master_seed", "run_index", "seed"}

followed by one line per snapshot::

    {"type": "snapshot", "evaluations_used": int, "positions": [[...], ...], "fitnesses": [...]}

and a closing line::

    {"type": "final_best", "evaluations_used": int, "index": int, "position": [...], "fitness": float}

Floats are written with 17 significant digits, so reading a file back gives
bit-identical arrays.  Keys are emitted in a fixed order.
"""
from __future__ import annotations

import json
import os
from typing import Iterator, Optional

import numpy as np

from .errors import TraceFormatError
from .optimizers import Individual, RunTrace, Snapshot


def _num(v: float) -> str:
    return format(float(v), ".17g")


def _vec(a) -> str:
    return "[" + ",".join(_num(v) for v in np.asarray(a).ravel()) + "]"


def _mat(a) -> str:
    return "[" + ",".join(_vec(row) for row in np.asarray(a)) + "]"


def snapshot_line(snap: Snapshot) -> str:
    return ('{"type":"snapshot","evaluations_used":%d,"positions":%s,"fitnesses":%s}'
            % (snap.evaluations_used, _mat(snap.positions), _vec(snap.fitnesses)))


def final_line(best: Individual, evaluations_used: int) -> str:
    return ('{"type":"final_best","evaluations_used":%d,"index":%d,"position":%s,"fitness":%s}'
            % (evaluations_used, best.index, _vec(best.position), _num(best.fitness)))


def header_line(header: dict) -> str:
    return json.dumps(header, sort_keys=True, separators=(",", ":"))


class TraceWriter:
    """Streams one trace file; each snapshot is flushed as it arrives.

    Writes go to ``<path>.part`` and the file is renamed on :meth:`close`, so
    a finished name always holds a complete trace while an aborted run leaves
    an analysable prefix.
    """

    def __init__(self, path: str | os.PathLike, header: dict):
        self.path = os.fspath(path)
        self.partial = self.path + ".part"
        self._fh = open(self.partial, "w", encoding="utf-8", newline="\n")
        self._fh.write(header_line(header) + "\n")
        self._fh.flush()
        self._last: Optional[Snapshot] = None

    def __call__(self, snap: Snapshot) -> None:
        self._fh.write(snapshot_line(snap) + "\n")
        self._fh.flush()
        self._last = snap

    def close(self, best: Individual) -> None:
        if self._last is None:
            raise TraceFormatError(f"{self.path}: no snapshot written")
        self._fh.write(final_line(best, self._last.evaluations_used) + "\n")
        self._fh.close()
        os.replace(self.partial, self.path)


def write_trace(path: str | os.PathLike, trace: RunTrace) -> None:
    w = TraceWriter(path, trace.header())
    for s in trace.snapshots:
        w(s)
    w.close(trace.final_best)


def _records(path: str) -> Iterator[tuple[int, dict]]:
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise TraceFormatError(f"{path}: cannot open trace ({exc.strerror})") from None
    with fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TraceFormatError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(rec, dict) or "type" not in rec:
                raise TraceFormatError(f"{path}:{lineno}: record without a 'type' field")
            yield lineno, rec


def _field(path, lineno, rec, key):
    if key not in rec:
        raise TraceFormatError(f"{path}:{lineno}: {rec['type']} record lacks {key!r}")
    return rec[key]


def read_trace(path: str | os.PathLike) -> RunTrace:
    """Parse a whole trace file, validating record order and shapes."""
    path = os.fspath(path)
    trace: Optional[RunTrace] = None
    for lineno, rec in _records(path):
        kind = rec["type"]
        if trace is None:
            if kind != "header":
                raise TraceFormatError(f"{path}:{lineno}: first record must be the header")
            trace = RunTrace(_field(path, lineno, rec, "algorithm"),
                             _field(path, lineno, rec, "config"),
                             _field(path, lineno, rec, "objective"),
                             rec.get("seed"), rec.get("master_seed"), rec.get("run_index"))
        elif kind == "snapshot":
            if trace.final_best is not None:
                raise TraceFormatError(f"{path}:{lineno}: snapshot after final_best")
            pos = np.array(_field(path, lineno, rec, "positions"), dtype=np.float64)
            fit = np.array(_field(path, lineno, rec, "fitnesses"), dtype=np.float64)
            if pos.ndim != 2 or fit.shape != (pos.shape[0],):
                raise TraceFormatError(f"{path}:{lineno}: positions and fitnesses disagree")
            trace.snapshots.append(Snapshot(int(_field(path, lineno, rec, "evaluations_used")),
                                            pos, fit))
        elif kind == "final_best":
            trace.final_best = Individual(
                np.array(_field(path, lineno, rec, "position"), dtype=np.float64),
                float(_field(path, lineno, rec, "fitness")),
                int(_field(path, lineno, rec, "index")))
        else:
            raise TraceFormatError(f"{path}:{lineno}: unknown record type {kind!r}")
    if trace is None:
        raise TraceFormatError(f"{path}:1: empty trace file")
    if trace.final_best is None:
        raise TraceFormatError(f"{path}: truncated trace, no final_best record")
    return trace


def _lines(path: str) -> list[bytes]:
    try:
        with open(path, "rb") as fh:
            return fh.read().split(b"\n")
    except OSError as exc:
        raise TraceFormatError(f"{path}: cannot open trace ({exc.strerror})") from None


def _parse(path: str, lineno: int, raw: bytes, kind: str) -> dict:
    try:
        rec = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise TraceFormatError(f"{path}:{lineno}: invalid JSON ({exc})") from None
    if not isinstance(rec, dict) or rec.get("type") != kind:
        raise TraceFormatError(f"{path}:{lineno}: expected a {kind} record")
    return rec


def read_header_and_final(path: str | os.PathLike) -> tuple[dict, Individual]:
    """Header and final best without parsing the snapshots in between."""
    path = os.fspath(path)
    lines = _lines(path)
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise TraceFormatError(f"{path}:1: empty trace file")
    header = _parse(path, 1, lines[0], "header")
    if len(lines) < 3:
        raise TraceFormatError(f"{path}:{len(lines)}: truncated trace, no final_best record")
    rec = _parse(path, len(lines), lines[-1], "final_best")
    best = Individual(np.array(_field(path, len(lines), rec, "position"), dtype=np.float64),
                      float(_field(path, len(lines), rec, "fitness")),
                      int(_field(path, len(lines), rec, "index")))
    return header, best


def read_first_snapshot(path: str | os.PathLike) -> Snapshot:
    path = os.fspath(path)
    lines = _lines(path)
    if len(lines) < 2:
        raise TraceFormatError(f"{path}:{len(lines)}: no snapshot record")
    rec = _parse(path, 2, lines[1], "snapshot")
    return Snapshot(int(rec["evaluations_used"]), np.array(rec["positions"], dtype=np.float64),
                    np.array(rec["fitnesses"], dtype=np.float64))


def read_final_best(path: str | os.PathLike) -> Individual:
    return read_header_and_final(path)[1]
