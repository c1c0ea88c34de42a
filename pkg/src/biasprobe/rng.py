"""Deterministic random sources and generator forensics.

Two engine kinds share one interface:

* :class:`Lcg48Engine` -- the 48-bit linear congruential generator used by
  ``java.util.Random`` and ``drand48`` (multiplier ``0x5DEECE66D``,
  increment ``0xB``).  Outputs are ``state / 2**48`` using all 48 bits.
* :class:`RecordedEngine` -- replays a finite stream of reals, e.g. numbers
  captured from a hardware or online entropy source.

Gaussian variates use the inverse normal CDF (Wichura's AS 241) evaluated at
the centre of the drawn 2^-48 cell, so every normal consumes exactly one
uniform and no state is carried between normals.  Draw counts per
algorithm step are therefore fixed (see :mod:`biasprobe.optimizers`).
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import _kernels as K
from .errors import InvalidParameter, SourceExhausted

MODULUS = 1 << 48
MASK48 = MODULUS - 1
DEFAULT_MULTIPLIER = 25214903917
DEFAULT_INCREMENT = 11

GA = "GA"
PSO = "PSO"


@dataclass(frozen=True)
class Lcg48State:
    state: int
    multiplier: int = DEFAULT_MULTIPLIER
    increment: int = DEFAULT_INCREMENT

    def __post_init__(self):
        for name in ("state", "multiplier", "increment"):
            v = getattr(self, name)
            if not 0 <= v < MODULUS:
                raise InvalidParameter(f"{name} must lie in [0, 2^48), got {v}")


def lcg48_next(state: Lcg48State) -> tuple[Lcg48State, float]:
    """One LCG step: ``s' = (a*s + c) mod 2^48``, output ``s' / 2^48``."""
    s = (state.multiplier * state.state + state.increment) & MASK48
    return Lcg48State(s, state.multiplier, state.increment), s / MODULUS


def srand48_state(seed: int) -> int:
    """Initial LCG state produced by the C library call ``srand48(seed)``."""
    return (((seed & 0xFFFFFFFF) << 16) | 0x330E) & MASK48


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return x ^ (x >> 31)


def run_seed(master_seed: int, run_index: int) -> int:
    """48-bit LCG seed for one run: splitmix64 of splitmix64(master) xor index."""
    return splitmix64(splitmix64(master_seed & 0xFFFFFFFFFFFFFFFF) ^ run_index) & MASK48


@dataclass
class DrawLog:
    """Counts uniforms produced since the last reset; optionally taps each one."""

    total_draws: int = 0
    tap: Optional[Callable[[float], None]] = None

    def reset(self) -> None:
        self.total_draws = 0


class RngEngine:
    """Base class: uniform reals in [0, 1) with draw accounting.

    Engines are single-owner mutable objects.  The compiled kernels read and
    write the state arrays directly; :meth:`_call` keeps the draw log in
    sync afterwards.
    """

    def __init__(self, prm: np.ndarray, ist: np.ndarray, buf: np.ndarray):
        self._prm = prm
        self._ist = ist
        self._buf = buf
        self.log = DrawLog()

    # kernel plumbing -----------------------------------------------------
    def _call(self, fn, *args):
        before = self._ist.copy()
        try:
            return fn(self._prm, self._ist, self._buf, *args)
        finally:
            self._account(before)

    def _account(self, before: np.ndarray) -> None:
        n = int(self._ist[2] - before[2])
        self.log.total_draws += n
        if self.log.tap is not None and n:
            for v in self._replay(before, n):
                self.log.tap(v)

    def _replay(self, before: np.ndarray, n: int) -> Iterable[float]:
        raise NotImplementedError

    # public API ----------------------------------------------------------
    def random(self) -> float:
        return float(self._call(K.uniform))

    def random_array(self, n: int) -> np.ndarray:
        out = np.empty(int(n))
        self._call(K.fill_uniform, out)
        return out

    def index(self, n: int) -> int:
        """Uniform integer in ``range(n)`` as ``floor(u * n)``; one draw."""
        return int(self._call(K.index, int(n)))

    def gauss(self, mean: float = 0.0, sd: float = 1.0) -> float:
        return gaussian_draw(self, mean, sd)

    def normal_array(self, n: int) -> np.ndarray:
        out = np.empty(int(n))
        self._call(K.fill_normal, out)
        return out

    @property
    def draws(self) -> int:
        return self.log.total_draws


class Lcg48Engine(RngEngine):
    def __init__(self, seed: int = 0, multiplier: int = DEFAULT_MULTIPLIER,
                 increment: int = DEFAULT_INCREMENT):
        st = Lcg48State(int(seed) & MASK48, multiplier, increment)
        super().__init__(
            np.array([0, st.multiplier, st.increment], dtype=np.int64),
            np.array([st.state, 0, 0], dtype=np.int64),
            np.empty(0),
        )

    @classmethod
    def from_srand48(cls, seed: int) -> "Lcg48Engine":
        return cls(srand48_state(seed))

    @property
    def state(self) -> Lcg48State:
        return Lcg48State(int(self._ist[0]), int(self._prm[1]), int(self._prm[2]))

    def _replay(self, before, n):
        st = Lcg48State(int(before[0]), int(self._prm[1]), int(self._prm[2]))
        for _ in range(n):
            st, v = lcg48_next(st)
            yield v


class RecordedEngine(RngEngine):
    """Replays a fixed stream; running past its end raises SourceExhausted."""

    def __init__(self, values: Sequence[float]):
        arr = np.ascontiguousarray(values, dtype=np.float64)
        if arr.ndim != 1:
            raise InvalidParameter("recorded values must be a flat sequence")
        if arr.size and (np.any(arr < 0.0) or np.any(arr >= 1.0) or not np.all(np.isfinite(arr))):
            raise InvalidParameter("recorded values must lie in [0, 1)")
        super().__init__(np.array([1, 0, 0], dtype=np.int64),
                         np.array([0, 0, 0], dtype=np.int64), arr)

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "RecordedEngine":
        return cls(read_recorded(path))

    @property
    def cursor(self) -> int:
        return int(self._ist[1])

    def __len__(self) -> int:
        return self._buf.size

    @property
    def remaining(self) -> int:
        return self._buf.size - self.cursor

    def _replay(self, before, n):
        start = int(before[1])
        return (float(v) for v in self._buf[start:start + n])


def make_engine(spec: str, seed: int = 0) -> RngEngine:
    """Build an engine from ``"lcg48"`` or ``"recorded:<path>"``."""
    if spec == "lcg48":
        return Lcg48Engine(seed)
    if spec.startswith("recorded:"):
        return RecordedEngine.from_file(spec[len("recorded:"):])
    raise InvalidParameter(f"unknown engine spec {spec!r}")


def gaussian_draw(engine: RngEngine, mean: float, sd: float) -> float:
    if sd < 0:
        raise InvalidParameter(f"sd must be >= 0, got {sd}")
    z = engine._call(K.std_normal)
    return mean + sd * z


# ---------------------------------------------------------------------------
# recorded-source files

def read_recorded(path: str | os.PathLike) -> np.ndarray:
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s:
                continue
            try:
                v = float(s)
            except ValueError:
                raise InvalidParameter(f"{path}:{lineno}: not a number: {s!r}") from None
            if not 0.0 <= v < 1.0:
                raise InvalidParameter(f"{path}:{lineno}: value {v} outside [0, 1)")
            values.append(v)
    return np.array(values)


def write_recorded(path: str | os.PathLike, values: Iterable[float]) -> None:
    with open(path, "w") as fh:
        for v in values:
            fh.write(f"{v:.17g}\n")


# ---------------------------------------------------------------------------
# draw accounting

def _check_kind(kind: str) -> str:
    k = kind.upper()
    if k not in (GA, PSO):
        raise InvalidParameter(f"algorithm kind must be GA or PSO, got {kind!r}")
    return k


def init_draw_count(kind: str, dim: int, n_pop: int) -> int:
    """Uniforms consumed by initialisation, one extra per f0 evaluation."""
    k = _check_kind(kind)
    if dim < 1 or n_pop < 1:
        raise InvalidParameter("dim and n_pop must be >= 1")
    if k == GA:
        return (dim + 1) * n_pop
    return (2 * dim + 1) * n_pop


def effective_period(kind: str, dim: int, n_pop: int = 1) -> int:
    """Stride between draws used for the same coordinate of successive points.

    GA: two size-2 tournaments, ``dim`` blend factors, ``dim`` mutation
    normals and one f0 value.  PSO: the conventional ``2*dim*n_pop + 1``.
    """
    k = _check_kind(kind)
    if dim < 1 or n_pop < 1:
        raise InvalidParameter("dim and n_pop must be >= 1")
    if k == GA:
        return 2 * dim + 5
    return 2 * dim * n_pop + 1


def marsaglia_bound(n: int, m: int) -> int:
    """``floor((n! * m) ** (1/n))``: max number of hyperplanes for LCG n-tuples.

    A log-gamma estimate is corrected with exact integer powers, so the
    result is exact for any size.
    """
    if n < 1 or m < 1:
        raise InvalidParameter("n and m must be >= 1")
    if n == 1:
        return m
    target = math.factorial(n) * m
    k = int(math.exp((math.lgamma(n + 1) + math.log(m)) / n))
    k = max(k, 1)
    while k ** n > target:
        k -= 1
    while (k + 1) ** n <= target:
        k += 1
    return k


# ---------------------------------------------------------------------------
# lag tests

def lag_pairs(sequence: Sequence[float], period: int, offset: Optional[int] = None) -> np.ndarray:
    """Pairs ``(s[i], s[i + period])``.

    With ``offset=None`` every ``i`` is used (pooled over all residues);
    otherwise only ``i = offset (mod period)``.  ``period=1`` pooled gives
    consecutive pairs.  Returns an ``(m, 2)`` array, empty when the sequence
    is shorter than ``period + 1``.
    """
    if period < 1:
        raise InvalidParameter("period must be >= 1")
    if offset is not None and not 0 <= offset < period:
        raise InvalidParameter("offset must satisfy 0 <= offset < period")
    s = np.asarray(sequence, dtype=np.float64)
    if s.size < period + 1:
        return np.empty((0, 2))
    first = s[:-period]
    second = s[period:]
    if offset is not None:
        first = first[offset::period]
        second = second[offset::period]
    return np.column_stack([first, second])


def pearson(pairs: np.ndarray) -> float:
    pairs = np.asarray(pairs)
    if len(pairs) < 2:
        return math.nan
    x = pairs[:, 0] - pairs[:, 0].mean()
    y = pairs[:, 1] - pairs[:, 1].mean()
    den = math.sqrt(float(x @ x) * float(y @ y))
    return float(x @ y) / den if den > 0 else math.nan


def write_pairs_csv(path: str | os.PathLike, pairs: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y"])
        for x, y in pairs:
            w.writerow([f"{x:.17g}", f"{y:.17g}"])


def read_pairs_csv(path: str | os.PathLike) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["x", "y"]:
        raise InvalidParameter(f"{path}: expected header 'x,y'")
    return np.array([[float(a), float(b)] for a, b in rows[1:]]).reshape(-1, 2)


__all__ = [
    "Lcg48State", "lcg48_next", "srand48_state", "run_seed", "splitmix64",
    "DrawLog", "RngEngine", "Lcg48Engine", "RecordedEngine", "make_engine",
    "gaussian_draw", "read_recorded", "write_recorded", "init_draw_count",
    "effective_period", "marsaglia_bound", "lag_pairs", "pearson",
    "write_pairs_csv", "read_pairs_csv", "SourceExhausted",
]
