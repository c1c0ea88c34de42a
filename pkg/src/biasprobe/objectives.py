"""Objective functions: the i.i.d. uniform probe and a classic test suite.

The probe ``f0`` ignores its argument and returns one fresh uniform draw per
evaluation.  The classic functions are the canonical unshifted, unrotated
forms, each with its customary box:

=====================  ================  =========================================
kind                   default box       value
=====================  ================  =========================================
sphere                 [-100, 100]       sum x_i^2
ackley                 [-32, 32]         -20 exp(-0.2 sqrt(mean x^2))
                                         - exp(mean cos 2 pi x) + 20 + e
rastrigin              [-5, 5]           sum x_i^2 - 10 cos(2 pi x_i) + 10
griewank_rosenbrock    [-5, 5]           sum G(R(z_i, z_{i+1})), z = x + 1,
                                         R(a, b) = 100 (a^2 - b)^2 + (a - 1)^2,
                                         G(r) = r^2 / 4000 - cos r + 1
scaffer_f6             [-100, 100]       sum F(x_i, x_{i+1}),
                                         F = 0.5 + (sin^2 sqrt(a^2+b^2) - 0.5)
                                             / (1 + 0.001 (a^2 + b^2))^2
=====================  ================  =========================================

Indices wrap around (``x_{n+1} = x_1``).  Every classic function has its
global minimum 0 at the origin.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels as K
from .errors import InvalidParameter
from .rng import RngEngine

KIND_CODES = {
    "f0": K.F0,
    "sphere": K.SPHERE,
    "ackley": K.ACKLEY,
    "rastrigin": K.RASTRIGIN,
    "griewank_rosenbrock": K.GRIEWANK_ROSENBROCK,
    "scaffer_f6": K.SCAFFER_F6,
}

DEFAULT_BOXES = {
    "f0": (0.0, 1.0),
    "sphere": (-100.0, 100.0),
    "ackley": (-32.0, 32.0),
    "rastrigin": (-5.0, 5.0),
    "griewank_rosenbrock": (-5.0, 5.0),
    "scaffer_f6": (-100.0, 100.0),
}


@dataclass(frozen=True)
class SearchDomain:
    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if not lo or len(lo) != len(hi):
            raise InvalidParameter("domain bounds must be non-empty and of equal length")
        if any(not a < b for a, b in zip(lo, hi)):
            raise InvalidParameter("every lower bound must be below its upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def box(cls, lo: float, hi: float, dim: int) -> "SearchDomain":
        if dim < 1:
            raise InvalidParameter("dimension must be >= 1")
        return cls((lo,) * dim, (hi,) * dim)

    @classmethod
    def unit(cls, dim: int) -> "SearchDomain":
        return cls.box(0.0, 1.0, dim)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def lo(self) -> np.ndarray:
        return np.array(self.lower)

    @property
    def hi(self) -> np.ndarray:
        return np.array(self.upper)

    @property
    def width(self) -> np.ndarray:
        return self.hi - self.lo

    def contains(self, points) -> bool:
        p = np.asarray(points)
        return bool(np.all(p >= self.lo) and np.all(p <= self.hi))

    def to_dict(self) -> dict:
        return {"lower": list(self.lower), "upper": list(self.upper)}

    @classmethod
    def from_dict(cls, d: dict) -> "SearchDomain":
        return cls(tuple(d["lower"]), tuple(d["upper"]))


@dataclass(frozen=True)
class Objective:
    kind: str
    domain: SearchDomain

    def __post_init__(self):
        if self.kind not in KIND_CODES:
            raise InvalidParameter(
                f"unknown objective {self.kind!r}; choose from {sorted(KIND_CODES)}")

    @classmethod
    def named(cls, kind: str, dim: int, lo: float | None = None,
              hi: float | None = None) -> "Objective":
        if kind not in DEFAULT_BOXES:
            raise InvalidParameter(
                f"unknown objective {kind!r}; choose from {sorted(KIND_CODES)}")
        dlo, dhi = DEFAULT_BOXES[kind]
        return cls(kind, SearchDomain.box(dlo if lo is None else lo,
                                          dhi if hi is None else hi, dim))

    @property
    def code(self) -> int:
        return KIND_CODES[self.kind]

    @property
    def stochastic(self) -> bool:
        return self.kind == "f0"

    @property
    def dim(self) -> int:
        return self.domain.dim

    def evaluate(self, point, engine: RngEngine | None = None) -> float:
        if self.stochastic:
            if engine is None:
                raise InvalidParameter("f0 needs an engine")
            return f0_evaluate(point, engine)
        x = np.asarray(point, dtype=np.float64)
        if x.shape != (self.dim,):
            raise InvalidParameter(f"expected a point of dimension {self.dim}, got shape {x.shape}")
        return evaluate_classic(self.kind, x)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "domain": self.domain.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "Objective":
        return cls(d["kind"], SearchDomain.from_dict(d["domain"]))


def f0_evaluate(point, engine: RngEngine) -> float:
    """The probe: a fresh Uniform[0, 1) draw, independent of ``point``."""
    return engine.random()


def evaluate_classic(kind: str, point: Sequence[float]) -> float:
    if kind not in KIND_CODES or kind == "f0":
        raise InvalidParameter(f"{kind!r} is not a classic test function")
    x = np.ascontiguousarray(point, dtype=np.float64)
    if x.ndim != 1 or x.size < 1:
        raise InvalidParameter("point must be a non-empty vector")
    return float(K.classic(KIND_CODES[kind], x))


def argmin_uniformity_trial(n_points: int, trials: int, engine: RngEngine) -> np.ndarray:
    """Relative frequency of the argmin index over ``trials`` draws of N marks.

    Marks are consumed row by row; ties go to the lowest index.
    """
    if n_points < 1:
        raise InvalidParameter("n_points must be >= 1")
    if trials < 1:
        raise InvalidParameter("trials must be >= 1")
    counts = np.zeros(n_points, dtype=np.int64)
    chunk = max(1, 1_000_000 // n_points)
    left = trials
    while left:
        m = min(chunk, left)
        marks = engine.random_array(m * n_points).reshape(m, n_points)
        counts += np.bincount(np.argmin(marks, axis=1), minlength=n_points)
        left -= m
    return counts / trials
