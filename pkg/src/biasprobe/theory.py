"""Variance dynamics of the simplified GA.

One step of the process picks parents ``j, k`` and a slot ``i`` uniformly with
replacement, draws ``alpha ~ U(-d, 1+d)`` and ``Z ~ N(0, sigma^2)``, and writes
``Y = alpha X_j + (1 - alpha) X_k + Z`` (clipped to [0, 1] when absorbed) into
slot ``i``.

Closed-form drift of the unabsorbed step
-----------------------------------------
Write ``m1 = S1/N``, ``m2 = S2/N`` for the power-sum means and
``v = m2 - m1^2 = (N-1) S^2 / N``.  With ``E alpha = 1/2`` and
``a2 = E alpha^2 = E (1-alpha)^2 = (1+d+d^2)/3``::

    E Y   = m1
    E Y^2 = m1^2 + 2 a2 v + sigma^2

Replacing ``X_i`` by ``Y`` changes ``(N-1) S^2`` by
``Y^2 - X_i^2 - delta (2 S1 + delta) / N`` with ``delta = Y - X_i``.
Averaging over ``i`` (independent of ``Y``) the ``m1`` terms cancel and::

    (N-1) E[dS^2 | X] = sigma^2 (1 - 1/N) - v (N + 1 - 2 a2 (N-1)) / N

The drift depends on ``X`` only through ``S^2``, so it is translation
invariant.  It is negative exactly when ``S^2 > sigma^2 N / D`` with
``D = N + 1 - 2 a2 (N-1)``; :func:`drift_threshold` returns that level.
:func:`threshold_K` returns the customary constant
``sigma^2 (1 - 1/N) / D``, which is smaller by the factor ``N^2 / (N-1)``
and is therefore not by itself sufficient for a negative drift.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import _kernels as K
from .errors import InvalidParameter
from .rng import RngEngine


def sample_variance(x) -> float:
    """Unbiased sample variance, computed in two passes."""
    a = np.asarray(x, dtype=np.float64).ravel()
    if a.size < 2:
        raise InvalidParameter("sample variance needs at least 2 values")
    c = a - a.mean()
    return float(np.dot(c, c) / (a.size - 1))


def alpha_moments(d: float) -> dict:
    """First two moments of ``U(-d, 1+d)``."""
    if d < 0:
        raise InvalidParameter("d must be >= 0")
    return {"mean": 0.5, "second_moment": (1.0 + d + d * d) / 3.0}


def d_bound(N: int) -> float:
    """Largest blend overshoot ``d`` for which the contraction result applies."""
    if N < 2:
        raise InvalidParameter("N must be >= 2")
    return (-1.0 + math.sqrt((3.0 * N + 9.0) / (N - 1.0))) / 2.0


def _denominator(N: int, d: float) -> float:
    return N + 1.0 - 2.0 * alpha_moments(d)["second_moment"] * (N - 1.0)


def _check(N: int, d: float, sigma2: float) -> None:
    if N < 2:
        raise InvalidParameter("N must be >= 2")
    if d < 0:
        raise InvalidParameter("d must be >= 0")
    if sigma2 < 0:
        raise InvalidParameter("sigma2 must be >= 0")


def threshold_K(N: int, d: float, sigma2: float) -> float:
    """Customary threshold; ``math.inf`` flags ``d >= d_bound(N)``."""
    _check(N, d, sigma2)
    den = _denominator(N, d)
    if den <= 0:
        return math.inf
    return sigma2 * (1.0 - 1.0 / N) / den


def drift_threshold(N: int, d: float, sigma2: float) -> float:
    """Exact level of ``S^2`` above which the unabsorbed drift is negative."""
    _check(N, d, sigma2)
    den = _denominator(N, d)
    if den <= 0:
        return math.inf
    return sigma2 * N / den


@dataclass(frozen=True)
class TheoremQuantities:
    N: int
    d: float
    sigma2: float
    d_bound: float
    K: float
    denominator: float
    drift_threshold: float

    @property
    def finite(self) -> bool:
        return math.isfinite(self.K)

    @classmethod
    def compute(cls, N: int, d: float, sigma2: float) -> "TheoremQuantities":
        _check(N, d, sigma2)
        return cls(N, d, sigma2, d_bound(N), threshold_K(N, d, sigma2),
                   _denominator(N, d), drift_threshold(N, d, sigma2))

    def to_dict(self) -> dict:
        out = asdict(self)
        for key in ("K", "drift_threshold"):
            if not math.isfinite(out[key]):
                out[key] = "infinite"
        out["alpha_moments"] = alpha_moments(self.d)
        return out


def _unit_vector(x) -> np.ndarray:
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.ndim != 1 or a.size < 2:
        raise InvalidParameter("configuration must be a vector with at least 2 members")
    if not np.all(np.isfinite(a)) or np.any(a < 0.0) or np.any(a > 1.0):
        raise InvalidParameter("configuration values must lie in [0, 1]")
    return a


def expected_drift_unabsorbed(x, d: float, sigma2: float) -> float:
    """``E[S^2(t+1) - S^2(t) | X(t) = x]`` without clipping; O(N)."""
    a = _unit_vector(x)
    _check(a.size, d, sigma2)
    n = a.size
    v = (n - 1) * sample_variance(a) / n
    return (sigma2 * (1.0 - 1.0 / n) - v * _denominator(n, d) / n) / (n - 1)


@dataclass(frozen=True)
class DriftEstimate:
    mean: float
    std_error: float
    trials: int


def _estimate(mean: float, m2: float, trials: int) -> DriftEstimate:
    var = max(m2, 0.0) / (trials - 1)
    return DriftEstimate(float(mean), math.sqrt(var / trials), int(trials))


def paired_drift(x, d: float, sigma: float, trials: int,
                 engine: RngEngine) -> dict[str, DriftEstimate]:
    """Unabsorbed, absorbed and absorbed-minus-unabsorbed drift on shared draws."""
    a = _unit_vector(x)
    if trials < 100:
        raise InvalidParameter("trials must be >= 100")
    if d < 0 or sigma < 0:
        raise InvalidParameter("d and sigma must be >= 0")
    res = np.zeros(6)
    engine._call(K.drift_mc, a, float(d), float(sigma), int(trials), res)
    return {
        "unabsorbed": _estimate(res[0], res[1], trials),
        "absorbed": _estimate(res[2], res[3], trials),
        "difference": _estimate(res[4], res[5], trials),
    }


def monte_carlo_drift(x, d: float, sigma: float, trials: int, engine: RngEngine,
                      absorbed: bool = True) -> DriftEstimate:
    """Mean and standard error of ``S^2(X') - S^2(X)`` over independent steps."""
    return paired_drift(x, d, sigma, trials, engine)["absorbed" if absorbed else "unabsorbed"]


def variance_trajectory(trace, dim: int = 0) -> list[tuple[int, float]]:
    """Per-snapshot sample variance of coordinate ``dim``.

    ``trace`` is a :class:`~biasprobe.optimizers.RunTrace` or a sequence of
    scalar populations (a simplified-GA history), indexed by step.
    """
    snaps = getattr(trace, "snapshots", None)
    if snaps is not None:
        if not snaps:
            raise InvalidParameter("trace has no snapshots")
        ndim = np.asarray(snaps[0].positions).shape[1]
        if not 0 <= dim < ndim:
            raise InvalidParameter(f"dimension {dim} out of range for {ndim}-dimensional trace")
        return [(int(s.evaluations_used), sample_variance(np.asarray(s.positions)[:, dim]))
                for s in snaps]
    rows = list(trace)
    if not rows:
        raise InvalidParameter("history is empty")
    if dim != 0:
        raise InvalidParameter("a scalar history only has dimension 0")
    return [(t, sample_variance(r)) for t, r in enumerate(rows)]


def max_sample_variance(N: int, brute_force_limit: int = 16) -> dict:
    """Largest ``S^2`` of ``N`` points in [0, 1].

    ``S^2`` is convex, so the maximum sits on a vertex of the cube; all
    ``2^N`` vertices are enumerated for ``N <= brute_force_limit``.  The closed
    form is ``floor(N/2) ceil(N/2) / (N (N-1))``, i.e. ``N / (4 (N-1))`` for
    even N.
    """
    if N < 2:
        raise InvalidParameter("N must be >= 2")
    h = N // 2
    closed = h * (N - h) / (N * (N - 1.0))
    brute: Optional[float] = None
    if N <= brute_force_limit:
        codes = np.arange(2 ** N, dtype=np.int64)[:, None]
        verts = ((codes >> np.arange(N)) & 1).astype(np.float64)
        brute = float(np.max(np.var(verts, axis=1, ddof=1)))
    return {"N": N, "closed_form": closed, "brute_force": brute,
            "half_at_each_end": N / (4.0 * (N - 1.0))}
