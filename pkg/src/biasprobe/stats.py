"""Uniformity tests on final best points and the sensitivity heuristic.

KS p-values use the Kolmogorov limit law ``Q(lam) = P(K > lam)`` evaluated at
``lam = (sqrt(n) + 0.12 + 0.11/sqrt(n)) D``.  For ``lam >= 1.18`` the series
``2 sum (-1)^(k-1) exp(-2 k^2 lam^2)`` converges in a few terms; below that the
theta-transformed series
``1 - sqrt(2 pi)/lam sum exp(-(2k-1)^2 pi^2 / (8 lam^2))`` is used.

Verdicts (heuristic):

* ``strong`` if ``median_p < alpha``;
* ``mild`` if ``median_p < mild_median`` (default 0.2) or more than
  ``max(1, 2 alpha dims)`` dimensions fall below the (optionally
  Bonferroni-corrected) level;
* ``none`` otherwise.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import InvalidParameter
from .objectives import SearchDomain


def kolmogorov_sf(lam: float) -> float:
    """``P(K > lam)`` for the Kolmogorov distribution."""
    if lam <= 0:
        return 1.0
    if lam < 1.18:
        s = 0.0
        c = -math.pi ** 2 / (8.0 * lam * lam)
        for k in range(1, 8):
            s += math.exp(c * (2 * k - 1) ** 2)
        return min(1.0, max(0.0, 1.0 - math.sqrt(2.0 * math.pi) / lam * s))
    s = 0.0
    for k in range(1, 101):
        term = math.exp(-2.0 * k * k * lam * lam)
        s += term if k % 2 else -term
        if term < 1e-300:
            break
    return min(1.0, max(0.0, 2.0 * s))


@dataclass(frozen=True)
class KsResult:
    statistic: float
    p_value: float
    sample_size: int

    def to_dict(self) -> dict:
        return asdict(self)


def ks_statistic(u: np.ndarray) -> float:
    """Sup distance between the ECDF of ``u`` and the Uniform[0,1] CDF."""
    s = np.sort(u)
    n = s.size
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - s), np.max(s - (i - 1) / n)))


def ks_pvalue(statistic: float, n: int) -> float:
    rn = math.sqrt(n)
    return kolmogorov_sf((rn + 0.12 + 0.11 / rn) * statistic)


def ks_uniform(sample, lo: float = 0.0, hi: float = 1.0) -> KsResult:
    x = np.asarray(sample, dtype=np.float64).ravel()
    if x.size == 0:
        raise InvalidParameter("KS test needs a non-empty sample")
    if not lo < hi:
        raise InvalidParameter("lo must be below hi")
    if not np.all(np.isfinite(x)) or np.any(x < lo) or np.any(x > hi):
        raise InvalidParameter(f"sample values must lie in [{lo}, {hi}]")
    d = ks_statistic((x - lo) / (hi - lo))
    return KsResult(d, ks_pvalue(d, x.size), int(x.size))


@dataclass
class BiasReport:
    per_dimension: list
    alpha_level: float
    dims_below_alpha: int
    median_p: float
    verdict: str
    metadata: dict = field(default_factory=dict)

    @property
    def p_values(self) -> np.ndarray:
        return np.array([r.p_value for r in self.per_dimension])

    def to_dict(self) -> dict:
        return {
            "alpha_level": self.alpha_level,
            "dims_below_alpha": self.dims_below_alpha,
            "median_p": self.median_p,
            "verdict": self.verdict,
            "per_dimension": [r.to_dict() for r in self.per_dimension],
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BiasReport":
        return cls([KsResult(**r) for r in d["per_dimension"]], d["alpha_level"],
                   d["dims_below_alpha"], d["median_p"], d["verdict"], d.get("metadata", {}))


def _points(points, min_count: int) -> np.ndarray:
    try:
        a = np.asarray(points, dtype=np.float64)
    except ValueError as exc:
        raise InvalidParameter("points have inconsistent dimensionality") from exc
    if a.ndim != 2:
        raise InvalidParameter("points must form an (n, dim) array")
    if a.shape[0] < min_count:
        raise InvalidParameter(f"need at least {min_count} points, got {a.shape[0]}")
    return a


def bias_report(points, domain: SearchDomain, alpha_level: float = 0.05, *,
                bonferroni: bool = False, mild_median: float = 0.2,
                metadata: Optional[dict] = None) -> BiasReport:
    """Per-dimension KS uniformity of final best points inside ``domain``."""
    a = _points(points, 5)
    if a.shape[1] != domain.dim:
        raise InvalidParameter(
            f"points have dimension {a.shape[1]}, domain has {domain.dim}")
    if not 0 < alpha_level < 1:
        raise InvalidParameter("alpha_level must lie in (0, 1)")
    results = [ks_uniform(a[:, j], domain.lower[j], domain.upper[j]) for j in range(domain.dim)]
    p = np.array([r.p_value for r in results])
    level = alpha_level / domain.dim if bonferroni else alpha_level
    below = int(np.sum(p < level))
    median = float(np.median(p))
    if median < alpha_level:
        verdict = "strong"
    elif median < mild_median or below > max(1.0, 2.0 * alpha_level * domain.dim):
        verdict = "mild"
    else:
        verdict = "none"
    meta = dict(metadata or {})
    meta.setdefault("n_points", int(a.shape[0]))
    meta.setdefault("bonferroni", bonferroni)
    return BiasReport(results, alpha_level, below, median, verdict, meta)


@dataclass(frozen=True)
class DispersionSummary:
    mean: np.ndarray
    variance: np.ndarray
    min: np.ndarray
    max: np.ndarray

    def per_dimension(self) -> list[dict]:
        return [{"mean": float(m), "variance": float(v), "min": float(lo), "max": float(hi)}
                for m, v, lo, hi in zip(self.mean, self.variance, self.min, self.max)]


def dispersion_summary(points) -> DispersionSummary:
    a = _points(points, 2)
    mean = a.mean(axis=0)
    var = np.sum((a - mean) ** 2, axis=0) / (a.shape[0] - 1)
    return DispersionSummary(mean, var, a.min(axis=0), a.max(axis=0))


@dataclass(frozen=True)
class SensitivityThresholds:
    """Heuristic cut-offs; all are overridable."""
    median_drop: float = 0.1
    collapse: float = 2.0
    strong_collapse: float = 5.0


def sensitivity_classify(entries: Mapping[int, tuple],
                         thresholds: SensitivityThresholds = SensitivityThresholds()) -> dict:
    """Classify how bias depends on population size.

    ``entries`` maps population size to ``(BiasReport, DispersionSummary)``.
    With ``Ns`` the smallest and ``Nl`` the largest size:

    * ``degrades``: ``median_p(Ns) - median_p(Nl) > median_drop``;
    * ``collapse``: mean per-dimension variance at ``Ns`` over that at ``Nl``.

    ``highly_sensitive`` if ``collapse >= strong_collapse``; ``sensitive`` if
    ``degrades`` or ``collapse >= collapse``; ``insensitive`` otherwise.
    """
    if len(entries) < 2:
        raise InvalidParameter("need reports for at least 2 population sizes")
    sizes = sorted(entries)
    small, large = entries[sizes[0]], entries[sizes[-1]]
    drop = small[0].median_p - large[0].median_p
    vs = float(np.mean(small[1].variance))
    vl = float(np.mean(large[1].variance))
    if vl > 0:
        collapse = vs / vl
    else:
        collapse = 1.0 if vs == 0 else math.inf
    if collapse >= thresholds.strong_collapse:
        label = "highly_sensitive"
    elif drop > thresholds.median_drop or collapse >= thresholds.collapse:
        label = "sensitive"
    else:
        label = "insensitive"
    return {
        "classification": label,
        "population_sizes": sizes,
        "median_p": {str(n): entries[n][0].median_p for n in sizes},
        "mean_variance": {str(n): float(np.mean(entries[n][1].variance)) for n in sizes},
        "median_drop": drop,
        "collapse": collapse,
        "thresholds": asdict(thresholds),
    }
