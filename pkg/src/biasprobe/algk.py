"""Knuth's Algorithm K ("super-random" 10-digit generator) and orbit analysis.

:func:`algk_step` is the reference implementation in exact Python integers;
the scanning helpers use a compiled twin that splits products into five-digit
halves so every intermediate fits in 64 bits.  The two are cross-checked in
the test-suite.
"""
from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Optional

from . import _kernels as K
from .errors import InvalidParameter

TEN10 = 10 ** 10


def _decrease_digits(x: int) -> int:
    return int("".join(str(max(int(c) - 1, 0)) for c in str(x)))


def algk_step(x: int) -> int:
    """Apply Algorithm K once to a 10-digit value and return the output."""
    if not 0 <= x < TEN10:
        raise InvalidParameter(f"Algorithm K state must lie in [0, 10^10), got {x}")
    y = x // 10 ** 9
    while True:
        z = (x // 10 ** 8) % 10
        step = 3 + z
        if step <= 3 and x < 5000000000:
            x += 5000000000
        if step <= 4:
            x = (x * x // 10 ** 5) % TEN10
        if step <= 5:
            x = (1001001001 * x) % TEN10
        if step <= 6:
            x = x + 9814055677 if x < 100000000 else TEN10 - x
        if step <= 7:
            x = 10 ** 5 * (x % 10 ** 5) + x // 10 ** 5
        if step <= 8:
            x = (1001001001 * x) % TEN10
        if step <= 9:
            x = _decrease_digits(x)
        if step <= 10:
            x = x * x + 99999 if x < 10 ** 5 else x - 99999
        if step <= 11:
            if x == 0:
                raise ArithmeticError("Algorithm K normalisation reached zero")
            while x < 10 ** 9:
                x *= 10
        if step <= 12:
            x = (x * (x - 1) // 10 ** 5) % TEN10
        if y == 0:
            return x
        y -= 1


@dataclass(frozen=True)
class Orbit:
    seed: int
    kind: str                 # "fixed_point", "cycle" or "undecided"
    preperiod: Optional[int]
    period: Optional[int]
    evaluations: int

    def to_dict(self) -> dict:
        return asdict(self)


def algk_orbit(x0: int, max_steps: int = 100_000) -> Orbit:
    """Classify the orbit of ``x0`` under Algorithm K with Brent's method."""
    if max_steps < 1:
        raise InvalidParameter("max_steps must be >= 1")
    if not 0 <= x0 < TEN10:
        raise InvalidParameter(f"seed must lie in [0, 10^10), got {x0}")
    mu, lam, evals = K.brent_orbit(x0, max_steps)
    if lam < 0:
        return Orbit(x0, "undecided", None, None, int(evals))
    kind = "fixed_point" if lam == 1 else "cycle"
    return Orbit(x0, kind, int(mu), int(lam), int(evals))


def seed_scan(start: int, count: int, max_steps: int = 100_000) -> dict:
    """Scan ``count`` consecutive seeds and group them by (preperiod, period).

    Returns ``{"classes": [...], "undecided": n, "period_counts": {...}}`` with
    classes sorted by period, then preperiod.
    """
    classes: dict[tuple[int, int], list[int]] = {}
    periods: dict[int, int] = {}
    undecided = 0
    for s in range(start, start + count):
        orb = algk_orbit(s % TEN10, max_steps)
        if orb.kind == "undecided":
            undecided += 1
            continue
        classes.setdefault((orb.preperiod, orb.period), []).append(orb.seed)
        periods[orb.period] = periods.get(orb.period, 0) + 1
    rows = [
        {"preperiod": mu, "period": lam, "count": len(seeds), "first_seed": seeds[0]}
        for (mu, lam), seeds in sorted(classes.items(), key=lambda kv: (kv[0][1], kv[0][0]))
    ]
    return {
        "start": start,
        "count": count,
        "max_steps": max_steps,
        "classes": rows,
        "period_counts": {str(k): v for k, v in sorted(periods.items())},
        "undecided": undecided,
    }
