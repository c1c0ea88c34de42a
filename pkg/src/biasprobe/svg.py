"""Dependency-free SVG figures.

Every number is written with 6 decimals so output is byte-stable.  Markers
carry ``class="marker"`` so they can be counted in tests.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .errors import InvalidParameter
from .objectives import Objective, SearchDomain

P_FLOOR = 1e-16


def _f(v: float) -> str:
    if not math.isfinite(v):
        raise InvalidParameter(f"non-finite coordinate {v}")
    s = f"{v:.6f}"
    return "0.000000" if s == "-0.000000" else s


@dataclass(frozen=True)
class ColorMap:
    stops: tuple = (
        (0.0, (49, 54, 149)),
        (0.25, (69, 170, 90)),
        (0.5, (250, 230, 60)),
        (0.75, (244, 109, 67)),
        (1.0, (165, 0, 38)),
    )

    def __post_init__(self):
        fr = [s[0] for s in self.stops]
        if len(fr) < 2 or fr[0] != 0.0 or fr[-1] != 1.0 or any(b <= a for a, b in zip(fr, fr[1:])):
            raise InvalidParameter("colormap stops must be increasing from 0 to 1")

    def rgb(self, t: float) -> tuple:
        t = min(1.0, max(0.0, float(t)))
        for (f0, c0), (f1, c1) in zip(self.stops, self.stops[1:]):
            if t <= f1:
                w = (t - f0) / (f1 - f0)
                return tuple(int(round(a + w * (b - a))) for a, b in zip(c0, c1))
        return tuple(self.stops[-1][1])

    def __call__(self, t: float) -> str:
        return "#%02x%02x%02x" % self.rgb(t)


DEFAULT_COLORMAP = ColorMap()


@dataclass
class SvgDocument:
    width: int = 900
    height: int = 600
    elements: list = field(default_factory=list)
    title: str = ""

    def add(self, element: str) -> None:
        self.elements.append(element)

    def line(self, x1, y1, x2, y2, stroke="#000000", width=1.0, cls: Optional[str] = None):
        c = f' class="{cls}"' if cls else ""
        self.add(f'<line{c} x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" '
                 f'stroke="{stroke}" stroke-width="{_f(width)}"/>')

    def circle(self, cx, cy, r, fill, cls="marker"):
        self.add(f'<circle class="{cls}" cx="{_f(cx)}" cy="{_f(cy)}" r="{_f(r)}" fill="{fill}"/>')

    def rect(self, x, y, w, h, fill="none", stroke="#000000"):
        self.add(f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(w)}" height="{_f(h)}" '
                 f'fill="{fill}" stroke="{stroke}"/>')

    def text(self, x, y, s, size=12, anchor="middle"):
        self.add(f'<text x="{_f(x)}" y="{_f(y)}" font-size="{size}" font-family="sans-serif" '
                 f'text-anchor="{anchor}">{escape(str(s))}</text>')

    @property
    def marker_count(self) -> int:
        return sum(1 for e in self.elements if 'class="marker"' in e)

    def to_string(self) -> str:
        head = (f'<?xml version="1.0" encoding="UTF-8"?>\n'
                f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
                f'width="{self.width}" height="{self.height}" '
                f'viewBox="0 0 {self.width} {self.height}">\n')
        body = f"<title>{escape(self.title)}</title>\n" if self.title else ""
        body += '<rect x="0" y="0" width="100%" height="100%" fill="#ffffff"/>\n'
        body += "".join(e + "\n" for e in self.elements)
        return head + body + "</svg>\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_string())


MARGIN = 50.0


def _fitness_fraction(fit: np.ndarray) -> np.ndarray:
    lo, hi = float(fit.min()), float(fit.max())
    if hi == lo:
        return np.zeros_like(fit)
    return (fit - lo) / (hi - lo)


def parallel_coordinates_svg(points, domain: SearchDomain, fitnesses,
                             colormap: ColorMap = DEFAULT_COLORMAP, *, title: str = "",
                             width: int = 900, height: int = 600,
                             radius: float = 2.5) -> SvgDocument:
    """One vertical axis per dimension, one unconnected marker per coordinate."""
    pts = np.asarray(points, dtype=np.float64)
    fit = np.asarray(fitnesses, dtype=np.float64).ravel()
    if pts.size == 0 or fit.size == 0:
        raise InvalidParameter("nothing to plot")
    if pts.ndim != 2 or pts.shape[1] != domain.dim:
        raise InvalidParameter("points must be an (n, dim) array matching the domain")
    if fit.size != pts.shape[0]:
        raise InvalidParameter("need exactly one fitness per point")
    doc = SvgDocument(width, height, title=title)
    n = domain.dim
    top, bottom = MARGIN, height - MARGIN
    step = (width - 2 * MARGIN) / n
    xs = [MARGIN + step * (k + 0.5) for k in range(n)]
    for k, x in enumerate(xs):
        doc.line(x, top, x, bottom, stroke="#999999", cls="axis")
        doc.text(x, bottom + 18, k + 1, size=10)
    if title:
        doc.text(width / 2, 24, title, size=14)
    frac = (pts - domain.lo) / domain.width
    col = _fitness_fraction(fit)
    order = np.argsort(-fit, kind="stable")  # best drawn last, on top
    for i in order:
        c = colormap(col[i])
        for k in range(n):
            doc.circle(xs[k], bottom - frac[i, k] * (bottom - top), radius, c)
    return doc


def evolution_plot_svg(traces: Sequence, dim: int, colormap: ColorMap = DEFAULT_COLORMAP, *,
                       title: str = "", width: int = 900, height: int = 600,
                       radius: float = 1.2) -> SvgDocument:
    """Coordinate ``dim`` across, evaluations down, colour by fitness; runs overlaid."""
    traces = list(traces)
    if not traces or not traces[0].snapshots:
        raise InvalidParameter("need at least one non-empty trace")
    domain = Objective.from_dict(traces[0].objective).domain
    if not 0 <= dim < domain.dim:
        raise InvalidParameter(f"dimension {dim} out of range for {domain.dim} dimensions")
    lo, w = domain.lower[dim], domain.upper[dim] - domain.lower[dim]
    t_max = max(t.snapshots[-1].evaluations_used for t in traces)
    t_min = min(t.snapshots[0].evaluations_used for t in traces)
    span = max(1, t_max - t_min)
    fits = np.concatenate([np.asarray(s.fitnesses) for t in traces for s in t.snapshots])
    f_lo, f_hi = float(fits.min()), float(fits.max())
    doc = SvgDocument(width, height, title=title)
    left, right, top, bottom = MARGIN, width - MARGIN, MARGIN, height - MARGIN
    doc.rect(left, top, right - left, bottom - top)
    doc.text(width / 2, height - 12, f"x[{dim + 1}]", size=12)
    doc.text(14, height / 2, "evaluations", size=12)
    doc.text(left, bottom + 18, _f(lo), size=10)
    doc.text(right, bottom + 18, _f(lo + w), size=10)
    if title:
        doc.text(width / 2, 24, title, size=14)
    for t in traces:
        for s in t.snapshots:
            y = top + (s.evaluations_used - t_min) / span * (bottom - top)
            pos = np.asarray(s.positions)[:, dim]
            fit = np.asarray(s.fitnesses)
            for p, f in zip(pos, fit):
                frac = 0.0 if f_hi == f_lo else (f - f_lo) / (f_hi - f_lo)
                doc.circle(left + (p - lo) / w * (right - left), y, radius, colormap(frac))
    return doc


def scatter_svg(pairs, *, title: str = "", width: int = 900, height: int = 600,
                radius: float = 0.8, color: str = "#1f3b99") -> SvgDocument:
    """Unit-square scatter of ``(x, y)`` pairs."""
    a = np.asarray(pairs, dtype=np.float64).reshape(-1, 2) if len(pairs) else np.empty((0, 2))
    if a.size and (not np.all(np.isfinite(a)) or np.any(a < 0) or np.any(a > 1)):
        raise InvalidParameter("scatter values must lie in [0, 1]")
    doc = SvgDocument(width, height, title=title)
    side = min(width, height) - 2 * MARGIN
    left = (width - side) / 2
    top = MARGIN
    doc.rect(left, top, side, side)
    doc.text(left, top + side + 18, "0", size=10)
    doc.text(left + side, top + side + 18, "1", size=10)
    doc.text(left - 10, top + 4, "1", size=10)
    if title:
        doc.text(width / 2, 24, title, size=14)
    for x, y in a:
        doc.circle(left + x * side, top + (1 - y) * side, radius, color)
    return doc


def pvalue_strip_svg(reports: Sequence, *, log_scale: bool = True, alpha: Optional[float] = None,
                     title: str = "", width: int = 900, height: int = 600,
                     radius: float = 3.0, colormap: ColorMap = DEFAULT_COLORMAP) -> SvgDocument:
    """One column per ``(label, BiasReport)``, one marker per dimension.

    On the log scale the axis spans ``[1e-16, 1]``; smaller p-values sit on the
    floor.  Markers are coloured by dimension index.
    """
    reports = list(reports)
    if not reports:
        raise InvalidParameter("need at least one report")
    doc = SvgDocument(width, height, title=title)
    left, right, top, bottom = MARGIN + 20, width - MARGIN, MARGIN, height - MARGIN
    floor_log = math.log10(P_FLOOR)

    def ypos(p):
        p = max(P_FLOOR, min(1.0, p))
        frac = (math.log10(p) - floor_log) / -floor_log if log_scale else p
        return bottom - frac * (bottom - top)

    doc.rect(left, top, right - left, bottom - top)
    ticks = [10.0 ** e for e in range(-16, 1, 4)] if log_scale else [0.0, 0.25, 0.5, 0.75, 1.0]
    for t in ticks:
        y = ypos(t)
        doc.line(left, y, right, y, stroke="#dddddd", cls="grid")
        doc.text(left - 6, y + 4, f"{t:g}", size=10, anchor="end")
    if alpha is not None:
        doc.line(left, ypos(alpha), right, ypos(alpha), stroke="#cc0000", cls="alpha")
    if title:
        doc.text(width / 2, 24, title, size=14)
    step = (right - left) / len(reports)
    for c, (label, rep) in enumerate(reports):
        x0 = left + step * c
        doc.text(x0 + step / 2, bottom + 18, label, size=10)
        p = rep.p_values
        n = len(p)
        for k, pv in enumerate(p):
            x = x0 + step * (0.2 + 0.6 * (k + 0.5) / n)
            doc.circle(x, ypos(float(pv)), radius, colormap(k / max(1, n - 1)))
    return doc
