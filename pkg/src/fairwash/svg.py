"""Minimal static SVG charts: Pareto fronts and disparity-range plots.

Output is a pure function of the inputs (fixed number formatting, no ids or
timestamps), so rerunning a report yields identical bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape, quoteattr

WIDTH, HEIGHT = 480, 360
MARGIN = (56, 24, 24, 48)  # left, right, top, bottom
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _num(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


@dataclass(frozen=True)
class Axes:
    x0: float
    x1: float
    y0: float
    y1: float

    def px(self, x: float) -> float:
        left, right = MARGIN[0], WIDTH - MARGIN[1]
        return left + (x - self.x0) / (self.x1 - self.x0) * (right - left)

    def py(self, y: float) -> float:
        top, bottom = MARGIN[2], HEIGHT - MARGIN[3]
        return bottom - (y - self.y0) / (self.y1 - self.y0) * (bottom - top)


def _span(values, pad=0.05, floor=None, ceil=None):
    vals = [v for v in values if v is not None and math.isfinite(v)]
    if not vals:
        return 0.0, 1.0
    lo, hi = min(vals), max(vals)
    if hi - lo < 1e-9:
        lo, hi = lo - 0.05, hi + 0.05
    d = (hi - lo) * pad
    lo, hi = lo - d, hi + d
    if floor is not None:
        lo = max(lo, floor)
    if ceil is not None:
        hi = min(hi, ceil)
    return lo, hi


def _ticks(lo, hi, n=5):
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


class _Doc:
    def __init__(self, title: str):
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
            f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH // 2}" y="16" text-anchor="middle" font-size="13">'
            f'{escape(title)}</text>',
        ]

    def add(self, s: str):
        self.parts.append(s)

    def frame(self, ax: Axes, xlabel: str, ylabel: str):
        left, right = MARGIN[0], WIDTH - MARGIN[1]
        top, bottom = MARGIN[2], HEIGHT - MARGIN[3]
        self.add(f'<g class="axes" stroke="black" fill="none">'
                 f'<rect x="{left}" y="{top}" width="{right - left}" height="{bottom - top}"/></g>')
        for t in _ticks(ax.x0, ax.x1):
            x = _num(ax.px(t))
            self.add(f'<text x="{x}" y="{bottom + 14}" text-anchor="middle">{t:.2f}</text>')
        for t in _ticks(ax.y0, ax.y1):
            y = _num(ax.py(t))
            self.add(f'<text x="{left - 4}" y="{y}" text-anchor="end" '
                     f'dominant-baseline="middle">{t:.2f}</text>')
        self.add(f'<text x="{(left + right) // 2}" y="{HEIGHT - 10}" text-anchor="middle">'
                 f'{escape(xlabel)}</text>')
        self.add(f'<text x="14" y="{(top + bottom) // 2}" text-anchor="middle" '
                 f'transform="rotate(-90 14 {(top + bottom) // 2})">{escape(ylabel)}</text>')

    def vline(self, ax: Axes, x: float, label: str, color: str):
        p = _num(ax.px(x))
        self.add(f'<line class="reference" data-axis="x" data-value={quoteattr(repr(float(x)))} '
                 f'x1="{p}" y1="{MARGIN[2]}" x2="{p}" y2="{HEIGHT - MARGIN[3]}" '
                 f'stroke="{color}" stroke-dasharray="4 3"><title>{escape(label)}</title></line>')

    def hline(self, ax: Axes, y: float, label: str, color: str):
        p = _num(ax.py(y))
        self.add(f'<line class="reference" data-axis="y" data-value={quoteattr(repr(float(y)))} '
                 f'x1="{MARGIN[0]}" y1="{p}" x2="{WIDTH - MARGIN[1]}" y2="{p}" '
                 f'stroke="{color}" stroke-dasharray="4 3"><title>{escape(label)}</title></line>')

    def polyline(self, ax: Axes, xs, ys, color: str, cls: str):
        pts = " ".join(f"{_num(ax.px(x))},{_num(ax.py(y))}" for x, y in zip(xs, ys))
        self.add(f'<polyline class="{cls}" points="{pts}" fill="none" stroke="{color}"/>')

    def marker(self, ax: Axes, x: float, y: float, color: str, series: str):
        self.add(f'<circle class="marker" data-series={quoteattr(series)} '
                 f'cx="{_num(ax.px(x))}" cy="{_num(ax.py(y))}" r="3" fill="{color}"/>')

    def legend(self, names, colors):
        for i, (name, c) in enumerate(zip(names, colors)):
            y = MARGIN[2] + 14 + 14 * i
            x = WIDTH - MARGIN[1] - 110
            self.add(f'<rect x="{x}" y="{y - 8}" width="8" height="8" fill="{c}"/>')
            self.add(f'<text x="{x + 12}" y="{y}">{escape(name)}</text>')

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def pareto_svg(series, title: str = "", xlabel: str = "unfairness",
               ylabel: str = "fidelity") -> str:
    """Fronts as (name, [(unfairness, fidelity), ...], blackbox_unfairness) triples.

    Each point gets one marker; each black-box gets a dashed vertical line at
    its unfairness.
    """
    series = list(series)
    xs = [x for _, pts, ref in series for x, _ in pts] + [ref for _, _, ref in series]
    ys = [y for _, pts, _ in series for _, y in pts]
    ax = Axes(*_span(xs, floor=0.0), *_span(ys, ceil=1.0))
    doc = _Doc(title)
    doc.frame(ax, xlabel, ylabel)
    colors = [COLORS[i % len(COLORS)] for i in range(len(series))]
    for (name, pts, ref), c in zip(series, colors):
        pts = sorted(pts)
        if ref is not None and math.isfinite(ref):
            doc.vline(ax, ref, f"{name} black-box", c)
        if len(pts) > 1:
            doc.polyline(ax, [p[0] for p in pts], [p[1] for p in pts], c, "front")
        for x, y in pts:
            doc.marker(ax, x, y, c, name)
    if len(series) > 1:
        doc.legend([s[0] for s in series], colors)
    return doc.render()


def range_svg(fidelity, lo, hi, reference: float | None, title: str = "",
              xlabel: str = "fidelity", ylabel: str = "signed disparity") -> str:
    """Min and max disparity against fidelity with a horizontal black-box line."""
    rows = sorted((f, a, b) for f, a, b in zip(fidelity, lo, hi)
                  if all(math.isfinite(v) for v in (f, a, b)))
    ys = [r[1] for r in rows] + [r[2] for r in rows]
    if reference is not None:
        ys.append(reference)
    ax = Axes(*_span([r[0] for r in rows]), *_span(ys))
    doc = _Doc(title)
    doc.frame(ax, xlabel, ylabel)
    if reference is not None and math.isfinite(reference):
        doc.hline(ax, reference, "black-box", "#555555")
    for k, name, c in ((1, "min", COLORS[0]), (2, "max", COLORS[1])):
        if len(rows) > 1:
            doc.polyline(ax, [r[0] for r in rows], [r[k] for r in rows], c, "range")
        for r in rows:
            doc.marker(ax, r[0], r[k], c, name)
    return doc.render()
