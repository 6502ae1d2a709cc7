"""Minimal static SVG line charts (paths and text only)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 480
MARGIN = (70, 30, 50, 60)  # left, right, top, bottom
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


@dataclass
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray
    dashed: bool = False


@dataclass
class LineChart:
    title: str
    xlabel: str
    ylabel: str
    series: list = field(default_factory=list)
    equal_aspect: bool = False

    def add(self, label, x, y, dashed=False) -> "LineChart":
        self.series.append(Series(label, np.asarray(x, dtype=float), np.asarray(y, dtype=float), dashed))
        return self

    def _limits(self):
        xs = np.concatenate([s.x for s in self.series])
        ys = np.concatenate([s.y for s in self.series])
        x0, x1 = float(xs.min()), float(xs.max())
        y0, y1 = float(ys.min()), float(ys.max())
        if y1 - y0 < 1e-12 * max(1.0, abs(y0)):
            y0, y1 = y0 - 0.5 * max(abs(y0), 1.0) * 1e-3, y1 + 0.5 * max(abs(y1), 1.0) * 1e-3
        if x1 == x0:
            x0, x1 = x0 - 1, x1 + 1
        pad = 0.05 * (y1 - y0)
        return x0, x1, y0 - pad, y1 + pad

    def render(self) -> str:
        left, right, top, bottom = MARGIN
        pw, ph = WIDTH - left - right, HEIGHT - top - bottom
        x0, x1, y0, y1 = self._limits()
        sx, sy = pw / (x1 - x0), ph / (y1 - y0)
        if self.equal_aspect:
            sx = sy = min(sx, sy)

        def px(x):
            return left + (x - x0) * sx

        def py(y):
            return top + ph - (y - y0) * sy

        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2:.1f}" y="24" text-anchor="middle" font-size="15" '
            f'font-family="sans-serif">{escape(self.title)}</text>',
            f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        ]
        for t in nice_ticks(x0, x1):
            out.append(f'<line x1="{px(t):.2f}" y1="{top + ph}" x2="{px(t):.2f}" y2="{top + ph + 5}" stroke="black"/>')
            out.append(f'<text x="{px(t):.2f}" y="{top + ph + 18}" text-anchor="middle" font-size="11" '
                       f'font-family="sans-serif">{_fmt(t)}</text>')
        for t in nice_ticks(y0, y1):
            if self.equal_aspect and not top <= py(t) <= top + ph:
                continue
            out.append(f'<line x1="{left - 5}" y1="{py(t):.2f}" x2="{left}" y2="{py(t):.2f}" stroke="black"/>')
            out.append(f'<text x="{left - 8}" y="{py(t) + 4:.2f}" text-anchor="end" font-size="11" '
                       f'font-family="sans-serif">{_fmt(t)}</text>')
        out.append(f'<text x="{left + pw / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle" font-size="13" '
                   f'font-family="sans-serif">{escape(self.xlabel)}</text>')
        out.append(f'<text x="18" y="{top + ph / 2:.1f}" text-anchor="middle" font-size="13" font-family="sans-serif" '
                   f'transform="rotate(-90 18 {top + ph / 2:.1f})">{escape(self.ylabel)}</text>')
        for i, s in enumerate(self.series):
            color = COLORS[i % len(COLORS)]
            pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(s.x, s.y))
            dash = ' stroke-dasharray="6 4"' if s.dashed else ""
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>')
            ly = top + 16 + 16 * i
            out.append(f'<line x1="{left + pw - 150}" y1="{ly - 4}" x2="{left + pw - 125}" y2="{ly - 4}" '
                       f'stroke="{color}" stroke-width="1.5"{dash}/>')
            out.append(f'<text x="{left + pw - 118}" y="{ly}" font-size="12" font-family="sans-serif">'
                       f'{escape(s.label)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"


def nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / target
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-12 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.6g}"


__all__ = ["LineChart", "Series", "nice_ticks"]
