"""Dependency-free SVG line/band plots for the CLI outputs.

Deliberately minimal: polylines, filled bands, bar sets, axes with rounded tick
labels.  No timestamps or randomness anywhere, so files are byte-reproducible.
"""
from __future__ import annotations

import math

import numpy as np

_W, _H = 720, 460
_ML, _MR, _MT, _MB = 72, 20, 36, 54
_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"]


def _ticks(lo: float, hi: float, n: int = 6) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(n - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for m in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= m * mag:
            step = m * mag
            break
    start = math.ceil(lo / step) * step
    out = []
    t = start
    while t <= hi + 1e-12 * step:
        out.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return out


def _fmt(x: float) -> str:
    return f"{x:.6g}"


class SvgFigure:
    """One x/y panel; add series/bands then call write()."""

    def __init__(self, title: str = "", xlabel: str = "", ylabel: str = ""):
        self.title = title
        self.xlabel = xlabel
        self.ylabel = ylabel
        self._series = []   # (xs, ys, label, color, width)
        self._bands = []    # (xs, lo, hi, color)
        self._bars = []     # (edges, heights, color, label)
        self._vlines = []   # (x, color)

    def line(self, xs, ys, label: str = "", color: str | None = None, width: float = 1.5):
        xs = np.asarray(xs, float)
        ys = np.asarray(ys, float)
        color = color or _COLORS[len(self._series) % len(_COLORS)]
        self._series.append((xs, ys, label, color, width))
        return self

    def band(self, xs, lo, hi, color: str = "#ffcc66"):
        self._bands.append((np.asarray(xs, float), np.asarray(lo, float), np.asarray(hi, float), color))
        return self

    def bars(self, edges, heights, color: str = "#1f77b4", label: str = ""):
        self._bars.append((np.asarray(edges, float), np.asarray(heights, float), color, label))
        return self

    def vline(self, x: float, color: str = "#888888"):
        self._vlines.append((float(x), color))
        return self

    def _bounds(self):
        xs_all, ys_all = [], []
        for xs, ys, *_ in self._series:
            xs_all.append(xs)
            ys_all.append(ys)
        for xs, lo, hi, _ in self._bands:
            xs_all.append(xs)
            ys_all.extend([lo, hi])
        for edges, heights, *_ in self._bars:
            xs_all.append(edges)
            ys_all.append(heights)
            ys_all.append(np.zeros(1))
        if not xs_all:
            return 0.0, 1.0, 0.0, 1.0
        x = np.concatenate([a.ravel() for a in xs_all])
        y = np.concatenate([a.ravel() for a in ys_all])
        x = x[np.isfinite(x)]
        y = y[np.isfinite(y)]
        x0, x1 = float(np.min(x)), float(np.max(x))
        y0, y1 = float(np.min(y)), float(np.max(y))
        if x1 == x0:
            x1 = x0 + 1.0
        if y1 == y0:
            y1 = y0 + 1.0
        pad = 0.05 * (y1 - y0)
        return x0, x1, y0 - pad, y1 + pad

    def write(self, path):
        x0, x1, y0, y1 = self._bounds()
        ax_w = _W - _ML - _MR
        ax_h = _H - _MT - _MB

        def px(x):
            return _ML + (x - x0) / (x1 - x0) * ax_w

        def py(y):
            return _MT + (y1 - y) / (y1 - y0) * ax_h

        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
            f'viewBox="0 0 {_W} {_H}">',
            f'<rect width="{_W}" height="{_H}" fill="white"/>',
        ]
        for xs, lo, hi, color in self._bands:
            pts = [f"{_fmt(px(x))},{_fmt(py(v))}" for x, v in zip(xs, lo)]
            pts += [f"{_fmt(px(x))},{_fmt(py(v))}" for x, v in zip(xs[::-1], hi[::-1])]
            parts.append(f'<polygon points="{" ".join(pts)}" fill="{color}" fill-opacity="0.45"/>')
        for edges, heights, color, _ in self._bars:
            for i, h in enumerate(heights):
                xl, xr = px(edges[i]), px(edges[i + 1])
                yb, yt = py(max(0.0, y0)), py(h)
                parts.append(
                    f'<rect x="{_fmt(xl)}" y="{_fmt(min(yb, yt))}" width="{_fmt(xr - xl)}" '
                    f'height="{_fmt(abs(yb - yt))}" fill="{color}" fill-opacity="0.7"/>'
                )
        for x, color in self._vlines:
            parts.append(
                f'<line x1="{_fmt(px(x))}" y1="{_MT}" x2="{_fmt(px(x))}" y2="{_MT + ax_h}" '
                f'stroke="{color}" stroke-dasharray="4 3"/>'
            )
        for xs, ys, label, color, width in self._series:
            ok = np.isfinite(xs) & np.isfinite(ys)
            pts = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(xs[ok], ys[ok]))
            parts.append(
                f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"/>'
            )
        # axes
        parts.append(
            f'<rect x="{_ML}" y="{_MT}" width="{ax_w}" height="{ax_h}" fill="none" stroke="black"/>'
        )
        for t in _ticks(x0, x1):
            if x0 <= t <= x1:
                parts.append(
                    f'<line x1="{_fmt(px(t))}" y1="{_MT + ax_h}" x2="{_fmt(px(t))}" '
                    f'y2="{_MT + ax_h + 5}" stroke="black"/>'
                )
                parts.append(
                    f'<text x="{_fmt(px(t))}" y="{_MT + ax_h + 20}" font-size="12" '
                    f'text-anchor="middle">{_fmt(t)}</text>'
                )
        for t in _ticks(y0, y1):
            if y0 <= t <= y1:
                parts.append(
                    f'<line x1="{_ML - 5}" y1="{_fmt(py(t))}" x2="{_ML}" y2="{_fmt(py(t))}" '
                    f'stroke="black"/>'
                )
                parts.append(
                    f'<text x="{_ML - 8}" y="{_fmt(py(t) + 4)}" font-size="12" '
                    f'text-anchor="end">{_fmt(t)}</text>'
                )
        if self.title:
            parts.append(
                f'<text x="{_W / 2}" y="{_MT - 12}" font-size="15" text-anchor="middle">'
                f"{self.title}</text>"
            )
        if self.xlabel:
            parts.append(
                f'<text x="{_ML + ax_w / 2}" y="{_H - 14}" font-size="13" text-anchor="middle">'
                f"{self.xlabel}</text>"
            )
        if self.ylabel:
            parts.append(
                f'<text x="18" y="{_MT + ax_h / 2}" font-size="13" text-anchor="middle" '
                f'transform="rotate(-90 18 {_MT + ax_h / 2})">{self.ylabel}</text>'
            )
        # legend
        entries = [(lab, col) for _, _, lab, col, _ in self._series if lab]
        entries += [(lab, col) for _, _, col, lab in self._bars if lab]
        for i, (lab, col) in enumerate(entries):
            yy = _MT + 14 + 16 * i
            parts.append(f'<line x1="{_ML + 10}" y1="{yy}" x2="{_ML + 34}" y2="{yy}" stroke="{col}" stroke-width="2"/>')
            parts.append(f'<text x="{_ML + 40}" y="{yy + 4}" font-size="12">{lab}</text>')
        parts.append("</svg>")
        with open(path, "w") as fh:
            fh.write("\n".join(parts) + "\n")
        return path
