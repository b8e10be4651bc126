"""Minimal line-plot SVG writer (no plotting dependency)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
           "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#000000"]


def _ticks(lo, hi, n=5):
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step + 1e-9) + 1)]


def line_plot(series: dict, title: str = "", xlabel: str = "", ylabel: str = "",
              width: int = 720, height: int = 440, markers: bool = False) -> str:
    """``series`` maps a label to ``(x, y)``; non-finite points break the line."""
    left, right, top, bottom = 70, 170, 40, 55
    pw, ph = width - left - right, height - top - bottom
    xs = np.concatenate([np.asarray(x, float) for x, _ in series.values()] or [np.zeros(1)])
    ys = np.concatenate([np.asarray(y, float) for _, y in series.values()] or [np.zeros(1)])
    xs, ys = xs[np.isfinite(xs)], ys[np.isfinite(ys)]
    x0, x1 = (float(xs.min()), float(xs.max())) if xs.size else (0.0, 1.0)
    y0, y1 = (float(ys.min()), float(ys.max())) if ys.size else (0.0, 1.0)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def px(x):
        return left + (x - x0) / (x1 - x0) * pw

    def py(y):
        return top + (y1 - y) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="12">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>']
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{px(t):.1f}" y1="{top + ph}" x2="{px(t):.1f}" y2="{top + ph + 4}" '
                   f'stroke="#444"/><text x="{px(t):.1f}" y="{top + ph + 18}" '
                   f'text-anchor="middle">{t:g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{left - 4}" y1="{py(t):.1f}" x2="{left}" y2="{py(t):.1f}" '
                   f'stroke="#444"/><text x="{left - 7}" y="{py(t) + 4:.1f}" '
                   f'text-anchor="end">{t:.4g}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 12}" text-anchor="middle">'
               f'{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{top + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + ph / 2})">{escape(ylabel)}</text>')
    out.append(f'<text x="{left + pw / 2}" y="22" text-anchor="middle" font-size="14">'
               f'{escape(title)}</text>')
    for i, (label, (x, y)) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        x, y = np.asarray(x, float), np.asarray(y, float)
        seg = []
        for xi, yi in zip(x, y):
            if math.isfinite(xi) and math.isfinite(yi):
                seg.append(f"{px(xi):.2f},{py(yi):.2f}")
                if markers:
                    out.append(f'<circle cx="{px(xi):.2f}" cy="{py(yi):.2f}" r="2.5" '
                               f'fill="{color}"/>')
            elif seg:
                out.append(f'<polyline points="{" ".join(seg)}" fill="none" '
                           f'stroke="{color}" stroke-width="1.5"/>')
                seg = []
        if seg:
            out.append(f'<polyline points="{" ".join(seg)}" fill="none" stroke="{color}" '
                       f'stroke-width="1.5"/>')
        ly = top + 14 + 16 * i
        out.append(f'<line x1="{left + pw + 10}" y1="{ly}" x2="{left + pw + 30}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/><text x="{left + pw + 35}" '
                   f'y="{ly + 4}">{escape(str(label))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
