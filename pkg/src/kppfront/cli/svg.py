"""Minimal line plots as standalone SVG text.

Output depends only on the input numbers (fixed formatting, no timestamps), so
identical data gives byte-identical documents.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf")


@dataclass(frozen=True)
class SvgStyle:
    width: int = 640
    height: int = 420
    title: str = ""
    xlabel: str = "x"
    ylabel: str = "y"
    ticks: int = 5
    colors: tuple[str, ...] = PALETTE


@dataclass(frozen=True)
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray


def _nice_ticks(lo: float, hi: float, n: int) -> list[float]:
    span = hi - lo
    raw = span / max(n, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    first = math.ceil(lo / step - 1e-9) * step
    out = []
    k = 0
    while first + k * step <= hi + 1e-9 * span:
        out.append(first + k * step)
        k += 1
    return out


def _num(v: float) -> str:
    return f"{v:.2f}"


def _label(v: float) -> str:
    return f"{v:.6g}" if abs(v) > 1e-12 else "0"


def y_range(ys: Sequence[np.ndarray]) -> tuple[float, float]:
    """[0, 1.1 max] for nonnegative data, widened symmetrically below zero otherwise."""
    lo = min(float(np.min(y)) for y in ys)
    hi = max(float(np.max(y)) for y in ys)
    top = 1.1 * hi if hi > 0 else 0.0
    bottom = 0.0 if lo >= 0 else 1.1 * lo
    if top == bottom:
        top = bottom + (abs(bottom) if bottom else 1.0)
    return bottom, top


def _as_series(data) -> list[Series]:
    if isinstance(data, Series):
        data = [data]
    out = []
    for s in data:
        if not isinstance(s, Series):
            label, x, y = s
            s = Series(str(label), np.asarray(x, float), np.asarray(y, float))
        x, y = np.asarray(s.x, float), np.asarray(s.y, float)
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError(f"series {s.label!r}: x and y must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError(f"series {s.label!r} contains non-finite values")
        out.append(Series(s.label, x, y))
    return out


def emit_svg(data, style: SvgStyle | None = None) -> str:
    """Render one or more ``Series`` (or ``(label, x, y)`` triples) as an SVG line plot."""
    style = style or SvgStyle()
    series = _as_series(data)
    if not series or any(s.x.size < 2 for s in series):
        raise ValueError("each series needs at least two points")
    W, H = style.width, style.height
    left, right, top, bottom = 70, 20, 40 if style.title else 20, 50
    pw, ph = W - left - right, H - top - bottom

    xlo = min(float(s.x.min()) for s in series)
    xhi = max(float(s.x.max()) for s in series)
    if xhi == xlo:
        xhi = xlo + 1.0
    ylo, yhi = y_range([s.y for s in series])

    def px(x):
        return left + (x - xlo) / (xhi - xlo) * pw

    def py(y):
        return top + (yhi - y) / (yhi - ylo) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
    ]
    if style.title:
        parts.append(f'<text x="{W / 2:.2f}" y="22" text-anchor="middle" font-size="14">'
                     f"{escape(style.title)}</text>")
    parts.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" '
                 'stroke="black"/>')
    for tx in _nice_ticks(xlo, xhi, style.ticks):
        X = _num(px(tx))
        parts.append(f'<line x1="{X}" y1="{top + ph}" x2="{X}" y2="{top + ph + 5}" stroke="black"/>')
        parts.append(f'<text x="{X}" y="{top + ph + 18}" text-anchor="middle">{_label(tx)}</text>')
    for ty in _nice_ticks(ylo, yhi, style.ticks):
        Y = _num(py(ty))
        parts.append(f'<line x1="{left - 5}" y1="{Y}" x2="{left}" y2="{Y}" stroke="black"/>')
        parts.append(f'<text x="{left - 8}" y="{Y}" text-anchor="end" '
                     f'dominant-baseline="middle">{_label(ty)}</text>')
    parts.append(f'<text x="{left + pw / 2:.2f}" y="{H - 12}" text-anchor="middle">'
                 f"{escape(style.xlabel)}</text>")
    parts.append(f'<text x="16" y="{top + ph / 2:.2f}" text-anchor="middle" '
                 f'transform="rotate(-90 16 {top + ph / 2:.2f})">{escape(style.ylabel)}</text>')
    for i, s in enumerate(series):
        color = style.colors[i % len(style.colors)]
        pts = " ".join(f"{_num(px(x))},{_num(py(y))}" for x, y in zip(s.x, s.y))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        if len(series) > 1:
            ly = top + 16 * (i + 1)
            parts.append(f'<line x1="{left + pw - 90}" y1="{ly}" x2="{left + pw - 70}" y2="{ly}" '
                         f'stroke="{color}" stroke-width="1.5"/>')
            parts.append(f'<text x="{left + pw - 65}" y="{ly}" dominant-baseline="middle">'
                         f"{escape(s.label)}</text>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def trajectory_series(traj, two_sided: bool) -> list[Series]:
    out = [Series("h(t)", traj.t, traj.h)]
    if two_sided:
        out.insert(0, Series("g(t)", traj.t, traj.g))
    return out
