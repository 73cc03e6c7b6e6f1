"""Static SVG figures: a density-scaled histogram with density curves on top.

Output is plain SVG 1.1 text built by string formatting, so identical inputs
give byte-identical files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

from .errors import DomainError

PALETTE = ("#000000", "#1f5fbf", "#c0392b", "#27864a", "#8e44ad", "#d68910")


@dataclass(frozen=True)
class Overlay:
    x: np.ndarray
    y: np.ndarray
    label: str
    color: str | None = None
    dash: str | None = None


@dataclass
class PlotSpec:
    overlays: list
    width: int = 720
    height: int = 480
    histogram_bins: int | str = "auto"
    data: np.ndarray | None = None
    title: str | None = None
    xlim: tuple | None = None
    ylim: tuple | None = None
    xlabel: str = "x"
    ylabel: str = "density"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.overlays:
            raise DomainError("a plot needs at least one overlay")
        if self.width <= 0 or self.height <= 0:
            raise DomainError("plot dimensions must be positive")


def sturges_bins(n: int) -> int:
    return int(math.ceil(math.log2(n))) + 1


def histogram(data, bins="auto"):
    """Density-normalized histogram on the raw scale (Sturges by default)."""
    data = np.asarray(data, dtype=float)
    k = sturges_bins(data.size) if bins == "auto" else int(bins)
    heights, edges = np.histogram(data, bins=k, density=True)
    return heights, edges


def nice_ticks(lo, hi, target=5):
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / target
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * span:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _fmt(v):
    return f"{v:.2f}"


def render_svg(spec: PlotSpec) -> str:
    W, H = spec.width, spec.height
    left, right, top, bottom = 64, 16, 36 if spec.title else 16, 48
    pw, ph = W - left - right, H - top - bottom

    hist = histogram(spec.data, spec.histogram_bins) if spec.data is not None else None
    xs = [np.asarray(o.x, dtype=float) for o in spec.overlays]
    ys = [np.asarray(o.y, dtype=float) for o in spec.overlays]
    if spec.xlim:
        x0, x1 = spec.xlim
    else:
        x0 = min(float(x.min()) for x in xs)
        x1 = max(float(x.max()) for x in xs)
        if hist is not None:
            x0, x1 = min(x0, hist[1][0]), max(x1, hist[1][-1])
    if spec.ylim:
        y0, y1 = spec.ylim
    else:
        top_y = max(float(np.nanmax(y)) for y in ys)
        if hist is not None:
            top_y = max(top_y, float(hist[0].max()))
        y0, y1 = 0.0, 1.05 * top_y if top_y > 0 else 1.0

    def px(v):
        return left + (v - x0) / (x1 - x0) * pw

    def py(v):
        return top + ph - (min(max(v, y0), y1) - y0) / (y1 - y0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="#ffffff"/>',
    ]
    if spec.title:
        out.append(f'<text x="{W / 2:.1f}" y="22" text-anchor="middle" font-family="sans-serif" '
                   f'font-size="14">{escape(spec.title)}</text>')

    if hist is not None:
        heights, edges = hist
        out.append('<g class="histogram" fill="#d9d9d9" stroke="#7f7f7f" stroke-width="0.5">')
        for hgt, a, b in zip(heights, edges[:-1], edges[1:]):
            if b < x0 or a > x1:
                continue
            xa, xb = px(max(a, x0)), px(min(b, x1))
            yt = py(hgt)
            out.append(f'<rect x="{_fmt(xa)}" y="{_fmt(yt)}" width="{_fmt(xb - xa)}" '
                       f'height="{_fmt(top + ph - yt)}"/>')
        out.append("</g>")

    # axes
    out.append(f'<g class="axes" stroke="#000000" stroke-width="1" font-family="sans-serif" '
               f'font-size="11">')
    out.append(f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}"/>')
    out.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}"/>')
    for t in nice_ticks(x0, x1):
        out.append(f'<line x1="{_fmt(px(t))}" y1="{top + ph}" x2="{_fmt(px(t))}" '
                   f'y2="{top + ph + 4}"/>')
        out.append(f'<text x="{_fmt(px(t))}" y="{top + ph + 16}" text-anchor="middle" '
                   f'stroke="none">{t:g}</text>')
    for t in nice_ticks(y0, y1):
        out.append(f'<line x1="{left - 4}" y1="{_fmt(py(t))}" x2="{left}" y2="{_fmt(py(t))}"/>')
        out.append(f'<text x="{left - 6}" y="{_fmt(py(t) + 4)}" text-anchor="end" '
                   f'stroke="none">{t:g}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{H - 10}" text-anchor="middle" '
               f'stroke="none">{escape(spec.xlabel)}</text>')
    out.append(f'<text x="14" y="{top + ph / 2:.1f}" text-anchor="middle" stroke="none" '
               f'transform="rotate(-90 14 {top + ph / 2:.1f})">{escape(spec.ylabel)}</text>')
    out.append("</g>")

    # curves
    out.append('<g class="curves" fill="none" stroke-width="1.5">')
    for i, (o, x, y) in enumerate(zip(spec.overlays, xs, ys)):
        keep = (x >= x0) & (x <= x1) & np.isfinite(y)
        pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x[keep], y[keep]))
        color = o.color or PALETTE[i % len(PALETTE)]
        dash = f' stroke-dasharray="{o.dash}"' if o.dash else ""
        out.append(f'<polyline stroke="{color}"{dash} points="{pts}"/>')
    out.append("</g>")

    # legend
    out.append('<g class="legend" font-family="sans-serif" font-size="11">')
    lx, ly = left + pw - 180, top + 14
    for i, o in enumerate(spec.overlays):
        color = o.color or PALETTE[i % len(PALETTE)]
        y = ly + 16 * i
        dash = f' stroke-dasharray="{o.dash}"' if o.dash else ""
        out.append(f'<line class="legend-entry" x1="{lx}" y1="{y}" x2="{lx + 24}" y2="{y}" '
                   f'stroke="{color}" stroke-width="1.5"{dash}/>')
        out.append(f'<text x="{lx + 30}" y="{y + 4}">{escape(o.label)}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
