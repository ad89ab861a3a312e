"""Dependency-free SVG line plots: deterministic text output, diffable in CI."""

from __future__ import annotations

import math
from typing import Mapping, Sequence

__all__ = ["line_plot"]

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
_W, _H = 800, 500
_ML, _MR, _MT, _MB = 70, 20, 40, 50


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _finite(vals):
    return [v for v in vals if math.isfinite(v)]


def line_plot(
    path,
    x: Sequence[float],
    series: Mapping[str, Sequence[float]],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    logx: bool = False,
    logy: bool = False,
) -> None:
    xs = [math.log2(v) if logx else float(v) for v in x]
    ys_all = []
    tx = lambda v: math.log2(v) if logx else v  # noqa: E731

    def ty(v):
        if logy:
            return math.log2(v) if v > 0 else math.nan
        return v

    data = {}
    for name, ys in series.items():
        pts = [(tx(float(a)), ty(float(b))) for a, b in zip(x, ys)]
        pts = [(a, b) for a, b in pts if math.isfinite(a) and math.isfinite(b)]
        data[name] = pts
        ys_all.extend(b for _, b in pts)
    xs_f = _finite(xs)
    x_lo, x_hi = (min(xs_f), max(xs_f)) if xs_f else (0.0, 1.0)
    y_lo, y_hi = (min(ys_all), max(ys_all)) if ys_all else (0.0, 1.0)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pw, ph = _W - _ML - _MR, _H - _MT - _MB

    def px(v):
        return _ML + (v - x_lo) / (x_hi - x_lo) * pw

    def py(v):
        return _MT + (y_hi - v) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="monospace" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.0f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{_ML}" y1="{_MT + ph}" x2="{_ML + pw}" y2="{_MT + ph}" stroke="black"/>',
        f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_MT + ph}" stroke="black"/>',
    ]
    for i in range(5):
        vx = x_lo + i * (x_hi - x_lo) / 4
        vy = y_lo + i * (y_hi - y_lo) / 4
        out.append(
            f'<text x="{px(vx):.1f}" y="{_MT + ph + 18}" text-anchor="middle">'
            f"{_fmt(2 ** vx) if logx else _fmt(vx)}</text>"
        )
        out.append(
            f'<text x="{_ML - 6}" y="{py(vy):.1f}" text-anchor="end">'
            f"{_fmt(2 ** vy) if logy else _fmt(vy)}</text>"
        )
        out.append(
            f'<line x1="{px(vx):.1f}" y1="{_MT + ph}" x2="{px(vx):.1f}" '
            f'y2="{_MT + ph + 4}" stroke="black"/>'
        )
    out.append(
        f'<text x="{_ML + pw / 2:.0f}" y="{_H - 12}" text-anchor="middle">{xlabel}</text>'
    )
    out.append(
        f'<text x="16" y="{_MT + ph / 2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {_MT + ph / 2:.0f})">{ylabel}</text>'
    )
    for i, (name, pts) in enumerate(data.items()):
        color = _COLORS[i % len(_COLORS)]
        if pts:
            path_d = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in pts)
            out.append(f'<polyline points="{path_d}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        out.append(
            f'<text x="{_ML + pw - 6}" y="{_MT + 16 + 16 * i}" text-anchor="end" '
            f'fill="{color}">{name}</text>'
        )
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
