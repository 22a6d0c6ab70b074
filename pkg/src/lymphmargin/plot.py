"""Deterministic SVG line plot of an infiltration curve."""
from __future__ import annotations

import numpy as np

from .density_profile import InfiltrationCurve

WIDTH, HEIGHT = 720, 400
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 30, 55


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _nice_step(span: float, target: int = 8) -> float:
    raw = span / target
    mag = 10 ** np.floor(np.log10(raw))
    for m in (1, 2, 5, 10):
        if m * mag >= raw:
            return float(m * mag)
    return float(10 * mag)


def curve_svg(curve: InfiltrationCurve, title: str = "Lymphocyte density vs. distance to tumor margin") -> str:
    """Density against bin center, margin at 0 um (neoplastic side negative)."""
    centers = 0.5 * (curve.bin_edges_um[:-1] + curve.bin_edges_um[1:])
    x0, x1 = float(curve.bin_edges_um[0]), float(curve.bin_edges_um[-1])
    if x0 > 0:
        x0 = 0.0
    if x1 < 0:
        x1 = 0.0
    ymax = float(max(curve.density.max(initial=0.0), 1e-3)) * 1.1
    pw = WIDTH - LEFT - RIGHT
    ph = HEIGHT - TOP - BOTTOM

    def sx(x):
        return LEFT + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return TOP + ph - y / ymax * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="18" text-anchor="middle">{title}</text>',
        f'<line x1="{LEFT}" y1="{TOP + ph}" x2="{LEFT + pw}" y2="{TOP + ph}" stroke="black"/>',
        f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + ph}" stroke="black"/>',
    ]
    xstep = _nice_step(x1 - x0)
    for t in np.arange(np.ceil(x0 / xstep) * xstep, x1 + 1e-9, xstep):
        x = sx(t)
        out.append(f'<line x1="{_fmt(x)}" y1="{TOP + ph}" x2="{_fmt(x)}" y2="{TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_fmt(x)}" y="{TOP + ph + 18}" text-anchor="middle">{t:g}</text>')
    ystep = _nice_step(ymax, 5)
    for t in np.arange(0.0, ymax + 1e-12, ystep):
        y = sy(t)
        out.append(f'<line x1="{LEFT - 5}" y1="{_fmt(y)}" x2="{LEFT}" y2="{_fmt(y)}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 8}" y="{_fmt(y + 4)}" text-anchor="end">{t:.3g}</text>')
    out.append(
        f'<line x1="{_fmt(sx(0.0))}" y1="{TOP}" x2="{_fmt(sx(0.0))}" y2="{TOP + ph}" '
        'stroke="gray" stroke-dasharray="4 3"/>'
    )
    pts = " ".join(
        f"{_fmt(sx(c))},{_fmt(sy(d))}" for c, d, t in zip(centers, curve.density, curve.tissue_px) if t > 0
    )
    out.append(f'<polyline fill="none" stroke="#1a7f37" stroke-width="1.5" points="{pts}"/>')
    out.append(
        f'<text x="{LEFT + pw / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">'
        "distance to tumor margin (um; negative = neoplastic)</text>"
    )
    out.append(
        f'<text x="16" y="{TOP + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {TOP + ph / 2:.1f})">lymphocyte pixel density</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"
