"""Minimal SVG line chart for the median-F curve (no plotting dependency)."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 800, 600
LEFT, RIGHT, TOP, BOTTOM = 90, 30, 60, 70


def _nice_step(span: float, target: int = 6) -> float:
    raw = span / target
    mag = 10 ** math.floor(math.log10(raw))
    for m in (1, 2, 2.5, 5, 10):
        if m * mag >= raw:
            return m * mag
    return 10 * mag


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def median_curve_svg(ks, log10_medians, title: str, x_tick: int = 25) -> str:
    """Render ``log10(median F)`` against ``k`` as an SVG 1.1 document."""
    ks = list(ks)
    ys = list(log10_medians)
    if len(ks) != len(ys) or not ks:
        raise ValueError("need matching, nonempty k and y series")
    x0, x1 = min(ks), max(ks)
    if x0 == x1:
        x1 = x0 + 1
    y_lo, y_hi = min(0.0, min(ys)), max(ys)
    if y_hi == y_lo:
        y_hi = y_lo + 1
    ystep = _nice_step(y_hi - y_lo)
    y_lo = math.floor(y_lo / ystep) * ystep
    y_hi = math.ceil(y_hi / ystep) * ystep
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def sx(k):
        return LEFT + (k - x0) / (x1 - x0) * pw

    def sy(y):
        return TOP + (y_hi - y) / (y_hi - y_lo) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="32" text-anchor="middle" font-family="sans-serif" font-size="16">{escape(title)}</text>',
        f'<line x1="{LEFT}" y1="{TOP + ph}" x2="{LEFT + pw}" y2="{TOP + ph}" stroke="black"/>',
        f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + ph}" stroke="black"/>',
    ]
    first_tick = math.ceil(x0 / x_tick) * x_tick
    for k in range(first_tick, x1 + 1, x_tick):
        x = sx(k)
        out.append(f'<line x1="{x:.2f}" y1="{TOP + ph}" x2="{x:.2f}" y2="{TOP + ph + 6}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{TOP + ph + 22}" text-anchor="middle" font-family="sans-serif" font-size="12">{k}</text>')
    n_yticks = int(round((y_hi - y_lo) / ystep))
    for i in range(n_yticks + 1):
        yv = y_lo + i * ystep
        y = sy(yv)
        out.append(f'<line x1="{LEFT - 6}" y1="{y:.2f}" x2="{LEFT}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 10}" y="{y + 4:.2f}" text-anchor="end" font-family="sans-serif" font-size="12">{_fmt(yv)}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.1f}" y="{HEIGHT - 20}" text-anchor="middle" font-family="sans-serif" font-size="14">number of samples k</text>')
    out.append(
        f'<text x="24" y="{TOP + ph / 2:.1f}" text-anchor="middle" font-family="sans-serif" font-size="14" '
        f'transform="rotate(-90 24 {TOP + ph / 2:.1f})">log10 median F</text>'
    )
    pts = " ".join(f"{sx(k):.2f},{sy(y):.2f}" for k, y in zip(ks, ys))
    out.append(f'<polyline fill="none" stroke="#1f4e9c" stroke-width="2" points="{pts}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
