"""Minimal deterministic SVG line plots for sweep results.

No plotting dependency: the figures are simple polyline plots of scalar
sweeps, rendered with fixed formatting so identical data produces identical
bytes.
"""

from __future__ import annotations

import math

WIDTH = 720
HEIGHT = 480
MARGIN_L = 72
MARGIN_R = 24
MARGIN_T = 36
MARGIN_B = 56

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _ticks(lo: float, hi: float, log: bool):
    if log:
        lo_e = math.floor(math.log10(lo))
        hi_e = math.ceil(math.log10(hi))
        return [10.0**e for e in range(lo_e, hi_e + 1) if lo <= 10.0**e <= hi]
    span = hi - lo
    if span <= 0:
        return [lo]
    step = 10.0 ** math.floor(math.log10(span / 4))
    for mult in (1, 2, 5, 10):
        if span / (step * mult) <= 5:
            step *= mult
            break
    first = math.ceil(lo / step) * step
    ticks = []
    value = first
    while value <= hi + 1e-12 * span:
        ticks.append(value)
        value += step
    return ticks


def _fmt(value: float) -> str:
    return f"{value:.6g}"


class _Axis:
    def __init__(self, lo, hi, pixel_lo, pixel_hi, log):
        if log:
            lo = max(lo, 1e-300)
            hi = max(hi, lo * 10)
        if hi <= lo:
            hi = lo + 1.0
        self.lo, self.hi, self.log = lo, hi, log
        self.pixel_lo, self.pixel_hi = pixel_lo, pixel_hi

    def to_pixel(self, value: float) -> float:
        if self.log:
            value = max(value, self.lo)
            frac = (math.log10(value) - math.log10(self.lo)) / (
                math.log10(self.hi) - math.log10(self.lo)
            )
        else:
            frac = (value - self.lo) / (self.hi - self.lo)
        return self.pixel_lo + frac * (self.pixel_hi - self.pixel_lo)


def line_plot_svg(
    series,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    logx: bool = False,
    logy: bool = False,
) -> str:
    """Render labelled (x, y) series to an SVG string.

    series: iterable of (label, xs, ys).  Nonpositive values are dropped on
    log axes.
    """
    cleaned = []
    for label, xs, ys in series:
        points = [
            (float(x), float(y))
            for x, y in zip(xs, ys)
            if math.isfinite(x) and math.isfinite(y)
            and (not logx or x > 0) and (not logy or y > 0)
        ]
        if points:
            cleaned.append((label, points))
    if not cleaned:
        raise ValueError("no plottable points")

    all_x = [p[0] for _, pts in cleaned for p in pts]
    all_y = [p[1] for _, pts in cleaned for p in pts]
    x_axis = _Axis(min(all_x), max(all_x), MARGIN_L, WIDTH - MARGIN_R, logx)
    y_axis = _Axis(min(all_y), max(all_y), HEIGHT - MARGIN_B, MARGIN_T, logy)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{WIDTH - MARGIN_L - MARGIN_R}" '
        f'height="{HEIGHT - MARGIN_T - MARGIN_B}" fill="none" stroke="#444"/>',
    ]
    if title:
        parts.append(
            f'<text x="{WIDTH / 2:.1f}" y="{MARGIN_T - 12}" text-anchor="middle" '
            f'font-size="15" font-family="sans-serif">{title}</text>'
        )
    for tick in _ticks(x_axis.lo, x_axis.hi, logx):
        px = x_axis.to_pixel(tick)
        parts.append(
            f'<line x1="{px:.1f}" y1="{HEIGHT - MARGIN_B}" x2="{px:.1f}" '
            f'y2="{HEIGHT - MARGIN_B + 5}" stroke="#444"/>'
        )
        parts.append(
            f'<text x="{px:.1f}" y="{HEIGHT - MARGIN_B + 18}" text-anchor="middle" '
            f'font-size="11" font-family="sans-serif">{_fmt(tick)}</text>'
        )
    for tick in _ticks(y_axis.lo, y_axis.hi, logy):
        py = y_axis.to_pixel(tick)
        parts.append(
            f'<line x1="{MARGIN_L - 5}" y1="{py:.1f}" x2="{MARGIN_L}" '
            f'y2="{py:.1f}" stroke="#444"/>'
        )
        parts.append(
            f'<text x="{MARGIN_L - 8}" y="{py + 4:.1f}" text-anchor="end" '
            f'font-size="11" font-family="sans-serif">{_fmt(tick)}</text>'
        )
    if xlabel:
        parts.append(
            f'<text x="{WIDTH / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle" '
            f'font-size="13" font-family="sans-serif">{xlabel}</text>'
        )
    if ylabel:
        parts.append(
            f'<text x="18" y="{HEIGHT / 2:.1f}" text-anchor="middle" font-size="13" '
            f'font-family="sans-serif" transform="rotate(-90 18 {HEIGHT / 2:.1f})">'
            f"{ylabel}</text>"
        )
    for i, (label, points) in enumerate(cleaned):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(
            f"{x_axis.to_pixel(x):.2f},{y_axis.to_pixel(y):.2f}" for x, y in points
        )
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.6"/>'
        )
        ly = MARGIN_T + 16 + 16 * i
        lx = WIDTH - MARGIN_R - 150
        parts.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="1.6"/>'
        )
        parts.append(
            f'<text x="{lx + 28}" y="{ly}" font-size="12" '
            f'font-family="sans-serif">{label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)


def write_line_plot(path, series, **kwargs) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(line_plot_svg(series, **kwargs))
        handle.write("\n")
