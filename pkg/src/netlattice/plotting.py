"""Minimal deterministic SVG plots.

A small hand-rolled writer instead of a plotting library so that identical
inputs produce identical bytes (the run artifacts are diffed in tests).
Supports linear/log axes, line and point series, and a legend.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptySeries, InvalidField

_PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#17becf",
    "#7f7f7f",
)

_WIDTH, _HEIGHT = 720, 520
_LEFT, _RIGHT, _TOP, _BOTTOM = 80, 690, 46, 460


@dataclass
class PlotSeries:
    label: str
    x: np.ndarray
    y: np.ndarray
    color: str | None = None
    style: str = "line"  # "line" or "points"
    stroke_width: float = 1.6
    dash: str | None = None  # SVG stroke-dasharray, e.g. "6,3"


@dataclass
class AxesSpec:
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    xscale: str = "linear"
    yscale: str = "linear"
    xlim: tuple | None = None
    ylim: tuple | None = None


def _nice_step(span: float) -> float:
    raw = span / 5.0
    power = np.floor(np.log10(raw))
    base = raw / 10**power
    for candidate in (1.0, 2.0, 5.0):
        if base <= candidate:
            return candidate * 10**power
    return 10.0 ** (power + 1)


def _linear_ticks(lo: float, hi: float) -> list:
    step = _nice_step(hi - lo)
    first = np.ceil(lo / step) * step
    ticks = []
    value = first
    while value <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(value) < 1e-12 * step else value)
        value += step
    return ticks


def _log_ticks(lo: float, hi: float) -> list:
    lo_d, hi_d = int(np.floor(np.log10(lo))), int(np.ceil(np.log10(hi)))
    ticks = [10.0**d for d in range(lo_d, hi_d + 1)]
    return [t for t in ticks if lo / 1.001 <= t <= hi * 1.001]


def _scaled(values: np.ndarray, scale: str) -> np.ndarray:
    return np.log10(values) if scale == "log" else values


def _data_window(series, axes):
    xs = np.concatenate([s.x for s in series])
    ys = np.concatenate([s.y for s in series])
    xlim = axes.xlim or (float(xs.min()), float(xs.max()))
    ylim = axes.ylim or (float(ys.min()), float(ys.max()))

    def pad(lim, scale):
        lo, hi = float(lim[0]), float(lim[1])
        if scale == "log":
            if lo <= 0:
                raise InvalidField("lim", "log axis requires positive limits")
            if lo == hi:
                return lo / 10.0, hi * 10.0
            margin = (np.log10(hi) - np.log10(lo)) * 0.04
            return 10 ** (np.log10(lo) - margin), 10 ** (np.log10(hi) + margin)
        if lo == hi:
            return lo - 1.0, hi + 1.0
        margin = (hi - lo) * 0.04
        return lo - margin, hi + margin

    return pad(xlim, axes.xscale), pad(ylim, axes.yscale)


def emit_plot(series, axes: AxesSpec, path) -> None:
    """Write one SVG chart containing the given series.

    Non-finite points are dropped, as are non-positive values on log axes.
    Raises EmptySeries when there is no series or nothing left to draw.
    """
    if not series:
        raise EmptySeries("no series to plot")
    for spec in series:
        if spec.style not in ("line", "points"):
            raise InvalidField("style", f"unknown style {spec.style!r}")

    cleaned = []
    for i, spec in enumerate(series):
        x = np.asarray(spec.x, dtype=float)
        y = np.asarray(spec.y, dtype=float)
        if x.shape != y.shape:
            raise InvalidField("series", f"{spec.label}: x/y length mismatch")
        keep = np.isfinite(x) & np.isfinite(y)
        if axes.xscale == "log":
            keep &= x > 0
        if axes.yscale == "log":
            keep &= y > 0
        x, y = x[keep], y[keep]
        if len(x):
            color = spec.color or _PALETTE[i % len(_PALETTE)]
            cleaned.append((spec, x, y, color))
    if not cleaned:
        raise EmptySeries("all series empty after filtering")

    (x_lo, x_hi), (y_lo, y_hi) = _data_window(
        [PlotSeries(s.label, x, y) for s, x, y, _ in cleaned], axes
    )
    sx_lo, sx_hi = _scaled(np.array([x_lo, x_hi]), axes.xscale)
    sy_lo, sy_hi = _scaled(np.array([y_lo, y_hi]), axes.yscale)

    def px(values):
        t = (_scaled(np.asarray(values, dtype=float), axes.xscale) - sx_lo) / (sx_hi - sx_lo)
        return _LEFT + t * (_RIGHT - _LEFT)

    def py(values):
        t = (_scaled(np.asarray(values, dtype=float), axes.yscale) - sy_lo) / (sy_hi - sy_lo)
        return _BOTTOM - t * (_BOTTOM - _TOP)

    out = []
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">'
    )
    out.append(f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>')
    out.append(
        f'<rect x="{_LEFT}" y="{_TOP}" width="{_RIGHT - _LEFT}" '
        f'height="{_BOTTOM - _TOP}" fill="none" stroke="black" stroke-width="1"/>'
    )

    x_ticks = _log_ticks(x_lo, x_hi) if axes.xscale == "log" else _linear_ticks(x_lo, x_hi)
    y_ticks = _log_ticks(y_lo, y_hi) if axes.yscale == "log" else _linear_ticks(y_lo, y_hi)
    for tick in x_ticks:
        cx = px(tick)
        out.append(
            f'<line x1="{cx:.2f}" y1="{_BOTTOM}" x2="{cx:.2f}" y2="{_BOTTOM + 5}" '
            'stroke="black" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{cx:.2f}" y="{_BOTTOM + 20}" font-size="12" '
            f'text-anchor="middle" font-family="sans-serif">{tick:g}</text>'
        )
    for tick in y_ticks:
        cy = py(tick)
        out.append(
            f'<line x1="{_LEFT - 5}" y1="{cy:.2f}" x2="{_LEFT}" y2="{cy:.2f}" '
            'stroke="black" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_LEFT - 9}" y="{cy + 4:.2f}" font-size="12" '
            f'text-anchor="end" font-family="sans-serif">{tick:g}</text>'
        )

    if axes.title:
        out.append(
            f'<text x="{(_LEFT + _RIGHT) / 2:.0f}" y="28" font-size="15" '
            f'text-anchor="middle" font-family="sans-serif">{axes.title}</text>'
        )
    if axes.xlabel:
        out.append(
            f'<text x="{(_LEFT + _RIGHT) / 2:.0f}" y="{_BOTTOM + 45}" font-size="13" '
            f'text-anchor="middle" font-family="sans-serif">{axes.xlabel}</text>'
        )
    if axes.ylabel:
        cy = (_TOP + _BOTTOM) / 2
        out.append(
            f'<text x="24" y="{cy:.0f}" font-size="13" text-anchor="middle" '
            f'font-family="sans-serif" transform="rotate(-90 24 {cy:.0f})">'
            f"{axes.ylabel}</text>"
        )

    for spec, x, y, color in cleaned:
        if spec.style == "line":
            points = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px(x), py(y)))
            dash = f' stroke-dasharray="{spec.dash}"' if spec.dash else ""
            out.append(
                f'<polyline points="{points}" fill="none" stroke="{color}" '
                f'stroke-width="{spec.stroke_width:g}"{dash}/>'
            )
        else:
            for a, b in zip(px(x), py(y)):
                out.append(
                    f'<circle cx="{a:.2f}" cy="{b:.2f}" r="3.2" fill="{color}"/>'
                )

    legend_y = _TOP + 16
    for spec, _, _, color in cleaned:
        sample_x = _RIGHT - 150
        out.append(
            f'<line x1="{sample_x}" y1="{legend_y - 4}" x2="{sample_x + 24}" '
            f'y2="{legend_y - 4}" stroke="{color}" stroke-width="2.5"/>'
        )
        out.append(
            f'<text x="{sample_x + 30}" y="{legend_y}" font-size="12" '
            f'font-family="sans-serif">{spec.label}</text>'
        )
        legend_y += 18

    out.append("</svg>")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")
