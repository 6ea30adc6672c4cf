"""Minimal deterministic SVG line charts.

The output is plain text with no timestamps or random identifiers, so
rendering the same data twice yields byte-identical files.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

_WIDTH = 720
_HEIGHT = 360
_MARGIN_LEFT = 64
_MARGIN_RIGHT = 16
_MARGIN_TOP = 24
_MARGIN_BOTTOM = 44
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    """Round tick positions covering [lo, hi]."""
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    raw = span / max(count, 1)
    magnitude = 10.0 ** np.floor(np.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        step = mult * magnitude
        if span / step <= count + 0.5:
            break
    first = np.ceil(lo / step) * step
    ticks = []
    value = first
    while value <= hi + 1e-9 * span:
        ticks.append(float(value))
        value += step
    return ticks


def _fmt(value: float) -> str:
    text = f"{value:.6g}"
    return "0" if text == "-0" else text


def line_chart(
    x: np.ndarray,
    series: Sequence[tuple[str, np.ndarray]],
    *,
    title: str,
    x_label: str,
    y_label: str,
    marks: Sequence[tuple[float, float, str]] = (),
) -> str:
    """Render one or more named traces over a shared x axis as an SVG string.

    ``marks`` are (x, y, text) annotations, used to label spectral peaks.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or len(x) < 2:
        raise ValueError("x must be a 1-D array with at least 2 samples")
    if not series:
        raise ValueError("need at least one series")
    for name, values in series:
        values = np.asarray(values)
        if values.shape != x.shape:
            raise ValueError(f"series {name!r} length does not match x")

    x_lo, x_hi = float(x.min()), float(x.max())
    all_y = np.concatenate(
        [np.asarray(v, dtype=np.float64) for _, v in series]
        + ([np.asarray([m[1] for m in marks], dtype=np.float64)] if marks else [])
    )
    y_lo, y_hi = float(all_y.min()), float(all_y.max())
    if y_hi - y_lo < 1e-12:
        y_lo -= 0.5
        y_hi += 0.5
    pad = 0.05 * (y_hi - y_lo)
    y_lo -= pad
    y_hi += pad

    plot_w = _WIDTH - _MARGIN_LEFT - _MARGIN_RIGHT
    plot_h = _HEIGHT - _MARGIN_TOP - _MARGIN_BOTTOM

    def sx(value: float) -> float:
        return _MARGIN_LEFT + (value - x_lo) / (x_hi - x_lo) * plot_w

    def sy(value: float) -> float:
        return _MARGIN_TOP + (y_hi - value) / (y_hi - y_lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}" font-family="monospace" font-size="12">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<text x="{_WIDTH / 2:.1f}" y="16" text-anchor="middle" font-size="14">{_escape(title)}</text>',
    ]

    for tick in _ticks(x_lo, x_hi):
        px = sx(tick)
        parts.append(
            f'<line x1="{px:.2f}" y1="{_MARGIN_TOP}" x2="{px:.2f}" '
            f'y2="{_MARGIN_TOP + plot_h}" stroke="#dddddd"/>'
        )
        parts.append(
            f'<text x="{px:.2f}" y="{_MARGIN_TOP + plot_h + 16}" '
            f'text-anchor="middle">{_fmt(tick)}</text>'
        )
    for tick in _ticks(y_lo, y_hi):
        py = sy(tick)
        parts.append(
            f'<line x1="{_MARGIN_LEFT}" y1="{py:.2f}" x2="{_MARGIN_LEFT + plot_w}" '
            f'y2="{py:.2f}" stroke="#dddddd"/>'
        )
        parts.append(
            f'<text x="{_MARGIN_LEFT - 6}" y="{py + 4:.2f}" text-anchor="end">{_fmt(tick)}</text>'
        )

    parts.append(
        f'<rect x="{_MARGIN_LEFT}" y="{_MARGIN_TOP}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#333333"/>'
    )

    for k, (name, values) in enumerate(series):
        values = np.asarray(values, dtype=np.float64)
        points = " ".join(f"{sx(xv):.2f},{sy(yv):.2f}" for xv, yv in zip(x, values))
        color = _COLORS[k % len(_COLORS)]
        parts.append(f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        parts.append(
            f'<text x="{_MARGIN_LEFT + plot_w - 8}" y="{_MARGIN_TOP + 16 + 14 * k}" '
            f'text-anchor="end" fill="{color}">{_escape(name)}</text>'
        )

    for mx, my, label in marks:
        px, py = sx(float(mx)), sy(float(my))
        parts.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="3" fill="#d62728"/>')
        parts.append(
            f'<text x="{px:.2f}" y="{py - 8:.2f}" text-anchor="middle" '
            f'fill="#d62728">{_escape(label)}</text>'
        )

    parts.append(
        f'<text x="{_MARGIN_LEFT + plot_w / 2:.1f}" y="{_HEIGHT - 8}" '
        f'text-anchor="middle">{_escape(x_label)}</text>'
    )
    parts.append(
        f'<text x="14" y="{_MARGIN_TOP + plot_h / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 14 {_MARGIN_TOP + plot_h / 2:.1f})">{_escape(y_label)}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
