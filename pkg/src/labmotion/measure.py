"""Pixel-to-physical calibration and accuracy metrics.

A single scale factor converts pixel displacement to physical units
(``dx = s * du``, ``dy = s * dv``); it comes from a reference length seen
by the camera.  Accuracy metrics interpolate the reference onto the
measured timestamps before comparing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .series import MeasurementSeries
from .textio import fmt6, parse_float

UNITS = ("inch", "millimeter")


@dataclass(frozen=True)
class Calibration:
    """Physical length of one pixel."""

    scale: float
    unit: str

    def __post_init__(self) -> None:
        if not (self.scale > 0):
            raise ValueError("calibration scale must be positive")
        if self.unit not in UNITS:
            raise ValueError(f"unit must be one of {UNITS}, got {self.unit!r}")


def calibrate_from_reference(length_px: float, length_physical: float, unit: str) -> Calibration:
    """Scale from a reference feature of known physical length."""
    if not (length_px > 0) or not (length_physical > 0):
        raise ValueError("reference lengths must be positive")
    return Calibration(length_physical / length_px, unit)


@dataclass(frozen=True)
class PhysicalSeries:
    """Calibrated displacement series."""

    t: np.ndarray
    dx: np.ndarray
    dy: np.ndarray
    unit: str

    def __post_init__(self) -> None:
        t = np.asarray(self.t, dtype=np.float64)
        dx = np.asarray(self.dx, dtype=np.float64)
        dy = np.asarray(self.dy, dtype=np.float64)
        if not (t.shape == dx.shape == dy.shape) or t.ndim != 1:
            raise ValueError("t, dx and dy must be equal-length 1-D arrays")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "dx", dx)
        object.__setattr__(self, "dy", dy)

    def to_csv(self) -> str:
        lines = ["t,dx,dy"]
        for i in range(len(self.t)):
            lines.append(f"{fmt6(self.t[i])},{fmt6(self.dx[i])},{fmt6(self.dy[i])}")
        return "\n".join(lines) + "\n"


def to_physical(series: MeasurementSeries, calibration: Calibration) -> PhysicalSeries:
    return PhysicalSeries(
        t=series.t,
        dx=series.du * calibration.scale,
        dy=series.dv * calibration.scale,
        unit=calibration.unit,
    )


@dataclass(frozen=True)
class ReferenceSeries:
    """Time-stamped reference columns loaded from a truth CSV."""

    t: np.ndarray
    columns: dict[str, np.ndarray]

    def column(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise KeyError(f"no column {name!r}; have {sorted(self.columns)}")
        return self.columns[name]

    @property
    def first_column(self) -> str:
        return next(iter(self.columns))


def load_truth_csv(text: str | Iterable[str]) -> ReferenceSeries:
    """Load a reference CSV with a leading ``t`` column and one or more values."""
    lines = text.splitlines() if isinstance(text, str) else [ln.rstrip("\n") for ln in text]
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        raise ValueError("empty reference CSV")
    header = [h.strip() for h in lines[0].split(",")]
    if len(header) < 2 or header[0] != "t":
        raise ValueError("reference CSV header must be 't,<value>[,...]'")
    names = header[1:]
    rows = []
    for row, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(header):
            raise ValueError(f"line {row}: expected {len(header)} columns, got {len(parts)}")
        rows.append([parse_float(p, where=f"line {row}") for p in parts])
    if not rows:
        raise ValueError("reference CSV has no data rows")
    data = np.asarray(rows)
    t = data[:, 0]
    if np.any(np.diff(t) <= 0):
        raise ValueError("reference time column must be strictly increasing")
    return ReferenceSeries(t, {name: data[:, i + 1] for i, name in enumerate(names)})


def mae(
    measured_t: np.ndarray,
    measured_values: np.ndarray,
    reference: ReferenceSeries,
    column: str | None = None,
) -> float:
    """Mean absolute error against the reference, interpolated in time.

    Only measured samples inside the reference time span contribute, so
    differing rates or trimmed records compare fairly.
    """
    t = np.asarray(measured_t, dtype=np.float64)
    values = np.asarray(measured_values, dtype=np.float64)
    if t.shape != values.shape or t.ndim != 1 or len(t) == 0:
        raise ValueError("measured arrays must be equal-length, non-empty and 1-D")
    ref_values = reference.column(column or reference.first_column)
    inside = (t >= reference.t[0]) & (t <= reference.t[-1])
    if not inside.any():
        raise ValueError("no measured samples fall inside the reference time span")
    interpolated = np.interp(t[inside], reference.t, ref_values)
    return float(np.mean(np.abs(values[inside] - interpolated)))


def frequency_error(measured_hz: float, reference_hz: float) -> float:
    """Relative frequency deviation in percent."""
    if not (reference_hz > 0):
        raise ValueError("reference frequency must be positive")
    return 100.0 * abs(measured_hz - reference_hz) / reference_hz


@dataclass(frozen=True)
class EvalReport:
    """Accuracy summary across methods and targets."""

    unit: str
    mae_rows: tuple[tuple[str, float, int], ...]  # (method, mae, n samples)
    freq_rows: tuple[tuple[str, float, float, float], ...]  # (target, measured, ref, err %)

    def to_csv(self) -> str:
        lines = ["section,name,value"]
        for method, value, count in self.mae_rows:
            lines.append(f"mae_{self.unit},{method},{value:.9g}")
            lines.append(f"samples,{method},{count}")
        for target, measured, ref, err in self.freq_rows:
            lines.append(f"freq_hz,{target},{fmt6(measured)}")
            lines.append(f"freq_ref_hz,{target},{fmt6(ref)}")
            lines.append(f"freq_error_pct,{target},{err:.6f}")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        out = []
        if self.mae_rows:
            width = max(len(m) for m, _, _ in self.mae_rows)
            out.append(f"mean absolute error ({self.unit})")
            out.append(f"{'method'.ljust(width)}  {'mae':>12}  {'n':>6}")
            for method, value, count in self.mae_rows:
                out.append(f"{method.ljust(width)}  {value:12.6f}  {count:6d}")
        if self.freq_rows:
            if out:
                out.append("")
            width = max(len(t) for t, *_ in self.freq_rows)
            out.append("dominant frequencies (Hz)")
            out.append(f"{'target'.ljust(width)}  {'measured':>10}  {'reference':>10}  {'error %':>8}")
            for target, measured, ref, err in self.freq_rows:
                out.append(f"{target.ljust(width)}  {measured:10.4f}  {ref:10.4f}  {err:8.3f}")
        return "\n".join(out) + "\n"
