"""Per-frame displacement series and its CSV form.

The CSV layout is ``t,du,dv,quality,fallback`` with six-decimal numbers;
writers are deterministic so repeated runs diff clean.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .textio import fmt6, parse_float


@dataclass(frozen=True)
class MeasurementSeries:
    """Displacement of one target relative to frame 0, in pixels.

    ``quality`` counts the primitives behind each entry (matched keypoints,
    surviving flow points, or detections); ``fallback`` flags entries that
    came from the coarse bbox-translation path instead of keypoints.
    """

    fps: float
    du: np.ndarray
    dv: np.ndarray
    quality: np.ndarray = field(default=None)  # type: ignore[assignment]
    fallback: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if not (self.fps > 0):
            raise ValueError("fps must be positive")
        du = np.asarray(self.du, dtype=np.float64)
        dv = np.asarray(self.dv, dtype=np.float64)
        if du.ndim != 1 or du.shape != dv.shape or len(du) == 0:
            raise ValueError("du and dv must be equal-length non-empty 1-D arrays")
        quality = (np.zeros(len(du), dtype=np.intp) if self.quality is None
                   else np.asarray(self.quality, dtype=np.intp))
        fallback = (np.zeros(len(du), dtype=bool) if self.fallback is None
                    else np.asarray(self.fallback, dtype=bool))
        if quality.shape != du.shape or fallback.shape != du.shape:
            raise ValueError("quality and fallback must match the series length")
        if du[0] != 0.0 or dv[0] != 0.0:
            raise ValueError("entry 0 must be exactly (0, 0): it is the reference frame")
        for name, arr in (("du", du), ("dv", dv)):
            if not np.isfinite(arr).all():
                raise ValueError(f"{name} must be finite")
        for arr in (du, dv, quality, fallback):
            arr.setflags(write=False)
        object.__setattr__(self, "du", du)
        object.__setattr__(self, "dv", dv)
        object.__setattr__(self, "quality", quality)
        object.__setattr__(self, "fallback", fallback)

    def __len__(self) -> int:
        return len(self.du)

    @property
    def t(self) -> np.ndarray:
        return np.arange(len(self.du)) / self.fps

    def to_csv(self) -> str:
        lines = ["t,du,dv,quality,fallback"]
        for i in range(len(self.du)):
            lines.append(
                f"{fmt6(i / self.fps)},{fmt6(self.du[i])},{fmt6(self.dv[i])},"
                f"{int(self.quality[i])},{int(self.fallback[i])}"
            )
        return "\n".join(lines) + "\n"


def series_from_csv(text: str | Iterable[str]) -> MeasurementSeries:
    """Parse a measurement CSV; the rate is recovered from the time column."""
    lines = text.splitlines() if isinstance(text, str) else [ln.rstrip("\n") for ln in text]
    lines = [ln for ln in lines if ln.strip()]
    if not lines or lines[0].strip() != "t,du,dv,quality,fallback":
        raise ValueError("expected header 't,du,dv,quality,fallback'")
    t, du, dv, quality, fallback = [], [], [], [], []
    for row, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 5:
            raise ValueError(f"line {row}: expected 5 columns, got {len(parts)}")
        where = f"line {row}"
        t.append(parse_float(parts[0], where=where))
        du.append(parse_float(parts[1], where=where))
        dv.append(parse_float(parts[2], where=where))
        quality.append(int(parts[3]))
        fallback.append(bool(int(parts[4])))
    if len(t) < 2:
        raise ValueError("need at least two rows to recover the frame rate")
    span = t[-1] - t[0]
    if span <= 0:
        raise ValueError("time column must increase")
    fps = (len(t) - 1) / span
    expected = np.arange(len(t)) / fps
    if np.abs(np.asarray(t) - expected).max() > 2e-6:
        raise ValueError("time column is not uniformly spaced at 1/fps")
    return MeasurementSeries(
        fps=fps,
        du=np.asarray(du),
        dv=np.asarray(dv),
        quality=np.asarray(quality, dtype=np.intp),
        fallback=np.asarray(fallback, dtype=bool),
    )
