"""Reader for the renderer's JSON scene files, as far as the mock needs them.

The mock generator never renders pixels; it only needs, per target, the
frame-0 rectangle and the per-axis motion law so it can place a box in
every frame.  The laws are evaluated from their documented closed forms:

* ``static``     offset 0 everywhere
* ``ramp``       ``rate * j`` px at frame ``j``
* ``harmonic``   ``amplitude * sin(2*pi*frequency_hz*t + phase)``, ``t = j/fps``
* ``sweep``      linear chirp whose instantaneous frequency runs from
                 ``freq_start_hz`` to ``freq_end_hz`` across the sequence
* ``tabulated``  explicit per-frame values

Displacement reported to consumers is re-referenced so frame 0 is zero:
``d[j] = offset[j] - offset[0]``.  Harmonic and sweep frequencies must lie
strictly inside ``(0, fps/2)``; a tabulated law must supply exactly one
value per frame.  All validation errors raise :class:`ConfigError`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

LAW_FIELDS = {
    "static": (),
    "ramp": ("rate",),
    "harmonic": ("amplitude", "frequency_hz", "phase"),
    "sweep": ("amplitude", "freq_start_hz", "freq_end_hz", "phase"),
    "tabulated": ("values",),
}


@dataclass(frozen=True)
class MotionLaw:
    """One axis of target motion, evaluated lazily per frame index."""

    kind: str = "static"
    rate: float = 0.0
    amplitude: float = 0.0
    frequency_hz: float = 0.0
    phase: float = 0.0
    freq_start_hz: float = 0.0
    freq_end_hz: float = 0.0
    values: tuple[float, ...] = ()

    def offsets(self, n_frames: int, fps: float) -> np.ndarray:
        """Absolute offsets for frames ``0 .. n_frames-1`` (not re-referenced)."""
        j = np.arange(n_frames, dtype=np.float64)
        t = j / fps
        if self.kind == "static":
            return np.zeros(n_frames)
        if self.kind == "ramp":
            return self.rate * j
        if self.kind == "harmonic":
            if not (0.0 < self.frequency_hz < fps / 2.0):
                raise ConfigError(
                    f"harmonic frequency {self.frequency_hz} Hz must lie in (0, fps/2 = {fps / 2})"
                )
            return self.amplitude * np.sin(2.0 * np.pi * self.frequency_hz * t + self.phase)
        if self.kind == "sweep":
            for f in (self.freq_start_hz, self.freq_end_hz):
                if not (0.0 < f < fps / 2.0):
                    raise ConfigError(f"sweep frequency {f} Hz must lie in (0, fps/2 = {fps / 2})")
            duration = (n_frames - 1) / fps if n_frames > 1 else 1.0
            slope = (self.freq_end_hz - self.freq_start_hz) / (2.0 * duration)
            return self.amplitude * np.sin(2.0 * np.pi * (self.freq_start_hz * t + slope * t * t) + self.phase)
        if len(self.values) != n_frames:
            raise ConfigError(
                f"tabulated law has {len(self.values)} values for {n_frames} frames"
            )
        return np.asarray(self.values, dtype=np.float64)


@dataclass(frozen=True)
class TargetGeometry:
    """Frame-0 rectangle plus one motion law per axis."""

    label: str
    rect: tuple[int, int, int, int]
    law_x: MotionLaw
    law_y: MotionLaw


@dataclass(frozen=True)
class SceneGeometry:
    """Everything the mock generator needs from a scene file."""

    canvas: tuple[int, int]
    fps: float
    n_frames: int
    targets: tuple[TargetGeometry, ...]

    def displacements(self, target: TargetGeometry) -> tuple[np.ndarray, np.ndarray]:
        """Per-frame (du, dv) of ``target`` relative to its frame-0 position."""
        du = target.law_x.offsets(self.n_frames, self.fps)
        dv = target.law_y.offsets(self.n_frames, self.fps)
        return du - du[0], dv - dv[0]


def _law_from_doc(doc, where: str) -> MotionLaw:
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ConfigError(f"{where}: motion law must be an object with a 'kind'")
    kind = doc["kind"]
    if kind not in LAW_FIELDS:
        raise ConfigError(f"{where}: unknown law kind {kind!r}")
    extra = set(doc) - set(LAW_FIELDS[kind]) - {"kind"}
    if extra:
        raise ConfigError(f"{where}: unexpected law fields {sorted(extra)}")
    kwargs = {}
    for name in LAW_FIELDS[kind]:
        if name not in doc:
            continue
        value = doc[name]
        if name == "values":
            if not isinstance(value, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
            ):
                raise ConfigError(f"{where}: 'values' must be an array of numbers")
            kwargs[name] = tuple(float(v) for v in value)
        else:
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
                raise ConfigError(f"{where}: field '{name}' must be a finite number")
            kwargs[name] = float(value)
    return MotionLaw(kind=kind, **kwargs)


def parse_scene(text: str) -> SceneGeometry:
    """Parse a scene file into geometry, validating every motion law."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scene spec is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("scene spec top level must be an object")
    for name in ("canvas", "fps", "n_frames", "targets"):
        if name not in doc:
            raise ConfigError(f"scene spec is missing field '{name}'")
    canvas = doc["canvas"]
    if not (isinstance(canvas, list) and len(canvas) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in canvas)):
        raise ConfigError("field 'canvas' must be [width, height]")
    fps = doc["fps"]
    if not isinstance(fps, (int, float)) or isinstance(fps, bool) or not fps > 0:
        raise ConfigError("field 'fps' must be a positive number")
    n_frames = doc["n_frames"]
    if not isinstance(n_frames, int) or isinstance(n_frames, bool) or n_frames < 1:
        raise ConfigError("field 'n_frames' must be a positive integer")
    raw_targets = doc["targets"]
    if not isinstance(raw_targets, list) or not raw_targets:
        raise ConfigError("field 'targets' must be a non-empty array")

    targets = []
    for i, tgt in enumerate(raw_targets):
        where = f"targets[{i}]"
        if not isinstance(tgt, dict):
            raise ConfigError(f"{where}: must be an object")
        rect = tgt.get("rect")
        if not (isinstance(rect, list) and len(rect) == 4
                and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in rect)):
            raise ConfigError(f"{where}: 'rect' must be [x, y, w, h]")
        x, y, w, h = (int(v) for v in rect)
        if w <= 0 or h <= 0:
            raise ConfigError(f"{where}: rect must have positive width and height")
        default = f"target{i}" if len(raw_targets) > 1 else "target"
        label = str(tgt.get("label", default))
        targets.append(TargetGeometry(
            label=label,
            rect=(x, y, w, h),
            law_x=_law_from_doc(tgt.get("profile_x", {"kind": "static"}), f"{where}.profile_x"),
            law_y=_law_from_doc(tgt.get("profile_y", {"kind": "static"}), f"{where}.profile_y"),
        ))
    labels = [t.label for t in targets]
    if len(set(labels)) != len(labels):
        raise ConfigError("target labels must be unique")

    geometry = SceneGeometry(
        canvas=(int(canvas[0]), int(canvas[1])),
        fps=float(fps),
        n_frames=int(n_frames),
        targets=tuple(targets),
    )
    for target in geometry.targets:
        geometry.displacements(target)
    return geometry
