"""Detector-output ingest: schema validation, track association, bbox motion.

The detection file is JSON with a top-level ``fps`` and a ``detections``
array; every record carries ``frame_index``, ``bbox`` (x, y, w, h in px),
``score``, ``label`` and an optional run-length ``mask``.  The same schema
is emitted by the external detector adapter and by mock generators, so the
parser is strict and failures name the record index and field.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .errors import DetectionFileError, TrackingError
from .series import MeasurementSeries


@dataclass(frozen=True)
class Mask:
    """Run-length encoded binary mask over the bbox extent.

    ``counts`` holds space-separated run lengths of alternating zeros and
    ones (starting with zeros) in column-major order over a grid of
    ``size = (ceil(h), ceil(w))`` cells.
    """

    counts: str
    size: tuple[int, int]

    def decode(self) -> np.ndarray:
        runs = _parse_runs(self.counts)
        h, w = self.size
        values = np.zeros(sum(runs), dtype=bool)
        pos = 0
        for i, run in enumerate(runs):
            if i % 2 == 1:
                values[pos : pos + run] = True
            pos += run
        return values.reshape((w, h)).T


def _parse_runs(counts: str) -> list[int]:
    try:
        runs = [int(tok) for tok in counts.split()]
    except ValueError:
        raise DetectionFileError(f"mask counts must be integers, got {counts!r}") from None
    if not runs or any(r < 0 for r in runs):
        raise DetectionFileError("mask counts must be non-negative integers")
    return runs


def encode_mask(mask: np.ndarray) -> Mask:
    """Run-length encode a 2-D boolean mask (column-major, zeros first)."""
    grid = np.asarray(mask, dtype=bool)
    if grid.ndim != 2:
        raise ValueError("mask must be 2-D")
    flat = grid.T.ravel()
    runs: list[int] = []
    current = False
    count = 0
    for v in flat:
        if v == current:
            count += 1
        else:
            runs.append(count)
            current = bool(v)
            count = 1
    runs.append(count)
    return Mask(" ".join(str(r) for r in runs), (grid.shape[0], grid.shape[1]))


@dataclass(frozen=True)
class Detection:
    frame_index: int
    bbox: tuple[float, float, float, float]
    score: float
    label: str
    mask: Mask | None = None

    @property
    def center(self) -> tuple[float, float]:
        x, y, w, h = self.bbox
        return (x + w / 2.0, y + h / 2.0)


@dataclass(frozen=True)
class DetectionSet:
    fps: float
    detections: tuple[Detection, ...]

    def __post_init__(self) -> None:
        if not (self.fps > 0):
            raise ValueError("fps must be positive")
        object.__setattr__(self, "detections", tuple(self.detections))


Provenance = Literal["detected", "interpolated", "held"]


@dataclass(frozen=True)
class TrackEntry:
    bbox: tuple[float, float, float, float]
    provenance: Provenance

    @property
    def center(self) -> tuple[float, float]:
        x, y, w, h = self.bbox
        return (x + w / 2.0, y + h / 2.0)


@dataclass(frozen=True)
class BoxTrack:
    """One bbox per frame index, gaps filled and flagged by provenance."""

    fps: float
    entries: tuple[TrackEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class AssociationPolicy:
    label: str | None = None
    score_threshold: float = 0.5
    max_gap: int = 15

    def __post_init__(self) -> None:
        if not (0.0 <= self.score_threshold <= 1.0):
            raise ValueError("score_threshold must lie in [0, 1]")
        if self.max_gap < 0:
            raise ValueError("max_gap must be >= 0")


def _validate_record(record, index: int) -> Detection:
    def fail(field_name: str, why: str):
        raise DetectionFileError(f"record {index}: field '{field_name}' {why}")

    if not isinstance(record, dict):
        raise DetectionFileError(f"record {index}: expected an object")
    frame_index = record.get("frame_index")
    if not isinstance(frame_index, int) or isinstance(frame_index, bool) or frame_index < 0:
        fail("frame_index", "must be a non-negative integer")
    bbox = record.get("bbox")
    if (not isinstance(bbox, list) or len(bbox) != 4
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in bbox)):
        fail("bbox", "must be a list of four numbers [x, y, w, h]")
    x, y, w, h = (float(v) for v in bbox)
    if not all(math.isfinite(v) for v in (x, y, w, h)):
        fail("bbox", "must be finite")
    if w <= 0 or h <= 0:
        fail("bbox", "must have positive width and height")
    score = record.get("score")
    if not isinstance(score, (int, float)) or isinstance(score, bool) or not (0.0 <= score <= 1.0):
        fail("score", "must be a number in [0, 1]")
    label = record.get("label")
    if not isinstance(label, str) or not label:
        fail("label", "must be a non-empty string")
    mask = None
    if "mask" in record and record["mask"] is not None:
        raw = record["mask"]
        if not isinstance(raw, dict) or "counts" not in raw or "size" not in raw:
            fail("mask", "must be an object with 'counts' and 'size'")
        size = raw["size"]
        if (not isinstance(size, list) or len(size) != 2
                or not all(isinstance(v, int) and v > 0 for v in size)):
            fail("mask", "size must be two positive integers [h, w]")
        expected = (math.ceil(h), math.ceil(w))
        if (size[0], size[1]) != expected:
            fail("mask", f"size {size} does not match bbox extent {list(expected)}")
        try:
            runs = _parse_runs(raw["counts"])
        except DetectionFileError as exc:
            fail("mask", str(exc))
        if sum(runs) != expected[0] * expected[1]:
            fail("mask", f"counts cover {sum(runs)} cells, expected {expected[0] * expected[1]}")
        mask = Mask(str(raw["counts"]), expected)
    return Detection(frame_index, (x, y, w, h), float(score), label, mask)


def parse_detections(text: str) -> DetectionSet:
    """Parse and validate a detection file, returning all records."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DetectionFileError(f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise DetectionFileError("top level must be an object")
    fps = doc.get("fps")
    if not isinstance(fps, (int, float)) or isinstance(fps, bool) or not fps > 0:
        raise DetectionFileError("field 'fps' must be a positive number")
    records = doc.get("detections")
    if not isinstance(records, list):
        raise DetectionFileError("field 'detections' must be an array")
    return DetectionSet(float(fps), tuple(
        _validate_record(rec, i) for i, rec in enumerate(records)
    ))


def serialize_detections(dset: DetectionSet) -> str:
    """Inverse of :func:`parse_detections`; floats keep full precision."""
    records = []
    for d in dset.detections:
        rec: dict = {
            "frame_index": d.frame_index,
            "bbox": list(d.bbox),
            "score": d.score,
            "label": d.label,
        }
        if d.mask is not None:
            rec["mask"] = {"counts": d.mask.counts, "size": list(d.mask.size)}
        records.append(rec)
    return json.dumps({"fps": dset.fps, "detections": records}, indent=1) + "\n"


def associate(
    detections: Sequence[Detection],
    fps: float,
    n_frames: int | None = None,
    policy: AssociationPolicy = AssociationPolicy(),
) -> BoxTrack:
    """Build a per-frame track for one target instance.

    Frame 0 anchors the track with its highest-scoring candidate; later
    frames pick the instance whose bbox centre is nearest the previously
    chosen centre.  Interior gaps are linearly interpolated, trailing gaps
    hold the last bbox, and any gap longer than ``max_gap`` frames fails.
    Ties break on (distance, -score, x, y, w, h) so within-frame input
    order never affects the result.
    """
    eligible = [
        d for d in detections
        if d.score >= policy.score_threshold
        and (policy.label is None or d.label == policy.label)
    ]
    if n_frames is None:
        n_frames = max((d.frame_index for d in eligible), default=0) + 1
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    by_frame: dict[int, list[Detection]] = {}
    for d in eligible:
        if d.frame_index < n_frames:
            by_frame.setdefault(d.frame_index, []).append(d)

    wanted = f" with label '{policy.label}'" if policy.label else ""
    if 0 not in by_frame:
        raise TrackingError(
            f"no detection{wanted} in frame 0 at score >= {policy.score_threshold}; "
            "cannot anchor the track"
        )

    chosen: list[tuple[float, float, float, float] | None] = [None] * n_frames
    first = min(by_frame[0], key=lambda d: (-d.score, *d.bbox))
    chosen[0] = first.bbox
    prev_center = first.center
    for j in range(1, n_frames):
        candidates = by_frame.get(j)
        if not candidates:
            continue
        def sort_key(d: Detection):
            cx, cy = d.center
            dist_sq = (cx - prev_center[0]) ** 2 + (cy - prev_center[1]) ** 2
            return (dist_sq, -d.score, *d.bbox)
        best = min(candidates, key=sort_key)
        chosen[j] = best.bbox
        prev_center = best.center

    entries: list[TrackEntry | None] = [None] * n_frames
    last_detected = 0
    entries[0] = TrackEntry(chosen[0], "detected")
    for j in range(1, n_frames):
        if chosen[j] is None:
            continue
        gap = j - last_detected - 1
        if gap > policy.max_gap:
            raise TrackingError(
                f"tracking lost: gap of {gap} undetected frames before frame {j} "
                f"exceeds max_gap={policy.max_gap}"
            )
        for k in range(last_detected + 1, j):
            frac = (k - last_detected) / (j - last_detected)
            bbox = tuple(
                a + frac * (b - a) for a, b in zip(chosen[last_detected], chosen[j])
            )
            entries[k] = TrackEntry(bbox, "interpolated")
        entries[j] = TrackEntry(chosen[j], "detected")
        last_detected = j
    trailing = n_frames - 1 - last_detected
    if trailing > policy.max_gap:
        raise TrackingError(
            f"tracking lost: trailing gap of {trailing} undetected frames after "
            f"frame {last_detected} exceeds max_gap={policy.max_gap}"
        )
    for k in range(last_detected + 1, n_frames):
        entries[k] = TrackEntry(chosen[last_detected], "held")
    return BoxTrack(fps, tuple(entries))  # type: ignore[arg-type]


def bbox_translation(track: BoxTrack) -> MeasurementSeries:
    """Centre motion of the track bboxes relative to frame 0.

    Quality is 1 for detected entries and 0 for interpolated or held ones;
    box size changes do not move the centre, so steady growth cancels out.
    """
    cx0, cy0 = track.entries[0].center
    du = np.array([e.center[0] - cx0 for e in track.entries])
    dv = np.array([e.center[1] - cy0 for e in track.entries])
    quality = np.array([1 if e.provenance == "detected" else 0 for e in track.entries],
                       dtype=np.intp)
    return MeasurementSeries(fps=track.fps, du=du, dv=dv, quality=quality,
                             fallback=np.zeros(len(du), dtype=bool))
