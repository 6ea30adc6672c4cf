"""Target measurement modes over a frame sequence.

``bbox_only`` trusts detector boxes; ``bbox_plus_keypoints`` refines each
frame against the frame-0 crop with matched keypoints (anchored, so errors
do not accumulate and frames are independent given the track);
``lk_baseline`` chains frame-to-frame optical flow.  Keypoint frames that
cannot produce a consensus fall back to bbox translation and are flagged.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import features
from .detections import AssociationPolicy, BoxTrack, Detection, DetectionSet, associate, bbox_translation
from .errors import LabmotionError, TrackingError
from .flow import LKConfig, track_sequence_lk
from .imagedata import Frame, FrameSequence, Rect, crop
from .series import MeasurementSeries

MODES = ("bbox_only", "bbox_plus_keypoints", "lk_baseline")


@dataclass(frozen=True)
class TrackerConfig:
    label: str | None = None
    score_threshold: float = 0.5
    max_gap: int = 15
    crop_margin: float = 0.2
    min_matches: int = 4
    ratio: float = 0.75
    motion_radius: float = 2.0
    top_k: int = 20
    scale_space: features.ScaleSpaceConfig = field(default_factory=features.ScaleSpaceConfig)
    lk: LKConfig = field(default_factory=LKConfig)
    seed_rect: Rect | None = None
    max_lk_points: int = 50
    threads: int = 1

    def __post_init__(self) -> None:
        if self.crop_margin < 0:
            raise ValueError("crop_margin must be >= 0")
        if self.min_matches < 1 or self.top_k < 1 or self.max_lk_points < 1:
            raise ValueError("min_matches, top_k and max_lk_points must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    @property
    def policy(self) -> AssociationPolicy:
        return AssociationPolicy(self.label, self.score_threshold, self.max_gap)


@dataclass(frozen=True)
class TargetResult:
    label: str
    series: MeasurementSeries | None
    error: str | None = None


def _inflated_rect(bbox: tuple[float, float, float, float], margin: float) -> Rect:
    x, y, w, h = bbox
    grow_x = w * margin / 2.0
    grow_y = h * margin / 2.0
    x0 = math.floor(x - grow_x)
    y0 = math.floor(y - grow_y)
    x1 = math.ceil(x + w + grow_x)
    y1 = math.ceil(y + h + grow_y)
    return Rect(x0, y0, x1 - x0, y1 - y0)


def _crop_keypoints(frame: Frame, rect: Rect, config: TrackerConfig):
    """Detected keypoints of a crop plus its pyramid and applied origin."""
    cropped, applied = crop(frame, rect)
    octaves = min(config.scale_space.n_octaves,
                  features.max_octaves(applied.w, applied.h))
    if octaves < 1:
        raise TrackingError(
            f"crop {applied.w}x{applied.h} is too small for keypoint detection"
        )
    scale_cfg = replace(config.scale_space, n_octaves=octaves)
    pyramid = features.build_dog_pyramid(cropped, scale_cfg)
    return features.detect_keypoints(pyramid), pyramid, applied


def _crop_features(frame: Frame, rect: Rect, config: TrackerConfig):
    """Described keypoints of a crop, with the applied crop origin."""
    keypoints, pyramid, applied = _crop_keypoints(frame, rect, config)
    kept, descriptors = features.compute_descriptors(pyramid, keypoints)
    return kept, descriptors, applied


def _keypoint_series(frames: FrameSequence, track: BoxTrack,
                     config: TrackerConfig) -> MeasurementSeries:
    anchor_kps, anchor_desc, anchor_rect = _crop_features(
        frames[0], _inflated_rect(track.entries[0].bbox, config.crop_margin), config
    )
    anchor_xy = np.array([(k.x, k.y) for k in anchor_kps]) if anchor_kps else np.empty((0, 2))
    cx0, cy0 = track.entries[0].center

    def measure_frame(j: int) -> tuple[float, float, int, bool]:
        if j == 0:
            return 0.0, 0.0, len(anchor_kps), False
        entry = track.entries[j]
        fallback = (entry.center[0] - cx0, entry.center[1] - cy0, 0, True)
        if len(anchor_kps) < 2:
            return fallback
        try:
            kps, desc, applied = _crop_features(
                frames[j], _inflated_rect(entry.bbox, config.crop_margin), config
            )
            if not kps:
                return fallback
            xy = np.array([(k.x, k.y) for k in kps])
            matches = features.match_descriptors(
                anchor_desc, desc, config.ratio, anchor_xy, xy
            )
            kept = features.filter_matches_by_motion(
                matches, config.motion_radius, config.top_k
            )
            if len(kept) < config.min_matches:
                return fallback
            du, dv = features.average_displacement(kept)
            du += applied.x - anchor_rect.x
            dv += applied.y - anchor_rect.y
            return du, dv, len(kept), False
        except LabmotionError:
            return fallback

    indices = range(len(frames))
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            rows = list(pool.map(measure_frame, indices))
    else:
        rows = [measure_frame(j) for j in indices]
    du, dv, quality, fallback = zip(*rows)
    return MeasurementSeries(
        fps=frames.fps,
        du=np.asarray(du), dv=np.asarray(dv),
        quality=np.asarray(quality, dtype=np.intp),
        fallback=np.asarray(fallback, dtype=bool),
    )


def _lk_seed_points(frames: FrameSequence, region: Rect,
                    config: TrackerConfig) -> list[tuple[float, float]]:
    """Seed flow tracking on keypoints detected inside the frame-0 region.

    Seeds come straight from scale-space detection; the descriptor stage
    (and its interior-window requirement) is irrelevant to flow tracking.
    """
    try:
        keypoints, _, applied = _crop_keypoints(frames[0], region, config)
    except TrackingError:
        raise TrackingError(
            f"seed region {tuple(region)} is too small for keypoint seeding"
        ) from None
    r = config.lk.window_radius
    seen: set[tuple[float, float]] = set()
    points: list[tuple[float, float]] = []
    for kp in keypoints:
        x = kp.x + applied.x
        y = kp.y + applied.y
        key = (round(x * 2) / 2, round(y * 2) / 2)  # half-pixel dedupe grid
        if key in seen:
            continue
        if (x - r < 0 or y - r < 0
                or x + r > frames.width - 1 or y + r > frames.height - 1):
            continue
        seen.add(key)
        points.append((x, y))
        if len(points) == config.max_lk_points:
            break
    if not points:
        raise TrackingError(
            f"no usable seed keypoints inside region {tuple(region)} of frame 0"
        )
    return points


def measure_target(
    frames: FrameSequence,
    detections: DetectionSet | Sequence[Detection] | None,
    mode: str,
    config: TrackerConfig = TrackerConfig(),
) -> MeasurementSeries:
    """Measure one target's displacement series in the requested mode."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    records: Sequence[Detection] | None
    if isinstance(detections, DetectionSet):
        if abs(detections.fps - frames.fps) > 1e-6:
            raise TrackingError(
                f"detection fps {detections.fps} disagrees with frame fps {frames.fps}"
            )
        records = detections.detections
    else:
        records = detections

    if mode in ("bbox_only", "bbox_plus_keypoints"):
        if records is None:
            raise TrackingError(f"mode '{mode}' requires detections")
        track = associate(records, frames.fps, len(frames), config.policy)
        if mode == "bbox_only":
            return bbox_translation(track)
        return _keypoint_series(frames, track, config)

    # lk_baseline: seed on the frame-0 bbox when detections exist, else the
    # configured seed rectangle
    if records is not None:
        track = associate(records, frames.fps, len(frames), config.policy)
        region = _inflated_rect(track.entries[0].bbox, 0.0)
    elif config.seed_rect is not None:
        region = config.seed_rect
    else:
        raise TrackingError("lk_baseline requires detections or config.seed_rect")
    points = _lk_seed_points(frames, region, config)
    return track_sequence_lk(frames, points, config.lk)


def measure_multi(
    frames: FrameSequence,
    detections: DetectionSet | Sequence[Detection],
    labels: Sequence[str],
    mode: str,
    config: TrackerConfig = TrackerConfig(),
) -> list[TargetResult]:
    """Measure several labelled targets; failures are reported per label."""
    if not labels:
        raise ValueError("labels must be non-empty")
    results = []
    for label in labels:
        per_label = replace(config, label=label)
        try:
            series = measure_target(frames, detections, mode, per_label)
            results.append(TargetResult(label, series))
        except LabmotionError as exc:
            results.append(TargetResult(label, None, str(exc)))
    return results
