"""Pyramidal Lucas-Kanade point tracking, the frame-to-frame baseline.

Displacement per frame pair is the mean motion of the surviving points;
a sequence measurement is the running sum of those relative steps, so
per-step errors accumulate.  This is the drift-prone reference against
which the anchored keypoint tracker is compared.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import TrackingError
from .features import _blur_array
from .imagedata import Frame, FrameSequence
from .series import MeasurementSeries

STATUS_VALID = "valid"
STATUS_LOST_BOUNDS = "lost_bounds"
STATUS_LOST_CONDITIONING = "lost_conditioning"
STATUS_LOST_CONVERGENCE = "lost_convergence"


@dataclass(frozen=True)
class LKConfig:
    window_radius: int = 10
    pyramid_levels: int = 3
    max_iterations: int = 30
    epsilon: float = 0.01
    min_eigenvalue: float = 1e-4

    def __post_init__(self) -> None:
        if min(self.window_radius, self.pyramid_levels, self.max_iterations) < 1:
            raise ValueError("window_radius, pyramid_levels and max_iterations must be >= 1")
        if not (self.epsilon > 0 and self.min_eigenvalue > 0):
            raise ValueError("epsilon and min_eigenvalue must be positive")


class TrackedPoint(NamedTuple):
    position: tuple[float, float]
    status: str


class _PyramidLevel(NamedTuple):
    image: np.ndarray
    grad_x: np.ndarray
    grad_y: np.ndarray


def _build_pyramid(pixels: np.ndarray, levels: int) -> list[_PyramidLevel]:
    """Decimated pyramid; each level is pre-blurred (sigma = 1) for gradients."""
    out = []
    current = pixels
    for lvl in range(levels):
        blurred = _blur_array(current, 1.0)
        gy, gx = np.gradient(blurred)
        out.append(_PyramidLevel(blurred, gx, gy))
        if lvl < levels - 1:
            if min(current.shape) < 4:
                break
            current = blurred[::2, ::2]
    return out


def _sample(image: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Bilinear gather for in-bounds coordinate grids (callers check bounds)."""
    h, w = image.shape
    x0 = np.minimum(np.floor(xs).astype(np.intp), w - 2)
    y0 = np.minimum(np.floor(ys).astype(np.intp), h - 2)
    fx = xs - x0
    fy = ys - y0
    top = image[y0, x0] * (1.0 - fx) + image[y0, x0 + 1] * fx
    bot = image[y0 + 1, x0] * (1.0 - fx) + image[y0 + 1, x0 + 1] * fx
    return top * (1.0 - fy) + bot * fy


def _in_bounds(shape: tuple[int, int], x: float, y: float, radius: int) -> bool:
    h, w = shape
    return (x - radius >= 0.0 and y - radius >= 0.0
            and x + radius <= w - 1.0 and y + radius <= h - 1.0)


def _track_one(pyr_a: list[_PyramidLevel], pyr_b: list[_PyramidLevel],
               x: float, y: float, cfg: LKConfig) -> TrackedPoint:
    r = cfg.window_radius
    offs = np.arange(-r, r + 1, dtype=np.float64)
    ox, oy = np.meshgrid(offs, offs)
    window_area = float((2 * r + 1) ** 2)
    d = np.zeros(2)
    status = STATUS_VALID
    for lvl in range(len(pyr_a) - 1, -1, -1):
        level_a = pyr_a[lvl]
        level_b = pyr_b[lvl]
        px = x / 2.0**lvl
        py = y / 2.0**lvl
        if not _in_bounds(level_a.image.shape, px, py, r):
            if lvl == 0:
                return TrackedPoint((x + d[0], y + d[1]), STATUS_LOST_BOUNDS)
            d *= 2.0
            continue
        gxs = px + ox
        gys = py + oy
        template = _sample(level_a.image, gxs, gys)
        gx = _sample(level_a.grad_x, gxs, gys)
        gy = _sample(level_a.grad_y, gxs, gys)
        gxx = float((gx * gx).sum())
        gxy = float((gx * gy).sum())
        gyy = float((gy * gy).sum())
        lambda_min = 0.5 * (gxx + gyy - np.hypot(gxx - gyy, 2.0 * gxy))
        if lambda_min < cfg.min_eigenvalue * window_area:
            if lvl == 0:
                return TrackedPoint((x + d[0], y + d[1]), STATUS_LOST_CONDITIONING)
            d *= 2.0
            continue
        det = gxx * gyy - gxy * gxy
        converged = False
        for _ in range(cfg.max_iterations):
            bx = px + d[0] + ox
            by = py + d[1] + oy
            if not _in_bounds(level_b.image.shape, px + d[0], py + d[1], r):
                if lvl == 0:
                    return TrackedPoint((x + d[0], y + d[1]), STATUS_LOST_BOUNDS)
                break
            residual = template - _sample(level_b.image, bx, by)
            b1 = float((residual * gx).sum())
            b2 = float((residual * gy).sum())
            step_x = (gyy * b1 - gxy * b2) / det
            step_y = (gxx * b2 - gxy * b1) / det
            d[0] += step_x
            d[1] += step_y
            if np.hypot(step_x, step_y) < cfg.epsilon:
                converged = True
                break
        if lvl == 0 and not converged:
            status = STATUS_LOST_CONVERGENCE
        if lvl > 0:
            d *= 2.0
    position = (x + float(d[0]), y + float(d[1]))
    if status == STATUS_VALID and not _in_bounds(pyr_b[0].image.shape,
                                                 position[0], position[1], r):
        return TrackedPoint(position, STATUS_LOST_BOUNDS)
    return TrackedPoint(position, status)


def track_points_lk(
    frame_a: Frame,
    frame_b: Frame,
    points: Sequence[tuple[float, float]],
    config: LKConfig = LKConfig(),
) -> list[TrackedPoint]:
    """Track points from ``frame_a`` to ``frame_b``; sizes must match."""
    if frame_a.shape != frame_b.shape:
        raise ValueError(f"frame sizes differ: {frame_a.shape} vs {frame_b.shape}")
    if not points:
        return []
    pyr_a = _build_pyramid(frame_a.pixels, config.pyramid_levels)
    pyr_b = _build_pyramid(frame_b.pixels, config.pyramid_levels)
    return [_track_one(pyr_a, pyr_b, float(x), float(y), config) for x, y in points]


def accumulate_displacement(
    steps: Sequence[tuple[float, float]],
    fps: float,
    quality: Sequence[int] | None = None,
) -> MeasurementSeries:
    """Cumulative series from per-pair relative steps; entry 0 is (0, 0)."""
    du = np.concatenate([[0.0], np.cumsum([s[0] for s in steps])])
    dv = np.concatenate([[0.0], np.cumsum([s[1] for s in steps])])
    q = np.asarray(quality, dtype=np.intp) if quality is not None else np.zeros(len(du), np.intp)
    if len(q) != len(du):
        raise ValueError("quality length must be len(steps) + 1")
    return MeasurementSeries(fps=fps, du=du, dv=dv, quality=q,
                             fallback=np.zeros(len(du), dtype=bool))


def track_sequence_lk(
    frames: FrameSequence,
    seed_points: Sequence[tuple[float, float]],
    config: LKConfig = LKConfig(),
) -> MeasurementSeries:
    """Chain adjacent-frame tracking over a sequence and accumulate the steps.

    Points that lose bounds, conditioning or convergence are dropped for all
    later steps; the per-frame quality column records the surviving count.
    """
    if not seed_points:
        raise TrackingError("lk tracking needs at least one seed point")
    points = [(float(x), float(y)) for x, y in seed_points]
    steps: list[tuple[float, float]] = []
    quality = [len(points)]
    pyramids = [None] * len(frames)
    pyramids[0] = _build_pyramid(frames[0].pixels, config.pyramid_levels)
    for j in range(1, len(frames)):
        pyramids[j] = _build_pyramid(frames[j].pixels, config.pyramid_levels)
        tracked = [
            _track_one(pyramids[j - 1], pyramids[j], x, y, config)
            for x, y in points
        ]
        survivors = [
            (old, t.position) for old, t in zip(points, tracked)
            if t.status == STATUS_VALID
        ]
        if not survivors:
            raise TrackingError(f"all points lost at frame {j}")
        du = float(np.mean([new[0] - old[0] for old, new in survivors]))
        dv = float(np.mean([new[1] - old[1] for old, new in survivors]))
        steps.append((du, dv))
        quality.append(len(survivors))
        points = [new for _, new in survivors]
        pyramids[j - 1] = None
    return accumulate_displacement(steps, frames.fps, quality)
