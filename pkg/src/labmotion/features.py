"""Scale-invariant keypoints for sub-pixel target displacement.

The pipeline follows the classic difference-of-Gaussians recipe: a blurred
pyramid, 3x3x3 scale-space extrema with quadratic sub-level refinement,
orientation histograms, and 4x4x8 gradient descriptors.  Matching combines
Lowe's ratio test with a mutual-best cross check, and a motion-consensus
filter keeps only displacements near the component-wise median before they
are averaged into one sub-pixel displacement per frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import ndimage

from .errors import MatchingError, NoConsensusError
from .imagedata import Frame
from .textio import fmt6


@dataclass(frozen=True)
class ScaleSpaceConfig:
    n_octaves: int = 3
    scales_per_octave: int = 3
    base_sigma: float = 1.6
    contrast_threshold: float = 0.03
    edge_ratio_threshold: float = 10.0

    def __post_init__(self) -> None:
        if self.n_octaves < 1:
            raise ValueError("n_octaves must be >= 1")
        if self.scales_per_octave < 3:
            raise ValueError("scales_per_octave must be >= 3")
        if not (self.base_sigma > 0):
            raise ValueError("base_sigma must be positive")
        if not (self.contrast_threshold > 0):
            raise ValueError("contrast_threshold must be positive")
        if not (self.edge_ratio_threshold >= 1):
            raise ValueError("edge_ratio_threshold must be >= 1")


@dataclass(frozen=True)
class Keypoint:
    """Refined scale-space extremum in full-image coordinates."""

    x: float
    y: float
    octave: int
    scale: float
    orientation: float


@dataclass(frozen=True)
class Match:
    index_a: int
    index_b: int
    distance: float
    displacement: tuple[float, float]


@dataclass(frozen=True)
class OctaveData:
    index: int
    gaussians: tuple[np.ndarray, ...]
    dogs: tuple[np.ndarray, ...]
    sigmas: tuple[float, ...]


@dataclass(frozen=True)
class DogPyramid:
    config: ScaleSpaceConfig
    octaves: tuple[OctaveData, ...]


_MIN_OCTAVE_DIM = 16
_MAX_REFINE_STEPS = 5
_ORI_BINS = 36
_ORI_PEAK_RATIO = 0.8
_DESCR_WIDTH = 4
_DESCR_ORI_BINS = 8
_DESCR_SCALE_FACTOR = 3.0
_DESCR_CLAMP = 0.2


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalised 1-D Gaussian truncated at radius ceil(3 sigma)."""
    radius = math.ceil(3.0 * sigma)
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(offsets**2) / (2.0 * sigma * sigma))
    return kernel / kernel.sum()


def _blur_array(pixels: np.ndarray, sigma: float) -> np.ndarray:
    if sigma <= 0.0:
        return pixels
    kernel = gaussian_kernel(sigma)
    out = ndimage.correlate1d(pixels, kernel, axis=0, mode="nearest")
    return ndimage.correlate1d(out, kernel, axis=1, mode="nearest")


def gaussian_blur(frame: Frame, sigma: float) -> Frame:
    """Separable Gaussian blur with edge replication; ``sigma = 0`` is identity."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0.0:
        return frame
    return Frame(np.clip(_blur_array(frame.pixels, sigma), 0.0, 1.0))


def max_octaves(width: int, height: int) -> int:
    """Largest octave count keeping the coarsest octave at least 16 px."""
    dim = min(width, height)
    if dim < _MIN_OCTAVE_DIM:
        return 0
    return int(math.floor(math.log2(dim / _MIN_OCTAVE_DIM))) + 1


def build_dog_pyramid(frame: Frame, config: ScaleSpaceConfig = ScaleSpaceConfig()) -> DogPyramid:
    """Gaussian and difference-of-Gaussians pyramid.

    Every level of an octave is blurred directly from that octave's base
    image (never chained level-to-level), so a level can be reproduced
    independently from the base.  Octave ``o + 1`` starts from the level
    whose blur doubles ``base_sigma``, decimated by two.
    """
    achievable = max_octaves(frame.width, frame.height)
    if achievable < config.n_octaves:
        raise ValueError(
            f"image {frame.width}x{frame.height} is too small for "
            f"{config.n_octaves} octaves; at most {achievable} achievable "
            f"(min dimension >= {_MIN_OCTAVE_DIM} at the coarsest octave)"
        )
    s = config.scales_per_octave
    sigmas = tuple(config.base_sigma * 2.0 ** (i / s) for i in range(s + 3))
    octaves = []
    base = frame.pixels
    base_sigma_attr = 0.0
    for o in range(config.n_octaves):
        gaussians = []
        for sigma in sigmas:
            inc = math.sqrt(max(sigma**2 - base_sigma_attr**2, 0.0))
            gaussians.append(_blur_array(base, inc) if inc > 0 else base.copy())
        dogs = tuple(gaussians[i + 1] - gaussians[i] for i in range(s + 2))
        octaves.append(OctaveData(o, tuple(gaussians), dogs, sigmas))
        base = gaussians[s][::2, ::2]
        base_sigma_attr = config.base_sigma
    return DogPyramid(config, tuple(octaves))


def _extrema_candidates(below: np.ndarray, centre: np.ndarray, above: np.ndarray,
                        floor: float) -> np.ndarray:
    """(row, col) positions strictly above or below all 26 neighbours."""
    c = centre[1:-1, 1:-1]
    strong = np.abs(c) >= floor
    is_max = strong.copy()
    is_min = strong.copy()
    for plane in (below, centre, above):
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if plane is centre and dy == 0 and dx == 0:
                    continue
                neighbour = plane[1 + dy : plane.shape[0] - 1 + dy,
                                  1 + dx : plane.shape[1] - 1 + dx]
                is_max &= c > neighbour
                is_min &= c < neighbour
        if not (is_max.any() or is_min.any()):
            break
    rows, cols = np.nonzero(is_max | is_min)
    return np.stack([rows + 1, cols + 1], axis=1) if len(rows) else np.empty((0, 2), dtype=int)


def _refine_extremum(dogs: Sequence[np.ndarray], level: int, y: int, x: int,
                     config: ScaleSpaceConfig) -> tuple[int, int, int, np.ndarray, float] | None:
    """Quadratic sub-sample refinement; None when the candidate is rejected."""
    s = config.scales_per_octave
    h, w = dogs[0].shape
    for _ in range(_MAX_REFINE_STEPS):
        d0, d1, d2 = dogs[level - 1], dogs[level], dogs[level + 1]
        grad = np.array([
            (d1[y, x + 1] - d1[y, x - 1]) / 2.0,
            (d1[y + 1, x] - d1[y - 1, x]) / 2.0,
            (d2[y, x] - d0[y, x]) / 2.0,
        ])
        dxx = d1[y, x + 1] + d1[y, x - 1] - 2.0 * d1[y, x]
        dyy = d1[y + 1, x] + d1[y - 1, x] - 2.0 * d1[y, x]
        dss = d2[y, x] + d0[y, x] - 2.0 * d1[y, x]
        dxy = (d1[y + 1, x + 1] - d1[y + 1, x - 1] - d1[y - 1, x + 1] + d1[y - 1, x - 1]) / 4.0
        dxs = (d2[y, x + 1] - d2[y, x - 1] - d0[y, x + 1] + d0[y, x - 1]) / 4.0
        dys = (d2[y + 1, x] - d2[y - 1, x] - d0[y + 1, x] + d0[y - 1, x]) / 4.0
        hessian = np.array([[dxx, dxy, dxs], [dxy, dyy, dys], [dxs, dys, dss]])
        try:
            offset = np.linalg.solve(hessian, -grad)
        except np.linalg.LinAlgError:
            return None
        if np.abs(offset).max() <= 0.5:
            value = d1[y, x] + 0.5 * float(grad @ offset)
            if abs(value) < config.contrast_threshold:
                return None
            trace = dxx + dyy
            det = dxx * dyy - dxy * dxy
            r = config.edge_ratio_threshold
            if det <= 0.0 or trace * trace * r >= det * (r + 1.0) ** 2:
                return None
            return level, y, x, offset, value
        x += int(round(float(offset[0])))
        y += int(round(float(offset[1])))
        level += int(round(float(offset[2])))
        if not (1 <= level <= s and 1 <= x < w - 1 and 1 <= y < h - 1):
            return None
    return None


def _gradients(image: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Magnitude and angle (in [0, 2 pi)) of central-difference gradients."""
    gy, gx = np.gradient(image)
    magnitude = np.hypot(gx, gy)
    angle = np.mod(np.arctan2(gy, gx), 2.0 * np.pi)
    return magnitude, angle


def _orientations(magnitude: np.ndarray, angle: np.ndarray, x: float, y: float,
                  scale_oct: float) -> list[float]:
    h, w = magnitude.shape
    sigma_w = 1.5 * scale_oct
    radius = max(1, int(round(3.0 * sigma_w)))
    cx, cy = int(round(x)), int(round(y))
    x_lo, x_hi = max(cx - radius, 1), min(cx + radius, w - 2)
    y_lo, y_hi = max(cy - radius, 1), min(cy + radius, h - 2)
    if x_lo > x_hi or y_lo > y_hi:
        return []
    xs = np.arange(x_lo, x_hi + 1)
    ys = np.arange(y_lo, y_hi + 1)
    dx = xs[None, :] - x
    dy = ys[:, None] - y
    weight = np.exp(-(dx**2 + dy**2) / (2.0 * sigma_w**2))
    mags = magnitude[y_lo : y_hi + 1, x_lo : x_hi + 1] * weight
    angles = angle[y_lo : y_hi + 1, x_lo : x_hi + 1]
    bins = np.floor(angles * (_ORI_BINS / (2.0 * np.pi))).astype(int) % _ORI_BINS
    hist = np.bincount(bins.ravel(), weights=mags.ravel(), minlength=_ORI_BINS)
    # single circular pass of the binomial smoother [1, 4, 6, 4, 1] / 16
    smoothed = (
        6.0 * hist
        + 4.0 * (np.roll(hist, 1) + np.roll(hist, -1))
        + (np.roll(hist, 2) + np.roll(hist, -2))
    ) / 16.0
    peak = smoothed.max()
    if peak <= 0.0:
        return []
    out = []
    width = 2.0 * np.pi / _ORI_BINS
    for i in range(_ORI_BINS):
        left = smoothed[(i - 1) % _ORI_BINS]
        right = smoothed[(i + 1) % _ORI_BINS]
        if smoothed[i] >= left and smoothed[i] >= right and smoothed[i] >= _ORI_PEAK_RATIO * peak:
            denom = left - 2.0 * smoothed[i] + right
            delta = 0.5 * (left - right) / denom if denom < 0 else 0.0
            out.append(float(np.mod((i + 0.5 + delta) * width, 2.0 * np.pi)))
    return out


def detect_keypoints(pyramid: DogPyramid,
                     config: ScaleSpaceConfig | None = None) -> list[Keypoint]:
    """Contrast-checked, edge-filtered scale-space extrema with orientations.

    Candidates below half the contrast threshold are pruned before
    refinement; survivors gain one keypoint per dominant orientation and
    are returned sorted by ``(y, x, scale, orientation)``.
    """
    config = config or pyramid.config
    s = config.scales_per_octave
    keypoints: list[Keypoint] = []
    for octave in pyramid.octaves:
        step = float(2**octave.index)
        gradient_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        for level in range(1, s + 1):
            candidates = _extrema_candidates(
                octave.dogs[level - 1], octave.dogs[level], octave.dogs[level + 1],
                0.5 * config.contrast_threshold,
            )
            for y, x in candidates:
                refined = _refine_extremum(octave.dogs, level, int(y), int(x), config)
                if refined is None:
                    continue
                lvl, ry, rx, offset, _ = refined
                x_oct = rx + float(offset[0])
                y_oct = ry + float(offset[1])
                scale_oct = config.base_sigma * 2.0 ** ((lvl + float(offset[2])) / s)
                if lvl not in gradient_cache:
                    gradient_cache[lvl] = _gradients(octave.gaussians[lvl])
                magnitude, angle = gradient_cache[lvl]
                for theta in _orientations(magnitude, angle, x_oct, y_oct, scale_oct):
                    keypoints.append(Keypoint(
                        x=x_oct * step, y=y_oct * step,
                        octave=octave.index, scale=scale_oct * step,
                        orientation=theta,
                    ))
    keypoints.sort(key=lambda k: (k.y, k.x, k.scale, k.orientation))
    return keypoints


def _descriptor(magnitude: np.ndarray, angle: np.ndarray, x: float, y: float,
                scale_oct: float, theta: float) -> np.ndarray | None:
    h, w = magnitude.shape
    d = _DESCR_WIDTH
    n_ori = _DESCR_ORI_BINS
    hist_width = _DESCR_SCALE_FACTOR * scale_oct
    radius = int(round(hist_width * math.sqrt(2.0) * (d + 1) * 0.5))
    cx, cy = int(round(x)), int(round(y))
    # the full sampling square must stay inside the level image
    if cx - radius < 1 or cx + radius > w - 2 or cy - radius < 1 or cy + radius > h - 2:
        return None
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    col_off, row_off = np.meshgrid(offsets, offsets)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    c_rot = (col_off * cos_t + row_off * sin_t) / hist_width
    r_rot = (-col_off * sin_t + row_off * cos_t) / hist_width
    rbin = r_rot + d / 2.0 - 0.5
    cbin = c_rot + d / 2.0 - 0.5
    valid = (rbin > -1.0) & (rbin < d) & (cbin > -1.0) & (cbin < d)
    if not valid.any():
        return None
    rows = (cy + row_off[valid]).astype(int)
    cols = (cx + col_off[valid]).astype(int)
    mags = magnitude[rows, cols] * np.exp(
        -(r_rot[valid] ** 2 + c_rot[valid] ** 2) / (0.5 * d * d)
    )
    obin = np.mod(angle[rows, cols] - theta, 2.0 * np.pi) * (n_ori / (2.0 * np.pi))
    rbin = rbin[valid]
    cbin = cbin[valid]
    r0 = np.floor(rbin).astype(int)
    c0 = np.floor(cbin).astype(int)
    o0 = np.floor(obin).astype(int)
    rf = rbin - r0
    cf = cbin - c0
    of = obin - o0
    hist = np.zeros((d + 2, d + 2, n_ori + 1))
    for dr in (0, 1):
        wr = mags * (rf if dr else 1.0 - rf)
        for dc in (0, 1):
            wc = wr * (cf if dc else 1.0 - cf)
            for do in (0, 1):
                wo = wc * (of if do else 1.0 - of)
                np.add.at(hist, (r0 + 1 + dr, c0 + 1 + dc, o0 + do), wo)
    hist[:, :, 0] += hist[:, :, n_ori]
    vector = hist[1 : d + 1, 1 : d + 1, :n_ori].ravel()
    norm = np.linalg.norm(vector)
    if norm <= 0.0:
        return None
    vector = np.minimum(vector / norm, _DESCR_CLAMP)
    norm = np.linalg.norm(vector)
    if norm <= 0.0:
        return None
    return vector / norm


def compute_descriptors(
    pyramid: DogPyramid, keypoints: Sequence[Keypoint]
) -> tuple[list[Keypoint], np.ndarray]:
    """128-element unit descriptors; keypoints whose window leaves the image are dropped.

    Returns the kept keypoints paired row-for-row with their descriptors.
    """
    config = pyramid.config
    s = config.scales_per_octave
    gradient_cache: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}
    kept: list[Keypoint] = []
    rows: list[np.ndarray] = []
    for kp in keypoints:
        step = float(2**kp.octave)
        scale_oct = kp.scale / step
        level = int(round(s * math.log2(max(scale_oct, 1e-12) / config.base_sigma)))
        level = min(max(level, 1), s)
        key = (kp.octave, level)
        if key not in gradient_cache:
            gradient_cache[key] = _gradients(pyramid.octaves[kp.octave].gaussians[level])
        magnitude, angle = gradient_cache[key]
        vector = _descriptor(magnitude, angle, kp.x / step, kp.y / step,
                             scale_oct, kp.orientation)
        if vector is not None:
            kept.append(kp)
            rows.append(vector)
    descriptors = np.vstack(rows) if rows else np.empty((0, _DESCR_WIDTH**2 * _DESCR_ORI_BINS))
    return kept, descriptors


def match_descriptors(
    desc_a: np.ndarray,
    desc_b: np.ndarray,
    ratio: float = 0.75,
    positions_a: Sequence[tuple[float, float]] | np.ndarray | None = None,
    positions_b: Sequence[tuple[float, float]] | np.ndarray | None = None,
) -> list[Match]:
    """Nearest-neighbour matches passing the ratio test and a mutual-best check.

    ``ratio`` compares best to second-best distance, so the reference set
    needs at least two descriptors.  When positions are supplied each match
    carries the displacement ``b - a`` in pixels.
    """
    if not (0.0 < ratio < 1.0):
        raise ValueError("ratio must lie in (0, 1)")
    a = np.asarray(desc_a, dtype=np.float64)
    b = np.asarray(desc_b, dtype=np.float64)
    if len(b) < 2:
        raise MatchingError(
            "ratio test needs at least 2 candidate descriptors; "
            "match against absolute distance instead"
        )
    if len(a) == 0:
        return []
    sq = (
        (a * a).sum(axis=1)[:, None]
        + (b * b).sum(axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    dist = np.sqrt(np.maximum(sq, 0.0))
    nn_b = np.argmin(dist, axis=1)
    nn_a = np.argmin(dist, axis=0)
    part = np.partition(dist, 1, axis=1)
    best, second = part[:, 0], part[:, 1]
    pa = np.asarray(positions_a, dtype=np.float64) if positions_a is not None else None
    pb = np.asarray(positions_b, dtype=np.float64) if positions_b is not None else None
    matches = []
    for i in range(len(a)):
        j = int(nn_b[i])
        if best[i] >= ratio * second[i]:
            continue
        if int(nn_a[j]) != i:
            continue
        if pa is not None and pb is not None:
            displacement = (float(pb[j, 0] - pa[i, 0]), float(pb[j, 1] - pa[i, 1]))
        else:
            displacement = (0.0, 0.0)
        matches.append(Match(i, j, float(dist[i, j]), displacement))
    return matches


def filter_matches_by_motion(
    matches: Sequence[Match], radius: float = 2.0, top_k: int = 20
) -> list[Match]:
    """Keep matches whose displacement agrees with the component-wise median.

    Survivors within ``radius`` px of the median in both components are
    ranked by ascending descriptor distance and truncated to ``top_k``.
    """
    if radius <= 0 or top_k < 1:
        raise ValueError("radius must be positive and top_k >= 1")
    if not matches:
        raise NoConsensusError("no matches to filter")
    du = np.array([m.displacement[0] for m in matches])
    dv = np.array([m.displacement[1] for m in matches])
    med_u = float(np.median(du))
    med_v = float(np.median(dv))
    survivors = [
        m for m, u, v in zip(matches, du, dv)
        if abs(u - med_u) <= radius and abs(v - med_v) <= radius
    ]
    if not survivors:
        raise NoConsensusError(
            f"no match within {radius} px of the median displacement "
            f"({fmt6(med_u)}, {fmt6(med_v)})"
        )
    survivors.sort(key=lambda m: (m.distance, m.index_a, m.index_b))
    return survivors[:top_k]


def average_displacement(matches: Sequence[Match]) -> tuple[float, float]:
    """Mean displacement over matches; the sub-pixel measurement primitive."""
    if not matches:
        raise ValueError("cannot average an empty match list")
    du = float(np.mean([m.displacement[0] for m in matches]))
    dv = float(np.mean([m.displacement[1] for m in matches]))
    return du, dv


def keypoints_to_csv(keypoints: Sequence[Keypoint]) -> str:
    lines = ["x,y,scale,orientation"]
    for kp in keypoints:
        lines.append(f"{fmt6(kp.x)},{fmt6(kp.y)},{fmt6(kp.scale)},{fmt6(kp.orientation)}")
    return "\n".join(lines) + "\n"


def matches_to_csv(matches: Sequence[Match]) -> str:
    lines = ["index_a,index_b,distance,du,dv"]
    for m in matches:
        lines.append(
            f"{m.index_a},{m.index_b},{fmt6(m.distance)},"
            f"{fmt6(m.displacement[0])},{fmt6(m.displacement[1])}"
        )
    return "\n".join(lines) + "\n"
