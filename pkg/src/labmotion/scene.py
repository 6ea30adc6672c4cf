"""Synthetic scenes with exactly known motion, the accuracy oracle.

A scene is a textured rectangular target moving over a static low-contrast
background with optional additive Gaussian noise.  Sub-pixel positions are
rendered by bilinear resampling of the target texture plus coverage
anti-aliasing of its rim, so integer displacements reproduce the texture
pixel-for-pixel while fractional ones stay smooth.  All randomness is
seeded; identical specs yield bit-identical sequences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import SceneSpecError
from .features import _blur_array
from .imagedata import Frame, FrameSequence, Rect
from .textio import fmt6

PROFILE_KINDS = ("static", "ramp", "harmonic", "sweep", "tabulated")


@dataclass(frozen=True)
class MotionProfile:
    """Per-axis target offset as a function of the frame index.

    kinds: ``static`` (0), ``ramp`` (rate px/frame), ``harmonic``
    (amplitude, frequency_hz, phase), ``sweep`` (linear chirp from
    freq_start_hz to freq_end_hz over the sequence), ``tabulated``
    (explicit per-frame values).
    """

    kind: str = "static"
    rate: float = 0.0
    amplitude: float = 0.0
    frequency_hz: float = 0.0
    phase: float = 0.0
    freq_start_hz: float = 0.0
    freq_end_hz: float = 0.0
    values: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in PROFILE_KINDS:
            raise SceneSpecError(f"unknown profile kind {self.kind!r}; expected one of {PROFILE_KINDS}")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    def offsets(self, n_frames: int, fps: float) -> np.ndarray:
        """Absolute offsets for frames 0..n-1 (not yet re-referenced to frame 0)."""
        j = np.arange(n_frames, dtype=np.float64)
        t = j / fps
        if self.kind == "static":
            return np.zeros(n_frames)
        if self.kind == "ramp":
            return self.rate * j
        if self.kind == "harmonic":
            if not (0.0 < self.frequency_hz < fps / 2.0):
                raise SceneSpecError(
                    f"harmonic frequency {self.frequency_hz} Hz must lie in (0, fps/2 = {fps / 2})"
                )
            return self.amplitude * np.sin(2.0 * np.pi * self.frequency_hz * t + self.phase)
        if self.kind == "sweep":
            for f in (self.freq_start_hz, self.freq_end_hz):
                if not (0.0 < f < fps / 2.0):
                    raise SceneSpecError(
                        f"sweep frequency {f} Hz must lie in (0, fps/2 = {fps / 2})"
                    )
            duration = (n_frames - 1) / fps if n_frames > 1 else 1.0
            slope = (self.freq_end_hz - self.freq_start_hz) / (2.0 * duration)
            phase = 2.0 * np.pi * (self.freq_start_hz * t + slope * t * t)
            return self.amplitude * np.sin(phase + self.phase)
        # tabulated
        if len(self.values) != n_frames:
            raise SceneSpecError(
                f"tabulated profile has {len(self.values)} values for {n_frames} frames"
            )
        return np.asarray(self.values, dtype=np.float64)


@dataclass(frozen=True)
class SceneSpec:
    """One moving target on a shared canvas."""

    canvas: tuple[int, int]
    target_rect: Rect
    texture_seed: int
    fps: float
    n_frames: int
    noise_sigma: float = 0.0
    profile_x: MotionProfile = field(default_factory=MotionProfile)
    profile_y: MotionProfile = field(default_factory=MotionProfile)
    label: str = "target"
    noise_seed: int = 0
    background_seed: int = 1

    def __post_init__(self) -> None:
        if not (self.fps > 0):
            raise SceneSpecError("fps must be positive")
        if self.n_frames < 1:
            raise SceneSpecError("n_frames must be >= 1")
        if self.noise_sigma < 0:
            raise SceneSpecError("noise_sigma must be >= 0")
        w, h = self.canvas
        if w < 8 or h < 8:
            raise SceneSpecError("canvas must be at least 8x8 px")
        rect = Rect(*(int(v) for v in self.target_rect))
        if rect.w < 4 or rect.h < 4:
            raise SceneSpecError("target_rect must be at least 4x4 px")
        object.__setattr__(self, "target_rect", rect)
        object.__setattr__(self, "canvas", (int(w), int(h)))


@dataclass(frozen=True)
class GroundTruth:
    """True per-frame displacement of a target relative to frame 0."""

    fps: float
    du: np.ndarray
    dv: np.ndarray
    label: str = "target"

    def __post_init__(self) -> None:
        du = np.asarray(self.du, dtype=np.float64)
        dv = np.asarray(self.dv, dtype=np.float64)
        if du.shape != dv.shape or du.ndim != 1 or len(du) == 0:
            raise ValueError("du and dv must be equal-length 1-D arrays")
        if du[0] != 0.0 or dv[0] != 0.0:
            raise ValueError("ground truth entry 0 must be (0, 0)")
        du.setflags(write=False)
        dv.setflags(write=False)
        object.__setattr__(self, "du", du)
        object.__setattr__(self, "dv", dv)

    def __len__(self) -> int:
        return len(self.du)

    @property
    def t(self) -> np.ndarray:
        return np.arange(len(self.du)) / self.fps


def _texture(spec: SceneSpec, margin: int) -> np.ndarray:
    """Band-limited noise patch covering the target plus motion margin.

    Blurred noise stretched between its 2nd and 98th percentiles gives the
    patch strong blob-like contrast at the scales trackers respond to while
    staying smooth enough for faithful sub-pixel interpolation.
    """
    h = spec.target_rect.h + 2 * margin
    w = spec.target_rect.w + 2 * margin
    rng = np.random.default_rng(spec.texture_seed)
    raw = rng.random((h, w))
    smooth = _blur_array(raw, 1.5)
    lo, hi = np.percentile(smooth, [2.0, 98.0])
    if hi - lo < 1e-12:
        return np.full((h, w), 0.5)
    return np.clip(0.02 + 0.96 * (smooth - lo) / (hi - lo), 0.02, 0.98)


def _background(spec: SceneSpec) -> np.ndarray:
    w, h = spec.canvas
    rng = np.random.default_rng(spec.background_seed)
    raw = rng.random((h, w))
    smooth = _blur_array(raw, 3.0)
    lo, hi = smooth.min(), smooth.max()
    if hi - lo < 1e-12:
        return np.full((h, w), 0.5)
    return 0.42 + 0.16 * (smooth - lo) / (hi - lo)


def _coverage(start: float, extent: int, n: int) -> np.ndarray:
    """Per-cell overlap of the interval [start, start+extent] with unit pixels."""
    edges_lo = np.arange(n, dtype=np.float64) - 0.5
    lo = np.maximum(edges_lo, start)
    hi = np.minimum(edges_lo + 1.0, start + extent)
    return np.clip(hi - lo, 0.0, 1.0)


def _shifted_texture(texture: np.ndarray, margin: int, du: float, dv: float,
                     out_h: int, out_w: int, oy: int, ox: int) -> np.ndarray:
    """Sample the texture for a target displaced by (du, dv).

    Canvas pixel (x, y) reads texture position (x - rect.x - du + margin,
    y - rect.y - dv + margin); the fractional part is constant per frame so
    the bilinear blend reduces to four integer-shifted slices.
    """
    x0f = ox - du + margin
    y0f = oy - dv + margin
    ix = math.floor(x0f)
    iy = math.floor(y0f)
    fx = x0f - ix
    fy = y0f - iy
    block = texture[iy : iy + out_h + 1, ix : ix + out_w + 1]
    top = block[:out_h, :out_w] * (1.0 - fx) + block[:out_h, 1 : out_w + 1] * fx
    bot = block[1 : out_h + 1, :out_w] * (1.0 - fx) + block[1 : out_h + 1, 1 : out_w + 1] * fx
    return top * (1.0 - fy) + bot * fy


def _truths(specs: Sequence[SceneSpec]) -> list[GroundTruth]:
    truths = []
    for spec in specs:
        ox = spec.profile_x.offsets(spec.n_frames, spec.fps)
        oy = spec.profile_y.offsets(spec.n_frames, spec.fps)
        truths.append(GroundTruth(spec.fps, ox - ox[0], oy - oy[0], spec.label))
    return truths


def _check_layout(specs: Sequence[SceneSpec], truths: Sequence[GroundTruth]) -> None:
    w, h = specs[0].canvas
    boxes = []
    for spec, truth in zip(specs, truths):
        r = spec.target_rect
        x_lo = r.x + truth.du.min()
        x_hi = r.x1 + truth.du.max()
        y_lo = r.y + truth.dv.min()
        y_hi = r.y1 + truth.dv.max()
        if x_lo < 2.0 or y_lo < 2.0 or x_hi > w - 2.0 or y_hi > h - 2.0:
            raise SceneSpecError(
                f"target '{spec.label}' leaves the 2 px canvas margin: "
                f"x in [{fmt6(x_lo)}, {fmt6(x_hi)}], y in [{fmt6(y_lo)}, {fmt6(y_hi)}] "
                f"on a {w}x{h} canvas"
            )
        boxes.append((spec.label, r, truth))
    for i in range(len(specs)):
        for j in range(i + 1, len(specs)):
            la, ra, ta = boxes[i]
            lb, rb, tb = boxes[j]
            ax = ra.x + ta.du
            ay = ra.y + ta.dv
            bx = rb.x + tb.du
            by = rb.y + tb.dv
            separated = (
                (ax + ra.w < bx) | (bx + rb.w < ax) | (ay + ra.h < by) | (by + rb.h < ay)
            )
            if not separated.all():
                k = int(np.nonzero(~separated)[0][0])
                raise SceneSpecError(
                    f"targets '{la}' and '{lb}' overlap or touch at frame {k}"
                )


def multi_target_scene(specs: Sequence[SceneSpec]) -> tuple[FrameSequence, list[GroundTruth]]:
    """Render several targets on one canvas; rectangles must never touch.

    All specs must agree on canvas, fps, n_frames, noise and background
    settings.  Noise is drawn once per frame for the whole canvas.
    """
    if not specs:
        raise SceneSpecError("need at least one target spec")
    head = specs[0]
    for spec in specs[1:]:
        shared = ("canvas", "fps", "n_frames", "noise_sigma", "noise_seed", "background_seed")
        for name in shared:
            if getattr(spec, name) != getattr(head, name):
                raise SceneSpecError(
                    f"target '{spec.label}' disagrees on shared field '{name}'"
                )
    labels = [s.label for s in specs]
    if len(set(labels)) != len(labels):
        raise SceneSpecError(f"duplicate target labels: {labels}")
    truths = _truths(specs)
    _check_layout(specs, truths)

    w, h = head.canvas
    background = _background(head)
    margins = []
    textures = []
    for spec, truth in zip(specs, truths):
        margin = int(math.ceil(max(np.abs(truth.du).max(), np.abs(truth.dv).max()))) + 2
        margins.append(margin)
        textures.append(_texture(spec, margin))

    frames = []
    for j in range(head.n_frames):
        canvas = background.copy()
        for spec, truth, margin, texture in zip(specs, truths, margins, textures):
            r = spec.target_rect
            du = float(truth.du[j])
            dv = float(truth.dv[j])
            cov_x = _coverage(r.x + du, r.w, w)
            cov_y = _coverage(r.y + dv, r.h, h)
            xs = np.nonzero(cov_x > 0.0)[0]
            ys = np.nonzero(cov_y > 0.0)[0]
            if not len(xs) or not len(ys):
                continue
            x_lo, x_hi = int(xs[0]), int(xs[-1]) + 1
            y_lo, y_hi = int(ys[0]), int(ys[-1]) + 1
            tex = _shifted_texture(
                texture, margin, du, dv,
                y_hi - y_lo, x_hi - x_lo,
                y_lo - r.y, x_lo - r.x,
            )
            alpha = np.outer(cov_y[y_lo:y_hi], cov_x[x_lo:x_hi])
            region = canvas[y_lo:y_hi, x_lo:x_hi]
            canvas[y_lo:y_hi, x_lo:x_hi] = region * (1.0 - alpha) + tex * alpha
        if head.noise_sigma > 0:
            rng = np.random.default_rng([head.noise_seed, j])
            canvas = canvas + rng.normal(0.0, head.noise_sigma, canvas.shape)
        frames.append(Frame(np.clip(canvas, 0.0, 1.0)))
    return FrameSequence(tuple(frames), head.fps), truths


def render_scene(spec: SceneSpec) -> tuple[FrameSequence, GroundTruth]:
    """Render a single-target scene; see :func:`multi_target_scene`."""
    sequence, truths = multi_target_scene([spec])
    return sequence, truths[0]


def write_truth_csv(truth: GroundTruth) -> str:
    """Ground-truth CSV ``t,du,dv`` with six-decimal values."""
    lines = ["t,du,dv"]
    for i in range(len(truth)):
        lines.append(f"{fmt6(i / truth.fps)},{fmt6(truth.du[i])},{fmt6(truth.dv[i])}")
    return "\n".join(lines) + "\n"


def _profile_from_json(doc: dict, *, where: str) -> MotionProfile:
    if not isinstance(doc, dict) or "kind" not in doc:
        raise SceneSpecError(f"{where}: profile must be an object with a 'kind'")
    kind = doc["kind"]
    known = {
        "static": (),
        "ramp": ("rate",),
        "harmonic": ("amplitude", "frequency_hz", "phase"),
        "sweep": ("amplitude", "freq_start_hz", "freq_end_hz", "phase"),
        "tabulated": ("values",),
    }
    if kind not in known:
        raise SceneSpecError(f"{where}: unknown profile kind {kind!r}")
    extra = set(doc) - set(known[kind]) - {"kind"}
    if extra:
        raise SceneSpecError(f"{where}: unexpected profile fields {sorted(extra)}")
    kwargs = {k: doc[k] for k in known[kind] if k in doc}
    if "values" in kwargs:
        kwargs["values"] = tuple(float(v) for v in kwargs["values"])
    return MotionProfile(kind=kind, **kwargs)


def scene_specs_from_json(text: str) -> list[SceneSpec]:
    """Parse a scene spec file (JSON) into per-target specs.

    Layout: shared fields ``canvas [w, h]``, ``fps``, ``n_frames``,
    ``noise_sigma``, ``noise_seed``, ``background_seed`` plus a ``targets``
    array of ``{label, rect, texture_seed, profile_x, profile_y}``.
    """
    import json

    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneSpecError(f"scene spec is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SceneSpecError("scene spec top level must be an object")
    for name in ("canvas", "fps", "n_frames", "targets"):
        if name not in doc:
            raise SceneSpecError(f"scene spec is missing field '{name}'")
    canvas = doc["canvas"]
    if not (isinstance(canvas, list) and len(canvas) == 2):
        raise SceneSpecError("field 'canvas' must be [width, height]")
    targets = doc["targets"]
    if not isinstance(targets, list) or not targets:
        raise SceneSpecError("field 'targets' must be a non-empty array")
    specs = []
    for i, tgt in enumerate(targets):
        where = f"targets[{i}]"
        if not isinstance(tgt, dict):
            raise SceneSpecError(f"{where}: must be an object")
        for name in ("rect", "texture_seed"):
            if name not in tgt:
                raise SceneSpecError(f"{where}: missing field '{name}'")
        rect = tgt["rect"]
        if not (isinstance(rect, list) and len(rect) == 4):
            raise SceneSpecError(f"{where}: 'rect' must be [x, y, w, h]")
        specs.append(SceneSpec(
            canvas=(int(canvas[0]), int(canvas[1])),
            target_rect=Rect(*(int(v) for v in rect)),
            texture_seed=int(tgt["texture_seed"]),
            fps=float(doc["fps"]),
            n_frames=int(doc["n_frames"]),
            noise_sigma=float(doc.get("noise_sigma", 0.0)),
            profile_x=_profile_from_json(tgt.get("profile_x", {"kind": "static"}),
                                         where=f"{where}.profile_x"),
            profile_y=_profile_from_json(tgt.get("profile_y", {"kind": "static"}),
                                         where=f"{where}.profile_y"),
            label=str(tgt.get("label", f"target{i}" if len(targets) > 1 else "target")),
            noise_seed=int(doc.get("noise_seed", 0)),
            background_seed=int(doc.get("background_seed", 1)),
        ))
    return specs
