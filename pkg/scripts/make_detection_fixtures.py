"""Regenerate the pre-baked detection fixtures under tests/fixtures/.

Each fixture simulates a detector running on one of the shipped scenes: the
true target position plus optional Gaussian jitter on the box origin, with
a fixed seed so the files are reproducible byte for byte.  One shared
random stream is drawn in a fixed order (per frame, per target in spec
order: one uniform draw if dropout is enabled, then two normal draws if
jitter is enabled), so a fixture is fully determined by its parameters.

Run from the repository root:

    python3 scripts/make_detection_fixtures.py
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from labmotion import Detection, DetectionSet, encode_mask, scene_specs_from_json, serialize_detections

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "tests" / "fixtures"

# scene name -> (jitter sigma px, dropout fraction, seed, include masks)
RECIPES = {
    "subpixel_shift": (0.0, 0.0, 0, True),
    "beam_ramp": (0.5, 0.0, 42, False),
    "shake_3mass": (0.5, 0.0, 43, False),
}


def _rect_mask(w: int, h: int) -> np.ndarray:
    """Filled instance mask with a one-pixel empty border."""
    grid = np.zeros((h, w), dtype=bool)
    grid[1 : h - 1, 1 : w - 1] = True
    return grid


def make_fixture(scene_name: str, jitter: float, dropout: float, seed: int,
                 masks: bool) -> str:
    specs = scene_specs_from_json((ROOT / "scenes" / f"{scene_name}.json").read_text())
    head = specs[0]
    truths = []
    for spec in specs:
        ox = spec.profile_x.offsets(head.n_frames, head.fps)
        oy = spec.profile_y.offsets(head.n_frames, head.fps)
        truths.append((ox - ox[0], oy - oy[0]))

    rng = np.random.default_rng(seed)
    records = []
    for j in range(head.n_frames):
        for spec, (du, dv) in zip(specs, truths):
            if dropout > 0 and rng.uniform() < dropout:
                continue
            jx = jy = 0.0
            if jitter > 0:
                jx, jy = rng.normal(0.0, jitter, 2)
            rect = spec.target_rect
            mask = encode_mask(_rect_mask(rect.w, rect.h)) if masks else None
            records.append(Detection(
                frame_index=j,
                bbox=(rect.x + du[j] + jx, rect.y + dv[j] + jy,
                      float(rect.w), float(rect.h)),
                score=0.95,
                label=spec.label,
                mask=mask,
            ))
    return serialize_detections(DetectionSet(head.fps, tuple(records)))


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    for scene_name, (jitter, dropout, seed, masks) in RECIPES.items():
        text = make_fixture(scene_name, jitter, dropout, seed, masks)
        path = FIXTURES / f"{scene_name}.detections.json"
        path.write_text(text)
        print(f"wrote {path} ({len(text)} bytes)")


if __name__ == "__main__":
    main()
