"""Model-free detection generator driven by a scene file.

Every frame gets one record per target whose bbox is the frame-0 rect
displaced by the target's motion laws, so with zero jitter the boxes equal
the renderer's ground truth exactly.  Record dropout and Gaussian position
jitter draw from two independent generators spawned from the one seed, one
candidate at a time (frames outer, targets in file order), and the jitter
pair is drawn even for dropped candidates.  The set of dropped records
therefore depends only on the seed and the dropout rate, the jitter of a
given frame/target slot only on the seed and jitter_sigma, and the whole
output is byte-reproducible for a given config.  Scores are always 0.99.
"""

from __future__ import annotations

import numpy as np

from .scenespec import SceneGeometry

MOCK_SCORE = 0.99


def mock_detections(geometry: SceneGeometry, jitter_sigma: float = 0.0,
                    dropout: float = 0.0, seed: int = 0) -> dict:
    """Build the detection document (ready for JSON serialization)."""
    drop_rng, jitter_rng = (np.random.default_rng(c)
                            for c in np.random.SeedSequence(seed).spawn(2))
    tracks = [(t, *geometry.displacements(t)) for t in geometry.targets]
    records = []
    for j in range(geometry.n_frames):
        for target, du, dv in tracks:
            dropped = dropout > 0.0 and drop_rng.uniform() < dropout
            jx = jy = 0.0
            if jitter_sigma > 0.0:
                jx, jy = jitter_rng.normal(0.0, jitter_sigma, size=2)
            if dropped:
                continue
            x, y, w, h = target.rect
            bx = x + du[j] + jx
            by = y + dv[j] + jy
            records.append({
                "frame_index": j,
                "bbox": [float(bx), float(by), float(w), float(h)],
                "score": MOCK_SCORE,
                "label": target.label,
            })
    return {"fps": geometry.fps, "detections": records}
