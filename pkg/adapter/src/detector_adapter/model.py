"""Detection generation with a pretrained instance-segmentation model.

torch and torchvision are imported lazily so mock mode never touches the
ML runtime.  The ``model`` config field names a constructor in
``torchvision.models.detection`` (default ``maskrcnn_resnet50_fpn``);
weights are fetched or cached by torchvision itself and are never shipped
with this package, so on an offline machine model mode fails with a clear
"model unavailable" error instead of producing anything.

Frames are 8-bit PGM files.  Files named ``frame_NNNNNN.pgm`` keep their
embedded frame number; any other naming falls back to position in sorted
order.  Per frame, instances scoring at or above the threshold are
serialized with ``bbox = [x, y, w, h]`` and a run-length mask cropped to
the bbox extent.
"""

from __future__ import annotations

import math
import re
from pathlib import Path

import numpy as np

from .errors import GenerationError
from .pgmio import read_pgm
from .rle import encode_rle

_FRAME_NAME = re.compile(r"frame_(\d+)\.pgm$")


def list_frames(frames_dir) -> list[tuple[int, Path]]:
    """Pair every PGM file in the directory with its frame index."""
    paths = sorted(Path(frames_dir).glob("*.pgm"))
    if not paths:
        raise GenerationError(f"no .pgm frames in {frames_dir}")
    matches = [_FRAME_NAME.search(p.name) for p in paths]
    if all(matches):
        return [(int(m.group(1)), p) for m, p in zip(matches, paths)]
    return list(enumerate(paths))


def _load_model(name: str):
    """Instantiate a pretrained torchvision detection model, eval mode."""
    try:
        import torchvision
    except ImportError as exc:
        raise GenerationError(f"model unavailable: torchvision is not installed ({exc})") from None
    factory = getattr(torchvision.models.detection, name, None)
    if factory is None:
        raise GenerationError(f"model unavailable: torchvision.models.detection has no '{name}'")
    try:
        model = factory(weights="DEFAULT")
    except Exception as exc:
        raise GenerationError(f"model unavailable: could not load weights for '{name}': {exc}") from None
    model.eval()
    categories = None
    try:
        weights_enum = torchvision.models.get_model_weights(name)
        categories = list(weights_enum.DEFAULT.meta["categories"])
    except Exception:
        pass
    return model, categories


def _crop_mask(full_mask: np.ndarray, bbox: tuple[float, float, float, float]) -> np.ndarray:
    """Cut the bbox extent out of a full-image mask, zero-padded at edges."""
    x, y, w, h = bbox
    gh, gw = math.ceil(h), math.ceil(w)
    x0, y0 = math.floor(x), math.floor(y)
    grid = np.zeros((gh, gw), dtype=bool)
    img_h, img_w = full_mask.shape
    sy, sx = max(y0, 0), max(x0, 0)
    ey, ex = min(y0 + gh, img_h), min(x0 + gw, img_w)
    if ey > sy and ex > sx:
        grid[sy - y0:ey - y0, sx - x0:ex - x0] = full_mask[sy:ey, sx:ex]
    return grid


def model_detections(frames_dir, fps: float, model_name: str, score_threshold: float) -> dict:
    """Run the model over every frame and build the detection document."""
    frames = list_frames(frames_dir)
    model, categories = _load_model(model_name)

    import torch

    records = []
    with torch.no_grad():
        for frame_index, path in frames:
            gray = read_pgm(path).astype(np.float32) / 255.0
            image = torch.from_numpy(np.stack([gray, gray, gray]))
            try:
                output = model([image])[0]
            except Exception as exc:
                raise GenerationError(f"inference failed on {path.name}: {exc}") from None
            boxes = output["boxes"].numpy()
            scores = output["scores"].numpy()
            labels = output["labels"].numpy()
            masks = output.get("masks")
            for i in range(len(boxes)):
                score = float(scores[i])
                if score < score_threshold:
                    continue
                x1, y1, x2, y2 = (float(v) for v in boxes[i])
                w, h = x2 - x1, y2 - y1
                if w <= 0 or h <= 0:
                    continue
                class_id = int(labels[i])
                if categories and 0 <= class_id < len(categories):
                    label = categories[class_id]
                else:
                    label = f"class_{class_id}"
                record = {
                    "frame_index": frame_index,
                    "bbox": [x1, y1, w, h],
                    "score": min(score, 1.0),
                    "label": label,
                }
                if masks is not None:
                    full = masks[i, 0].numpy() > 0.5
                    counts, size = encode_rle(_crop_mask(full, (x1, y1, w, h)))
                    record["mask"] = {"counts": counts, "size": size}
                records.append(record)
    return {"fps": fps, "detections": records}
