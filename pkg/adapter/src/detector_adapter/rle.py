"""Column-major run-length encoding of binary masks.

The detection schema stores a mask as space-separated run lengths of
alternating zeros and ones, starting with zeros, over the column-major
flattening of a ``size = [h, w]`` grid.  A leading ``0`` marks a mask whose
first cell is set.
"""

from __future__ import annotations

import numpy as np


def encode_rle(mask) -> tuple[str, list[int]]:
    """Encode a 2-D boolean array; returns ``(counts, [h, w])``."""
    grid = np.asarray(mask, dtype=bool)
    if grid.ndim != 2 or grid.size == 0:
        raise ValueError("mask must be a non-empty 2-D array")
    flat = grid.ravel(order="F")
    changes = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], changes, [flat.size]))
    runs = np.diff(bounds).tolist()
    if flat[0]:
        runs.insert(0, 0)
    counts = " ".join(str(int(r)) for r in runs)
    return counts, [int(grid.shape[0]), int(grid.shape[1])]
