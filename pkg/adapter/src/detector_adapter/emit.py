"""Single-shot atomic output: serialize once, write a sibling temp file,
then rename over the target so a crash can never leave a half-written
detection file behind."""

from __future__ import annotations

import contextlib
import json
import os
import tempfile
from pathlib import Path


def write_detection_file(doc: dict, path) -> Path:
    """Write ``doc`` as JSON to ``path`` via a temp-file rename."""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(doc, indent=1) + "\n"
    fd, tmp = tempfile.mkstemp(prefix=out.name + ".", suffix=".tmp", dir=out.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, out)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise
    return out
