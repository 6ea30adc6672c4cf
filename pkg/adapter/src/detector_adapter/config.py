"""Config file loading and validation for both generator modes.

The config is a single JSON object.  Shared fields are ``mode`` ("mock" or
"model"), ``output`` (detection file to write) and ``score_threshold``.
Mock mode reads a ``scene_spec`` file and accepts ``jitter_sigma`` (px,
>= 0), ``dropout`` (probability in [0, 1)) and an integer ``seed``.  Model
mode reads PGM frames from ``frames_dir``, needs an explicit ``fps``
(frame files carry no rate) and accepts a ``model`` identifier naming a
pretrained torchvision instance-segmentation constructor.  Fields of the
other mode, and unknown fields, are rejected.  Relative paths are resolved
against the directory of the config file itself.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError

DEFAULT_MODEL = "maskrcnn_resnet50_fpn"

_SHARED = {"mode", "output", "score_threshold"}
_MOCK_ONLY = {"scene_spec", "jitter_sigma", "dropout", "seed"}
_MODEL_ONLY = {"frames_dir", "fps", "model"}


@dataclass(frozen=True)
class AdapterConfig:
    mode: str
    output: Path
    score_threshold: float = 0.5
    scene_spec: Path | None = None
    jitter_sigma: float = 0.0
    dropout: float = 0.0
    seed: int = 0
    frames_dir: Path | None = None
    fps: float | None = None
    model: str = DEFAULT_MODEL


def _number(doc, name, lo=None, hi=None, hi_open=False):
    value = doc[name]
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
        raise ConfigError(f"field '{name}' must be a finite number")
    value = float(value)
    if lo is not None and value < lo:
        raise ConfigError(f"field '{name}' must be >= {lo}")
    if hi is not None and (value >= hi if hi_open else value > hi):
        raise ConfigError(f"field '{name}' must be {'<' if hi_open else '<='} {hi}")
    return value


def _path(doc, name, base_dir: Path) -> Path:
    value = doc[name]
    if not isinstance(value, str) or not value:
        raise ConfigError(f"field '{name}' must be a non-empty path string")
    path = Path(value)
    return path if path.is_absolute() else base_dir / path


def config_from_json(text: str, base_dir: Path) -> AdapterConfig:
    """Parse and validate config text; no filesystem checks happen here."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config top level must be an object")

    mode = doc.get("mode")
    if mode not in ("mock", "model"):
        raise ConfigError("field 'mode' must be 'mock' or 'model'")
    allowed = _SHARED | (_MOCK_ONLY if mode == "mock" else _MODEL_ONLY)
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown config fields for mode '{mode}': {sorted(unknown)}")
    if "output" not in doc:
        raise ConfigError("config is missing field 'output'")
    output = _path(doc, "output", base_dir)
    score_threshold = _number(doc, "score_threshold", 0.0, 1.0) if "score_threshold" in doc else 0.5

    if mode == "mock":
        if "scene_spec" not in doc:
            raise ConfigError("mock mode needs field 'scene_spec'")
        scene_spec = _path(doc, "scene_spec", base_dir)
        jitter = _number(doc, "jitter_sigma", lo=0.0) if "jitter_sigma" in doc else 0.0
        dropout = _number(doc, "dropout", 0.0, 1.0, hi_open=True) if "dropout" in doc else 0.0
        seed = doc.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ConfigError("field 'seed' must be an integer")
        return AdapterConfig(mode="mock", output=output, score_threshold=score_threshold,
                             scene_spec=scene_spec, jitter_sigma=jitter, dropout=dropout,
                             seed=seed)

    if "frames_dir" not in doc:
        raise ConfigError("model mode needs field 'frames_dir'")
    if "fps" not in doc:
        raise ConfigError("model mode needs field 'fps' (frame files carry no rate)")
    frames_dir = _path(doc, "frames_dir", base_dir)
    fps = _number(doc, "fps")
    if fps <= 0:
        raise ConfigError("field 'fps' must be positive")
    model = doc.get("model", DEFAULT_MODEL)
    if not isinstance(model, str) or not model:
        raise ConfigError("field 'model' must be a non-empty string")
    return AdapterConfig(mode="model", output=output, score_threshold=score_threshold,
                         frames_dir=frames_dir, fps=fps, model=model)


def load_config(path) -> AdapterConfig:
    """Read a config file and check that its input paths exist."""
    config_path = Path(path)
    try:
        text = config_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    cfg = config_from_json(text, config_path.resolve().parent)
    if cfg.mode == "mock" and not cfg.scene_spec.is_file():
        raise ConfigError(f"scene spec file not found: {cfg.scene_spec}")
    if cfg.mode == "model" and not cfg.frames_dir.is_dir():
        raise ConfigError(f"frames directory not found: {cfg.frames_dir}")
    return cfg
