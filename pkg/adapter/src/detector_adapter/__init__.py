"""Standalone detection-file generator for the labmotion pipeline.

Two modes produce the same JSON schema the measurement package ingests:
``model`` runs a pretrained torchvision instance-segmentation network over
a directory of PGM frames, ``mock`` converts a renderer scene file into
perfect or deliberately noisy detections without any ML runtime.  The
package never measures displacement itself.
"""

from .config import DEFAULT_MODEL, AdapterConfig, config_from_json, load_config
from .emit import write_detection_file
from .errors import AdapterError, ConfigError, GenerationError
from .mock import MOCK_SCORE, mock_detections
from .pgmio import read_pgm
from .rle import encode_rle
from .scenespec import MotionLaw, SceneGeometry, TargetGeometry, parse_scene

__version__ = "0.1.0"

__all__ = [
    "AdapterConfig",
    "AdapterError",
    "ConfigError",
    "DEFAULT_MODEL",
    "GenerationError",
    "MOCK_SCORE",
    "MotionLaw",
    "SceneGeometry",
    "TargetGeometry",
    "config_from_json",
    "encode_rle",
    "load_config",
    "mock_detections",
    "parse_scene",
    "read_pgm",
    "write_detection_file",
    "__version__",
]
