"""Command line front end: one config file in, one detection file out.

Exit codes match the measurement CLI: 0 on success, 1 for runtime
failures (unusable model, unreadable frames), 2 for usage problems (bad
arguments, invalid config, invalid scene spec, missing inputs).
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from .config import AdapterConfig, load_config
from .emit import write_detection_file
from .errors import AdapterError, ConfigError
from .mock import mock_detections
from .scenespec import parse_scene


def generate(cfg: AdapterConfig) -> dict:
    """Produce the detection document for a validated config."""
    if cfg.mode == "mock":
        try:
            text = cfg.scene_spec.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read scene spec: {exc}") from None
        geometry = parse_scene(text)
        return mock_detections(geometry, cfg.jitter_sigma, cfg.dropout, cfg.seed)
    from .model import model_detections

    return model_detections(cfg.frames_dir, cfg.fps, cfg.model, cfg.score_threshold)


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="detector-adapter",
        description="Generate a detection file from a pretrained instance-segmentation "
                    "model or from a scene spec (mock mode).",
    )
    parser.add_argument("config", help="path to a JSON config file")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        doc = generate(cfg)
        out = write_detection_file(doc, cfg.output)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AdapterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out} ({len(doc['detections'])} detection(s))")
    return 0


if __name__ == "__main__":
    sys.exit(main())
