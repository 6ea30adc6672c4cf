"""Shared fixtures: paths to the measurement package's shipped scenes and
a session-scoped render cache so expensive scenes render once."""

import json
import time
from pathlib import Path

import pytest

from detector_adapter.cli import main as adapter_main

ROOT = Path(__file__).resolve().parents[2]
SCENES = ROOT / "scenes"
SAMPLE_DIR = Path(__file__).resolve().parents[1] / "sample"

SCENE_NAMES = sorted(p.stem for p in SCENES.glob("*.json"))


@pytest.fixture(scope="session")
def render_scene(tmp_path_factory):
    """Render a shipped scene once per session via the measurement CLI."""
    from labmotion.cli import main as labmotion_main

    cache = {}

    def render(name):
        if name not in cache:
            out = tmp_path_factory.mktemp(f"scene_{name}")
            started = time.perf_counter()
            rc = labmotion_main(["synth", str(SCENES / f"{name}.json"),
                                 "--output", str(out)])
            assert rc == 0
            cache[name] = (out, time.perf_counter() - started)
        return cache[name]

    return render


def run_adapter(tmp_path, config_doc, name="adapter"):
    """Write a config file, run the adapter CLI in process, return (rc, output)."""
    config = tmp_path / f"{name}_config.json"
    config.write_text(json.dumps(config_doc))
    return adapter_main([str(config)])


def mock_config(scene_name, output, **overrides):
    doc = {
        "mode": "mock",
        "scene_spec": str(SCENES / f"{scene_name}.json"),
        "output": str(output),
    }
    doc.update(overrides)
    return doc
