"""Behavior of the mock generator: perfect boxes, seeded noise, draw order."""

import json
import math

import numpy as np
import pytest

from detector_adapter import mock_detections, parse_scene

SCENE = {
    "canvas": [120, 90],
    "fps": 25,
    "n_frames": 12,
    "targets": [
        {"label": "left", "rect": [10, 20, 24, 18], "texture_seed": 1,
         "profile_x": {"kind": "ramp", "rate": 0.5}},
        {"label": "right", "rect": [70, 30, 20, 20], "texture_seed": 2,
         "profile_y": {"kind": "harmonic", "amplitude": 2.0, "frequency_hz": 5.0}},
    ],
}


def geometry():
    return parse_scene(json.dumps(SCENE))


def test_zero_noise_boxes_equal_rect_plus_law():
    doc = mock_detections(geometry())
    assert doc["fps"] == 25.0
    records = doc["detections"]
    assert len(records) == 12 * 2
    for rec in records:
        j = rec["frame_index"]
        x, y, w, h = rec["bbox"]
        assert rec["score"] == 0.99
        if rec["label"] == "left":
            assert (w, h) == (24.0, 18.0)
            assert x == pytest.approx(10 + 0.5 * j, abs=1e-12)
            assert y == 20.0
        else:
            assert (w, h) == (20.0, 20.0)
            assert x == 70.0
            assert y == pytest.approx(30 + 2.0 * math.sin(2 * math.pi * 5.0 * j / 25.0),
                                      abs=1e-12)


def test_every_frame_covered_in_file_order():
    records = mock_detections(geometry())["detections"]
    keys = [(rec["frame_index"], rec["label"]) for rec in records]
    expected = [(j, label) for j in range(12) for label in ("left", "right")]
    assert keys == expected


def test_same_seed_same_bytes_different_seed_different_boxes():
    a = mock_detections(geometry(), jitter_sigma=0.7, dropout=0.2, seed=9)
    b = mock_detections(geometry(), jitter_sigma=0.7, dropout=0.2, seed=9)
    assert json.dumps(a) == json.dumps(b)
    c = mock_detections(geometry(), jitter_sigma=0.7, dropout=0.2, seed=10)
    assert json.dumps(c) != json.dumps(a)


def test_dropout_pattern_depends_only_on_seed_and_rate():
    kept_plain = [(r["frame_index"], r["label"]) for r in
                  mock_detections(geometry(), dropout=0.3, seed=4)["detections"]]
    kept_jittered = [(r["frame_index"], r["label"]) for r in
                     mock_detections(geometry(), jitter_sigma=1.0, dropout=0.3, seed=4)["detections"]]
    assert kept_plain == kept_jittered
    assert 0 < len(kept_plain) < 24


def test_jitter_of_a_slot_does_not_depend_on_dropout():
    plain = {(r["frame_index"], r["label"]): r["bbox"] for r in
             mock_detections(geometry(), jitter_sigma=0.5, seed=4)["detections"]}
    dropped = {(r["frame_index"], r["label"]): r["bbox"] for r in
               mock_detections(geometry(), jitter_sigma=0.5, dropout=0.3, seed=4)["detections"]}
    assert set(dropped) < set(plain)
    for key, bbox in dropped.items():
        assert bbox == plain[key]


def test_dropout_draw_order_is_the_documented_one():
    # one uniform per frame/target slot, frames outer, targets in file order
    drop_rng = np.random.default_rng(np.random.SeedSequence(4).spawn(2)[0])
    expected = [(j, label)
                for j in range(12)
                for label in ("left", "right")
                if not drop_rng.uniform() < 0.3]
    kept = [(r["frame_index"], r["label"]) for r in
            mock_detections(geometry(), dropout=0.3, seed=4)["detections"]]
    assert kept == expected


def test_jitter_statistics_look_gaussian():
    doc = mock_detections(geometry(), jitter_sigma=0.5, seed=123)
    records = doc["detections"]
    dx = []
    for rec in records:
        j = rec["frame_index"]
        if rec["label"] == "left":
            dx.append(rec["bbox"][0] - (10 + 0.5 * j))
        else:
            dx.append(rec["bbox"][0] - 70.0)
    dx = np.asarray(dx)
    assert abs(dx.mean()) < 0.5
    assert 0.2 < dx.std() < 0.9
    assert not np.allclose(dx, dx[0])


def test_zero_jitter_emits_exact_integers_for_static_axes():
    records = mock_detections(geometry())["detections"]
    for rec in records:
        if rec["label"] == "left":
            assert rec["bbox"][1] == 20.0
