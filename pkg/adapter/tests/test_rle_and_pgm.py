"""Mask run-length encoding and the PGM frame reader."""

import numpy as np
import pytest

from detector_adapter import GenerationError, encode_rle, read_pgm


def test_all_zeros_is_one_run():
    counts, size = encode_rle(np.zeros((2, 3), dtype=bool))
    assert counts == "6"
    assert size == [2, 3]


def test_all_ones_leads_with_a_zero_run():
    counts, size = encode_rle(np.ones((2, 3), dtype=bool))
    assert counts == "0 6"
    assert size == [2, 3]


def test_column_major_order_by_hand():
    # columns read top to bottom: [1, 0], [0, 1] -> 1 0 0 1 -> runs 0,1,2,1
    mask = np.array([[True, False], [False, True]])
    counts, size = encode_rle(mask)
    assert counts == "0 1 2 1"
    assert size == [2, 2]


def test_runs_cover_every_cell_and_alternate():
    rng = np.random.default_rng(11)
    for _ in range(25):
        h, w = rng.integers(1, 12, size=2)
        mask = rng.uniform(size=(h, w)) < 0.4
        counts, size = encode_rle(mask)
        runs = [int(tok) for tok in counts.split()]
        assert sum(runs) == h * w
        assert size == [int(h), int(w)]
        assert all(r > 0 for r in runs[1:])  # only the leading run may be 0


def test_decoding_with_the_consumer_package_round_trips():
    from labmotion.detections import Mask

    rng = np.random.default_rng(7)
    for _ in range(20):
        h, w = rng.integers(1, 15, size=2)
        mask = rng.uniform(size=(h, w)) < 0.5
        counts, size = encode_rle(mask)
        decoded = Mask(counts, (size[0], size[1])).decode()
        assert np.array_equal(decoded, mask)


def test_rejects_empty_or_non_2d():
    with pytest.raises(ValueError):
        encode_rle(np.zeros((0, 3), dtype=bool))
    with pytest.raises(ValueError):
        encode_rle(np.zeros(5, dtype=bool))


def test_read_pgm_by_hand(tmp_path):
    path = tmp_path / "tiny.pgm"
    path.write_bytes(b"P5\n# a comment\n3 2\n255\n" + bytes([0, 10, 20, 30, 40, 250]))
    img = read_pgm(path)
    assert img.dtype == np.uint8
    assert img.shape == (2, 3)
    assert img.tolist() == [[0, 10, 20], [30, 40, 250]]


def test_read_pgm_round_trips_renderer_output(tmp_path):
    from labmotion.imagedata import Frame, save_pgm_file

    rng = np.random.default_rng(3)
    frame = Frame(rng.uniform(size=(10, 14)))
    path = tmp_path / "frame.pgm"
    save_pgm_file(frame, path)
    img = read_pgm(path)
    assert img.shape == (10, 14)
    expected = np.floor(frame.pixels * 255 + 0.5).astype(np.uint8)
    assert np.array_equal(img, expected)


@pytest.mark.parametrize("payload", [
    b"P2\n3 2\n255\n0 1 2 3 4 5\n",
    b"P5\n3 2\n65535\n" + bytes(12),
    b"P5\n3 2\n255\n" + bytes(3),
    b"P5\n3\n",
])
def test_read_pgm_rejects_unsupported_files(tmp_path, payload):
    path = tmp_path / "bad.pgm"
    path.write_bytes(payload)
    with pytest.raises(GenerationError):
        read_pgm(path)


def test_read_pgm_missing_file(tmp_path):
    with pytest.raises(GenerationError, match="cannot read"):
        read_pgm(tmp_path / "absent.pgm")
