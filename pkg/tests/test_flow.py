import numpy as np
import pytest
from scipy import ndimage

from labmotion.errors import TrackingError
from labmotion.features import gaussian_kernel
from labmotion.flow import (
    STATUS_LOST_BOUNDS,
    STATUS_LOST_CONDITIONING,
    STATUS_LOST_CONVERGENCE,
    STATUS_VALID,
    LKConfig,
    accumulate_displacement,
    track_points_lk,
    track_sequence_lk,
)
from labmotion.imagedata import Frame, FrameSequence


def make_texture(shape, seed):
    rng = np.random.default_rng(seed)
    raw = rng.random(shape)
    kernel = gaussian_kernel(1.5)
    smooth = ndimage.correlate1d(raw, kernel, axis=0, mode="nearest")
    smooth = ndimage.correlate1d(smooth, kernel, axis=1, mode="nearest")
    lo, hi = np.percentile(smooth, [2.0, 98.0])
    return np.clip(0.02 + 0.96 * (smooth - lo) / (hi - lo), 0.02, 0.98)


def smooth_pattern(xx, yy):
    """Band-limited analytic pattern, easy to shift by sub-pixel amounts."""
    return (0.5 + 0.2 * np.sin(0.35 * xx) * np.cos(0.3 * yy)
            + 0.15 * np.sin(0.18 * xx + 0.22 * yy))


def test_config_validation():
    with pytest.raises(ValueError):
        LKConfig(window_radius=0)
    with pytest.raises(ValueError):
        LKConfig(pyramid_levels=0)
    with pytest.raises(ValueError):
        LKConfig(epsilon=0.0)
    with pytest.raises(ValueError):
        LKConfig(min_eigenvalue=-1.0)


def test_zero_shift_is_exact():
    frame = Frame(make_texture((60, 80), 1))
    tracked = track_points_lk(frame, frame, [(40.0, 30.0), (25.5, 20.25)])
    for (x, y), t in zip([(40.0, 30.0), (25.5, 20.25)], tracked):
        assert t.status == STATUS_VALID
        assert abs(t.position[0] - x) < 1e-12
        assert abs(t.position[1] - y) < 1e-12


def test_integer_shift_recovered_within_5_hundredths():
    big = make_texture((80, 120), 2)
    frame_a = Frame(big[:, 4:100])
    frame_b = Frame(big[:, 1:97])  # content moved right by exactly 3 px
    points = [(40.0, 30.0), (52.0, 45.0), (64.0, 38.0)]
    tracked = track_points_lk(frame_a, frame_b, points, LKConfig(pyramid_levels=2))
    for (x, y), t in zip(points, tracked):
        assert t.status == STATUS_VALID
        assert abs(t.position[0] - (x + 3.0)) < 0.05
        assert abs(t.position[1] - y) < 0.05


def test_subpixel_shift_recovered():
    yy, xx = np.mgrid[0:64, 0:96].astype(np.float64)
    frame_a = Frame(smooth_pattern(xx, yy))
    frame_b = Frame(smooth_pattern(xx - 0.4, yy + 0.3))  # moved (+0.4, -0.3)
    tracked = track_points_lk(frame_a, frame_b, [(48.0, 32.0)], LKConfig(pyramid_levels=1))
    t = tracked[0]
    assert t.status == STATUS_VALID
    assert abs(t.position[0] - 48.4) < 0.05
    assert abs(t.position[1] - 31.7) < 0.05


def test_time_reversal_round_trip_within_two_epsilon():
    yy, xx = np.mgrid[0:64, 0:96].astype(np.float64)
    frame_a = Frame(smooth_pattern(xx, yy))
    frame_b = Frame(smooth_pattern(xx - 0.4, yy + 0.3))
    config = LKConfig(pyramid_levels=1, epsilon=0.01)
    start = (48.0, 32.0)
    forward = track_points_lk(frame_a, frame_b, [start], config)[0]
    assert forward.status == STATUS_VALID
    back = track_points_lk(frame_b, frame_a, [forward.position], config)[0]
    assert back.status == STATUS_VALID
    err = np.hypot(back.position[0] - start[0], back.position[1] - start[1])
    assert err <= 2.0 * config.epsilon


def test_flat_region_reports_lost_conditioning():
    frame = Frame(np.full((48, 64), 0.5))
    t = track_points_lk(frame, frame, [(32.0, 24.0)], LKConfig(pyramid_levels=1))[0]
    assert t.status == STATUS_LOST_CONDITIONING


def test_point_too_close_to_border_reports_lost_bounds():
    frame = Frame(make_texture((48, 64), 3))
    t = track_points_lk(frame, frame, [(2.0, 2.0)], LKConfig(pyramid_levels=1))[0]
    assert t.status == STATUS_LOST_BOUNDS


def test_starved_iterations_report_lost_convergence():
    big = make_texture((80, 120), 4)
    frame_a = Frame(big[:, 5:101])
    frame_b = Frame(big[:, 0:96])  # 5 px shift, far beyond one iteration
    config = LKConfig(pyramid_levels=1, max_iterations=1, epsilon=1e-6)
    t = track_points_lk(frame_a, frame_b, [(48.0, 40.0)], config)[0]
    assert t.status == STATUS_LOST_CONVERGENCE


def test_mismatched_frame_sizes_error():
    a = Frame(np.full((32, 32), 0.5))
    b = Frame(np.full((32, 48), 0.5))
    with pytest.raises(ValueError, match="differ"):
        track_points_lk(a, b, [(16.0, 16.0)])


def test_empty_point_list_returns_empty():
    frame = Frame(np.full((32, 32), 0.5))
    assert track_points_lk(frame, frame, []) == []


# =====================================================================
# accumulation
# =====================================================================


def test_accumulate_displacement_cumulative_sums():
    series = accumulate_displacement([(1.0, 0.0), (0.5, -0.5)], fps=30.0)
    np.testing.assert_allclose(series.du, [0.0, 1.0, 1.5])
    np.testing.assert_allclose(series.dv, [0.0, 0.0, -0.5])
    np.testing.assert_allclose(series.t, [0.0, 1 / 30, 2 / 30])
    assert not series.fallback.any()


def test_accumulate_displacement_quality_length_checked():
    with pytest.raises(ValueError, match="quality"):
        accumulate_displacement([(1.0, 0.0)], fps=30.0, quality=[1, 2, 3])
    series = accumulate_displacement([(1.0, 0.0)], fps=30.0, quality=[5, 4])
    assert list(series.quality) == [5, 4]


# =====================================================================
# sequence tracking
# =====================================================================


def test_sequence_tracking_follows_translation():
    big = make_texture((80, 140), 5)
    offsets = [0, 1, 2, 3]  # content moves right by one pixel per frame
    frames = FrameSequence(
        [Frame(big[:, 12 - o : 108 - o]) for o in offsets], fps=30.0
    )
    points = [(40.0, 30.0), (56.0, 44.0), (70.0, 36.0)]
    series = track_sequence_lk(frames, points, LKConfig(pyramid_levels=2))
    np.testing.assert_allclose(series.du, [0.0, 1.0, 2.0, 3.0], atol=0.1)
    np.testing.assert_allclose(series.dv, np.zeros(4), atol=0.1)
    assert list(series.quality) == [3, 3, 3, 3]
    assert series.fps == 30.0


def test_sequence_tracking_drops_lost_points():
    big = make_texture((80, 140), 6)
    offsets = [0, 3, 6]
    frames = FrameSequence(
        [Frame(big[:, 12 - o : 108 - o]) for o in offsets], fps=10.0
    )
    # second point sits 11 px from the right edge; moving +3 px per frame
    # pushes its radius-10 window out of bounds on the first step
    points = [(48.0, 40.0), (85.0, 40.0)]
    series = track_sequence_lk(frames, points, LKConfig(pyramid_levels=2))
    assert list(series.quality) == [2, 1, 1]
    np.testing.assert_allclose(series.du, [0.0, 3.0, 6.0], atol=0.1)


def test_sequence_tracking_all_lost_raises():
    big = make_texture((60, 100), 7)
    frames = FrameSequence([Frame(big[:, 0:80]), Frame(big[:, 0:80])], fps=10.0)
    with pytest.raises(TrackingError, match="all points lost at frame 1"):
        track_sequence_lk(frames, [(3.0, 3.0)], LKConfig(pyramid_levels=1))


def test_sequence_tracking_needs_seeds():
    big = make_texture((60, 100), 8)
    frames = FrameSequence([Frame(big[:, 0:80]), Frame(big[:, 0:80])], fps=10.0)
    with pytest.raises(TrackingError, match="seed"):
        track_sequence_lk(frames, [])
