"""End-to-end checks of the package's headline guarantees.

One test per advertised behavior: sub-pixel recovery on a noise-free
scene, anchored matching beating cumulative flow on a slow ramp,
vibration frequency recovery on the three-mass scene, exactness of the
numeric kernels (FFT, smoothing weights, filter design), the optical
flow baseline, anchoring independence, and threaded determinism.  Each
test states its measured value and budget, so a verbose run reads as a
pass/fail scorecard.  Everything goes through public interfaces: the
command line, the shipped scene descriptions under scenes/, and the
pre-generated detection files under tests/fixtures/.
"""

import json
import time
from pathlib import Path

import numpy as np
import pytest

from labmotion.cli import main
from labmotion.detections import parse_detections
from labmotion.dsp import butterworth_design, fft, savgol_coefficients, savgol_filter
from labmotion.features import gaussian_blur
from labmotion.flow import LKConfig, track_points_lk
from labmotion.imagedata import Frame, FrameSequence, load_pgm_file
from labmotion.measure import frequency_error, load_truth_csv, mae
from labmotion.series import series_from_csv
from labmotion.tracking import TrackerConfig, measure_target

ROOT = Path(__file__).resolve().parent.parent
SCENES = ROOT / "scenes"
FIXTURES = Path(__file__).resolve().parent / "fixtures"


@pytest.fixture(scope="session")
def render_scene_cli(tmp_path_factory):
    """Render a shipped scene once per session; returns (dir, seconds)."""
    cache = {}

    def render(name):
        if name not in cache:
            out = tmp_path_factory.mktemp(f"scene_{name}")
            started = time.perf_counter()
            rc = main(["synth", str(SCENES / f"{name}.json"), "--output", str(out)])
            elapsed = time.perf_counter() - started
            assert rc == 0
            cache[name] = (out, elapsed)
        return cache[name]

    return render


def run_measure(tmp_path, name, config_doc, threads=1):
    config = tmp_path / f"{name}.json"
    config.write_text(json.dumps(config_doc))
    out = tmp_path / name
    rc = main(["measure", "--config", str(config), "--output", str(out),
               "--threads", str(threads)])
    assert rc == 0
    return out


# ---------------------------------------------------------------------
# displacement accuracy
# ---------------------------------------------------------------------


def test_subpixel_shift_recovered_within_fifth_of_a_pixel(render_scene_cli, tmp_path):
    frames_dir, _ = render_scene_cli("subpixel_shift")
    started = time.perf_counter()
    out = run_measure(tmp_path, "run", {
        "frames_dir": str(frames_dir),
        "detections": str(FIXTURES / "subpixel_shift.detections.json"),
        "mode": "bbox_plus_keypoints",
    })
    elapsed = time.perf_counter() - started
    series = series_from_csv((out / "measurement.csv").read_text())
    truth = load_truth_csv((frames_dir / "truth.csv").read_text())
    worst = float(np.max(np.abs(series.du - truth.column("du"))))
    print(f"subpixel worst |du error| {worst:.4f} px (limit 0.2); "
          f"measurement took {elapsed:.2f} s (limit 10)")
    assert worst <= 0.2
    assert not series.fallback.any()
    assert elapsed < 10.0


def test_anchored_matching_beats_cumulative_flow_on_slow_ramp(render_scene_cli, tmp_path):
    frames_dir, render_s = render_scene_cli("beam_ramp")
    truth = load_truth_csv((frames_dir / "truth_beam.csv").read_text())
    scale_in_per_px = 0.01

    started = time.perf_counter()
    anchored_dir = run_measure(tmp_path, "anchored", {
        "frames_dir": str(frames_dir),
        "detections": str(FIXTURES / "beam_ramp.detections.json"),
        "mode": "bbox_plus_keypoints",
        "labels": ["beam"],
    })
    flow_dir = run_measure(tmp_path, "flow", {
        "frames_dir": str(frames_dir),
        "fps": 15.0,
        "mode": "lk_baseline",
        "seed_rect": [100, 60, 110, 80],
    })
    elapsed = render_s + (time.perf_counter() - started)

    anchored = series_from_csv((anchored_dir / "beam.csv").read_text())
    flow = series_from_csv((flow_dir / "measurement.csv").read_text())
    anchored_mae = mae(anchored.t, anchored.dv, truth, "dv") * scale_in_per_px
    flow_mae = mae(flow.t, flow.dv, truth, "dv") * scale_in_per_px
    print(f"ramp MAE anchored {anchored_mae:.6f} in vs flow {flow_mae:.6f} in "
          f"(anchored limit 0.005); took {elapsed:.1f} s incl. render (limit 120)")
    assert anchored_mae <= flow_mae
    assert anchored_mae <= 0.005
    assert elapsed < 120.0


def test_vibration_frequencies_within_point_three_percent(render_scene_cli, tmp_path):
    frames_dir, render_s = render_scene_cli("shake_3mass")
    scene = json.loads((SCENES / "shake_3mass.json").read_text())
    references = {t["label"]: t["profile_x"]["frequency_hz"] for t in scene["targets"]}
    labels = list(references)

    started = time.perf_counter()
    meas_dir = run_measure(tmp_path, "meas", {
        "frames_dir": str(frames_dir),
        "detections": str(FIXTURES / "shake_3mass.detections.json"),
        "mode": "bbox_only",
        "labels": labels,
    })
    an_config = tmp_path / "an.json"
    an_config.write_text(json.dumps({
        "inputs": [{"label": lb, "path": str(meas_dir / f"{lb}.csv")} for lb in labels],
        "axis": "du",
    }))
    an_dir = tmp_path / "analysis"
    assert main(["analyze", "--config", str(an_config), "--output", str(an_dir)]) == 0
    elapsed = render_s + (time.perf_counter() - started)

    for label, reference_hz in references.items():
        rows = (an_dir / f"{label}_peaks.csv").read_text().splitlines()
        assert len(rows) >= 2, f"no spectral peak found for {label}"
        measured_hz = float(rows[1].split(",")[0])
        error_pct = frequency_error(measured_hz, reference_hz)
        print(f"{label}: peak {measured_hz:.4f} Hz vs {reference_hz} Hz "
              f"-> {error_pct:.3f}% (limit 0.3%)")
        assert error_pct <= 0.3
    print(f"frequency pipeline took {elapsed:.1f} s incl. render (limit 180)")
    assert elapsed < 180.0


# ---------------------------------------------------------------------
# numeric kernels
# ---------------------------------------------------------------------


def direct_dft(x):
    n = len(x)
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) @ np.asarray(x, dtype=complex)


def test_fft_matches_direct_dft_and_conserves_energy():
    rng = np.random.default_rng(2026)
    for n in (8, 16, 32, 64):
        for _ in range(3):
            x = rng.normal(size=n)
            ours = fft(x)
            reference = direct_dft(x)
            worst = np.max(np.abs(ours - reference)) / np.max(np.abs(reference))
            assert worst <= 1e-9
            energy_time = float(np.sum(np.abs(x) ** 2))
            energy_freq = float(np.sum(np.abs(ours) ** 2)) / n
            assert abs(energy_time - energy_freq) <= 1e-6 * energy_time


def least_squares_center_weights(window, order):
    half = window // 2
    positions = np.arange(-half, half + 1, dtype=np.float64)
    design = np.vander(positions, order + 1, increasing=True)
    normal = design.T @ design
    weights = np.empty(window)
    for k in range(window):
        rhs = design.T @ np.eye(window)[:, k]
        weights[k] = np.linalg.solve(normal, rhs)[0]
    return weights


def test_smoothing_weights_equal_least_squares_solution():
    frozen = np.array([-3.0, 12.0, 17.0, 12.0, -3.0]) / 35.0
    assert np.max(np.abs(savgol_coefficients(5, 2) - frozen)) <= 1e-12
    assert np.max(np.abs(least_squares_center_weights(5, 2) - frozen)) <= 1e-12

    rng = np.random.default_rng(11)
    x = np.linspace(-1.0, 1.0, 60)
    for _ in range(100):
        window = int(rng.choice([5, 7, 9, 11]))
        order = int(rng.integers(1, 4))
        coeffs = rng.normal(size=order + 1)
        y = np.polyval(coeffs, x)
        smoothed = savgol_filter(y, window, order)
        half = window // 2
        np.testing.assert_allclose(smoothed[half:-half], y[half:-half],
                                   rtol=1e-9, atol=1e-10)


def test_filter_design_hits_cutoff_dc_and_stability():
    rng = np.random.default_rng(7)
    fs = 100.0
    for order in range(1, 11):
        for cutoff in rng.uniform(0.02, 0.45, 20) * fs:
            filt = butterworth_design(order, cutoff, fs)
            at_cutoff = abs(filt.response(cutoff)[0])
            assert abs(at_cutoff - 1.0 / np.sqrt(2.0)) <= 1e-6
            assert abs(abs(filt.response(0.0)[0]) - 1.0) <= 1e-9
            for a1, a2 in filt.sos[:, 3:]:
                assert np.max(np.abs(np.roots([1.0, a1, a2]))) < 1.0


# ---------------------------------------------------------------------
# optical flow baseline
# ---------------------------------------------------------------------


def flow_texture(shape, seed):
    rng = np.random.default_rng(seed)
    blurred = gaussian_blur(Frame(rng.uniform(0.0, 1.0, shape)), 1.2).pixels
    lo, hi = blurred.min(), blurred.max()
    return 0.1 + 0.8 * (blurred - lo) / (hi - lo)


def test_flow_baseline_recovers_integer_shift_and_reverses():
    big = flow_texture((120, 170), 5)
    frame_a = Frame(big[:, 1:161])
    frame_b = Frame(big[:, 0:160])  # everything in a sits 1 px right in b
    points = [(40.0, 40.0), (80.0, 60.0), (120.0, 80.0)]
    config = LKConfig()
    tracked = track_points_lk(frame_a, frame_b, points, config)
    for point, result in zip(points, tracked):
        assert result.status == "valid"
        du = result.position[0] - point[0]
        dv = result.position[1] - point[1]
        assert abs(du - 1.0) <= 0.05
        assert abs(dv - 0.0) <= 0.05
        # time reversal: tracking the endpoint back lands on the start
        back = track_points_lk(frame_b, frame_a, [result.position], config)[0]
        assert back.status == "valid"
        assert abs(back.position[0] - point[0]) <= 2.0 * config.epsilon
        assert abs(back.position[1] - point[1]) <= 2.0 * config.epsilon


# ---------------------------------------------------------------------
# anchoring independence and determinism
# ---------------------------------------------------------------------


def test_corrupting_one_frame_changes_only_that_entry(render_scene_cli):
    frames_dir, _ = render_scene_cli("subpixel_shift")
    paths = sorted(frames_dir.glob("frame_*.pgm"))[:12]
    frames = [load_pgm_file(p) for p in paths]
    detections = parse_detections(
        (FIXTURES / "subpixel_shift.detections.json").read_text())
    records = [d for d in detections.detections if d.frame_index < len(frames)]

    clean = FrameSequence(tuple(frames), detections.fps)
    baseline = measure_target(clean, records, "bbox_plus_keypoints", TrackerConfig())

    blank = Frame(np.full(frames[0].shape, 0.5))
    corrupted_frames = list(frames)
    corrupted_frames[7] = blank
    corrupted = FrameSequence(tuple(corrupted_frames), detections.fps)
    damaged = measure_target(corrupted, records, "bbox_plus_keypoints", TrackerConfig())

    keep = np.arange(len(frames)) != 7
    np.testing.assert_allclose(damaged.du[keep], baseline.du[keep], atol=1e-9)
    np.testing.assert_allclose(damaged.dv[keep], baseline.dv[keep], atol=1e-9)
    assert damaged.fallback[7]
    assert not baseline.fallback.any()


def test_thread_count_does_not_change_any_output_byte(render_scene_cli, tmp_path):
    frames_dir, _ = render_scene_cli("shake_3mass")
    labels = ["mass_top", "mass_mid", "mass_bottom"]
    measure_doc = {
        "frames_dir": str(frames_dir),
        "detections": str(FIXTURES / "shake_3mass.detections.json"),
        "mode": "bbox_only",
        "labels": labels,
    }
    outputs = {}
    for threads in (1, 8):
        meas_dir = run_measure(tmp_path, f"meas_t{threads}", measure_doc, threads=threads)
        an_config = tmp_path / f"an_t{threads}.json"
        an_config.write_text(json.dumps({
            "inputs": [{"label": lb, "path": str(meas_dir / f"{lb}.csv")}
                       for lb in labels],
        }))
        an_dir = tmp_path / f"analysis_t{threads}"
        assert main(["analyze", "--config", str(an_config), "--output", str(an_dir),
                     "--threads", str(threads)]) == 0
        blobs = {}
        for path in sorted(meas_dir.glob("*.csv")) + sorted(an_dir.glob("*.csv")):
            blobs[path.name] = path.read_bytes()
        outputs[threads] = blobs

    assert set(outputs[1]) == set(outputs[8])
    assert len(outputs[1]) >= 3 + 3 * 3 + 1
    for name in outputs[1]:
        assert outputs[1][name] == outputs[8][name], f"{name} differs across thread counts"
