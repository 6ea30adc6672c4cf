"""Command-line interface.

Four subcommands cover the full workflow: ``synth`` renders a synthetic
scene with ground truth, ``measure`` turns frames plus detections into
displacement CSVs, ``analyze`` filters a series and extracts its spectrum
and peaks, and ``evaluate`` reports accuracy against a reference.

Exit codes: 0 success, 1 runtime/tracking failure, 2 usage/config error.
Commands validate inputs fully before writing any output, and identical
inputs produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields as dataclass_fields
from pathlib import Path
from typing import Sequence

import numpy as np

from . import dsp, svgplot
from .detections import DetectionSet, parse_detections
from .errors import LabmotionError
from .features import ScaleSpaceConfig
from .flow import LKConfig
from .imagedata import FrameSequence, Rect, load_pgm_file, save_pgm_file
from .measure import (
    Calibration,
    EvalReport,
    ReferenceSeries,
    load_truth_csv,
    mae,
    frequency_error,
    to_physical,
)
from .scene import multi_target_scene, scene_specs_from_json, write_truth_csv
from .series import MeasurementSeries, series_from_csv
from .textio import fmt6
from .tracking import MODES, TrackerConfig, measure_multi, measure_target


class UsageError(Exception):
    """Bad arguments, config, or input files; exits with code 2."""


def _read_text(path: str | Path, what: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {what} {path}: {exc}") from None


def _load_json(path: str | Path, what: str) -> dict:
    text = _read_text(path, what)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{what} {path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise UsageError(f"{what} {path} must contain an object at the top level")
    return doc


def _check_keys(doc, allowed: Sequence[str], where: str) -> None:
    if not isinstance(doc, dict):
        raise UsageError(f"{where}: must be an object")
    unknown = sorted(set(doc) - set(allowed))
    if unknown:
        raise UsageError(f"{where}: unknown field(s) {unknown}; allowed: {sorted(allowed)}")


def _build(cls, doc: dict, where: str):
    """Instantiate a config dataclass from a JSON object, checking names."""
    names = [f.name for f in dataclass_fields(cls)]
    _check_keys(doc, names, where)
    try:
        return cls(**doc)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{where}: {exc}") from None


def load_frames(directory: str | Path, fps: float) -> FrameSequence:
    """Load every ``*.pgm`` in a directory, sorted by file name."""
    folder = Path(directory)
    if not folder.is_dir():
        raise UsageError(f"frame directory {folder} does not exist")
    paths = sorted(folder.glob("*.pgm"))
    if not paths:
        raise UsageError(f"frame directory {folder} contains no .pgm files")
    try:
        frames = tuple(load_pgm_file(p) for p in paths)
        return FrameSequence(frames, fps)
    except (LabmotionError, ValueError) as exc:
        raise UsageError(f"loading frames from {folder}: {exc}") from None


# ---------------------------------------------------------------- synth


def cmd_synth(args: argparse.Namespace) -> int:
    text = _read_text(args.spec, "scene spec")
    try:
        specs = scene_specs_from_json(text)
        if args.seed is not None:
            from dataclasses import replace

            specs = [replace(s, noise_seed=args.seed) for s in specs]
        sequence, truths = multi_target_scene(specs)
    except LabmotionError as exc:
        raise UsageError(f"scene spec {args.spec}: {exc}") from None

    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    for j, frame in enumerate(sequence.frames):
        save_pgm_file(frame, outdir / f"frame_{j:06d}.pgm")
    n = len(sequence)
    print(f"wrote {n} frames to {outdir} (frame_000000.pgm .. frame_{n - 1:06d}.pgm)")
    if len(truths) == 1:
        path = outdir / "truth.csv"
        path.write_text(write_truth_csv(truths[0]))
        print(f"wrote {path}")
    else:
        for truth in truths:
            path = outdir / f"truth_{truth.label}.csv"
            path.write_text(write_truth_csv(truth))
            print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------- measure

_MEASURE_KEYS = (
    "frames_dir", "fps", "detections", "mode", "labels", "calibration",
    "seed_rect", "tracker", "scale_space", "lk",
)
_TRACKER_KEYS = (
    "score_threshold", "max_gap", "crop_margin", "min_matches", "ratio",
    "motion_radius", "top_k", "max_lk_points",
)


def _calibration_from(doc, where: str) -> Calibration | None:
    if doc is None:
        return None
    if not isinstance(doc, dict):
        raise UsageError(f"{where}: calibration must be an object")
    _check_keys(doc, ("scale", "unit"), where)
    try:
        return Calibration(float(doc.get("scale", 1.0)), str(doc.get("unit", "inch")))
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{where}: {exc}") from None


def _tracker_config(cfg: dict, threads: int) -> TrackerConfig:
    opts = cfg.get("tracker", {})
    if not isinstance(opts, dict):
        raise UsageError("field 'tracker' must be an object")
    _check_keys(opts, _TRACKER_KEYS, "tracker")
    scale_space = _build(ScaleSpaceConfig, cfg.get("scale_space", {}), "scale_space")
    lk = _build(LKConfig, cfg.get("lk", {}), "lk")
    seed_rect = None
    if cfg.get("seed_rect") is not None:
        raw = cfg["seed_rect"]
        if not (isinstance(raw, list) and len(raw) == 4):
            raise UsageError("field 'seed_rect' must be [x, y, w, h]")
        seed_rect = Rect(*(int(v) for v in raw))
    try:
        return TrackerConfig(
            scale_space=scale_space, lk=lk, seed_rect=seed_rect,
            threads=threads, **opts,
        )
    except (TypeError, ValueError) as exc:
        raise UsageError(f"tracker config: {exc}") from None


def _write_series(series: MeasurementSeries, stem: str, outdir: Path,
                  calibration: Calibration | None) -> None:
    path = outdir / f"{stem}.csv"
    path.write_text(series.to_csv())
    print(f"wrote {path} ({len(series)} rows)")
    if calibration is not None:
        phys_path = outdir / f"{stem}_physical.csv"
        phys_path.write_text(to_physical(series, calibration).to_csv())
        print(f"wrote {phys_path} ({calibration.unit})")


def cmd_measure(args: argparse.Namespace) -> int:
    if not args.config:
        raise UsageError("measure requires --config RUN.json")
    cfg = _load_json(args.config, "run config")
    _check_keys(cfg, _MEASURE_KEYS, "run config")

    mode = cfg.get("mode")
    if mode not in MODES:
        raise UsageError(f"field 'mode' must be one of {MODES}, got {mode!r}")
    if "frames_dir" not in cfg:
        raise UsageError("run config is missing field 'frames_dir'")

    detections: DetectionSet | None = None
    if cfg.get("detections") is not None:
        text = _read_text(cfg["detections"], "detection file")
        try:
            detections = parse_detections(text)
        except LabmotionError as exc:
            raise UsageError(f"detection file {cfg['detections']}: {exc}") from None

    if detections is not None:
        fps = detections.fps
        if "fps" in cfg and abs(float(cfg["fps"]) - fps) > 1e-6:
            raise UsageError(
                f"config fps {cfg['fps']} disagrees with detection file fps {fps}"
            )
    elif "fps" in cfg:
        fps = float(cfg["fps"])
        if not (fps > 0):
            raise UsageError("field 'fps' must be positive")
    else:
        raise UsageError("run config needs 'fps' when no detection file is given")

    frames = load_frames(cfg["frames_dir"], fps)
    tracker = _tracker_config(cfg, args.threads)
    calibration = _calibration_from(cfg.get("calibration"), "run config")

    labels = cfg.get("labels")
    if labels is not None and not (
        isinstance(labels, list) and labels and all(isinstance(v, str) for v in labels)
    ):
        raise UsageError("field 'labels' must be a non-empty array of strings")

    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)

    if labels is None:
        try:
            series = measure_target(frames, detections, mode, tracker)
        except LabmotionError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        _write_series(series, "measurement", outdir, calibration)
        return 0

    if detections is None:
        raise UsageError("field 'labels' requires a detection file")
    results = measure_multi(frames, detections, labels, mode, tracker)
    failed = False
    for result in results:
        if result.series is None:
            failed = True
            print(f"error: target {result.label}: {result.error}", file=sys.stderr)
        else:
            _write_series(result.series, result.label, outdir, calibration)
    return 1 if failed else 0


# ---------------------------------------------------------------- analyze

_ANALYZE_KEYS = (
    "input", "inputs", "axis", "savgol", "butterworth", "spectrum", "peaks", "windowed",
)


def _analyze_inputs(cfg: dict) -> list[tuple[str, Path]]:
    if ("input" in cfg) == ("inputs" in cfg):
        raise UsageError("analyze config needs exactly one of 'input' or 'inputs'")
    if "input" in cfg:
        path = Path(cfg["input"])
        return [(path.stem, path)]
    raw = cfg["inputs"]
    if not isinstance(raw, list) or not raw:
        raise UsageError("field 'inputs' must be a non-empty array")
    out = []
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict) or "path" not in entry:
            raise UsageError(f"inputs[{i}] must be an object with a 'path'")
        _check_keys(entry, ("label", "path"), f"inputs[{i}]")
        path = Path(entry["path"])
        out.append((str(entry.get("label", path.stem)), path))
    if len({label for label, _ in out}) != len(out):
        raise UsageError("input labels must be unique")
    return out


def _analyze_compute(label: str, series: MeasurementSeries, axis: str, cfg: dict):
    """Run the filter chain and spectral analysis for one series.

    Returns everything needed to write the per-label outputs; nothing is
    written here, so a failure on any input leaves no files behind.
    """
    raw = series.du if axis == "du" else series.dv
    columns: list[tuple[str, np.ndarray]] = [("raw", raw)]
    current = raw

    if cfg.get("savgol") is not None:
        opts = cfg["savgol"]
        _check_keys(opts, ("window", "order"), "savgol")
        current = dsp.savgol_filter(
            current,
            int(opts.get("window", dsp.DEFAULT_SMOOTHING_WINDOW)),
            int(opts.get("order", dsp.DEFAULT_SMOOTHING_ORDER)),
        )
        columns.append(("savgol", current))

    if cfg.get("butterworth") is not None:
        opts = cfg["butterworth"]
        _check_keys(opts, ("kind", "order", "cutoff_hz", "band_hz"), "butterworth")
        kind = opts.get("kind", "bandpass")
        order = int(opts.get("order", dsp.DEFAULT_VIBRATION_ORDER))
        if kind == "lowpass":
            if "cutoff_hz" not in opts:
                raise UsageError("lowpass butterworth config needs 'cutoff_hz'")
            cutoff = float(opts["cutoff_hz"])
        elif kind == "bandpass":
            band = opts.get("band_hz", list(dsp.DEFAULT_VIBRATION_BAND_HZ))
            if not (isinstance(band, (list, tuple)) and len(band) == 2):
                raise UsageError("bandpass butterworth config needs 'band_hz': [low, high]")
            cutoff = [float(band[0]), float(band[1])]
        else:
            raise UsageError(f"butterworth 'kind' must be lowpass or bandpass, got {kind!r}")
        filt = dsp.butterworth_design(order, cutoff, series.fps, kind)
        current = dsp.filtfilt(filt, current)
        columns.append(("butterworth", current))

    spec_cfg = cfg.get("spectrum") or {}
    _check_keys(spec_cfg, ("n_fft", "source"), "spectrum")
    source = spec_cfg.get("source", "filtered")
    if source not in ("filtered", "raw"):
        raise UsageError("spectrum 'source' must be 'filtered' or 'raw'")
    n_fft = spec_cfg.get("n_fft")
    spectrum_input = raw if source == "raw" else current
    spec = dsp.spectrum(dsp.Signal(spectrum_input, series.fps),
                        None if n_fft is None else int(n_fft))

    peak_cfg = cfg.get("peaks") or {}
    _check_keys(peak_cfg, ("n_peaks", "min_separation_hz", "min_prominence"), "peaks")
    peaks = dsp.find_peaks(
        spec,
        n_peaks=int(peak_cfg.get("n_peaks", 3)),
        min_separation_hz=float(peak_cfg.get("min_separation_hz", 0.5)),
        min_prominence=float(peak_cfg.get("min_prominence", 0.05)),
    )

    sweep_rows: list[str] | None = None
    if cfg.get("windowed") is not None:
        opts = cfg["windowed"]
        _check_keys(opts, ("segment_len", "overlap"), "windowed")
        if "segment_len" not in opts:
            raise UsageError("windowed config is missing 'segment_len'")
        segments = dsp.windowed_spectrum(
            dsp.Signal(spectrum_input, series.fps),
            int(opts["segment_len"]), float(opts.get("overlap", 0.5)),
        )
        sweep_rows = ["t_center,freq_hz,magnitude"]
        for centre, seg_spec in segments:
            seg_peaks = dsp.find_peaks(seg_spec, n_peaks=1)
            if seg_peaks:
                sweep_rows.append(f"{fmt6(centre)},{fmt6(seg_peaks[0].freq_hz)},"
                                  f"{seg_peaks[0].magnitude:.9g}")

    return columns, spec, peaks, sweep_rows


def _analyze_write(label: str, series: MeasurementSeries, axis: str, outdir: Path,
                   columns, spec, peaks, sweep_rows) -> None:
    t = series.t
    lines = ["t," + ",".join(name for name, _ in columns)]
    for i in range(len(series)):
        lines.append(fmt6(t[i]) + "," + ",".join(fmt6(col[i]) for _, col in columns))
    (outdir / f"{label}_filtered.csv").write_text("\n".join(lines) + "\n")

    (outdir / f"{label}_spectrum.csv").write_text(dsp.spectrum_to_csv(spec))
    global_max = float(spec.magnitudes.max())
    (outdir / f"{label}_peaks.csv").write_text(dsp.peaks_to_csv(peaks, global_max))

    (outdir / f"{label}_timeseries.svg").write_text(svgplot.line_chart(
        t, columns, title=f"{label} displacement",
        x_label="time (s)", y_label=f"{axis} (px)",
    ))
    (outdir / f"{label}_spectrum.svg").write_text(svgplot.line_chart(
        spec.freqs, [("magnitude", spec.magnitudes)],
        title=f"{label} spectrum", x_label="frequency (Hz)", y_label="amplitude (px)",
        marks=[(p.freq_hz, p.magnitude, f"{p.freq_hz:.2f} Hz") for p in peaks],
    ))

    if sweep_rows is not None:
        (outdir / f"{label}_sweep.csv").write_text("\n".join(sweep_rows) + "\n")


def cmd_analyze(args: argparse.Namespace) -> int:
    if not args.config:
        raise UsageError("analyze requires --config ANALYZE.json")
    cfg = _load_json(args.config, "analyze config")
    _check_keys(cfg, _ANALYZE_KEYS, "analyze config")
    axis = cfg.get("axis", "du")
    if axis not in ("du", "dv"):
        raise UsageError(f"field 'axis' must be 'du' or 'dv', got {axis!r}")

    inputs = []
    for label, path in _analyze_inputs(cfg):
        text = _read_text(path, "measurement CSV")
        try:
            inputs.append((label, series_from_csv(text)))
        except (LabmotionError, ValueError) as exc:
            raise UsageError(f"measurement CSV {path}: {exc}") from None

    results = []
    try:
        for label, series in inputs:
            results.append((label, series) + _analyze_compute(label, series, axis, cfg))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    combined = ["target,freq_hz,magnitude,prominence"]
    for label, series, columns, spec, peaks, sweep_rows in results:
        _analyze_write(label, series, axis, outdir, columns, spec, peaks, sweep_rows)
        top = max((p.magnitude for p in peaks), default=0.0)
        for p in peaks:
            rel = p.magnitude / top if top > 0 else 0.0
            combined.append(f"{label},{fmt6(p.freq_hz)},{p.magnitude:.9g},{rel:.6f}")
        print(f"{label}: {len(peaks)} peak(s)"
              + (": " + ", ".join(f"{p.freq_hz:.3f} Hz" for p in peaks) if peaks else ""))
    (outdir / "peaks.csv").write_text("\n".join(combined) + "\n")
    print(f"wrote {outdir / 'peaks.csv'}")
    return 0


# ---------------------------------------------------------------- evaluate

_EVALUATE_KEYS = (
    "truth", "truth_column", "truth_in_pixels", "calibration", "measured", "frequencies",
)


def cmd_evaluate(args: argparse.Namespace) -> int:
    if not args.config:
        raise UsageError("evaluate requires --config EVAL.json")
    cfg = _load_json(args.config, "evaluate config")
    _check_keys(cfg, _EVALUATE_KEYS, "evaluate config")

    calibration = _calibration_from(cfg.get("calibration"), "evaluate config")
    scale = calibration.scale if calibration else 1.0
    unit = calibration.unit if calibration else "px"
    truth_in_pixels = bool(cfg.get("truth_in_pixels", True))

    mae_rows: list[tuple[str, float, int]] = []
    if cfg.get("measured"):
        if "truth" not in cfg:
            raise UsageError("evaluate config needs 'truth' when 'measured' is given")
        try:
            reference = load_truth_csv(_read_text(cfg["truth"], "truth CSV"))
        except ValueError as exc:
            raise UsageError(f"truth CSV {cfg['truth']}: {exc}") from None
        column = cfg.get("truth_column", reference.first_column)
        if column not in reference.columns:
            raise UsageError(
                f"truth CSV has no column {column!r}; have {sorted(reference.columns)}"
            )
        entries = cfg["measured"]
        if not isinstance(entries, list) or not entries:
            raise UsageError("field 'measured' must be a non-empty array")
        for i, entry in enumerate(entries):
            where = f"measured[{i}]"
            if not isinstance(entry, dict) or "path" not in entry:
                raise UsageError(f"{where} must be an object with a 'path'")
            _check_keys(entry, ("method", "path", "axis"), where)
            axis = entry.get("axis", "du")
            if axis not in ("du", "dv"):
                raise UsageError(f"{where}: 'axis' must be 'du' or 'dv'")
            try:
                series = series_from_csv(_read_text(entry["path"], "measurement CSV"))
            except (LabmotionError, ValueError) as exc:
                raise UsageError(f"{where} ({entry['path']}): {exc}") from None
            method = str(entry.get("method", Path(entry["path"]).stem))
            values = (series.du if axis == "du" else series.dv) * scale
            ref_values = reference.column(column) * (scale if truth_in_pixels else 1.0)
            scaled_ref = ReferenceSeries(reference.t, {column: ref_values})
            t = series.t
            inside = (t >= reference.t[0]) & (t <= reference.t[-1])
            try:
                value = mae(t, values, scaled_ref, column)
            except ValueError as exc:
                print(f"error: {where}: {exc}", file=sys.stderr)
                return 1
            mae_rows.append((method, value, int(inside.sum())))

    freq_rows: list[tuple[str, float, float, float]] = []
    for i, entry in enumerate(cfg.get("frequencies") or []):
        where = f"frequencies[{i}]"
        if not isinstance(entry, dict) or "reference_hz" not in entry:
            raise UsageError(f"{where} must be an object with 'reference_hz'")
        _check_keys(entry, ("target", "reference_hz", "measured_hz", "peaks"), where)
        if ("measured_hz" in entry) == ("peaks" in entry):
            raise UsageError(f"{where} needs exactly one of 'measured_hz' or 'peaks'")
        if "measured_hz" in entry:
            measured_hz = float(entry["measured_hz"])
        else:
            lines = [ln for ln in _read_text(entry["peaks"], "peaks CSV").splitlines() if ln]
            if len(lines) < 2:
                raise UsageError(f"{where}: peaks CSV {entry['peaks']} has no peaks")
            measured_hz = float(lines[1].split(",")[0])
        reference_hz = float(entry["reference_hz"])
        try:
            err = frequency_error(measured_hz, reference_hz)
        except ValueError as exc:
            raise UsageError(f"{where}: {exc}") from None
        target = str(entry.get("target", f"target{i}"))
        freq_rows.append((target, measured_hz, reference_hz, err))

    if not mae_rows and not freq_rows:
        raise UsageError("evaluate config has neither 'measured' nor 'frequencies'")

    report = EvalReport(unit, tuple(mae_rows), tuple(freq_rows))
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "report.csv").write_text(report.to_csv())
    (outdir / "report.txt").write_text(report.to_text())
    print(report.to_text(), end="")
    print(f"wrote {outdir / 'report.csv'}")
    return 0


# ---------------------------------------------------------------- wiring


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="path to the command's JSON config file")
    parser.add_argument("--output", default=".", help="output directory (default: .)")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for per-frame measurement (default: 1)")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the scene noise seed (synth only)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="labmotion",
        description="Displacement and vibration measurement from frame sequences.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="render a synthetic scene with ground truth")
    p_synth.add_argument("spec", help="scene spec JSON file")
    _add_common(p_synth)
    p_synth.set_defaults(func=cmd_synth)

    p_measure = sub.add_parser("measure", help="measure target displacement series")
    _add_common(p_measure)
    p_measure.set_defaults(func=cmd_measure)

    p_analyze = sub.add_parser("analyze", help="filter a series and extract spectrum peaks")
    _add_common(p_analyze)
    p_analyze.set_defaults(func=cmd_analyze)

    p_evaluate = sub.add_parser("evaluate", help="report accuracy against a reference")
    _add_common(p_evaluate)
    p_evaluate.set_defaults(func=cmd_evaluate)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except LabmotionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
