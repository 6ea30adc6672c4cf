"""
Recovering vibration frequencies from displacement series
==========================================================

A displacement series measured off video is just a sampled signal, so
the usual chain applies: zero-phase band-pass filtering to isolate the
vibration band, an FFT-based amplitude spectrum, and peak picking with
parabolic interpolation for sub-bin frequency resolution.
"""

import numpy as np

from labmotion import (
    Detection,
    MotionProfile,
    Rect,
    SceneSpec,
    Signal,
    TrackerConfig,
    butterworth_design,
    filtfilt,
    find_peaks,
    measure_target,
    render_scene,
    spectrum,
)

# One mass oscillating at 6.35 Hz with 3 px amplitude, sampled at 30 fps.
TRUE_HZ = 6.35
spec = SceneSpec(
    canvas=(160, 120),
    target_rect=Rect(50, 40, 56, 36),
    texture_seed=21,
    fps=30.0,
    n_frames=1024,
    noise_sigma=0.005,
    profile_x=MotionProfile(kind="harmonic", amplitude=3.0, frequency_hz=TRUE_HZ),
)
frames, truth = render_scene(spec)

# Box tracking is plenty here: the mock detector reports the true box
# plus jitter, and the box centre difference already carries the motion.
rng = np.random.default_rng(1)
detections = [
    Detection(j, (50 + truth.du[j] + rng.normal(0, 0.3),
                  40 + rng.normal(0, 0.3), 56.0, 36.0), 0.9, "mass")
    for j in range(len(frames))
]
series = measure_target(frames, detections, "bbox_only", TrackerConfig())
signal = Signal(series.du, series.fps)

# Band-pass around the structural band, applied forward and backward so
# the waveform keeps its timing (zero phase).
band = butterworth_design(4, (0.5, 14.0), signal.fs, kind="bandpass")
filtered = filtfilt(band, signal)

spec_raw = spectrum(signal)
spec_filtered = spectrum(Signal(filtered, signal.fs))
peaks = find_peaks(spec_filtered, n_peaks=3)

print(f"true frequency      {TRUE_HZ} Hz")
top = peaks[0]
print(f"dominant peak       {top.freq_hz:.4f} Hz "
      f"({100 * abs(top.freq_hz - TRUE_HZ) / TRUE_HZ:.3f}% off)")
print(f"peak amplitude      {top.magnitude:.3f} px (true 3.0 px)")
print(f"peaks found         {len(peaks)} "
      f"(the detector jitter adds no coherent line)")

# The raw and filtered spectra agree inside the pass band.
in_band = (spec_raw.freqs > 5.0) & (spec_raw.freqs < 8.0)
ratio = spec_filtered.magnitudes[in_band].max() / spec_raw.magnitudes[in_band].max()
print(f"pass-band gain      {ratio:.3f} (zero-phase filter preserves the line)")
