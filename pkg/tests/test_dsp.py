import math

import numpy as np
import pytest

from labmotion import dsp
from labmotion.dsp import (
    IIRFilter,
    Signal,
    Spectrum,
    butterworth_design,
    fft,
    filtfilt,
    find_peaks,
    savgol_coefficients,
    savgol_filter,
    sosfilt,
    spectrum,
    windowed_spectrum,
)

# =====================================================================
# independent oracles
# =====================================================================


def sg_weights_by_normal_equations(window: int, order: int) -> np.ndarray:
    """Central Savitzky-Golay weights via the normal equations.

    Independent of the implementation's pseudo-inverse route: solve
    (A^T A) c = A^T e_k for each unit vector to build the smoothing row.
    """
    half = window // 2
    offsets = np.arange(-half, half + 1, dtype=np.float64)
    a = np.vander(offsets, order + 1, increasing=True)
    ata = a.T @ a
    weights = np.empty(window)
    for k in range(window):
        e = np.zeros(window)
        e[k] = 1.0
        coeffs = np.linalg.solve(ata, a.T @ e)
        weights[k] = coeffs[0]  # fitted value at the window centre (offset 0)
    return weights


def direct_dft(x: np.ndarray) -> np.ndarray:
    """Brute-force O(N^2) DFT."""
    n = len(x)
    k = np.arange(n)
    twiddle = np.exp(-2j * np.pi * np.outer(k, k) / n)
    return twiddle @ np.asarray(x, dtype=np.complex128)


def sos_to_polynomials(filt: IIRFilter) -> tuple[np.ndarray, np.ndarray]:
    """Expand a section cascade into single numerator/denominator polynomials."""
    b = np.array([1.0])
    a = np.array([1.0])
    for b0, b1, b2, a1, a2 in filt.sos:
        b = np.polymul(b, [b0, b1, b2])
        a = np.polymul(a, [1.0, a1, a2])
    return b, a


def df1_filter_with_steady_history(b: np.ndarray, a: np.ndarray,
                                   x: np.ndarray) -> np.ndarray:
    """Direct-form-I filter assuming the signal held x[0] forever before t=0.

    This realises the same steady-state initialisation contract as the
    implementation, through a completely different recurrence.
    """
    x0 = x[0]
    y0 = x0 * b.sum() / a.sum()
    nb, na = len(b), len(a)
    pre = max(nb, na)
    xh = np.concatenate([np.full(pre, x0), x])
    yh = np.full(pre + len(x), y0)
    for i in range(pre, pre + len(x)):
        acc = 0.0
        for k in range(nb):
            acc += b[k] * xh[i - k]
        for k in range(1, na):
            acc -= a[k] * yh[i - k]
        yh[i] = acc / a[0]
    return yh[pre:]


def filtfilt_oracle(filt: IIRFilter, x: np.ndarray) -> np.ndarray:
    """Replays the pad/forward/backward protocol with the DF1 oracle filter."""
    b, a = sos_to_polynomials(filt)
    pad = min(3 * 2 * filt.order, len(x) - 1)
    head = 2.0 * x[0] - x[pad:0:-1]
    tail = 2.0 * x[-1] - x[-2 : -pad - 2 : -1]
    padded = np.concatenate([head, x, tail])
    forward = df1_filter_with_steady_history(b, a, padded)
    backward = df1_filter_with_steady_history(b, a, forward[::-1])[::-1]
    return backward[pad : pad + len(x)]


def analog_lowpass_magnitude(f_hz: float, fc_hz: float, fs: float, order: int) -> float:
    """Closed-form Butterworth magnitude through the exact bilinear frequency map."""
    w = 2.0 * fs * math.tan(math.pi * f_hz / fs)
    wc = 2.0 * fs * math.tan(math.pi * fc_hz / fs)
    return 1.0 / math.sqrt(1.0 + (w / wc) ** (2 * order))


def analog_bandpass_magnitude(f_hz: float, lo_hz: float, hi_hz: float,
                              fs: float, order: int) -> float:
    w = 2.0 * fs * math.tan(math.pi * f_hz / fs)
    w1 = 2.0 * fs * math.tan(math.pi * lo_hz / fs)
    w2 = 2.0 * fs * math.tan(math.pi * hi_hz / fs)
    bw = w2 - w1
    w0_sq = w1 * w2
    if w == 0.0:
        return 0.0
    ratio = (w * w - w0_sq) / (bw * w)
    return 1.0 / math.sqrt(1.0 + ratio ** (2 * order))


# =====================================================================
# Savitzky-Golay
# =====================================================================


def test_savgol_window5_order2_matches_published_fraction():
    weights = savgol_coefficients(5, 2)
    expected = np.array([-3, 12, 17, 12, -3]) / 35.0
    np.testing.assert_allclose(weights, expected, atol=1e-12)


def test_savgol_window3_order1_is_moving_average():
    np.testing.assert_allclose(savgol_coefficients(3, 1), np.ones(3) / 3.0, atol=1e-12)


def test_savgol_matches_normal_equation_oracle():
    for window, order in [(5, 2), (7, 3), (9, 4), (11, 2), (31, 3), (15, 6)]:
        mine = savgol_coefficients(window, order)
        oracle = sg_weights_by_normal_equations(window, order)
        np.testing.assert_allclose(mine, oracle, atol=1e-10)


def test_savgol_weights_sum_to_one():
    for window, order in [(3, 0), (5, 2), (9, 5), (21, 3), (31, 3)]:
        assert abs(savgol_coefficients(window, order).sum() - 1.0) < 1e-12


def test_savgol_rejects_bad_shapes():
    with pytest.raises(ValueError):
        savgol_coefficients(4, 2)  # even window
    with pytest.raises(ValueError):
        savgol_coefficients(5, 5)  # order >= window
    with pytest.raises(ValueError):
        savgol_coefficients(1, 0)  # window < 3


def test_savgol_filter_reproduces_polynomials_on_interior():
    rng = np.random.default_rng(42)
    n = 60
    x = np.arange(n, dtype=np.float64)
    for _ in range(100):
        window = int(rng.choice([5, 7, 9, 11]))
        order = int(rng.integers(1, 4))
        coeffs = rng.normal(size=order + 1)
        samples = np.polynomial.polynomial.polyval(x / n, coeffs)
        out = savgol_filter(samples, window, order)
        half = window // 2
        np.testing.assert_allclose(out[half : n - half], samples[half : n - half],
                                   atol=1e-9)


def test_savgol_filter_constant_unchanged():
    out = savgol_filter(np.full(20, 0.7), 7, 2)
    np.testing.assert_allclose(out, 0.7, atol=1e-12)


def test_savgol_filter_reduces_noise_variance():
    rng = np.random.default_rng(2024)
    noise = rng.normal(0.0, 1.0, 400)
    out = savgol_filter(noise, 31, 3)
    assert out.var() < noise.var()


def test_savgol_filter_too_short_errors():
    with pytest.raises(ValueError, match="window"):
        savgol_filter(np.zeros(5), 7, 2)


# =====================================================================
# FFT
# =====================================================================


def test_fft_of_impulse_is_flat():
    np.testing.assert_allclose(fft([1.0, 0.0, 0.0, 0.0]), np.ones(4), atol=1e-12)


def test_fft_of_constant_concentrates_at_dc():
    np.testing.assert_allclose(fft([1.0, 1.0, 1.0, 1.0]), [4.0, 0, 0, 0], atol=1e-12)


def test_fft_matches_direct_dft_over_sizes():
    rng = np.random.default_rng(99)
    for n in (8, 16, 32, 64):
        x = rng.normal(size=n)
        mine = fft(x)
        oracle = direct_dft(x)
        scale = np.abs(oracle).max()
        assert np.abs(mine - oracle).max() / scale < 1e-9


def test_fft_parseval():
    rng = np.random.default_rng(5)
    for n in (8, 16, 32, 64, 256):
        x = rng.normal(size=n)
        lhs = np.abs(fft(x)) ** 2
        rhs = n * np.sum(x**2)
        assert abs(lhs.sum() - rhs) / rhs < 1e-6


def test_fft_linearity():
    rng = np.random.default_rng(6)
    x = rng.normal(size=32)
    y = rng.normal(size=32)
    a, b = 2.5, -0.7
    combined = fft(a * x + b * y)
    separate = a * fft(x) + b * fft(y)
    assert np.abs(combined - separate).max() < 1e-9


def test_fft_rejects_non_power_of_two():
    with pytest.raises(ValueError, match="power of two"):
        fft(np.zeros(12))


def test_fft_handles_complex_input():
    rng = np.random.default_rng(8)
    x = rng.normal(size=16) + 1j * rng.normal(size=16)
    np.testing.assert_allclose(fft(x), direct_dft(x), atol=1e-9)


# =====================================================================
# Butterworth design
# =====================================================================


def test_lowpass_cutoff_is_minus_3db():
    filt = butterworth_design(4, 5.0, 30.0, "lowpass")
    mag = abs(filt.response(5.0)[0])
    assert abs(mag - 1.0 / math.sqrt(2.0)) < 1e-6


def test_lowpass_dc_gain_is_one():
    for order in (1, 2, 3, 4, 7):
        filt = butterworth_design(order, 4.0, 30.0, "lowpass")
        assert abs(abs(filt.response(0.0)[0]) - 1.0) < 1e-9


def test_lowpass_matches_analog_prototype_magnitude():
    fs = 30.0
    for order in (1, 2, 4):
        fc = 5.0
        filt = butterworth_design(order, fc, fs, "lowpass")
        for f in (0.5, 1.0, 2.5, 5.0, 8.0, 12.0, 14.0):
            mine = abs(filt.response(f)[0])
            oracle = analog_lowpass_magnitude(f, fc, fs, order)
            assert abs(mine - oracle) < 1e-6, (order, f)


def test_butterworth_sweep_orders_and_cutoffs_stable_and_correct():
    fs = 30.0
    rng = np.random.default_rng(77)
    for order in range(1, 11):
        for fc in rng.uniform(0.01 * fs, 0.49 * fs, 20):
            filt = butterworth_design(order, float(fc), fs, "lowpass")
            # -3 dB point lands on the requested cutoff
            assert abs(abs(filt.response(float(fc))[0]) - 1 / math.sqrt(2)) < 1e-6
            # DC gain exactly one
            assert abs(abs(filt.response(0.0)[0]) - 1.0) < 1e-9
            # every section pole strictly inside the unit circle
            for b0, b1, b2, a1, a2 in filt.sos:
                for pole in np.roots([1.0, a1, a2]):
                    assert abs(pole) < 1.0


def test_bandpass_edges_are_minus_3db():
    filt = butterworth_design(2, (2.0, 8.0), 30.0, "bandpass")
    for edge in (2.0, 8.0):
        assert abs(abs(filt.response(edge)[0]) - 1 / math.sqrt(2)) < 1e-6


def test_bandpass_matches_analog_prototype_magnitude():
    fs = 30.0
    lo, hi = 2.0, 8.0
    for order in (1, 2, 3):
        filt = butterworth_design(order, (lo, hi), fs, "bandpass")
        for f in (0.5, 1.0, 3.0, 4.0, 6.0, 10.0, 13.0):
            mine = abs(filt.response(f)[0])
            oracle = analog_bandpass_magnitude(f, lo, hi, fs, order)
            assert abs(mine - oracle) < 1e-6, (order, f)


def test_bandpass_rejects_dc():
    filt = butterworth_design(3, (1.0, 10.0), 30.0, "bandpass")
    assert abs(filt.response(0.0)[0]) < 1e-9


def test_butterworth_rejects_bad_cutoffs():
    with pytest.raises(ValueError):
        butterworth_design(2, 15.0, 30.0, "lowpass")  # at Nyquist
    with pytest.raises(ValueError):
        butterworth_design(2, 0.0, 30.0, "lowpass")
    with pytest.raises(ValueError):
        butterworth_design(2, (8.0, 2.0), 30.0, "bandpass")
    with pytest.raises(ValueError):
        butterworth_design(0, 5.0, 30.0, "lowpass")
    with pytest.raises(ValueError):
        butterworth_design(2, 5.0, 30.0, "highpass")


# =====================================================================
# filtering
# =====================================================================


def test_sosfilt_matches_direct_form_oracle():
    rng = np.random.default_rng(31)
    x = rng.normal(size=200)
    for order in (1, 2, 4, 5):
        filt = butterworth_design(order, 4.0, 30.0, "lowpass")
        mine = sosfilt(filt, x)
        b, a = sos_to_polynomials(filt)
        oracle = df1_filter_with_steady_history(b, a, x)
        np.testing.assert_allclose(mine, oracle, atol=1e-9)


def test_filtfilt_constant_passes_unchanged():
    filt = butterworth_design(4, 3.0, 30.0, "lowpass")
    out = filtfilt(filt, np.full(100, 0.37))
    np.testing.assert_allclose(out, 0.37, atol=1e-6)


def test_filtfilt_sine_at_cutoff_halves_with_zero_phase():
    fs, fc = 30.0, 3.0
    filt = butterworth_design(4, fc, fs, "lowpass")
    t = np.arange(1200) / fs
    x = np.sin(2 * np.pi * fc * t)
    y = filtfilt(filt, x)
    # correlate on the interior to dodge edge transients
    sl = slice(150, -150)
    probe = np.exp(-2j * np.pi * fc * t[sl])
    zx = (x[sl] * probe).sum()
    zy = (y[sl] * probe).sum()
    ratio = abs(zy) / abs(zx)
    phase_deg = math.degrees(abs(np.angle(zy / zx)))
    assert abs(ratio - 0.5) < 0.01
    assert phase_deg < 1.0


def test_filtfilt_matches_independent_direct_form_oracle():
    rng = np.random.default_rng(55)
    fs = 30.0
    t = np.arange(300) / fs
    sweep = np.sin(2 * np.pi * (1.0 * t + 0.2 * t**2)) + 0.1 * rng.normal(size=len(t))
    for order, kind, cutoff in [(2, "lowpass", 5.0), (4, "lowpass", 3.0),
                                (2, "bandpass", (1.0, 8.0))]:
        filt = butterworth_design(order, cutoff, fs, kind)
        mine = filtfilt(filt, sweep)
        oracle = filtfilt_oracle(filt, sweep)
        np.testing.assert_allclose(mine, oracle, atol=1e-9)


def test_filtfilt_zero_phase_time_reversal_symmetry():
    rng = np.random.default_rng(66)
    x = rng.normal(size=400)
    filt = butterworth_design(3, 4.0, 30.0, "lowpass")
    forward = filtfilt(filt, x)
    reverse = filtfilt(filt, x[::-1])[::-1]
    np.testing.assert_allclose(forward[50:-50], reverse[50:-50], atol=1e-6)


def test_filtfilt_too_short_errors():
    filt = butterworth_design(4, 3.0, 30.0, "lowpass")
    with pytest.raises(ValueError, match="length"):
        filtfilt(filt, np.zeros(10))


def test_filtfilt_accepts_signal_objects():
    filt = butterworth_design(2, 3.0, 30.0, "lowpass")
    sig = Signal(np.full(50, 1.0), 30.0)
    np.testing.assert_allclose(filtfilt(filt, sig), 1.0, atol=1e-6)


# =====================================================================
# spectrum
# =====================================================================


def test_spectrum_peak_magnitude_close_to_amplitude():
    fs, n = 32.0, 256
    t = np.arange(n) / fs
    amp, f0 = 0.8, 4.0  # exact bin of the original length
    spec = spectrum(Signal(amp * np.sin(2 * np.pi * f0 * t), fs))
    peak_mag = spec.magnitudes.max()
    assert abs(peak_mag - amp) / amp < 0.02


def test_spectrum_of_constant_is_flat_zero():
    spec = spectrum(Signal(np.full(64, 3.3), 30.0))
    assert spec.magnitudes.max() < 1e-9


def test_spectrum_peak_bin_location():
    fs, n = 30.0, 512
    t = np.arange(n) / fs
    spec = spectrum(Signal(np.sin(2 * np.pi * 4.0 * t), fs))
    peak_freq = spec.freqs[np.argmax(spec.magnitudes)]
    assert abs(peak_freq - 4.0) <= spec.resolution


def test_spectrum_default_padding_is_4x_next_pow2():
    spec = spectrum(Signal(np.random.default_rng(0).normal(size=100), 10.0))
    assert spec.resolution == pytest.approx(10.0 / 512)  # next pow2 >= 400


def test_spectrum_rejects_short_and_bad_nfft():
    with pytest.raises(ValueError):
        spectrum(Signal(np.zeros(7), 10.0))
    with pytest.raises(ValueError):
        spectrum(Signal(np.zeros(16), 10.0), n_fft=24)
    with pytest.raises(ValueError):
        spectrum(Signal(np.zeros(16), 10.0), n_fft=8)


# =====================================================================
# peaks
# =====================================================================


def test_find_peaks_three_tone_within_tolerance():
    fs, n = 30.0, 2048
    t = np.arange(n) / fs
    x = (np.sin(2 * np.pi * 4.0 * t)
         + 0.8 * np.sin(2 * np.pi * 6.35 * t)
         + 0.6 * np.sin(2 * np.pi * 11.35 * t))
    peaks = find_peaks(spectrum(Signal(x, fs)), n_peaks=3)
    freqs = sorted(p.freq_hz for p in peaks)
    for measured, truth in zip(freqs, (4.0, 6.35, 11.35)):
        assert abs(measured - truth) < 0.05


def test_find_peaks_returns_fewer_when_single_tone():
    fs, n = 30.0, 512
    t = np.arange(n) / fs
    peaks = find_peaks(spectrum(Signal(np.sin(2 * np.pi * 5.0 * t), fs)), n_peaks=3)
    assert len(peaks) == 1
    assert abs(peaks[0].freq_hz - 5.0) < 0.05


def test_find_peaks_separation_suppresses_close_smaller_peak():
    freqs = np.arange(0.0, 10.0, 0.05)
    mags = (np.exp(-((freqs - 5.0) ** 2) / (2 * 0.02**2))
            + 0.6 * np.exp(-((freqs - 5.1) ** 2) / (2 * 0.02**2)))
    spec = Spectrum(freqs, mags, 0.05)
    peaks = find_peaks(spec, n_peaks=3, min_separation_hz=1.0, min_prominence=0.05)
    assert len(peaks) == 1
    assert abs(peaks[0].freq_hz - 5.0) < 0.05


def test_find_peaks_orders_by_magnitude():
    fs, n = 30.0, 1024
    t = np.arange(n) / fs
    x = 0.5 * np.sin(2 * np.pi * 3.0 * t) + 1.0 * np.sin(2 * np.pi * 9.0 * t)
    peaks = find_peaks(spectrum(Signal(x, fs)), n_peaks=2)
    assert abs(peaks[0].freq_hz - 9.0) < 0.05
    assert abs(peaks[1].freq_hz - 3.0) < 0.05
    assert peaks[0].magnitude > peaks[1].magnitude


def test_find_peaks_on_silent_spectrum_is_empty():
    spec = Spectrum(np.arange(0.0, 5.0, 0.1), np.zeros(50), 0.1)
    assert find_peaks(spec) == []


# =====================================================================
# windowed spectrum
# =====================================================================


def test_windowed_spectrum_tracks_chirp():
    fs, n = 30.0, 900
    t = np.arange(n) / fs
    duration = n / fs
    f0, f1 = 2.0, 10.0
    phase = 2 * np.pi * (f0 * t + (f1 - f0) / (2 * duration) * t**2)
    segments = windowed_spectrum(Signal(np.sin(phase), fs), segment_len=256, overlap=0.5)
    assert len(segments) == 6
    dominant = []
    for centre, spec in segments:
        peaks = find_peaks(spec, n_peaks=1)
        dominant.append((centre, peaks[0].freq_hz))
    # instantaneous frequency f0 + (f1-f0) * t / duration at segment centres
    for centre, measured in dominant:
        expected = f0 + (f1 - f0) * centre / duration
        assert abs(measured - expected) < 0.6
    assert all(b[1] > a[1] for a, b in zip(dominant, dominant[1:]))


def test_windowed_spectrum_rejects_bad_layouts():
    sig = Signal(np.zeros(100), 10.0)
    with pytest.raises(ValueError):
        windowed_spectrum(sig, segment_len=4)
    with pytest.raises(ValueError):
        windowed_spectrum(sig, segment_len=64, overlap=1.0)
    with pytest.raises(ValueError):
        windowed_spectrum(Signal(np.zeros(20), 10.0), segment_len=64)


# =====================================================================
# types and CSV emitters
# =====================================================================


def test_signal_validation():
    with pytest.raises(ValueError):
        Signal(np.zeros(0), 10.0)
    with pytest.raises(ValueError):
        Signal(np.zeros(4), 0.0)
    with pytest.raises(ValueError):
        Signal(np.zeros((2, 2)), 10.0)


def test_iir_filter_rejects_unstable_sections():
    with pytest.raises(ValueError, match="stable"):
        IIRFilter(np.array([[1.0, 0.0, 0.0, -2.5, 1.2]]), 30.0, 2, "lowpass", (5.0,))


def test_spectrum_csv_round_numbers():
    spec = Spectrum(np.array([0.0, 0.5, 1.0]), np.array([0.0, 2.0, 0.25]), 0.5)
    text = dsp.spectrum_to_csv(spec)
    assert text.splitlines()[0] == "freq_hz,magnitude"
    assert text.splitlines()[1] == "0,0"
    assert text.splitlines()[2] == "0.5,2"


def test_peaks_csv_prominence_is_relative_to_global_max():
    peaks = [dsp.Peak(4.0, 2.0), dsp.Peak(9.0, 1.0)]
    text = dsp.peaks_to_csv(peaks, global_max=2.0)
    lines = text.splitlines()
    assert lines[0] == "freq_hz,magnitude,prominence"
    assert lines[1] == "4,2,1.000000"
    assert lines[2] == "9,1,0.500000"
