"""Signal conditioning and frequency analysis for displacement series.

Everything here is self-contained: polynomial smoothing weights come from a
least-squares fit, IIR designs from the analog Butterworth prototype mapped
through the prewarped bilinear transform, and the FFT is an iterative
radix-2 transform restricted to power-of-two lengths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .textio import fmt6

# Default conditioning parameters: a gentle polynomial smoother for slow
# deflection records and a vibration band covering a few Hz up to just
# below the common 30 fps Nyquist limit.
DEFAULT_SMOOTHING_WINDOW = 31
DEFAULT_SMOOTHING_ORDER = 3
DEFAULT_VIBRATION_ORDER = 4
DEFAULT_VIBRATION_BAND_HZ = (0.5, 14.0)


@dataclass(frozen=True)
class Signal:
    """Uniformly sampled 1-D signal."""

    samples: np.ndarray
    fs: float

    def __post_init__(self) -> None:
        samples = np.ascontiguousarray(np.asarray(self.samples, dtype=np.float64))
        if samples.ndim != 1:
            raise ValueError("signal samples must be 1-D")
        if samples.size == 0:
            raise ValueError("signal must contain at least one sample")
        if not np.isfinite(samples).all():
            raise ValueError("signal samples must be finite")
        if not (self.fs > 0):
            raise ValueError("sample rate must be positive")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class Spectrum:
    """One-sided amplitude spectrum."""

    freqs: np.ndarray
    magnitudes: np.ndarray
    resolution: float

    def __post_init__(self) -> None:
        freqs = np.asarray(self.freqs, dtype=np.float64)
        mags = np.asarray(self.magnitudes, dtype=np.float64)
        if freqs.shape != mags.shape or freqs.ndim != 1:
            raise ValueError("freqs and magnitudes must be equal-length 1-D arrays")
        if (mags < 0).any():
            raise ValueError("magnitudes must be non-negative")
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "magnitudes", mags)


class Peak(NamedTuple):
    freq_hz: float
    magnitude: float


@dataclass(frozen=True)
class IIRFilter:
    """Cascade of second-order sections ``[b0, b1, b2, a1, a2]`` (a0 = 1)."""

    sos: np.ndarray
    fs: float
    order: int
    kind: str
    cutoff: tuple[float, ...]

    def __post_init__(self) -> None:
        sos = np.asarray(self.sos, dtype=np.float64)
        if sos.ndim != 2 or sos.shape[1] != 5:
            raise ValueError("sos must have shape (n_sections, 5)")
        for a1, a2 in sos[:, 3:]:
            poles = np.roots([1.0, a1, a2])
            if poles.size and np.abs(poles).max() >= 1.0:
                raise ValueError("unstable section: pole on or outside the unit circle")
        object.__setattr__(self, "sos", sos)

    def response(self, freq_hz) -> np.ndarray:
        """Complex frequency response evaluated at the given frequencies."""
        w = 2.0 * np.pi * np.atleast_1d(np.asarray(freq_hz, dtype=np.float64)) / self.fs
        z = np.exp(1j * w)
        zi1 = 1.0 / z
        zi2 = zi1 * zi1
        h = np.ones_like(z)
        for b0, b1, b2, a1, a2 in self.sos:
            h *= (b0 + b1 * zi1 + b2 * zi2) / (1.0 + a1 * zi1 + a2 * zi2)
        return h


def savgol_coefficients(window: int, order: int) -> np.ndarray:
    """Convolution weights of the centre point of a least-squares polynomial fit.

    The fit runs over ``window`` symmetric samples with an odd window and
    ``order < window``.  Weights are row 0 of the pseudo-inverse of the
    Vandermonde design matrix, so they reproduce any polynomial up to
    ``order`` exactly and sum to 1.
    """
    if window < 3 or window % 2 == 0:
        raise ValueError("window must be odd and >= 3")
    if not (0 <= order < window):
        raise ValueError("order must satisfy 0 <= order < window")
    half = window // 2
    offsets = np.arange(-half, half + 1, dtype=np.float64)
    design = np.vander(offsets, order + 1, increasing=True)
    return np.linalg.pinv(design)[0]


def savgol_filter(signal: Signal | np.ndarray, window: int, order: int) -> np.ndarray:
    """Smooth a signal with Savitzky-Golay weights and mirror edge padding."""
    x = signal.samples if isinstance(signal, Signal) else np.asarray(signal, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("expected a 1-D signal")
    if len(x) < window:
        raise ValueError(f"signal length {len(x)} is shorter than the window {window}")
    weights = savgol_coefficients(window, order)
    half = window // 2
    padded = np.pad(x, half, mode="reflect")
    out = np.zeros(len(x))
    for k, w in enumerate(weights):
        out += w * padded[k : k + len(x)]
    return out


def _analog_lowpass_poles(order: int) -> np.ndarray:
    k = np.arange(1, order + 1, dtype=np.float64)
    theta = np.pi * (2.0 * k + order - 1.0) / (2.0 * order)
    return np.exp(1j * theta)


def _bilinear(s_poles: np.ndarray, fs: float) -> np.ndarray:
    c = 2.0 * fs
    return (c + s_poles) / (c - s_poles)


def _pair_conjugates(poles: np.ndarray) -> list[np.ndarray]:
    """Group poles into conjugate (or real) pairs; a lone real pole stays single."""
    remaining = sorted(poles, key=lambda p: (round(p.real, 12), round(abs(p.imag), 12)))
    complexes = [p for p in remaining if abs(p.imag) > 1e-12 and p.imag > 0]
    reals = [p.real for p in remaining if abs(p.imag) <= 1e-12]
    pairs: list[np.ndarray] = [np.array([p, p.conjugate()]) for p in complexes]
    while len(reals) >= 2:
        pairs.append(np.array([reals.pop(0), reals.pop(0)], dtype=complex))
    if reals:
        pairs.append(np.array([reals.pop(0)], dtype=complex))
    return pairs


def _poly_from_roots(roots: np.ndarray) -> np.ndarray:
    poly = np.array([1.0 + 0j])
    for r in roots:
        poly = np.convolve(poly, np.array([1.0, -r]))
    return poly


def butterworth_design(
    order: int,
    cutoff_hz: float | Sequence[float],
    fs: float,
    kind: str = "lowpass",
) -> IIRFilter:
    """Design a digital Butterworth filter as second-order sections.

    The analog prototype is mapped with the bilinear transform after
    prewarping the requested edges, so the -3 dB points land exactly on
    ``cutoff_hz``.  Lowpass sections are normalised to unit DC gain;
    bandpass cascades to unit gain at the geometric centre frequency.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if not (fs > 0):
        raise ValueError("fs must be positive")
    nyquist = fs / 2.0

    if kind == "lowpass":
        fc = float(cutoff_hz) if np.isscalar(cutoff_hz) else float(cutoff_hz[0])
        if not (0.0 < fc < nyquist):
            raise ValueError(f"cutoff must lie in (0, {nyquist}) Hz")
        warped = 2.0 * fs * math.tan(math.pi * fc / fs)
        z_poles = _bilinear(_analog_lowpass_poles(order) * warped, fs)
        sections = []
        for group in _pair_conjugates(z_poles):
            a = _poly_from_roots(group).real
            if len(group) == 2:
                b = np.array([1.0, 2.0, 1.0])
                a_row = (a[1], a[2])
            else:
                b = np.array([1.0, 1.0, 0.0])
                a_row = (a[1], 0.0)
            gain = (1.0 + a_row[0] + a_row[1]) / b.sum()
            sections.append([b[0] * gain, b[1] * gain, b[2] * gain, a_row[0], a_row[1]])
        return IIRFilter(np.array(sections), fs, order, "lowpass", (fc,))

    if kind == "bandpass":
        lo, hi = (float(cutoff_hz[0]), float(cutoff_hz[1]))
        if not (0.0 < lo < hi < nyquist):
            raise ValueError(f"band edges must satisfy 0 < low < high < {nyquist} Hz")
        w1 = 2.0 * fs * math.tan(math.pi * lo / fs)
        w2 = 2.0 * fs * math.tan(math.pi * hi / fs)
        bw = w2 - w1
        w0_sq = w1 * w2
        s_poles = []
        for q in _analog_lowpass_poles(order):
            disc = np.sqrt((q * bw) ** 2 - 4.0 * w0_sq + 0j)
            s_poles.extend([(q * bw + disc) / 2.0, (q * bw - disc) / 2.0])
        z_poles = _bilinear(np.asarray(s_poles), fs)
        sections = []
        for group in _pair_conjugates(z_poles):
            a = _poly_from_roots(group).real
            # each section takes one zero at z = 1 and one at z = -1
            sections.append([1.0, 0.0, -1.0, a[1], a[2] if len(group) == 2 else 0.0])
        sos = np.array(sections)
        centre = fs / math.pi * math.atan(math.sqrt(w0_sq) / (2.0 * fs))
        design = IIRFilter(sos, fs, 2 * order, "bandpass", (lo, hi))
        gain = abs(design.response(centre)[0])
        sos = sos.copy()
        sos[:, :3] /= gain ** (1.0 / len(sections))
        return IIRFilter(sos, fs, 2 * order, "bandpass", (lo, hi))

    raise ValueError(f"unknown filter kind {kind!r}; expected 'lowpass' or 'bandpass'")


def _section_steady_state(section: np.ndarray, x0: float) -> tuple[float, float, float]:
    """Steady-state transposed direct-form-II state for a constant input ``x0``."""
    b0, b1, b2, a1, a2 = section
    denom = 1.0 + a1 + a2
    gain = (b0 + b1 + b2) / denom
    y0 = gain * x0
    z1 = y0 - b0 * x0
    z2 = b2 * x0 - a2 * y0
    return z1, z2, y0


def sosfilt(filt: IIRFilter, x: np.ndarray, *, steady_init: bool = True) -> np.ndarray:
    """Run the SOS cascade once, forward, over ``x``.

    With ``steady_init`` each section starts in its constant-input steady
    state for ``x[0]``, which keeps constant signals exactly constant.
    """
    y = np.asarray(x, dtype=np.float64).tolist()
    x0 = y[0] if y else 0.0
    for section in filt.sos:
        b0, b1, b2, a1, a2 = (float(v) for v in section)
        if steady_init and y:
            z1, z2, _ = _section_steady_state(section, x0)
        else:
            z1 = z2 = 0.0
        for i, xi in enumerate(y):
            yi = b0 * xi + z1
            z1 = b1 * xi - a1 * yi + z2
            z2 = b2 * xi - a2 * yi
            y[i] = yi
        if steady_init and y:
            x0 = _section_steady_state(section, x0)[2]
    return np.asarray(y)


def filtfilt(filt: IIRFilter, signal: Signal | np.ndarray) -> np.ndarray:
    """Zero-phase filtering: forward pass, reverse, forward again, reverse.

    Edge transients are mitigated by odd-symmetric reflection padding of
    ``3 * (2 * order)`` samples (capped at ``len - 1``), trimmed afterwards.
    """
    x = signal.samples if isinstance(signal, Signal) else np.asarray(signal, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("expected a 1-D signal")
    min_len = 3 * filt.order
    if len(x) <= min_len:
        raise ValueError(f"signal length {len(x)} must exceed 3 x filter order = {min_len}")
    pad = min(3 * (2 * filt.order), len(x) - 1)
    head = 2.0 * x[0] - x[pad:0:-1]
    tail = 2.0 * x[-1] - x[-2 : -pad - 2 : -1]
    extended = np.concatenate([head, x, tail])
    y = sosfilt(filt, extended)
    y = sosfilt(filt, y[::-1])
    y = y[::-1]
    return y[pad : pad + len(x)].copy()


def fft(x: Sequence[complex] | np.ndarray) -> np.ndarray:
    """Iterative radix-2 decimation-in-time FFT (unnormalised, forward sign).

    The length must be a power of two; callers zero-pad beforehand.
    """
    data = np.asarray(x)
    n = len(data)
    if n == 0 or (n & (n - 1)) != 0:
        raise ValueError(f"fft length must be a power of two, got {n}")
    out = data.astype(np.complex128)
    if n == 1:
        return out
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for _ in range(bits):
        rev = (rev << 1) | (idx & 1)
        idx >>= 1
    out = out[rev]
    size = 2
    while size <= n:
        half = size // 2
        twiddle = np.exp(-2j * np.pi * np.arange(half) / size)
        blocks = out.reshape(n // size, size)
        upper = blocks[:, half:] * twiddle
        lower = blocks[:, :half].copy()
        blocks[:, :half] = lower + upper
        blocks[:, half:] = lower - upper
        size *= 2
    return out


def _next_pow2(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


def spectrum(signal: Signal, n_fft: int | None = None) -> Spectrum:
    """One-sided amplitude spectrum of a mean-detrended, Hann-windowed signal.

    Zero-pads to ``n_fft`` (default: next power of two >= 4x the length) and
    scales magnitudes by ``2 / sum(window)`` so a full-scale sine at a bin
    centre reads its amplitude.
    """
    x = signal.samples
    n = len(x)
    if n < 8:
        raise ValueError(f"need at least 8 samples for a spectrum, got {n}")
    if n_fft is None:
        n_fft = _next_pow2(4 * n)
    if n_fft < n or (n_fft & (n_fft - 1)) != 0:
        raise ValueError(f"n_fft must be a power of two >= signal length, got {n_fft}")
    window = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)
    tapered = (x - x.mean()) * window
    padded = np.zeros(n_fft)
    padded[:n] = tapered
    transform = fft(padded)
    half = n_fft // 2 + 1
    freqs = np.arange(half) * (signal.fs / n_fft)
    mags = np.abs(transform[:half]) * (2.0 / window.sum())
    return Spectrum(freqs, mags, signal.fs / n_fft)


def find_peaks(
    spec: Spectrum,
    n_peaks: int = 3,
    min_separation_hz: float = 0.5,
    min_prominence: float = 0.05,
) -> list[Peak]:
    """Dominant spectral peaks, largest magnitude first.

    A candidate is a strict local maximum exceeding ``min_prominence`` times
    the global maximum; candidates closer than ``min_separation_hz`` to an
    accepted peak are suppressed.  Peak frequency and magnitude are refined
    by a three-point parabola on log magnitude.
    """
    if n_peaks < 1:
        raise ValueError("n_peaks must be >= 1")
    mags = spec.magnitudes
    freqs = spec.freqs
    if len(mags) < 3:
        return []
    global_max = mags.max()
    if global_max <= 0.0:
        return []
    interior = mags[1:-1]
    is_peak = (interior > mags[:-2]) & (interior > mags[2:])
    candidates = np.nonzero(is_peak)[0] + 1
    candidates = candidates[mags[candidates] >= min_prominence * global_max]
    order = candidates[np.argsort(-mags[candidates], kind="stable")]
    accepted: list[Peak] = []
    accepted_freqs: list[float] = []
    for idx in order:
        if len(accepted) == n_peaks:
            break
        freq = float(freqs[idx])
        mag = float(mags[idx])
        if any(abs(freq - f) < min_separation_hz for f in accepted_freqs):
            continue
        neighbourhood = mags[idx - 1 : idx + 2]
        if (neighbourhood > 0.0).all():
            lm, lc, lp = np.log(neighbourhood)
            denom = lm - 2.0 * lc + lp
            if denom < 0.0:
                delta = 0.5 * (lm - lp) / denom
                freq = float((idx + delta) * spec.resolution)
                mag = float(np.exp(lc - 0.25 * (lm - lp) * delta))
        accepted.append(Peak(freq, mag))
        accepted_freqs.append(float(freqs[idx]))
    return accepted


def windowed_spectrum(
    signal: Signal,
    segment_len: int,
    overlap: float = 0.5,
) -> list[tuple[float, Spectrum]]:
    """Per-segment spectra for signals whose content drifts over time.

    Returns ``(segment centre time, spectrum)`` pairs over full segments
    with the requested fractional overlap.
    """
    if segment_len < 8:
        raise ValueError("segment_len must be >= 8")
    if not (0.0 <= overlap < 1.0):
        raise ValueError("overlap must lie in [0, 1)")
    hop = max(1, int(round(segment_len * (1.0 - overlap))))
    out = []
    start = 0
    x = signal.samples
    while start + segment_len <= len(x):
        seg = Signal(x[start : start + segment_len], signal.fs)
        centre = (start + (segment_len - 1) / 2.0) / signal.fs
        out.append((centre, spectrum(seg)))
        start += hop
    if not out:
        raise ValueError(
            f"signal of length {len(x)} has no full segment of {segment_len} samples"
        )
    return out


def spectrum_to_csv(spec: Spectrum) -> str:
    lines = ["freq_hz,magnitude"]
    for f, m in zip(spec.freqs, spec.magnitudes):
        lines.append(f"{fmt6(f)},{m:.9g}")
    return "\n".join(lines) + "\n"


def peaks_to_csv(peaks: Sequence[Peak], global_max: float) -> str:
    """Peak report; prominence is the magnitude relative to the spectrum maximum."""
    lines = ["freq_hz,magnitude,prominence"]
    for p in peaks:
        rel = p.magnitude / global_max if global_max > 0 else 0.0
        lines.append(f"{fmt6(p.freq_hz)},{p.magnitude:.9g},{rel:.6f}")
    return "\n".join(lines) + "\n"
