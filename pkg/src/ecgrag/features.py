"""Per-lead time, frequency, and time-frequency features.

Each 12-lead segment maps to a fixed 228-value vector: 12 leads x
(9 time + 4 frequency + 6 wavelet-band energies), lead-major with the
feature order fixed as listed in the extractor functions below. Degenerate
inputs (too few beats, zero signals) are imputed to 0 rather than NaN so
every vector is index-ready.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dsp
from .errors import SignalTooShortError
from .wavelet import wavedec

FEATURES_PER_LEAD = 19
N_LEADS = 12
FEATURE_DIM = FEATURES_PER_LEAD * N_LEADS  # 228
FEATURE_LAYOUT_VERSION = 1

TIME_FEATURE_NAMES = (
    "max", "min", "heart_rate", "hrv_sdnn", "qrs_duration_ms",
    "t_wave_amplitude", "st_deviation", "avg_abs_diff", "rms_diff",
)
FREQ_FEATURE_NAMES = (
    "total_power", "peak_power", "dominant_freq", "spectral_centroid",
)
TIMEFREQ_FEATURE_NAMES = (
    "energy_a5", "energy_d5", "energy_d4", "energy_d3", "energy_d2", "energy_d1",
)


@dataclass
class RPeaks:
    """Detected R-peak sample positions, strictly increasing."""

    indices: np.ndarray
    fs: float

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        if self.indices.size and np.any(np.diff(self.indices) <= 0):
            raise ValueError("R-peak indices must be strictly increasing")

    def __len__(self) -> int:
        return int(self.indices.size)

    def rr_intervals_s(self) -> np.ndarray:
        return np.diff(self.indices) / self.fs


@dataclass
class FeatureVector:
    """228-value lead-major feature vector with a layout version tag."""

    values: np.ndarray
    layout_version: int = FEATURE_LAYOUT_VERSION

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (FEATURE_DIM,):
            raise ValueError(f"feature vector must have {FEATURE_DIM} values")
        if not np.isfinite(self.values).all():
            raise ValueError("feature vector contains non-finite values")

    def lead_block(self, lead: int) -> np.ndarray:
        return self.values[lead * FEATURES_PER_LEAD:(lead + 1) * FEATURES_PER_LEAD]


def detect_r_peaks(x, fs: float) -> RPeaks:
    """Pan-Tompkins-style R-peak detector.

    Zero-phase 5-15 Hz bandpass, derivative, squaring, 150 ms moving-window
    integration, adaptive signal/noise threshold with a 200 ms refractory
    period; accepted peaks are refined to the local maximum of the
    bandpassed signal.
    """
    x = np.asarray(x, dtype=np.float64)
    if len(x) < 2 * fs:
        raise SignalTooShortError(f"need >= 2 s of signal, got {len(x) / fs:.2f} s")
    if np.ptp(x) == 0.0:
        return RPeaks(indices=np.array([], dtype=np.int64), fs=fs)
    bp = dsp.filtfilt(dsp.design_butter_bandpass(5.0, 15.0, 2, fs), x)
    feat = np.gradient(bp) ** 2
    win = max(1, int(round(0.150 * fs)))
    mwi = np.convolve(feat, np.ones(win) / win, mode="same")

    refractory = int(round(0.2 * fs))
    # Candidate peaks: local maxima of the integrated signal.
    cand = np.nonzero((mwi[1:-1] > mwi[:-2]) & (mwi[1:-1] >= mwi[2:]))[0] + 1
    if cand.size == 0:
        return RPeaks(indices=np.array([], dtype=np.int64), fs=fs)

    lead_in = mwi[:min(len(mwi), int(2 * fs))]
    spki = 0.25 * float(np.max(lead_in))
    npki = 0.5 * float(np.mean(lead_in))
    accepted: list[int] = []
    for p in cand:
        thresh = npki + 0.25 * (spki - npki)
        if mwi[p] > thresh and mwi[p] > 0:
            if accepted and p - accepted[-1] < refractory:
                # Within refractory: keep the stronger of the two.
                if mwi[p] > mwi[accepted[-1]]:
                    accepted[-1] = p
                continue
            accepted.append(int(p))
            spki = 0.125 * mwi[p] + 0.875 * spki
        else:
            npki = 0.125 * mwi[p] + 0.875 * npki

    # Refine to the bandpassed signal's local max around each accepted peak.
    half = int(round(0.10 * fs))
    refined: list[int] = []
    for p in accepted:
        lo, hi = max(0, p - half), min(len(bp), p + half + 1)
        r = lo + int(np.argmax(bp[lo:hi]))
        if refined and r - refined[-1] < refractory:
            if bp[r] > bp[refined[-1]]:
                refined[-1] = r
            continue
        refined.append(r)
    return RPeaks(indices=np.array(refined, dtype=np.int64), fs=fs)


def _ms(samples: float, fs: float) -> float:
    return 1000.0 * samples / fs


def _qrs_duration_ms(x: np.ndarray, peaks: RPeaks, fs: float) -> float:
    """Mean onset-to-offset span where |dx/dt| drops below 10% of its local max."""
    slope = np.abs(np.gradient(x))
    half = int(round(0.1 * fs))
    spans = []
    for p in peaks.indices:
        lo, hi = max(0, p - half), min(len(x), p + half + 1)
        local_max = float(np.max(slope[lo:hi]))
        if local_max <= 0:
            continue
        level = 0.1 * local_max
        # Scan outward from the slope crests on each side of the peak; the
        # slope is ~0 at the R apex itself, so starting there would collapse
        # the span to zero.
        crest_l = lo + int(np.argmax(slope[lo:p + 1]))
        onset = lo
        for i in range(crest_l, lo - 1, -1):
            if slope[i] < level:
                onset = i
                break
        crest_r = p + int(np.argmax(slope[p:hi]))
        offset = hi - 1
        for i in range(crest_r, hi):
            if slope[i] < level:
                offset = i
                break
        spans.append(offset - onset)
    return _ms(float(np.mean(spans)), fs) if spans else 0.0


def _t_wave_amplitude(x: np.ndarray, peaks: RPeaks, fs: float) -> float:
    """Mean of max(x) in the [150 ms, 350 ms] window after each R peak."""
    lo_off = int(round(0.150 * fs))
    hi_off = int(round(0.350 * fs))
    vals = [float(np.max(x[p + lo_off:p + hi_off]))
            for p in peaks.indices if p + hi_off <= len(x)]
    return float(np.mean(vals)) if vals else 0.0


def _st_deviation(x: np.ndarray, peaks: RPeaks, fs: float) -> float:
    """Mean of x(R + 80 ms) minus the PR baseline over [R - 80 ms, R - 40 ms]."""
    st_off = int(round(0.080 * fs))
    base_lo = int(round(0.080 * fs))
    base_hi = int(round(0.040 * fs))
    vals = []
    for p in peaks.indices:
        if p - base_lo < 0 or p + st_off >= len(x):
            continue
        baseline = float(np.mean(x[p - base_lo:p - base_hi]))
        vals.append(float(x[p + st_off]) - baseline)
    return float(np.mean(vals)) if vals else 0.0


def time_features(x, fs: float) -> np.ndarray:
    """Nine time-domain features, see :data:`TIME_FEATURE_NAMES` for order.

    Beat-derived features (HR, HRV, QRS, T amplitude, ST deviation) are 0
    when fewer than two R peaks are found.
    """
    x = np.asarray(x, dtype=np.float64)
    diffs = np.diff(x)
    aad = float(np.mean(np.abs(diffs))) if diffs.size else 0.0
    rmsd = float(np.sqrt(np.mean(diffs ** 2))) if diffs.size else 0.0
    peaks = detect_r_peaks(x, fs)
    if len(peaks) >= 2:
        rr = peaks.rr_intervals_s()
        hr = 60.0 / float(np.mean(rr))
        hrv = float(np.std(rr * 1000.0))  # SDNN in ms
        qrs = _qrs_duration_ms(x, peaks, fs)
        t_amp = _t_wave_amplitude(x, peaks, fs)
        st_dev = _st_deviation(x, peaks, fs)
    else:
        hr = hrv = qrs = t_amp = st_dev = 0.0
    return np.array([float(np.max(x)), float(np.min(x)), hr, hrv, qrs,
                     t_amp, st_dev, aad, rmsd])


def freq_features(x, fs: float) -> np.ndarray:
    """Total power, peak power, dominant frequency, spectral centroid.

    One-sided periodogram of the mean-removed, Hann-windowed signal.
    """
    x = np.asarray(x, dtype=np.float64)
    if len(x) < 64:
        raise SignalTooShortError(f"need >= 64 samples, got {len(x)}")
    windowed = (x - np.mean(x)) * np.hanning(len(x))
    p = np.abs(np.fft.rfft(windowed)) ** 2
    freqs = np.fft.rfftfreq(len(x), d=1.0 / fs)
    total = float(np.sum(p))
    if total <= 0.0:
        return np.zeros(4)
    peak = float(np.max(p))
    dominant = float(freqs[int(np.argmax(p))])
    centroid = float(np.sum(freqs * p) / total)
    return np.array([total, peak, dominant, centroid])


def timefreq_features(x) -> np.ndarray:
    """Band energies of a 5-level db6 DWT: [A5, D5, D4, D3, D2, D1].

    Uses the periodized (orthogonal) transform so the energies partition
    the signal energy.
    """
    coeffs = wavedec(x, levels=5, order=6, mode="periodization")
    return coeffs.band_energies()


def extract_features(seg: dsp.Segment) -> FeatureVector:
    """Lead-major concatenation of time || freq || time-freq per lead."""
    blocks = []
    for lead in range(seg.data.shape[0]):
        x = seg.data[lead]
        blocks.append(time_features(x, seg.fs))
        blocks.append(freq_features(x, seg.fs))
        blocks.append(timefreq_features(x))
    return FeatureVector(values=np.concatenate(blocks))
