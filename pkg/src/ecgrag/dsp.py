"""Preprocessing chain for ECG signals.

Per lead, in order: 50 Hz notch, 60 Hz notch, 0.5-100 Hz fourth-order
Butterworth bandpass, 0.05 Hz second-order high-pass (all applied
bidirectionally for zero phase), Daubechies-6 level-4 wavelet denoising,
then resampling to 250 Hz and segmentation into non-overlapping 5-second
windows.

Filter design: the notch is the cookbook constant-gain biquad; Butterworth
responses come from the bilinear transform with frequency prewarping
(scipy's second-order-section designer) and are stored as explicit biquad
cascades so stability can be checked per section.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import signal as sps

from .errors import (
    FrequencyOutOfRangeError,
    SamplingRateError,
    SignalTooShortError,
    UnsupportedOrderError,
)
from .ingest import EcgRecord
from .wavelet import wavedec, waverec

TARGET_FS = 250.0
SEGMENT_SECONDS = 5.0
SEGMENT_SAMPLES = int(TARGET_FS * SEGMENT_SECONDS)  # 1250


@dataclass(frozen=True)
class BiquadCoeffs:
    """One second-order section, a0 normalized to 1."""

    b0: float
    b1: float
    b2: float
    a1: float
    a2: float

    def pole_radius(self) -> float:
        roots = np.roots([1.0, self.a1, self.a2])
        return float(np.max(np.abs(roots))) if roots.size else 0.0

    def is_stable(self) -> bool:
        return self.pole_radius() < 1.0

    def as_sos_row(self) -> np.ndarray:
        return np.array([self.b0, self.b1, self.b2, 1.0, self.a1, self.a2])


@dataclass(frozen=True)
class IirCascade:
    """Ordered cascade of biquad sections."""

    sections: tuple[BiquadCoeffs, ...]
    description: str = ""

    def __post_init__(self):
        if not self.sections:
            raise ValueError("cascade needs at least one section")

    @property
    def order(self) -> int:
        return 2 * len(self.sections)

    def as_sos(self) -> np.ndarray:
        return np.stack([s.as_sos_row() for s in self.sections])

    def is_stable(self) -> bool:
        return all(s.is_stable() for s in self.sections)


@dataclass(frozen=True)
class WaveletSpec:
    family: str = "daubechies"
    order: int = 6
    levels: int = 4

    def __post_init__(self):
        if self.family != "daubechies":
            raise ValueError(f"unsupported wavelet family: {self.family!r}")
        if self.levels < 1:
            raise ValueError("levels must be >= 1")


@dataclass
class Segment:
    """One 5-second, 12-lead window at 250 Hz."""

    record_id: str
    segment_index: int
    data: np.ndarray  # [12, 1250] mV
    fs: float = TARGET_FS

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.shape != (12, SEGMENT_SAMPLES):
            raise ValueError(
                f"segment must be 12x{SEGMENT_SAMPLES}, got {self.data.shape}")
        if self.fs != TARGET_FS:
            raise SamplingRateError(f"segment fs must be {TARGET_FS}, got {self.fs}")

    @property
    def key(self) -> tuple[str, int]:
        return (self.record_id, self.segment_index)


def _check_band(fs: float, *freqs: float) -> None:
    if fs <= 0:
        raise FrequencyOutOfRangeError(f"fs must be > 0, got {fs}")
    for f in freqs:
        if not 0 < f < fs / 2:
            raise FrequencyOutOfRangeError(
                f"frequency {f} Hz outside (0, {fs / 2}) at fs={fs}")


def design_notch(f0: float, q: float, fs: float) -> BiquadCoeffs:
    """Constant-gain notch biquad: unity at DC and Nyquist, null at ``f0``.

    Bandwidth (between -3 dB points) is ``f0 / q``.
    """
    _check_band(fs, f0)
    if q <= 0:
        raise FrequencyOutOfRangeError(f"q must be > 0, got {q}")
    w0 = 2.0 * math.pi * f0 / fs
    alpha = math.sin(w0) / (2.0 * q)
    cw = math.cos(w0)
    a0 = 1.0 + alpha
    return BiquadCoeffs(
        b0=1.0 / a0, b1=-2.0 * cw / a0, b2=1.0 / a0,
        a1=-2.0 * cw / a0, a2=(1.0 - alpha) / a0,
    )


def _sos_to_cascade(sos: np.ndarray, description: str) -> IirCascade:
    sections = []
    for row in sos:
        b0, b1, b2, a0, a1, a2 = row
        sections.append(BiquadCoeffs(b0=b0 / a0, b1=b1 / a0, b2=b2 / a0,
                                     a1=a1 / a0, a2=a2 / a0))
    return IirCascade(sections=tuple(sections), description=description)


def design_butter_bandpass(low: float, high: float, order: int, fs: float) -> IirCascade:
    """Butterworth bandpass of total order ``order`` (even), as biquads."""
    if order < 2 or order % 2:
        raise UnsupportedOrderError(f"bandpass order must be even >= 2, got {order}")
    if low >= high:
        raise FrequencyOutOfRangeError(f"low {low} >= high {high}")
    _check_band(fs, low, high)
    sos = sps.butter(order // 2, [low, high], btype="bandpass", fs=fs, output="sos")
    return _sos_to_cascade(sos, f"butter bandpass {low}-{high} Hz order {order}")


def design_butter_highpass(cutoff: float, order: int, fs: float) -> IirCascade:
    """Butterworth high-pass of total order ``order`` (even); zero gain at DC."""
    if order < 2 or order % 2:
        raise UnsupportedOrderError(f"high-pass order must be even >= 2, got {order}")
    _check_band(fs, cutoff)
    sos = sps.butter(order, cutoff, btype="highpass", fs=fs, output="sos")
    return _sos_to_cascade(sos, f"butter highpass {cutoff} Hz order {order}")


def _as_cascade(filt: IirCascade | BiquadCoeffs) -> IirCascade:
    if isinstance(filt, BiquadCoeffs):
        return IirCascade(sections=(filt,), description="biquad")
    return filt


def frequency_response(filt: IirCascade | BiquadCoeffs, freqs, fs: float) -> np.ndarray:
    """Complex response of the cascade at ``freqs`` Hz, evaluated directly."""
    cascade = _as_cascade(filt)
    z = np.exp(-2j * np.pi * np.asarray(freqs, dtype=np.float64) / fs)
    resp = np.ones_like(z)
    for s in cascade.sections:
        resp *= (s.b0 + s.b1 * z + s.b2 * z ** 2) / (1.0 + s.a1 * z + s.a2 * z ** 2)
    return resp


def filtfilt(filt: IirCascade | BiquadCoeffs, x) -> np.ndarray:
    """Zero-phase (forward-backward) filtering with odd-reflection padding.

    Pad length is 3x(order + 1) on each side; initial conditions are set to
    the step-response steady state so constant inputs produce no transient.
    """
    cascade = _as_cascade(filt)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("filtfilt expects a 1-D signal")
    padlen = 3 * (cascade.order + 1)
    if len(x) <= padlen:
        raise SignalTooShortError(
            f"need more than {padlen} samples for an order-{cascade.order} "
            f"cascade, got {len(x)}")
    sos = cascade.as_sos()
    zi = sps.sosfilt_zi(sos)
    # Odd reflection about the end samples kills edge discontinuities.
    left = 2.0 * x[0] - x[padlen:0:-1]
    right = 2.0 * x[-1] - x[-2:-padlen - 2:-1]
    ext = np.concatenate([left, x, right])
    y, _ = sps.sosfilt(sos, ext, zi=zi * ext[0])
    y = y[::-1]
    y, _ = sps.sosfilt(sos, y, zi=zi * y[0])
    return y[::-1][padlen:padlen + len(x)]


def wavelet_denoise(x, spec: WaveletSpec = WaveletSpec()) -> np.ndarray:
    """Soft-threshold wavelet denoising (universal threshold, MAD noise scale).

    The noise scale is estimated from the finest detail band only,
    sigma = median(|d1|) / 0.6745, and the single threshold
    tau = sigma * sqrt(2 ln n) is applied to every detail band; the
    approximation band passes through untouched.
    """
    x = np.asarray(x, dtype=np.float64)
    coeffs = wavedec(x, levels=spec.levels, order=spec.order, mode="symmetric")
    finest = coeffs.details[-1]
    sigma = float(np.median(np.abs(finest))) / 0.6745
    tau = sigma * math.sqrt(2.0 * math.log(len(x)))
    details = [np.sign(d) * np.maximum(np.abs(d) - tau, 0.0) for d in coeffs.details]
    return waverec(replace(coeffs, details=details), order=spec.order)


def _kaiser_sinc_filter(up: int, down: int) -> np.ndarray:
    """Polyphase anti-alias/anti-image prototype: Kaiser beta=8, 64 taps/phase."""
    ntaps = 64 * up
    cutoff = min(1.0 / up, 1.0 / down)  # relative to intermediate Nyquist
    m = np.arange(ntaps) - (ntaps - 1) / 2.0
    h = cutoff * np.sinc(cutoff * m) * np.kaiser(ntaps, 8.0)
    return h * (up / np.sum(h))  # DC gain `up` compensates the zero insertion


def resample(x, fs_in: float, fs_out: float) -> np.ndarray:
    """Polyphase windowed-sinc resampling to round(len(x) * fs_out / fs_in) samples."""
    if fs_in <= 0 or fs_out <= 0:
        raise FrequencyOutOfRangeError("sampling rates must be > 0")
    x = np.asarray(x, dtype=np.float64)
    if fs_in == fs_out:
        return x.copy()
    # Rational rate ratio in lowest terms.
    from fractions import Fraction
    frac = Fraction(fs_out / fs_in).limit_denominator(1000)
    up, down = frac.numerator, frac.denominator
    target = int(round(len(x) * fs_out / fs_in))
    h = _kaiser_sinc_filter(up, down)
    y = sps.resample_poly(x, up, down, window=h)
    if len(y) < target:
        y = np.concatenate([y, np.full(target - len(y), y[-1] if len(y) else 0.0)])
    return y[:target]


def segment(record: EcgRecord, window_s: float = SEGMENT_SECONDS) -> list[Segment]:
    """Cut a 250 Hz record into consecutive non-overlapping windows.

    The trailing partial window is dropped so every segment has a fixed size.
    """
    if record.fs != TARGET_FS:
        raise SamplingRateError(
            f"segmentation expects fs={TARGET_FS}, got {record.fs}")
    win = int(round(window_s * record.fs))
    n_seg = record.n_samples // win
    return [
        Segment(record_id=record.record_id, segment_index=i,
                data=record.data[:, i * win:(i + 1) * win])
        for i in range(n_seg)
    ]


def preprocess_record(record: EcgRecord, notch_50: bool = True,
                      notch_60: bool = True) -> EcgRecord:
    """Filter + denoise + resample one record; no segmentation.

    Used directly by the tokenizer path, which works on unsegmented records.
    """
    fs = record.fs
    chain: list[IirCascade | BiquadCoeffs] = []
    if notch_50:
        chain.append(design_notch(50.0, 30.0, fs))
    if notch_60:
        chain.append(design_notch(60.0, 30.0, fs))
    chain.append(design_butter_bandpass(0.5, 100.0, 4, fs))
    chain.append(design_butter_highpass(0.05, 2, fs))
    out = np.empty((record.n_leads,
                    int(round(record.n_samples * TARGET_FS / fs))))
    for i in range(record.n_leads):
        lead = record.data[i]
        for filt in chain:
            lead = filtfilt(filt, lead)
        lead = wavelet_denoise(lead)
        out[i] = resample(lead, fs, TARGET_FS)
    return replace(record, data=out, fs=TARGET_FS)


def preprocess(record: EcgRecord, notch_50: bool = True,
               notch_60: bool = True) -> list[Segment]:
    """Full pipeline: filters -> wavelet denoise -> 250 Hz -> 5 s segments."""
    return segment(preprocess_record(record, notch_50=notch_50, notch_60=notch_60))
