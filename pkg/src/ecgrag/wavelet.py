"""Discrete wavelet transform with Daubechies filters, built on numpy.

The filter bank is derived at import time by spectral factorization of the
Daubechies half-band polynomial rather than from a table of constants, and
is validated by the orthonormality property tests.

Two boundary modes:

* ``periodization`` -- circular transform; orthogonal (energy preserving)
  whenever every level length is even, which is what the feature energies
  rely on.
* ``symmetric`` -- the signal is reflected at both ends before a periodized
  transform, and reconstruction crops the original span. Reconstruction is
  exact by construction; boundary coefficients see mirrored, not wrapped,
  samples, which is what denoising wants.

Coefficient layout follows the usual coarse-to-fine convention:
``details[0]`` is the deepest (coarsest) band, ``details[-1]`` the finest.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from .errors import SignalTooShortError


@lru_cache(maxsize=None)
def daubechies_filters(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Return (scaling, wavelet) analysis filters for ``order`` vanishing moments.

    Filter length is ``2 * order``. The scaling filter ``h`` satisfies
    ``sum(h) == sqrt(2)`` and is orthonormal to its even translates; the
    wavelet filter is its alternating flip.
    """
    n = int(order)
    if n < 1:
        raise ValueError("order must be >= 1")
    if n == 1:  # Haar, no factorization needed
        h = np.array([1.0, 1.0]) / np.sqrt(2.0)
    else:
        # P(y) = sum_k C(n-1+k, k) y^k ; |m0|^2 = cos^(2n)(w/2) P(sin^2(w/2)).
        # Substituting y = (2 - z - 1/z)/4 and clearing z^(n-1) gives a real
        # polynomial whose roots pair up as (r, 1/r); keeping |r| < 1 yields
        # the extremal-phase factor.
        p_y = [comb(n - 1 + k, k) for k in range(n)]
        # y^k -> ((2 - z - 1/z)/4)^k, accumulated as Laurent coefficients on
        # z^(-(n-1)) .. z^(n-1), stored shifted by n-1.
        lau = np.zeros(2 * n - 1)
        base = np.array([-0.25, 0.5, -0.25])  # (2 - z - 1/z)/4 as [z^-1, 1, z]
        term = np.array([1.0])
        for k in range(n):
            off = (len(lau) - len(term)) // 2
            lau[off:off + len(term)] += p_y[k] * term
            term = np.convolve(term, base)
        roots = np.roots(lau[::-1])
        inside = roots[np.abs(roots) < 1.0]
        q = np.real(np.poly(inside))          # conjugate pairs -> real coeffs
        q /= q.sum()                          # L(1) = 1 so that m0(0) = 1
        m0 = q
        for _ in range(n):
            m0 = np.convolve(m0, [0.5, 0.5])  # ((1 + z)/2)^n factor
        h = np.sqrt(2.0) * m0
    # Canonical orientation: extremal phase puts the energy up front.
    half = len(h) // 2
    if np.sum(h[:half] ** 2) < np.sum(h[half:] ** 2):
        h = h[::-1]
    g = h[::-1].copy()
    g[1::2] *= -1.0  # alternating flip: g[m] = (-1)^m h[L-1-m]
    return h, g


def _dwt_step(x: np.ndarray, h: np.ndarray, g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One periodized analysis step; ``len(x)`` must be even."""
    wrapped = np.concatenate([x, x[:len(h) - 1]])
    approx = np.correlate(wrapped, h, mode="valid")[::2]
    detail = np.correlate(wrapped, g, mode="valid")[::2]
    return approx, detail


def _idwt_step(approx: np.ndarray, detail: np.ndarray,
               h: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Exact inverse of :func:`_dwt_step`."""
    n = 2 * len(approx)
    out = np.zeros(n)
    for coeffs, filt in ((approx, h), (detail, g)):
        up = np.zeros(n)
        up[::2] = coeffs
        full = np.convolve(up, filt)
        part = full[:n].copy()
        part[:len(filt) - 1] += full[n:]  # circular wrap of the convolution tail
        out += part
    return out


@dataclass
class WaveletCoeffs:
    """Decomposition result; ``details[0]`` is the coarsest band."""

    approx: np.ndarray
    details: list[np.ndarray]
    level_lengths: list[int]  # pre-pad input length per level, coarsest first
    mode: str
    n: int
    pad_left: int = 0

    @property
    def levels(self) -> int:
        return len(self.details)

    def band_energies(self) -> np.ndarray:
        """Sum of squared coefficients per band: [approx, coarsest .. finest]."""
        bands = [self.approx, *self.details]
        return np.array([float(np.sum(b * b)) for b in bands])


def _min_length(levels: int, filt_len: int) -> int:
    return max(2 ** levels, filt_len)


def wavedec(x, levels: int, order: int = 6, mode: str = "symmetric") -> WaveletCoeffs:
    """Multi-level DWT of a 1-D signal."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("wavedec expects a 1-D signal")
    h, g = daubechies_filters(order)
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if len(x) < _min_length(levels, len(h)):
        raise SignalTooShortError(
            f"{len(x)} samples too short for a {levels}-level order-{order} DWT")

    n = len(x)
    pad_left = 0
    if mode == "symmetric":
        pad_left = len(h)
        # Right pad also absorbs whatever is needed to make every level even.
        pad_right = len(h) + (-(n + 2 * len(h))) % (2 ** levels)
        if pad_right > n or pad_left > n:
            raise SignalTooShortError(
                f"{n} samples too short to reflect {pad_right} boundary samples")
        x = np.concatenate([x[pad_left - 1::-1], x, x[:n - pad_right - 1:-1]])
    elif mode != "periodization":
        raise ValueError(f"unknown boundary mode: {mode!r}")

    cur = x
    details: list[np.ndarray] = []
    lengths: list[int] = []
    for _ in range(levels):
        lengths.append(len(cur))
        if len(cur) % 2:
            cur = np.concatenate([cur, cur[-1:]])  # edge replicate to even length
        cur, d = _dwt_step(cur, h, g)
        details.append(d)
    details.reverse()
    lengths.reverse()
    return WaveletCoeffs(approx=cur, details=details, level_lengths=lengths,
                         mode=mode, n=n, pad_left=pad_left)


def waverec(coeffs: WaveletCoeffs, order: int = 6) -> np.ndarray:
    """Reconstruct the signal from :func:`wavedec` output (exact inverse)."""
    h, g = daubechies_filters(order)
    cur = coeffs.approx
    for d, length in zip(coeffs.details, coeffs.level_lengths):
        cur = _idwt_step(cur, d, h, g)[:length]
    if coeffs.mode == "symmetric":
        cur = cur[coeffs.pad_left:coeffs.pad_left + coeffs.n]
    return cur
