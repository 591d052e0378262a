"""Daubechies-4 discrete wavelet transform and the dyadic band layout.

The analysis step convolves the symmetrically extended signal with the
low/high-pass pair and keeps every even output sample, which gives
``ceil((N + L - 1) / 2)`` coefficients per branch.  Because the filter pair
is orthonormal, the transposed operator (``idwt_level``) reconstructs the
input exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import comb

FEATURE_BANDS = ("gamma", "beta", "alpha", "theta")
ALL_BANDS = ("noise",) + FEATURE_BANDS

# Upper edge (Hz) of each named band; the lower edge is half of it.
BAND_UPPER_EDGE = {"gamma": 64.0, "beta": 32.0, "alpha": 16.0, "theta": 8.0}


class BandConfigurationError(ValueError):
    """The sampling rate cannot be aligned with the dyadic band edges."""


@dataclass(frozen=True)
class WaveletFilterPair:
    lowpass: np.ndarray
    highpass: np.ndarray

    @property
    def length(self) -> int:
        return len(self.lowpass)


def daubechies_lowpass(moments: int) -> np.ndarray:
    """Analysis low-pass filter of the Daubechies wavelet with ``moments``
    vanishing moments, built by spectral factorisation.

    The minimum-phase factor is selected and the result is time reversed so
    that it matches the usual analysis ("dec_lo") ordering.
    """
    if moments < 1:
        raise ValueError("moments must be >= 1")
    # P(y) = sum_k C(N-1+k, k) y^k, y = sin^2(w/2) = (2 - z - 1/z) / 4
    coeffs = [comb(moments - 1 + k, k, exact=True) for k in range(moments)]
    y_roots = np.roots(coeffs[::-1]) if moments > 1 else np.array([])
    z_roots = []
    for yr in y_roots:
        # z^2 - (2 - 4y) z + 1 = 0 ; keep the root inside the unit circle
        pair = np.roots([1.0, -(2.0 - 4.0 * yr), 1.0])
        z_roots.append(pair[np.argmin(np.abs(pair))])
    q = np.real(np.poly(z_roots)) if z_roots else np.array([1.0])
    h = q
    for _ in range(moments):
        h = np.convolve(h, [1.0, 1.0])
    h = h * (math.sqrt(2.0) / h.sum())
    # h is the minimum-phase (reconstruction) filter in z^-1 order
    return np.ascontiguousarray(h[::-1])


def quadrature_mirror(lowpass: np.ndarray) -> np.ndarray:
    L = len(lowpass)
    k = np.arange(L)
    return ((-1.0) ** k) * lowpass[L - 1 - k]


def db4_filters() -> WaveletFilterPair:
    lo = daubechies_lowpass(4)
    return WaveletFilterPair(lowpass=lo, highpass=quadrature_mirror(lo))


def coefficient_length(n: int, filter_length: int) -> int:
    return (n + filter_length) // 2


def dwt_level(signal, filters: WaveletFilterPair) -> tuple[np.ndarray, np.ndarray]:
    """One analysis step along the last axis.

    Works on any leading batch shape.  Returns ``(approximation, detail)``.
    """
    x = np.asarray(signal, dtype=np.float64)
    n = x.shape[-1]
    L = filters.length
    if n < L:
        raise ValueError(f"signal length {n} is shorter than the filter ({L} taps)")
    pad = [(0, 0)] * (x.ndim - 1) + [(L - 1, L - 1)]
    ext = np.pad(x, pad, mode="symmetric")
    n_out = coefficient_length(n, L)
    approx = np.zeros(x.shape[:-1] + (n_out,))
    detail = np.zeros_like(approx)
    stop_span = 2 * n_out - 1
    for k in range(L):
        start = L - 1 - k
        seg = ext[..., start:start + stop_span:2]
        approx += filters.lowpass[k] * seg
        detail += filters.highpass[k] * seg
    return approx, detail


def idwt_level(approx, detail, filters: WaveletFilterPair, length: int) -> np.ndarray:
    """Inverse of :func:`dwt_level` for an original signal of ``length`` samples."""
    a = np.asarray(approx, dtype=np.float64)
    d = np.asarray(detail, dtype=np.float64)
    if a.shape != d.shape:
        raise ValueError("approximation and detail shapes differ")
    L = filters.length
    n_out = a.shape[-1]
    if n_out != coefficient_length(length, L):
        raise ValueError(f"{n_out} coefficients cannot come from a length-{length} signal")
    ua = np.zeros(a.shape[:-1] + (2 * n_out,))
    ud = np.zeros_like(ua)
    ua[..., ::2] = a
    ud[..., ::2] = d
    out = np.zeros(a.shape[:-1] + (length,))
    for k in range(L):
        out += filters.lowpass[k] * ua[..., k:k + length]
        out += filters.highpass[k] * ud[..., k:k + length]
    return out


def wavedec(signal, filters: WaveletFilterPair, levels: int):
    """Multi-level decomposition.

    Returns ``(approximation, details)`` where ``details[j - 1]`` holds level j
    (level 1 is the finest scale).
    """
    if levels < 1:
        raise ValueError("levels must be >= 1")
    a = np.asarray(signal, dtype=np.float64)
    details = []
    for j in range(1, levels + 1):
        if a.shape[-1] < filters.length:
            raise ValueError(
                f"level {j} input has {a.shape[-1]} samples, fewer than the "
                f"{filters.length}-tap filter; window too short for {levels} levels"
            )
        a, d = dwt_level(a, filters)
        details.append(d)
    return a, details


def waverec(approx, details: Sequence[np.ndarray], filters: WaveletFilterPair, length: int) -> np.ndarray:
    lengths = [length]
    for _ in range(len(details) - 1):
        lengths.append(coefficient_length(lengths[-1], filters.length))
    a = np.asarray(approx, dtype=np.float64)
    for d, n in zip(reversed(details), reversed(lengths)):
        a = idwt_level(a, d, filters, n)
    return a


def band_level_map(sampling_rate_hz: float) -> dict[str, tuple[int, ...]]:
    """Map each band name to the detail level(s) covering it.

    Level j spans ``(fs / 2**(j+1), fs / 2**j]``.  Named bands that fall
    above Nyquist are absent; ``noise`` collects every level above gamma and
    is absent when there is none.
    """
    fs = float(sampling_rate_hz)
    if not np.isfinite(fs) or fs < 16.0:
        raise BandConfigurationError(f"sampling rate {sampling_rate_hz} Hz cannot resolve theta (needs >= 16 Hz)")
    m = round(math.log2(fs))
    if abs(fs - 2.0 ** m) > 1e-6 * fs or m < 4:
        raise BandConfigurationError(
            f"sampling rate {sampling_rate_hz} Hz is not a power of two; dyadic levels "
            "cannot align with the 4/8/16/32/64 Hz band edges"
        )
    out: dict[str, tuple[int, ...]] = {}
    gamma_level = m - 6
    noise = tuple(range(1, gamma_level)) if gamma_level > 1 else ()
    if noise:
        out["noise"] = noise
    for band, upper in BAND_UPPER_EDGE.items():
        j = m - int(math.log2(upper))
        if j >= 1:
            out[band] = (j,)
    return out


@dataclass
class BandDecomposition:
    """Detail coefficients of a batch of windows, organised by band.

    ``details[j]`` has shape ``(..., n_coeffs_j)`` where the leading axes are
    those of the decomposed input (typically channels x windows).
    """

    details: dict[int, np.ndarray]
    approximation: np.ndarray
    band_levels: dict[str, tuple[int, ...]]
    sampling_rate_hz: float
    channel_names: tuple[str, ...] = ()
    participant_id: int | None = None
    trial_id: int | None = None
    window_starts: np.ndarray | None = None
    excluded: tuple[str, ...] = field(default=("noise",))

    @property
    def bands(self) -> tuple[str, ...]:
        return tuple(b for b in ALL_BANDS if b in self.band_levels)

    @property
    def feature_bands(self) -> tuple[str, ...]:
        return tuple(b for b in self.bands if b not in self.excluded)

    def band(self, name: str) -> np.ndarray:
        if name not in self.band_levels:
            raise KeyError(f"band {name!r} is not resolvable at {self.sampling_rate_hz} Hz")
        levels = self.band_levels[name]
        if len(levels) == 1:
            return self.details[levels[0]]
        return np.concatenate([self.details[j] for j in levels], axis=-1)


def decompose(windowed, sampling_rate_hz: float | None = None, filters: WaveletFilterPair | None = None) -> BandDecomposition:
    """Run the DWT down to the theta level on every window.

    Windows must hold at least ``2**depth * L`` samples (128 at 128 Hz).

    ``windowed`` is either a :class:`eegemo.preprocess.WindowedSignal` or a raw
    array whose last axis is time (then ``sampling_rate_hz`` is required).
    """
    filters = filters or db4_filters()
    meta = {}
    if hasattr(windowed, "windows"):
        data = windowed.windows
        fs = windowed.sampling_rate_hz if sampling_rate_hz is None else sampling_rate_hz
        meta = dict(
            channel_names=tuple(windowed.channel_names),
            participant_id=windowed.participant_id,
            trial_id=windowed.trial_id,
            window_starts=windowed.starts,
        )
    else:
        if sampling_rate_hz is None:
            raise ValueError("sampling_rate_hz is required for raw arrays")
        data = np.asarray(windowed, dtype=np.float64)
        fs = sampling_rate_hz
    levels = band_level_map(fs)
    depth = max(j for lv in levels.values() for j in lv)
    # the deepest level should still see a few filter lengths of signal
    need = 2 ** depth * filters.length
    if data.shape[-1] < need:
        raise ValueError(
            f"window of {data.shape[-1]} samples is too short for {depth} levels at {fs:g} Hz "
            f"(need >= {need})"
        )
    approx, details = wavedec(data, filters, depth)
    return BandDecomposition(
        details={j + 1: d for j, d in enumerate(details)},
        approximation=approx,
        band_levels=levels,
        sampling_rate_hz=float(fs),
        **meta,
    )


def write_golden_vectors(path, signal, levels: int = 1) -> None:
    """Write filters, an input signal and its decomposition as delimited text.

    One row per vector: a name followed by its values.
    """
    f = db4_filters()
    approx, details = wavedec(np.asarray(signal, dtype=np.float64), f, levels)
    rows = [("lowpass", f.lowpass), ("highpass", f.highpass), ("input", np.asarray(signal, dtype=np.float64))]
    rows += [(f"detail_{j + 1}", d) for j, d in enumerate(details)]
    rows.append((f"approx_{levels}", approx))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for name, vec in rows:
            w.writerow([name] + [repr(float(v)) for v in vec])


def read_golden_vectors(path) -> dict[str, np.ndarray]:
    out = {}
    with open(Path(path), newline="") as fh:
        for row in csv.reader(fh):
            if row:
                out[row[0]] = np.array([float(v) for v in row[1:]])
    return out
