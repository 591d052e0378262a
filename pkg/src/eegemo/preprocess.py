"""Mean removal, [0, 1] scaling and overlapped windowing of single trials."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .dataset import Recording

log = logging.getLogger(__name__)

REFERENCE_MODES = ("channel", "common")


class WindowError(ValueError):
    pass


def remove_mean(recording: Recording, mode: str = "channel") -> Recording:
    """Subtract the mean.

    ``mode="channel"`` removes each channel's own time average.  ``"common"``
    instead subtracts the cross-channel average at every sample (the usual
    common-average reference).
    """
    x = np.asarray(recording.samples, dtype=np.float64)
    if x.shape[1] == 0:
        raise ValueError(f"{recording.ident}: empty channel")
    if mode == "channel":
        out = x - x.mean(axis=1, keepdims=True)
    elif mode == "common":
        out = x - x.mean(axis=0, keepdims=True)
    else:
        raise ValueError(f"unknown reference mode {mode!r}; expected one of {REFERENCE_MODES}")
    return recording.replace_samples(out)


def normalize_unit_interval(recording: Recording) -> Recording:
    x = np.asarray(recording.samples, dtype=np.float64)
    lo = x.min(axis=1, keepdims=True)
    span = x.max(axis=1, keepdims=True) - lo
    flat = span[:, 0] == 0
    if flat.any():
        names = [n for n, f in zip(recording.channel_names, flat) if f]
        log.warning("%s: constant channel(s) %s normalised to zeros", recording.ident, names)
    out = np.where(span > 0, (x - lo) / np.where(span > 0, span, 1.0), 0.0)
    return recording.replace_samples(out)


@dataclass(frozen=True)
class WindowSpec:
    length_seconds: float = 4.0
    overlap_fraction: float = 0.5

    def __post_init__(self):
        if not self.length_seconds > 0:
            raise ValueError("window length must be positive")
        if not 0.0 <= self.overlap_fraction < 1.0:
            raise ValueError("overlap fraction must lie in [0, 1)")

    def samples(self, sampling_rate_hz: float) -> int:
        w = int(round(self.length_seconds * sampling_rate_hz))
        if w < 2:
            raise WindowError(f"{self.length_seconds} s at {sampling_rate_hz} Hz is under 2 samples")
        return w

    def hop(self, sampling_rate_hz: float) -> int:
        h = int(round(self.samples(sampling_rate_hz) * (1.0 - self.overlap_fraction)))
        if h < 1:
            raise WindowError("overlap leaves a hop under one sample")
        return h

    def count(self, n_samples: int, sampling_rate_hz: float) -> int:
        w, h = self.samples(sampling_rate_hz), self.hop(sampling_rate_hz)
        return 0 if n_samples < w else (n_samples - w) // h + 1


@dataclass(frozen=True, eq=False)
class WindowedSignal:
    """``windows`` has shape (channels, n_windows, window_samples)."""

    windows: np.ndarray
    starts: np.ndarray
    hop: int
    participant_id: int
    trial_id: int
    channel_names: tuple[str, ...]
    sampling_rate_hz: float

    @property
    def n_windows(self) -> int:
        return self.windows.shape[1]


def window(recording: Recording, spec: WindowSpec) -> WindowedSignal:
    fs = recording.sampling_rate_hz
    w, h = spec.samples(fs), spec.hop(fs)
    n = recording.n_samples
    if n < w:
        raise WindowError(f"{recording.ident}: {n} samples is shorter than one {w}-sample window")
    count = (n - w) // h + 1
    starts = np.arange(count) * h
    x = np.asarray(recording.samples, dtype=np.float64)
    view = np.lib.stride_tricks.sliding_window_view(x, w, axis=1)[:, ::h][:, :count]
    return WindowedSignal(
        windows=np.ascontiguousarray(view),
        starts=starts,
        hop=h,
        participant_id=recording.participant_id,
        trial_id=recording.trial_id,
        channel_names=recording.channel_names,
        sampling_rate_hz=fs,
    )


def preprocess(recording: Recording, reference: str = "channel") -> Recording:
    return normalize_unit_interval(remove_mean(recording, reference))
