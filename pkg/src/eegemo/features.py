"""Wavelet entropy / energy features and experiment-specific feature matrices."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .dataset import CHANNEL_PAIRS, DIMENSIONS, Dataset, RatingRecord, binarize
from .preprocess import WindowSpec, preprocess, window
from .wavelet import FEATURE_BANDS, BandDecomposition, WaveletFilterPair, db4_filters, decompose

KINDS = ("entropy", "energy")
META_COLUMNS = ("participant", "trial", "window") + DIMENSIONS


class FeatureError(ValueError):
    pass


def _finite(coeffs) -> np.ndarray:
    c = np.asarray(coeffs, dtype=np.float64)
    if not np.all(np.isfinite(c)):
        raise FeatureError("coefficients contain non-finite values")
    return c


def entropy(coeffs, axis: int = -1):
    """-sum(c^2 log c^2) with natural log and 0 log 0 = 0.

    Computed on the raw squared coefficients, so the value can be negative.
    """
    c2 = _finite(coeffs) ** 2
    safe = np.where(c2 > 0, c2, 1.0)
    return -np.sum(c2 * np.log(safe), axis=axis)


def energy(coeffs, axis: int = -1):
    c = _finite(coeffs)
    return np.sum(c * c, axis=axis)


@dataclass(frozen=True)
class ChannelPairMode:
    pair: str

    def __str__(self):
        return f"pair:{self.pair}"

    @property
    def value(self) -> str:
        return self.pair


@dataclass(frozen=True)
class PerBandMode:
    band: str

    def __str__(self):
        return f"band:{self.band}"

    @property
    def value(self) -> str:
        return self.band


def parse_mode(text: str):
    kind, _, value = text.partition(":")
    if kind == "pair":
        if value.upper() not in CHANNEL_PAIRS:
            raise FeatureError(f"unknown channel pair {value!r}")
        return ChannelPairMode(value.upper())
    if kind == "band":
        return PerBandMode(value.lower())
    raise FeatureError(f"mode must be 'pair:<A-B>' or 'band:<name>', got {text!r}")


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """One row per window.

    ``columns`` holds (channel, band, kind) descriptors; ``labels`` maps each
    dimension to a 0/1 vector (1 = high).
    """

    values: np.ndarray
    columns: tuple[tuple[str, str, str], ...]
    participant: np.ndarray
    trial: np.ndarray
    window: np.ndarray
    labels: dict[str, np.ndarray]

    def __post_init__(self):
        v = self.values
        if v.ndim != 2 or v.shape[1] != len(self.columns):
            raise FeatureError("values shape does not match the column descriptors")
        if len(set(self.columns)) != len(self.columns):
            raise FeatureError("duplicate column descriptors")
        for arr in (self.participant, self.trial, self.window, *self.labels.values()):
            if len(arr) != v.shape[0]:
                raise FeatureError("row metadata length does not match values")
        if not np.all(np.isfinite(v)):
            raise FeatureError("feature matrix has missing or non-finite entries")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def column_names(self) -> list[str]:
        return [":".join(c) for c in self.columns]

    @property
    def channels(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(c for c, _, _ in self.columns))

    @property
    def bands(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(b for _, b, _ in self.columns))

    def take_columns(self, columns: Sequence[tuple[str, str, str]]) -> "FeatureMatrix":
        index = {c: i for i, c in enumerate(self.columns)}
        missing = [c for c in columns if c not in index]
        if missing:
            raise FeatureError(f"columns not present: {missing[:4]}")
        idx = [index[c] for c in columns]
        return FeatureMatrix(self.values[:, idx], tuple(columns), self.participant, self.trial, self.window, self.labels)

    def take_rows(self, mask) -> "FeatureMatrix":
        return FeatureMatrix(
            self.values[mask],
            self.columns,
            self.participant[mask],
            self.trial[mask],
            self.window[mask],
            {k: v[mask] for k, v in self.labels.items()},
        )

    def select(self, mode) -> "FeatureMatrix":
        """Columns of one experiment: a channel pair over every band, or one band over every channel."""
        if isinstance(mode, str):
            mode = parse_mode(mode)
        if isinstance(mode, ChannelPairMode):
            chans = CHANNEL_PAIRS[mode.pair]
            absent = [c for c in chans if c not in self.channels]
            if absent:
                raise FeatureError(f"channel pair {mode.pair}: {absent} not in features")
            cols = [(c, b, k) for c in chans for b in self.bands for k in KINDS]
        elif isinstance(mode, PerBandMode):
            if mode.band not in self.bands:
                raise FeatureError(f"band {mode.band!r} not in features {self.bands}")
            cols = [(c, mode.band, k) for c in self.channels for k in KINDS]
        else:
            raise FeatureError(f"unsupported mode {mode!r}")
        return self.take_columns(cols)

    def to_csv(self, path=None, header_lines: Sequence[str] = ()) -> str:
        buf = io.StringIO()
        for line in header_lines:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(META_COLUMNS) + self.column_names)
        for i in range(self.n_rows):
            meta = [int(self.participant[i]), int(self.trial[i]), int(self.window[i])]
            meta += [int(self.labels[d][i]) for d in DIMENSIONS]
            w.writerow(meta + [repr(float(v)) for v in self.values[i]])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path) -> "FeatureMatrix":
        with open(path, newline="") as fh:
            lines = [ln for ln in fh if not ln.startswith("#")]
        rows = list(csv.reader(lines))
        header, body = rows[0], rows[1:]
        n_meta = len(META_COLUMNS)
        if tuple(header[:n_meta]) != META_COLUMNS:
            raise FeatureError(f"{path}: unexpected metadata columns {header[:n_meta]}")
        columns = tuple(tuple(h.split(":")) for h in header[n_meta:])
        meta = np.array([[int(v) for v in r[:n_meta]] for r in body], dtype=np.int64).reshape(-1, n_meta)
        vals = np.array([[float(v) for v in r[n_meta:]] for r in body]).reshape(-1, len(columns))
        labels = {d: meta[:, 3 + i] for i, d in enumerate(DIMENSIONS)}
        return cls(vals, columns, meta[:, 0], meta[:, 1], meta[:, 2], labels)


def window_features(decomp: BandDecomposition, bands: Sequence[str] | None = None):
    """Entropy and energy for every (channel, band) of a decomposition.

    Returns ``(values, columns)`` with values shaped (n_windows, n_columns).
    """
    bands = tuple(bands) if bands is not None else decomp.feature_bands
    names = decomp.channel_names or tuple(f"ch{i}" for i in range(decomp.approximation.shape[0]))
    per_band = {}
    for b in bands:
        coeffs = decomp.band(b)  # (channels, windows, n)
        per_band[b] = (entropy(coeffs), energy(coeffs))
    blocks, columns = [], []
    for ci, ch in enumerate(names):
        for b in bands:
            ent, eng = per_band[b]
            blocks += [ent[ci], eng[ci]]
            columns += [(ch, b, "entropy"), (ch, b, "energy")]
    return np.stack(blocks, axis=1), tuple(columns)


def extract(items: Iterable[tuple[BandDecomposition, RatingRecord]], bands: Sequence[str] | None = None) -> FeatureMatrix:
    """Stack per-window features of many trials into one matrix."""
    vals, parts, trials, wins = [], [], [], []
    labels = {d: [] for d in DIMENSIONS}
    columns = None
    for decomp, rating in items:
        v, cols = window_features(decomp, bands)
        if columns is None:
            columns = cols
        elif cols != columns:
            raise FeatureError(
                f"participant {decomp.participant_id} trial {decomp.trial_id}: channel/band set differs"
            )
        n = v.shape[0]
        vals.append(v)
        parts.append(np.full(n, rating.participant_id))
        trials.append(np.full(n, rating.trial_id))
        wins.append(np.arange(n))
        for d in DIMENSIONS:
            labels[d].append(np.full(n, int(binarize(rating.rating(d)))))
    if columns is None:
        raise FeatureError("no windows to assemble")
    return FeatureMatrix(
        np.concatenate(vals),
        columns,
        np.concatenate(parts).astype(np.int64),
        np.concatenate(trials).astype(np.int64),
        np.concatenate(wins).astype(np.int64),
        {d: np.concatenate(labels[d]).astype(np.int64) for d in DIMENSIONS},
    )


def assemble(items: Iterable[tuple[BandDecomposition, RatingRecord]], mode) -> FeatureMatrix:
    """Feature matrix for one experiment (``pair:F3-F4`` or ``band:beta`` style mode)."""
    return extract(items).select(mode)


def dataset_features(
    dataset: Dataset,
    spec: WindowSpec,
    channels: Sequence[str] | None = None,
    reference: str = "channel",
    filters: WaveletFilterPair | None = None,
) -> FeatureMatrix:
    """Preprocess, window, decompose and featurise every trial of ``dataset``."""
    from .dataset import select_channels

    filters = filters or db4_filters()

    def gen():
        for rec, rating in dataset:
            if channels is not None:
                rec = select_channels(rec, channels)
            yield decompose(window(preprocess(rec, reference), spec), filters=filters), rating

    return extract(gen())
