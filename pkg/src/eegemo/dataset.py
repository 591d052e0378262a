"""Recordings, ratings, the on-disk dataset layout and the synthetic generator.

On-disk layout (all paths relative to the manifest)::

    manifest.json           {"format": "eegemo-dataset", "version": 1,
                             "ratings": "ratings.csv",
                             "channels": [...]            (optional)
                             "participants": [{"id": 1, "signal": "signals/p01.f32",
                                               "meta": "signals/p01.json"}, ...]}
    ratings.csv             participant,trial,valence,arousal
    signals/p01.f32         little-endian float32, row-major [channels x samples],
                            every trial of the participant concatenated in time
    signals/p01.json        {"participant": 1, "channel_names": [...],
                             "sampling_rate_hz": 128.0, "dtype": "<f4",
                             "shape": [C, T], "trials": [{"trial": 1, "start": 0,
                             "stop": 7680}, ...]}
"""

from __future__ import annotations

import csv
import enum
import json
import logging
import math
import pickle
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

log = logging.getLogger(__name__)

STUDY_CHANNELS = ("F3", "F4", "F7", "F8", "FC1", "FC2", "FC5", "FC6", "FP1", "FP2")
CHANNEL_PAIRS = {
    "F3-F4": ("F3", "F4"),
    "F7-F8": ("F7", "F8"),
    "FC1-FC2": ("FC1", "FC2"),
    "FC5-FC6": ("FC5", "FC6"),
    "FP1-FP2": ("FP1", "FP2"),
}
LEFT_FRONTAL = ("F3", "F7", "FC1", "FC5", "FP1")
RIGHT_FRONTAL = ("F4", "F8", "FC2", "FC6", "FP2")

DIMENSIONS = ("arousal", "valence")
RATING_MIN, RATING_MAX = 1.0, 9.0
RATING_THRESHOLD = 4.5

# Channel order of the DEAP preprocessed python release (first 32 rows are EEG).
DEAP_EEG_CHANNELS = (
    "FP1", "AF3", "F3", "F7", "FC5", "FC1", "C3", "T7", "CP5", "CP1", "P3", "P7",
    "PO3", "O1", "OZ", "PZ", "FP2", "AF4", "FZ", "F4", "F8", "FC6", "FC2", "CZ",
    "C4", "T8", "CP6", "CP2", "P4", "P8", "PO4", "O2",
)

FORMAT_NAME = "eegemo-dataset"
FORMAT_VERSION = 1


class DatasetError(ValueError):
    pass


class Label(enum.IntEnum):
    LOW = 0
    HIGH = 1

    def __str__(self) -> str:
        return self.name.lower()


@dataclass(frozen=True)
class BinaryLabel:
    dimension: str
    value: Label

    def __post_init__(self):
        if self.dimension not in DIMENSIONS:
            raise ValueError(f"unknown dimension {self.dimension!r}")


def _canon(label: str) -> str:
    return label.strip().upper()


@dataclass(frozen=True, eq=False)
class Recording:
    participant_id: int
    trial_id: int
    samples: np.ndarray
    sampling_rate_hz: float
    channel_names: tuple[str, ...]

    def __post_init__(self):
        samples = np.asarray(self.samples)
        if samples.ndim != 2:
            raise DatasetError(f"{self.ident}: samples must be a [channels x time] matrix")
        if not self.sampling_rate_hz > 0:
            raise DatasetError(f"{self.ident}: sampling rate must be positive")
        names = tuple(self.channel_names)
        if len(names) != samples.shape[0]:
            raise DatasetError(
                f"{self.ident}: {len(names)} channel names for {samples.shape[0]} signal rows"
            )
        if len(set(names)) != len(names):
            raise DatasetError(f"{self.ident}: duplicate channel names")
        if samples.flags.writeable:
            samples = samples.copy()
            samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "channel_names", names)
        object.__setattr__(self, "sampling_rate_hz", float(self.sampling_rate_hz))

    @property
    def ident(self) -> str:
        return f"participant {self.participant_id} trial {self.trial_id}"

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    def replace_samples(self, samples: np.ndarray, channel_names: Sequence[str] | None = None) -> "Recording":
        return Recording(
            self.participant_id,
            self.trial_id,
            samples,
            self.sampling_rate_hz,
            tuple(channel_names) if channel_names is not None else self.channel_names,
        )


@dataclass(frozen=True)
class RatingRecord:
    participant_id: int
    trial_id: int
    valence_rating: float
    arousal_rating: float

    def __post_init__(self):
        for dim, r in (("valence", self.valence_rating), ("arousal", self.arousal_rating)):
            if not (RATING_MIN <= r <= RATING_MAX):
                raise DatasetError(
                    f"participant {self.participant_id} trial {self.trial_id}: "
                    f"{dim} rating {r} outside [{RATING_MIN:g}, {RATING_MAX:g}]"
                )

    def rating(self, dimension: str) -> float:
        if dimension == "valence":
            return self.valence_rating
        if dimension == "arousal":
            return self.arousal_rating
        raise ValueError(f"unknown dimension {dimension!r}")

    def label(self, dimension: str) -> BinaryLabel:
        return BinaryLabel(dimension, binarize(self.rating(dimension)))


def binarize(rating: float) -> Label:
    """High iff the rating is strictly greater than 4.5."""
    r = float(rating)
    if not (RATING_MIN <= r <= RATING_MAX):
        raise DatasetError(f"rating {rating} outside [{RATING_MIN:g}, {RATING_MAX:g}]")
    return Label.HIGH if r > RATING_THRESHOLD else Label.LOW


def channel_selection(labels: Iterable[str]) -> tuple[str, ...]:
    """Validate a channel selection against the ten study channels."""
    sel = tuple(_canon(c) for c in labels)
    if not sel:
        raise DatasetError("channel selection is empty")
    if len(set(sel)) != len(sel):
        raise DatasetError(f"channel selection has duplicates: {sel}")
    unknown = [c for c in sel if c not in STUDY_CHANNELS]
    if unknown:
        raise DatasetError(f"channels {unknown} are not among the study channels {STUDY_CHANNELS}")
    return sel


def select_channels(recording: Recording, selection: Iterable[str]) -> Recording:
    sel = channel_selection(selection)
    index = {_canon(n): i for i, n in enumerate(recording.channel_names)}
    missing = [c for c in sel if c not in index]
    if missing:
        raise DatasetError(f"{recording.ident}: unknown channel(s) {missing}")
    rows = [index[c] for c in sel]
    return recording.replace_samples(recording.samples[rows], sel)


@dataclass(frozen=True)
class Dataset:
    """Immutable collection of (Recording, RatingRecord) pairs."""

    entries: tuple[tuple[Recording, RatingRecord], ...]

    def __iter__(self) -> Iterator[tuple[Recording, RatingRecord]]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    @property
    def participants(self) -> tuple[int, ...]:
        return tuple(sorted({r.participant_id for r, _ in self.entries}))


# --------------------------------------------------------------------- disk io

def _read_ratings(path: Path) -> dict[tuple[int, int], RatingRecord]:
    if not path.is_file():
        raise DatasetError(f"ratings table not found: {path}")
    with open(path, newline="") as fh:
        lines = fh.readlines()
    skip = 0  # leading '#' provenance lines
    while skip < len(lines) and lines[skip].startswith("#"):
        skip += 1
    reader = csv.DictReader(lines[skip:])
    expected = ["participant", "trial", "valence", "arousal"]
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != expected:
        raise DatasetError(f"{path}: header must be {','.join(expected)}")
    out = {}
    for line, row in enumerate(reader, start=skip + 2):
        try:
            key = (int(row["participant"]), int(row["trial"]))
            rec = RatingRecord(key[0], key[1], float(row["valence"]), float(row["arousal"]))
        except (TypeError, ValueError) as exc:
            raise DatasetError(f"{path}:{line}: {exc}") from exc
        if key in out:
            raise DatasetError(f"{path}:{line}: duplicate rating for participant {key[0]} trial {key[1]}")
        out[key] = rec
    return out


def load_dataset(manifest_path) -> Dataset:
    manifest_path = Path(manifest_path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / "manifest.json"
    if not manifest_path.is_file():
        raise FileNotFoundError(f"manifest not found: {manifest_path}")
    root = manifest_path.parent
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    if manifest.get("format") != FORMAT_NAME:
        raise DatasetError(f"{manifest_path}: not an {FORMAT_NAME} manifest")
    ratings = _read_ratings(root / manifest["ratings"])
    order = [_canon(c) for c in manifest.get("channels", [])] or None

    entries = []
    for part in manifest["participants"]:
        pid = int(part["id"])
        sig_path, meta_path = root / part["signal"], root / part["meta"]
        for p in (sig_path, meta_path):
            if not p.is_file():
                raise FileNotFoundError(f"participant {pid}: missing file {p}")
        with open(meta_path) as fh:
            meta = json.load(fh)
        names = [_canon(c) for c in meta["channel_names"]]
        n_ch, n_t = (int(v) for v in meta["shape"])
        if n_ch != len(names):
            raise DatasetError(f"participant {pid}: {len(names)} channel names but shape says {n_ch} rows")
        raw = np.fromfile(sig_path, dtype=np.dtype(meta.get("dtype", "<f4")))
        if raw.size != n_ch * n_t:
            raise DatasetError(
                f"participant {pid}: {sig_path.name} holds {raw.size} values, expected {n_ch} x {n_t}"
            )
        mat = raw.reshape(n_ch, n_t)
        if order is not None:
            missing = [c for c in order if c not in names]
            if missing:
                raise DatasetError(f"participant {pid}: channel(s) {missing} listed in manifest are absent")
            mat = mat[[names.index(c) for c in order]]
            names = list(order)
        fs = float(meta["sampling_rate_hz"])
        for tr in meta["trials"]:
            tid, start, stop = int(tr["trial"]), int(tr["start"]), int(tr["stop"])
            if not 0 <= start < stop <= n_t:
                raise DatasetError(f"participant {pid} trial {tid}: bad sample range [{start}, {stop})")
            if (pid, tid) not in ratings:
                raise DatasetError(f"participant {pid} trial {tid}: no rating in ratings table")
            rec = Recording(pid, tid, mat[:, start:stop], fs, tuple(names))
            entries.append((rec, ratings[(pid, tid)]))
    return Dataset(tuple(entries))


def save_dataset(dataset: Iterable[tuple[Recording, RatingRecord]], directory, provenance: dict | None = None) -> Path:
    """Write ``dataset`` in the documented layout; returns the manifest path.

    ``provenance`` (e.g. config hash and seed) is copied into the manifest and
    every sidecar.
    """
    directory = Path(directory)
    (directory / "signals").mkdir(parents=True, exist_ok=True)
    by_participant: dict[int, list[tuple[Recording, RatingRecord]]] = {}
    for rec, rating in dataset:
        by_participant.setdefault(rec.participant_id, []).append((rec, rating))

    participants = []
    rating_rows = []
    for pid in sorted(by_participant):
        items = sorted(by_participant[pid], key=lambda it: it[0].trial_id)
        first = items[0][0]
        trials, blocks, pos = [], [], 0
        for rec, rating in items:
            if rec.channel_names != first.channel_names or rec.sampling_rate_hz != first.sampling_rate_hz:
                raise DatasetError(f"{rec.ident}: channel set or rate differs within participant")
            blocks.append(np.asarray(rec.samples, dtype="<f4"))
            trials.append({"trial": rec.trial_id, "start": pos, "stop": pos + rec.n_samples})
            pos += rec.n_samples
            rating_rows.append(rating)
        mat = np.ascontiguousarray(np.concatenate(blocks, axis=1), dtype="<f4")
        stem = f"p{pid:02d}"
        mat.tofile(directory / "signals" / f"{stem}.f32")
        meta = {
            "participant": pid,
            "channel_names": list(first.channel_names),
            "sampling_rate_hz": first.sampling_rate_hz,
            "dtype": "<f4",
            "shape": list(mat.shape),
            "trials": trials,
        }
        if provenance:
            meta["provenance"] = provenance
        (directory / "signals" / f"{stem}.json").write_text(json.dumps(meta, indent=1) + "\n")
        participants.append({"id": pid, "signal": f"signals/{stem}.f32", "meta": f"signals/{stem}.json"})

    with open(directory / "ratings.csv", "w", newline="") as fh:
        for key in sorted(provenance or {}):
            fh.write(f"# {key}={provenance[key]}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["participant", "trial", "valence", "arousal"])
        for r in rating_rows:
            w.writerow([r.participant_id, r.trial_id, repr(r.valence_rating), repr(r.arousal_rating)])

    manifest = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "ratings": "ratings.csv",
        "participants": participants,
    }
    if provenance:
        manifest["provenance"] = provenance
    path = directory / "manifest.json"
    path.write_text(json.dumps(manifest, indent=1) + "\n")
    return path


def convert_deap(source_dir, out_dir, baseline_seconds: float = 3.0, channels: Sequence[str] = STUDY_CHANNELS) -> Path:
    """Convert the DEAP preprocessed python release (``sXX.dat``) to the portable layout.

    Keeps the requested EEG channels, drops the pre-trial baseline and writes
    valence/arousal ratings (label columns 0 and 1).
    """
    source_dir = Path(source_dir)
    files = sorted(source_dir.glob("s[0-9][0-9].dat"))
    if not files:
        raise FileNotFoundError(f"no sXX.dat files in {source_dir}")
    fs = 128.0
    skip = int(round(baseline_seconds * fs))
    rows = [DEAP_EEG_CHANNELS.index(_canon(c)) for c in channels]
    entries = []
    for f in files:
        pid = int(f.stem[1:])
        with open(f, "rb") as fh:
            blob = pickle.load(fh, encoding="latin1")
        data, labels = np.asarray(blob["data"]), np.asarray(blob["labels"])
        for t in range(data.shape[0]):
            rec = Recording(pid, t + 1, data[t][rows, skip:].astype("<f4"), fs, tuple(_canon(c) for c in channels))
            entries.append((rec, RatingRecord(pid, t + 1, float(labels[t, 0]), float(labels[t, 1]))))
    return save_dataset(entries, out_dir)


# ------------------------------------------------------------------ synthetic

@dataclass(frozen=True)
class SyntheticSpec:
    """Planted-effect generator settings.

    Each channel is 1/f background noise plus steady theta/alpha rhythms.  The
    effect band carries an oscillation on every trial; on "high" trials of a
    dimension its amplitude is multiplied by ``amplitude_ratio`` on that
    dimension's channels (arousal: left frontal, valence: right frontal).
    """

    n_participants: int = 32
    n_trials: int = 40
    duration_seconds: float = 60.0
    sampling_rate_hz: float = 128.0
    effect_band: str = "beta"
    amplitude_ratio: float = 1.5
    effect_amplitude: float = 1.0
    noise_amplitude: float = 1.0
    background_amplitude: float = 0.5
    slow_amplitude: float = 10.0
    participant_variability: float = 0.1
    channels: tuple[str, ...] = STUDY_CHANNELS
    arousal_channels: tuple[str, ...] = LEFT_FRONTAL
    valence_channels: tuple[str, ...] = RIGHT_FRONTAL

    def __post_init__(self):
        for name in ("n_participants", "n_trials"):
            if int(getattr(self, name)) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("duration_seconds", "sampling_rate_hz", "amplitude_ratio"):
            v = float(getattr(self, name))
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive")
        for name in ("effect_amplitude", "noise_amplitude", "background_amplitude", "slow_amplitude", "participant_variability"):
            if float(getattr(self, name)) < 0:
                raise ValueError(f"{name} must be non-negative")
        from .wavelet import BAND_UPPER_EDGE

        if self.effect_band not in BAND_UPPER_EDGE:
            raise ValueError(f"unknown effect band {self.effect_band!r}")
        if BAND_UPPER_EDGE[self.effect_band] > self.sampling_rate_hz / 2:
            raise ValueError(f"{self.effect_band} lies above Nyquist at {self.sampling_rate_hz} Hz")
        if round(self.duration_seconds * self.sampling_rate_hz) < 2:
            raise ValueError("trial is shorter than two samples")
        chans = tuple(_canon(c) for c in self.channels)
        for group in (self.arousal_channels, self.valence_channels):
            extra = [c for c in group if _canon(c) not in chans]
            if extra:
                raise ValueError(f"effect channels {extra} not in channel list")


def _shaped_noise(rng: np.random.Generator, shape: tuple[int, ...], fs: float, f_lo: float, f_hi: float) -> np.ndarray:
    """Unit-variance 1/f noise restricted to [f_lo, f_hi] Hz."""
    n = shape[-1]
    m = n // 2 + 1
    spec = rng.standard_normal(shape[:-1] + (m,)) + 1j * rng.standard_normal(shape[:-1] + (m,))
    freqs = np.fft.rfftfreq(n, d=1.0 / fs)
    scale = np.where((freqs >= f_lo) & (freqs <= f_hi), 1.0 / np.sqrt(np.maximum(freqs, f_lo)), 0.0)
    x = np.fft.irfft(spec * scale, n=n)
    return x / np.maximum(x.std(axis=-1, keepdims=True), 1e-300)


def _split_ratings(rng: np.random.Generator, n: int) -> np.ndarray:
    """Ratings with exactly floor(n/2) high values, in random order."""
    n_high = n // 2
    high = rng.uniform(5.0, 9.0, n_high)
    low = rng.uniform(1.0, 4.5, n - n_high)
    vals = np.concatenate([high, low])
    return np.round(vals[rng.permutation(n)], 2)


def generate_synthetic(spec: SyntheticSpec | None = None, seed: int = 0) -> Dataset:
    spec = spec or SyntheticSpec()
    from .wavelet import BAND_UPPER_EDGE

    fs = float(spec.sampling_rate_hz)
    n = int(round(spec.duration_seconds * fs))
    t = np.arange(n) / fs
    chans = tuple(_canon(c) for c in spec.channels)
    aro_rows = np.array([c in {_canon(a) for a in spec.arousal_channels} for c in chans])
    val_rows = np.array([c in {_canon(v) for v in spec.valence_channels} for c in chans])
    hi = BAND_UPPER_EDGE[spec.effect_band]
    f_lo, f_hi = hi / 2 * 1.15, hi * 0.85
    n_ch = len(chans)

    entries = []
    streams = np.random.SeedSequence(seed).spawn(spec.n_participants)
    for p, ss in enumerate(streams, start=1):
        rng = np.random.default_rng(ss)
        valence = _split_ratings(rng, spec.n_trials)
        arousal = _split_ratings(rng, spec.n_trials)
        gains = np.exp(rng.normal(0.0, 0.5, n_ch))
        base = spec.effect_amplitude * np.exp(rng.normal(0.0, spec.participant_variability, n_ch))
        for k in range(spec.n_trials):
            sig = spec.noise_amplitude * _shaped_noise(rng, (n_ch, n), fs, 1.0, fs / 2)
            sig += spec.slow_amplitude * _shaped_noise(rng, (n_ch, n), fs, 0.5, 4.0)
            for f_center in (6.0, 10.0):
                freq = f_center * rng.uniform(0.9, 1.1, (n_ch, 1))
                phase = rng.uniform(0, 2 * np.pi, (n_ch, 1))
                sig += spec.background_amplitude * np.sin(2 * np.pi * freq * t + phase)
            amp = base * rng.uniform(0.9, 1.1, n_ch)
            amp = np.where(aro_rows & (arousal[k] > RATING_THRESHOLD), amp * spec.amplitude_ratio, amp)
            amp = np.where(val_rows & (valence[k] > RATING_THRESHOLD), amp * spec.amplitude_ratio, amp)
            freq = rng.uniform(f_lo, f_hi, (n_ch, 1))
            phase = rng.uniform(0, 2 * np.pi, (n_ch, 1))
            sig += amp[:, None] * np.sin(2 * np.pi * freq * t + phase)
            sig = gains[:, None] * sig + rng.normal(0.0, 1.0, (n_ch, 1))
            rec = Recording(p, k + 1, sig.astype(np.float32), fs, chans)
            entries.append((rec, RatingRecord(p, k + 1, float(valence[k]), float(arousal[k]))))
    return Dataset(tuple(entries))
