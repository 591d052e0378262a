import json
import pickle

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eegemo.dataset import (
    DEAP_EEG_CHANNELS,
    STUDY_CHANNELS,
    Dataset,
    DatasetError,
    Label,
    RatingRecord,
    Recording,
    SyntheticSpec,
    binarize,
    channel_selection,
    convert_deap,
    generate_synthetic,
    load_dataset,
    save_dataset,
    select_channels,
)


def _toy(n_part=2, n_trial=3, n=64, fs=128.0, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for p in range(1, n_part + 1):
        for t in range(1, n_trial + 1):
            rec = Recording(p, t, rng.standard_normal((3, n)).astype(np.float32), fs, ("F3", "F4", "FP1"))
            out.append((rec, RatingRecord(p, t, float(rng.uniform(1, 9)), float(rng.uniform(1, 9)))))
    return Dataset(tuple(out))


@pytest.mark.parametrize("rating,label", [(7.0, Label.HIGH), (4.5, Label.LOW), (1.0, Label.LOW), (4.51, Label.HIGH), (9.0, Label.HIGH)])
def test_binarize(rating, label):
    assert binarize(rating) is label


@pytest.mark.parametrize("bad", [0.99, 9.5, float("nan")])
def test_binarize_rejects_out_of_range(bad):
    with pytest.raises(DatasetError):
        binarize(bad)


@given(st.floats(1, 9), st.floats(1, 9))
def test_binarize_is_monotone(a, b):
    lo, hi = min(a, b), max(a, b)
    assert binarize(lo) <= binarize(hi)


def test_rating_record_bounds_name_the_record():
    with pytest.raises(DatasetError, match="participant 3 trial 7: arousal rating 9.5"):
        RatingRecord(3, 7, 5.0, 9.5)
    r = RatingRecord(1, 1, 4.5, 6.0)
    assert r.label("valence").value is Label.LOW
    assert r.label("arousal").value is Label.HIGH


def test_recording_invariants():
    with pytest.raises(DatasetError, match="2 channel names for 3"):
        Recording(1, 1, np.zeros((3, 4)), 128.0, ("A", "B"))
    with pytest.raises(DatasetError, match="sampling rate"):
        Recording(1, 1, np.zeros((1, 4)), 0.0, ("A",))
    rec = Recording(1, 1, np.zeros((1, 4)), 128, ("A",))
    with pytest.raises(ValueError):
        rec.samples[0, 0] = 1.0


def test_select_channels():
    names = DEAP_EEG_CHANNELS
    rec = Recording(1, 1, np.arange(32 * 5, dtype=float).reshape(32, 5), 128.0, names)
    two = select_channels(rec, ["f4", "F3"])
    assert two.channel_names == ("F4", "F3")
    assert np.array_equal(two.samples[0], rec.samples[names.index("F4")])
    assert np.array_equal(select_channels(two, ["F4", "F3"]).samples, two.samples)
    with pytest.raises(DatasetError, match="XX"):
        select_channels(rec, ["XX"])
    with pytest.raises(DatasetError, match="not present|unknown channel"):
        select_channels(two, ["FP1"])


def test_select_all_is_identity():
    ds = _toy(1, 1)
    rec = ds[0][0]
    assert np.array_equal(select_channels(rec, rec.channel_names).samples, rec.samples)


def test_channel_selection_validation():
    assert channel_selection(["fp1", "F3"]) == ("FP1", "F3")
    for bad in ([], ["F3", "F3"], ["O1"]):
        with pytest.raises(DatasetError):
            channel_selection(bad)


def test_roundtrip_bit_exact(tmp_path):
    ds = _toy()
    manifest = save_dataset(ds, tmp_path / "d")
    back = load_dataset(manifest)
    assert len(back) == 6
    for (r0, q0), (r1, q1) in zip(ds, back):
        assert (r0.participant_id, r0.trial_id) == (r1.participant_id, r1.trial_id)
        assert r0.samples.tobytes() == r1.samples.tobytes()
        assert r1.channel_names == r0.channel_names
        assert q0 == q1
    # a directory works as well as the manifest path
    assert len(load_dataset(tmp_path / "d")) == 6


def test_layout_and_provenance(tmp_path):
    save_dataset(_toy(), tmp_path, provenance={"config_hash": "abc", "seed": 4})
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["provenance"] == {"config_hash": "abc", "seed": 4}
    side = json.loads((tmp_path / "signals" / "p01.json").read_text())
    assert side["shape"] == [3, 3 * 64] and side["dtype"] == "<f4"
    assert side["provenance"]["seed"] == 4
    lines = (tmp_path / "ratings.csv").read_text().splitlines()
    assert lines[:3] == ["# config_hash=abc", "# seed=4", "participant,trial,valence,arousal"]
    assert (tmp_path / "signals" / "p01.f32").stat().st_size == 3 * 3 * 64 * 4
    assert len(load_dataset(tmp_path)) == 6


def test_manifest_channel_order_is_applied(tmp_path):
    save_dataset(_toy(1, 1), tmp_path)
    m = json.loads((tmp_path / "manifest.json").read_text())
    m["channels"] = ["FP1", "F3"]
    (tmp_path / "manifest.json").write_text(json.dumps(m))
    rec = load_dataset(tmp_path)[0][0]
    orig = _toy(1, 1)[0][0]
    assert rec.channel_names == ("FP1", "F3")
    assert np.array_equal(rec.samples[0], orig.samples[2])


def test_missing_manifest(tmp_path):
    with pytest.raises(FileNotFoundError, match="manifest"):
        load_dataset(tmp_path / "nope" / "manifest.json")


def test_missing_signal_file_reports_path(tmp_path):
    save_dataset(_toy(), tmp_path)
    (tmp_path / "signals" / "p02.f32").unlink()
    with pytest.raises(FileNotFoundError, match="p02.f32"):
        load_dataset(tmp_path)


def test_channel_count_mismatch(tmp_path):
    save_dataset(_toy(), tmp_path)
    side = tmp_path / "signals" / "p01.json"
    meta = json.loads(side.read_text())
    meta["channel_names"] = ["F3", "F4"]
    side.write_text(json.dumps(meta))
    with pytest.raises(DatasetError, match="participant 1: 2 channel names"):
        load_dataset(tmp_path)


def test_truncated_binary(tmp_path):
    save_dataset(_toy(), tmp_path)
    p = tmp_path / "signals" / "p01.f32"
    p.write_bytes(p.read_bytes()[:-4])
    with pytest.raises(DatasetError, match="expected 3 x 192"):
        load_dataset(tmp_path)


def test_out_of_range_rating(tmp_path):
    save_dataset(_toy(), tmp_path)
    p = tmp_path / "ratings.csv"
    lines = p.read_text().splitlines()
    lines[2] = "1,2,9.5,3.0"
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(DatasetError, match="participant 1 trial 2: valence rating 9.5"):
        load_dataset(tmp_path)


def test_trial_without_rating(tmp_path):
    save_dataset(_toy(), tmp_path)
    p = tmp_path / "ratings.csv"
    lines = [ln for ln in p.read_text().splitlines() if not ln.startswith("2,3,")]
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(DatasetError, match="participant 2 trial 3: no rating"):
        load_dataset(tmp_path)


def test_synthetic_shape_and_balance():
    spec = SyntheticSpec(n_participants=3, n_trials=6, duration_seconds=2.0)
    ds = generate_synthetic(spec, seed=1)
    assert len(ds) == 18
    rec, _ = ds[0]
    assert rec.samples.shape == (10, 256) and rec.samples.dtype == np.float32
    assert rec.channel_names == STUDY_CHANNELS
    for p in ds.participants:
        for dim in ("valence", "arousal"):
            labels = [int(binarize(r.rating(dim))) for rec, r in ds if rec.participant_id == p]
            assert sum(labels) == 3


def test_synthetic_deap_shaped_count():
    spec = SyntheticSpec()
    assert (spec.n_participants, spec.n_trials, spec.duration_seconds, spec.sampling_rate_hz) == (32, 40, 60.0, 128.0)
    # same participant/trial grid with short trials to keep memory small
    ds = generate_synthetic(SyntheticSpec(duration_seconds=0.25), seed=0)
    assert len(ds) == 1280 and ds.participants == tuple(range(1, 33))


def test_synthetic_deterministic():
    spec = SyntheticSpec(n_participants=2, n_trials=2, duration_seconds=1.0)
    a, b = generate_synthetic(spec, 5), generate_synthetic(spec, 5)
    c = generate_synthetic(spec, 6)
    assert all(x[0].samples.tobytes() == y[0].samples.tobytes() and x[1] == y[1] for x, y in zip(a, b))
    assert a[0][0].samples.tobytes() != c[0][0].samples.tobytes()


def test_synthetic_plants_beta_amplitude():
    # high-arousal trials carry more beta energy on the left frontal channels only
    from eegemo.wavelet import decompose

    spec = SyntheticSpec(n_participants=1, n_trials=20, duration_seconds=8.0, amplitude_ratio=3.0, slow_amplitude=0.0)
    ds = generate_synthetic(spec, seed=0)
    f3, f4 = STUDY_CHANNELS.index("F3"), STUDY_CHANNELS.index("F4")
    hi, lo = [], []
    for rec, r in ds:
        beta = decompose(rec.samples[:, None, :].astype(float), sampling_rate_hz=128).band("beta")[:, 0]
        e = np.sum(beta ** 2, axis=-1)
        (hi if binarize(r.arousal_rating) else lo).append(e[[f3, f4]])
    hi, lo = np.mean(hi, axis=0), np.mean(lo, axis=0)
    assert hi[0] > 3 * lo[0]  # F3 carries arousal
    assert 0.5 < hi[1] / lo[1] < 2  # F4 (valence side) does not


@pytest.mark.parametrize("kw", [
    {"n_participants": 0}, {"n_trials": -1}, {"duration_seconds": 0.0},
    {"amplitude_ratio": 0.0}, {"effect_band": "delta"}, {"noise_amplitude": -1.0},
    {"sampling_rate_hz": 32.0},
])
def test_synthetic_spec_validation(kw):
    with pytest.raises(ValueError):
        SyntheticSpec(**kw)


def test_convert_deap(tmp_path):
    rng = np.random.default_rng(0)
    src = tmp_path / "deap"
    src.mkdir()
    data = rng.standard_normal((2, 40, 8064))
    labels = np.array([[7.1, 2.0, 5.0, 5.0], [4.5, 8.2, 5.0, 5.0]])
    with open(src / "s03.dat", "wb") as fh:
        pickle.dump({"data": data, "labels": labels}, fh)
    manifest = convert_deap(src, tmp_path / "out")
    ds = load_dataset(manifest)
    assert len(ds) == 2
    rec, rating = ds[1]
    assert rec.participant_id == 3 and rec.trial_id == 2
    assert rec.samples.shape == (10, 8064 - 384)
    assert rec.channel_names == STUDY_CHANNELS
    assert np.array_equal(rec.samples[0], data[1, DEAP_EEG_CHANNELS.index("F3"), 384:].astype(np.float32))
    assert (rating.valence_rating, rating.arousal_rating) == (4.5, 8.2)


def test_convert_deap_empty(tmp_path):
    with pytest.raises(FileNotFoundError):
        convert_deap(tmp_path, tmp_path / "out")
