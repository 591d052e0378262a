import pytest
from pydantic import ValidationError

from eegemo.config import ExperimentConfig, KnnParams, RunConfig, config_hash, load_config


def test_defaults():
    cfg = RunConfig()
    exp = cfg.experiment
    assert exp.window_lengths == (4.0,) and exp.overlap == 0.5 and exp.folds == 8
    svm, knn, ann = exp.classifiers
    assert (svm.sigma, svm.C) == (2.0, 1.0)
    assert knn.k == 5
    assert ann.hidden == (32, 16)
    assert exp.modes() == ["band:gamma", "band:beta", "band:alpha", "band:theta"]


def test_unknown_keys_rejected():
    with pytest.raises(ValidationError, match="extra"):
        RunConfig.model_validate({"experiment": {"windows": [4]}})
    with pytest.raises(ValidationError):
        RunConfig.model_validate({"experiment": {"classifiers": [{"kind": "svm", "gamma": 1}]}})


@pytest.mark.parametrize("exp", [
    {"axis": "pair", "values": ["beta"]},
    {"values": ["delta"]},
    {"window_lengths": []},
    {"window_lengths": [-2]},
    {"channels": ["O1"]},
    {"dimensions": ["dominance"]},
    {"classifiers": [{"kind": "svm"}, {"kind": "svm"}]},
    {"classifiers": []},
    {"overlap": 1.0},
])
def test_invalid_experiments(exp):
    with pytest.raises(ValidationError):
        ExperimentConfig.model_validate(exp)


def test_even_k_needs_opt_in():
    with pytest.raises(ValidationError, match="even"):
        KnnParams(k=4)
    assert KnnParams(k=4, allow_even=True).k == 4


def test_named_classifier_variants():
    cfg = ExperimentConfig(classifiers=[{"kind": "svm"}, {"kind": "svm", "sigma": 0.1, "name": "SVM-0.1"}])
    assert [c.label() for c in cfg.classifiers] == ["SVM", "SVM-0.1"]


def test_dataset_and_synthetic_exclusive():
    with pytest.raises(ValidationError, match="either"):
        RunConfig(dataset="x", synthetic={})


def test_load_with_overrides(tmp_path):
    p = tmp_path / "run.yaml"
    p.write_text("experiment:\n  axis: pair\n  seed: 3\nsynthetic:\n  n_trials: 4\n")
    cfg = load_config(p, {"experiment.seed": 9, "synthetic.duration_seconds": 2.0})
    assert cfg.seed == 9 and cfg.experiment.axis == "pair"
    assert cfg.synthetic.n_trials == 4 and cfg.synthetic.duration_seconds == 2.0


def test_hash_is_stable_and_sensitive():
    a = RunConfig().model_dump(mode="json")
    assert config_hash(a) == config_hash(RunConfig().model_dump(mode="json"))
    assert config_hash(a) != config_hash(RunConfig(experiment={"seed": 1}).model_dump(mode="json"))
    assert len(config_hash(a)) == 16
