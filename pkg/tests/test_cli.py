import json

import pytest

from eegemo.cli import EXIT_CONFIG, EXIT_MISSING, EXIT_NUMERIC, EXIT_OK, main

CONFIG = """
synthetic:
  n_participants: 8
  n_trials: 4
  duration_seconds: 8
  amplitude_ratio: 3.0
experiment:
  folds: 4
  values: [beta, theta]
  classifiers:
    - {kind: svm}
    - {kind: knn, k: 3}
    - {kind: ann, epochs: 5}
"""


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "run.yaml"
    p.write_text(CONFIG)
    return str(p)


def run(*args):
    return main(list(args) + ["-q"])


def test_full_pipeline(cfg, tmp_path, capsys):
    out = str(tmp_path / "o")
    assert run("synth", "--config", cfg, "--out", out) == EXIT_OK
    manifest = json.loads((tmp_path / "o" / "dataset" / "manifest.json").read_text())
    assert manifest["provenance"]["seed"] == 0 and len(manifest["participants"]) == 8

    assert run("features", "--config", cfg, "--out", out) == EXIT_OK
    tables = sorted((tmp_path / "o" / "features").rglob("*.csv"))
    assert [t.name for t in tables] == ["w4s_band-beta.csv", "w4s_band-theta.csv"]
    lines = tables[0].read_text().splitlines()
    assert lines[0].startswith("# config_hash=") and lines[1] == "# seed=0"
    header = next(ln for ln in lines if not ln.startswith("#")).split(",")
    assert len(header) == 5 + 20
    assert sum(1 for ln in lines if ln and not ln.startswith("#")) - 1 == 8 * 4 * 3

    capsys.readouterr()
    assert run("evaluate", "--config", cfg, "--out", out) == EXIT_OK
    printed = capsys.readouterr().out
    assert "window_s,row,beta,theta" in printed and "Arousal-SVM" in printed
    report = tmp_path / "o" / "report"
    for name in ("table_accuracy.csv", "table_sensitivity.csv", "table_specificity.csv"):
        head = (report / name).read_text().splitlines()[0]
        assert "config_hash=" in head and "seed=0" in head
    meta = json.loads((report / "report.json").read_text())
    assert meta["config"]["synthetic"]["n_trials"] == 4

    assert run("report", "--out", out, "--metric", "all") == EXIT_OK
    assert capsys.readouterr().out.count("window_s,row") == 3


def test_synth_is_byte_identical_for_fixed_seed(cfg, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("synth", "--config", cfg, "--out", str(a), "--seed", "4") == EXIT_OK
    assert run("synth", "--config", cfg, "--out", str(b), "--seed", "4") == EXIT_OK
    files = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    assert files
    for f in files:
        assert (a / f).read_bytes() == (b / f).read_bytes()
    # rerunning into the same place replaces the dataset cleanly
    assert run("synth", "--config", cfg, "--out", str(a), "--seed", "4") == EXIT_OK
    assert sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file()) == files


def test_invalid_spec_leaves_no_output(cfg, tmp_path, capsys):
    out = tmp_path / "bad"
    code = run("synth", "--config", cfg, "--out", str(out), "--set", "synthetic.effect_band=delta")
    assert code == EXIT_CONFIG
    assert not out.exists()
    assert "delta" in capsys.readouterr().err


def test_missing_dataset_code_differs_from_validation(cfg, tmp_path):
    missing = run("features", "--config", cfg, "--out", str(tmp_path / "empty"))
    invalid = run("features", "--config", cfg, "--set", "experiment.axis=diagonal")
    assert missing == EXIT_MISSING and invalid == EXIT_CONFIG and missing != invalid
    assert run("evaluate", "--config", str(tmp_path / "nope.yaml")) == EXIT_MISSING
    assert run("report", "--out", str(tmp_path / "empty")) == EXIT_MISSING


def test_bad_set_syntax(cfg):
    assert run("synth", "--config", cfg, "--set", "novalue") == EXIT_CONFIG


def test_feature_cache_reused_across_classifier_sweeps(cfg, tmp_path, capsys):
    out = str(tmp_path / "o")
    run("synth", "--config", cfg, "--out", out)
    main(["features", "--config", cfg, "--out", out])
    assert "computing" in capsys.readouterr().err
    main(["evaluate", "--config", cfg, "--out", out, "--set", "experiment.classifiers=[{kind: knn, k: 5}]"])
    err = capsys.readouterr().err
    assert "cached" in err and "computing" not in err
    # a different window length is a different cache entry
    main(["features", "--config", cfg, "--out", out, "--set", "experiment.window_lengths=[2.0]"])
    assert "computing" in capsys.readouterr().err


def test_seed_change_changes_fold_plan(cfg, tmp_path):
    out = tmp_path / "o"
    run("synth", "--config", cfg, "--out", str(out))
    plans = []
    for seed in ("0", "1"):
        assert run("evaluate", "--config", cfg, "--out", str(out), "--seed", seed,
                   "--set", "experiment.classifiers=[{kind: knn, k: 3}]") == EXIT_OK
        meta = json.loads((out / "report" / "report.json").read_text())
        plans.append((meta["seed"], meta["fold_plan"]["folds"]))
    assert plans[0][0] == 0 and plans[1][0] == 1
    assert plans[0][1] != plans[1][1]


def test_numerical_failure_exit_code(cfg, tmp_path, monkeypatch):
    import eegemo.evaluation as ev
    from eegemo.classify import ConvergenceError

    out = str(tmp_path / "o")
    run("synth", "--config", cfg, "--out", out)

    def boom(*a, **k):
        raise ConvergenceError("SMO did not converge within 3 passes")

    monkeypatch.setattr(ev, "svm_train", boom)
    assert run("evaluate", "--config", cfg, "--out", out) == EXIT_NUMERIC
