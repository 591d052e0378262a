import json

import numpy as np
import pytest

from eegemo import pca
from eegemo.classify import (
    AnnConfig,
    ann_predict,
    ann_train,
    knn_fit,
    knn_predict,
    load_bundle,
    save_bundle,
    svm_predict,
    svm_train,
)


@pytest.fixture(scope="module")
def data():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((60, 3))
    y = (X[:, 0] + X[:, 1] > 0).astype(int)
    return X, y, rng.standard_normal((10, 3))


def test_svm_bundle(tmp_path, data):
    X, y, Q = data
    basis = pca.fit(X)
    m = svm_train(pca.transform(X, basis), 2 * y - 1)
    cols = [("F3", "beta", "entropy"), ("F3", "beta", "energy"), ("F4", "beta", "entropy")]
    save_bundle(tmp_path, m, columns=cols, pca_basis=basis, extra={"config_hash": "x", "seed": 1})
    meta = json.loads((tmp_path / "metadata.json").read_text())
    assert meta["kind"] == "svm"
    assert meta["hyperparameters"]["C"] == 1.0 and meta["hyperparameters"]["sigma"] == 2.0
    assert meta["feature_columns"][0] == "F3:beta:entropy"
    assert meta["pca"] == "pca.txt" and meta["extra"]["seed"] == 1
    m2, b2, _ = load_bundle(tmp_path)
    Zq = pca.transform(Q, b2)
    assert np.array_equal(svm_predict(m2, Zq)[1], svm_predict(m, pca.transform(Q, basis))[1])


def test_knn_bundle(tmp_path, data):
    X, y, Q = data
    m = knn_fit(X, y, 3)
    save_bundle(tmp_path, m)
    m2, basis, meta = load_bundle(tmp_path)
    assert basis is None and meta["hyperparameters"] == {"k": 3}
    assert np.array_equal(knn_predict(m2, Q), knn_predict(m, Q))


def test_ann_bundle(tmp_path, data):
    X, y, Q = data
    m = ann_train(X, y, AnnConfig(epochs=3, hidden=(5, 4)))
    save_bundle(tmp_path, m)
    m2, _, meta = load_bundle(tmp_path)
    assert meta["hyperparameters"]["hidden"] == [5, 4]
    assert m2.config == m.config
    assert np.array_equal(ann_predict(m2, Q)[1], ann_predict(m, Q)[1])
    assert np.array_equal(m2.loss_history, m.loss_history)


def test_unknown_model(tmp_path):
    with pytest.raises(TypeError):
        save_bundle(tmp_path, object())
