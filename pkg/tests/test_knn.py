import numpy as np
import pytest

from eegemo.classify import KnnModel, knn_fit, knn_neighbors, knn_predict

from .oracles import knn_oracle


@pytest.mark.parametrize("k", [1, 3, 5, 7])
def test_matches_exhaustive_oracle(k):
    rng = np.random.default_rng(k)
    X = rng.standard_normal((30, 3))
    y = rng.integers(0, 2, 30)
    Q = rng.standard_normal((100, 3))
    pred = knn_predict(knn_fit(X, y, k), Q)
    assert pred.tolist() == [knn_oracle(X, y, q, k) for q in Q]


def test_all_k_on_integer_grid_with_ties():
    # integer coordinates create many exact distance ties
    rng = np.random.default_rng(9)
    X = rng.integers(0, 3, (12, 2)).astype(float)
    y = rng.integers(0, 2, 12)
    Q = rng.integers(0, 3, (40, 2)).astype(float)
    for k in range(1, 13):
        pred = knn_predict(knn_fit(X, y, k, require_odd=False), Q)
        assert pred.tolist() == [knn_oracle(X, y, q, k) for q in Q]


def test_k1_returns_training_label():
    X = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]])
    y = np.array([0, 1, 0])
    assert knn_predict(knn_fit(X, y, 1), X).tolist() == [0, 1, 0]


def test_distance_tie_goes_to_lower_index():
    X = np.array([[1.0], [-1.0]])
    assert knn_predict(knn_fit(X, [1, 0], 1), [[0.0]]).tolist() == [1]
    assert knn_predict(knn_fit(X, [0, 1], 1), [[0.0]]).tolist() == [0]
    assert knn_neighbors(knn_fit(X, [0, 1], 1), [[0.0]]).tolist() == [[0]]


def test_vote_tie_goes_to_nearest():
    X = np.array([[0.0], [1.0], [-2.0], [3.0]])
    y = np.array([1, 0, 0, 1])
    model = knn_fit(X, y, 2, require_odd=False)
    assert knn_predict(model, [[0.1]]).tolist() == [1]
    assert knn_predict(model, [[0.9]]).tolist() == [0]


def test_validation():
    with pytest.raises(ValueError, match="even"):
        knn_fit(np.zeros((4, 1)), [0, 1, 0, 1], 4)
    with pytest.raises(ValueError, match="non-empty"):
        KnnModel(np.zeros((0, 2)), np.zeros(0), 1)
    with pytest.raises(ValueError, match="K=7"):
        knn_fit(np.zeros((3, 1)), [0, 1, 0], 7)
    with pytest.raises(ValueError, match="expected 1 features"):
        knn_predict(knn_fit(np.zeros((3, 1)), [0, 1, 0], 1), [[0.0, 1.0]])
