from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class KnnModel:
    X: np.ndarray
    y: np.ndarray
    k: int = 5

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y).astype(np.int64).ravel()
        if X.ndim != 2 or len(X) == 0:
            raise ValueError("KNN needs a non-empty (n, d) training matrix")
        if len(y) != len(X):
            raise ValueError("one label per training row required")
        if not 1 <= self.k <= len(X):
            raise ValueError(f"K={self.k} must lie in [1, {len(X)}]")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)


def knn_fit(X, y, k: int = 5, require_odd: bool = True) -> KnnModel:
    if require_odd and k % 2 == 0:
        raise ValueError(f"K={k} is even; pass require_odd=False to allow vote ties")
    return KnnModel(X, y, k)


def knn_neighbors(model: KnnModel, X) -> np.ndarray:
    """Indices of the K nearest training rows, nearest first.

    Equal distances are ordered by training-row index.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.X.shape[1]:
        raise ValueError(f"expected {model.X.shape[1]} features, got {X.shape[1]}")
    out = np.empty((len(X), model.k), dtype=np.int64)
    chunk = max(1, 4_000_000 // max(1, model.X.size))
    for s in range(0, len(X), chunk):
        diff = X[s:s + chunk, None, :] - model.X[None, :, :]
        d2 = np.einsum("qnd,qnd->qn", diff, diff)
        out[s:s + chunk] = np.argsort(d2, axis=1, kind="stable")[:, : model.k]
    return out


def knn_predict(model: KnnModel, X) -> np.ndarray:
    """Majority label of the K nearest neighbours (Euclidean).

    A tied vote goes to the label of the single nearest neighbour.
    """
    nb = knn_neighbors(model, X)
    votes = model.y[nb]
    classes = np.unique(model.y)
    counts = np.stack([(votes == c).sum(axis=1) for c in classes], axis=1)
    best = counts.max(axis=1, keepdims=True)
    winners = counts == best
    pred = classes[np.argmax(counts, axis=1)]
    tied = winners.sum(axis=1) > 1
    pred[tied] = votes[tied, 0]
    return pred
