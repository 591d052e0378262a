from __future__ import annotations

import numpy as np


def _check_sigma(sigma: float) -> float:
    sigma = float(sigma)
    if not sigma > 0:
        raise ValueError(f"kernel scale must be positive, got {sigma}")
    return sigma


def rbf_kernel(x, x_prime, sigma: float) -> float:
    """exp(-sigma * ||x - x'||^2); sigma multiplies the squared distance."""
    sigma = _check_sigma(sigma)
    a = np.asarray(x, dtype=np.float64).ravel()
    b = np.asarray(x_prime, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    diff = a - b
    return float(np.exp(-sigma * np.dot(diff, diff)))


def squared_distances(A, B) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    d2 = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * (A @ B.T)
    return np.maximum(d2, 0.0)


def rbf_gram(A, B, sigma: float) -> np.ndarray:
    sigma = _check_sigma(sigma)
    return np.exp(-sigma * squared_distances(A, B))
