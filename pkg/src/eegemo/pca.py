"""Full-rank PCA used as a decorrelating rotation (no components dropped)."""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class PcaError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PcaBasis:
    """Training mean and a d x d orthonormal basis, columns by descending variance."""

    mean: np.ndarray
    basis: np.ndarray
    variances: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def save(self, path) -> None:
        """Text matrix: first row = mean, second = variances, then the d basis rows."""
        mat = np.vstack([self.mean, self.variances, self.basis])
        np.savetxt(path, mat, fmt="%.17g", header=f"pca dim={self.dim} rows=mean,variances,basis")

    @classmethod
    def load(cls, path) -> "PcaBasis":
        mat = np.atleast_2d(np.loadtxt(path, ndmin=2))
        return cls(mean=mat[0], variances=mat[1], basis=mat[2:])


def _orient(basis: np.ndarray) -> np.ndarray:
    # make the largest-magnitude entry of each column positive (first one on ties)
    idx = np.argmax(np.abs(basis), axis=0)
    signs = np.sign(basis[idx, np.arange(basis.shape[1])])
    signs[signs == 0] = 1.0
    return basis * signs


def fit(X, center: bool = True) -> PcaBasis:
    """Fit the basis by SVD of the (centred) training matrix.

    ``center=False`` gives the literal uncentred variant Z = X phi.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise PcaError("X must be a 2-D matrix")
    n, d = X.shape
    if n < 2:
        raise PcaError(f"PCA needs at least 2 rows, got {n}")
    if d < 1:
        raise PcaError("PCA needs at least one column")
    if not np.all(np.isfinite(X)):
        raise PcaError("X has non-finite entries")
    mean = X.mean(axis=0) if center else np.zeros(d)
    Xc = X - mean
    _, s, vt = np.linalg.svd(Xc, full_matrices=True)
    sv = np.zeros(d)
    sv[: len(s)] = s
    order = np.argsort(-sv, kind="stable")
    basis = _orient(vt.T[:, order])
    return PcaBasis(mean=mean, basis=basis, variances=sv[order] ** 2 / (n - 1))


def transform(X, basis: PcaBasis) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != basis.dim:
        raise PcaError(f"X has {X.shape[1]} columns, basis expects {basis.dim}")
    return (X - basis.mean) @ basis.basis
