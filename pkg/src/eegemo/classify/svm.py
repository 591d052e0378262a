"""Soft-margin RBF support vector machine trained by sequential minimal optimisation.

Follows Platt's scheme: an outer loop alternates full sweeps and sweeps over
the non-bound multipliers; for each KKT violator the partner is the
non-bound point maximising |E1 - E2|, with fall-back scans over non-bound and
then all points.  The bias is refit at the end as the centre of the interval
allowed by the KKT conditions and every point is re-verified.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import rbf_gram

# full Gram matrix above this many entries is replaced by a row cache
_GRAM_LIMIT = 80_000_000


class SvmError(RuntimeError):
    pass


class ConvergenceError(SvmError):
    pass


class DegenerateProblemError(SvmError):
    pass


@dataclass(frozen=True, eq=False)
class SvmModel:
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # alpha_i * y_i
    bias: float
    sigma: float
    C: float
    alphas: np.ndarray = field(repr=False)
    n_steps: int = 0
    n_passes: int = 0

    @property
    def n_support(self) -> int:
        return len(self.dual_coef)


class _Kernel:
    def __init__(self, X, sigma):
        self.X, self.sigma = X, sigma
        n = len(X)
        if n * n <= _GRAM_LIMIT:
            self.full = rbf_gram(X, X, sigma)
            np.fill_diagonal(self.full, 1.0)
        else:
            self.full = None
            self.cache: dict[int, np.ndarray] = {}

    def row(self, i: int) -> np.ndarray:
        if self.full is not None:
            return self.full[i]
        r = self.cache.get(i)
        if r is None:
            if len(self.cache) > 2000:
                self.cache.pop(next(iter(self.cache)))
            r = rbf_gram(self.X[i:i + 1], self.X, self.sigma)[0]
            r[i] = 1.0
            self.cache[i] = r
        return r

    def value(self, i: int, j: int) -> float:
        if self.full is not None:
            return self.full[i, j]
        return self.row(i)[j]


def dual_objective(alphas, y, K) -> float:
    ay = alphas * y
    return float(alphas.sum() - 0.5 * ay @ K @ ay)


def kkt_violations(alphas, y, f, C) -> np.ndarray:
    """Per-point KKT violation for decision values ``f`` (0 when satisfied)."""
    m = y * f
    viol = np.zeros_like(m)
    at_zero = alphas <= 0
    at_c = alphas >= C
    free = ~at_zero & ~at_c
    viol[at_zero] = np.maximum(0.0, 1.0 - m[at_zero])
    viol[at_c] = np.maximum(0.0, m[at_c] - 1.0)
    viol[free] = np.abs(m[free] - 1.0)
    return viol


def _refit_bias(alphas, y, g, C) -> float:
    # each point bounds b through y_i (g_i + b) vs 1
    target = y - g  # value of b putting the point exactly on its margin
    lower = np.full(len(y), -np.inf)
    upper = np.full(len(y), np.inf)
    at_zero = alphas <= 0
    at_c = alphas >= C
    free = ~at_zero & ~at_c
    pos, neg = y > 0, y < 0
    lower[at_zero & pos] = target[at_zero & pos]
    upper[at_zero & neg] = target[at_zero & neg]
    upper[at_c & pos] = target[at_c & pos]
    lower[at_c & neg] = target[at_c & neg]
    lower[free] = target[free]
    upper[free] = target[free]
    lo, hi = lower.max(), upper.min()
    if np.isfinite(lo) and np.isfinite(hi):
        return float(0.5 * (lo + hi))
    return float(lo if np.isfinite(lo) else hi)


def svm_train(
    X,
    y,
    sigma: float = 2.0,
    C: float = 1.0,
    tol: float = 1e-3,
    max_passes: int | None = None,
    seed: int = 0,
    eps: float = 1e-10,
    record_objective: bool = False,
):
    """Train on ``X`` with labels ``y`` in {-1, +1}.

    With ``record_objective=True`` returns ``(model, objectives)`` where
    ``objectives`` holds the dual objective after every accepted pair update.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    n = len(y)
    if X.ndim != 2 or X.shape[0] != n:
        raise ValueError("X must be (n, d) with one label per row")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be -1 or +1")
    if len(np.unique(y)) < 2:
        raise ValueError("training data must contain both classes")
    if not C > 0:
        raise ValueError("C must be positive")
    if np.all(np.ptp(X, axis=0) == 0):
        raise DegenerateProblemError("all training points are identical; classes cannot be separated")
    max_passes = 5 * n if max_passes is None else max_passes

    kern = _Kernel(X, sigma)
    rng = np.random.default_rng(seed)
    alphas = np.zeros(n)
    b = 0.0
    E = -y.copy()  # f - y with f = 0
    objectives: list[float] = []
    steps = 0
    bound_eps = 1e-12 * C

    def snap(a: float) -> float:
        # round-off must not leave a bound multiplier looking free
        if a < bound_eps:
            return 0.0
        if a > C - bound_eps:
            return C
        return a

    def take_step(i1: int, i2: int) -> bool:
        nonlocal b, steps
        if i1 == i2:
            return False
        a1, a2 = alphas[i1], alphas[i2]
        y1, y2 = y[i1], y[i2]
        E1, E2 = E[i1], E[i2]
        s = y1 * y2
        if y1 != y2:
            L, H = max(0.0, a2 - a1), min(C, C + a2 - a1)
        else:
            L, H = max(0.0, a1 + a2 - C), min(C, a1 + a2)
        if H - L < eps:
            return False
        k11, k12, k22 = kern.value(i1, i1), kern.value(i1, i2), kern.value(i2, i2)
        eta = k11 + k22 - 2.0 * k12
        if eta > eps:
            a2n = min(H, max(L, a2 + y2 * (E1 - E2) / eta))
        else:
            # negated dual is linear along the constraint line; take the lower end
            f1 = y1 * (E1 - b) - a1 * k11 - s * a2 * k12
            f2 = y2 * (E2 - b) - s * a1 * k12 - a2 * k22
            L1, H1 = a1 + s * (a2 - L), a1 + s * (a2 - H)
            obj_L = L1 * f1 + L * f2 + 0.5 * L1 * L1 * k11 + 0.5 * L * L * k22 + s * L * L1 * k12
            obj_H = H1 * f1 + H * f2 + 0.5 * H1 * H1 * k11 + 0.5 * H * H * k22 + s * H * H1 * k12
            if obj_L < obj_H - eps:
                a2n = L
            elif obj_L > obj_H + eps:
                a2n = H
            else:
                a2n = a2
        a2n = snap(a2n)
        if abs(a2n - a2) < eps * (a2n + a2 + eps):
            return False
        a1n = snap(a1 + s * (a2 - a2n))
        d1, d2 = y1 * (a1n - a1), y2 * (a2n - a2)
        b1 = b - E1 - d1 * k11 - d2 * k12
        b2 = b - E2 - d1 * k12 - d2 * k22
        if 0.0 < a1n < C:
            bn = b1
        elif 0.0 < a2n < C:
            bn = b2
        else:
            bn = 0.5 * (b1 + b2)
        E[:] += d1 * kern.row(i1) + d2 * kern.row(i2) + (bn - b)
        alphas[i1], alphas[i2] = a1n, a2n
        b = bn
        steps += 1
        if record_objective:
            objectives.append(dual_objective(alphas, y, kern.full))
        return True

    def examine(i2: int) -> int:
        r2 = E[i2] * y[i2]
        a2 = alphas[i2]
        if not ((r2 < -tol and a2 < C) or (r2 > tol and a2 > 0)):
            return 0
        nonbound = np.flatnonzero((alphas > 0) & (alphas < C))
        if len(nonbound) > 1:
            i1 = int(nonbound[np.argmax(np.abs(E[nonbound] - E[i2]))])
            if take_step(i1, i2):
                return 1
        if len(nonbound):
            for i1 in np.roll(nonbound, -int(rng.integers(len(nonbound)))):
                if take_step(int(i1), i2):
                    return 1
        for i1 in np.roll(np.arange(n), -int(rng.integers(n))):
            if take_step(int(i1), i2):
                return 1
        return 0

    def violators(idx: np.ndarray) -> np.ndarray:
        r = E[idx] * y[idx]
        a = alphas[idx]
        return idx[((r < -tol) & (a < C)) | ((r > tol) & (a > 0))]

    examine_all = True
    passes = 0
    while True:
        changed = 0
        if examine_all:
            candidates = violators(np.arange(n))
        else:
            candidates = violators(np.flatnonzero((alphas > 0) & (alphas < C)))
        for i in candidates:
            changed += examine(int(i))
        passes += 1
        if examine_all:
            if changed == 0:
                break
            examine_all = False
        elif changed == 0:
            examine_all = True
        if passes >= max_passes:
            raise ConvergenceError(f"SMO did not converge within {passes} passes ({steps} pair updates)")

    sv = alphas > 0
    g = np.zeros(n)
    if sv.any():
        g = (alphas[sv] * y[sv]) @ rbf_gram(X[sv], X, sigma)
    b = _refit_bias(alphas, y, g, C)
    worst = kkt_violations(alphas, y, g + b, C).max()
    if not worst <= tol:
        raise ConvergenceError(
            f"SMO stopped after {passes} passes ({steps} pair updates) with KKT violation {worst:.3g} > {tol:g}"
        )
    model = SvmModel(
        support_vectors=X[sv].copy(),
        dual_coef=(alphas * y)[sv],
        bias=b,
        sigma=float(sigma),
        C=float(C),
        alphas=alphas[sv].copy(),
        n_steps=steps,
        n_passes=passes,
    )
    if record_objective:
        return model, np.array(objectives)
    return model


def decision_function(model: SvmModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.support_vectors.shape[1]:
        raise ValueError(f"expected {model.support_vectors.shape[1]} features, got {X.shape[1]}")
    out = np.full(len(X), model.bias)
    for start in range(0, len(X), 2048):
        K = rbf_gram(X[start:start + 2048], model.support_vectors, model.sigma)
        out[start:start + 2048] += K @ model.dual_coef
    return out


def svm_predict(model: SvmModel, X):
    """Labels (1 = high, 0 = low) and the raw decision values."""
    f = decision_function(model, X)
    return (f > 0).astype(np.int64), f
