"""RBF-kernel support vector classifier trained by sequential minimal
optimization.

The solver works on the dual problem in minimization form,

    minimize   0.5 * sum_ij a_i a_j y_i y_j K_ij  -  sum_i a_i
    subject to 0 <= a_i <= C  and  sum_i a_i y_i = 0,

moving one pair of multipliers per step.  Pair selection follows the
classic two-loop heuristic: the outer loop alternates between all points
and the non-bound ones, the inner loop first tries the partner with the
largest error gap, then the remaining candidates in index order.  Every
choice is deterministic, so a given training set always produces the
same model.

Features are standardized per dimension before the kernel sees them;
the learned mean and scale ride along in the model so prediction applies
the identical mapping.

The decision function convention is f(x) = sum_i a_i y_i K(x_i, x) + b,
with label 1 predicted when f(x) > 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SvmConfig:
    """Solver settings. ``c`` is the box constraint (usually written C)."""

    c: float = 10.0
    gamma: float = 1e-4
    tol: float = 1e-3
    max_sweeps: int = 20000

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be at least 1")


def rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    """exp(-gamma * ||a_i - b_j||^2) for all pairs, shape [len(a), len(b)]."""
    sq = ((a * a).sum(axis=1)[:, None] + (b * b).sum(axis=1)[None, :]
          - 2.0 * (a @ b.T))
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


class _SmoSolver:
    """Working state for one fit. Operates on a precomputed Gram matrix."""

    def __init__(self, gram: np.ndarray, y: np.ndarray, config: SvmConfig):
        self.gram = gram
        self.y = y
        self.c = config.c
        self.tol = config.tol
        # minimum relative multiplier movement worth applying; scales with
        # tol so tightening tol also tightens the solution
        self.eps = config.tol * 1e-2
        self.max_sweeps = config.max_sweeps
        n = len(y)
        self.alpha = np.zeros(n)
        self.b = 0.0
        # errors[i] = f(x_i) - y_i; with alpha = 0 and b = 0, f = 0
        self.errors = -y.astype(float)

    def solve(self) -> tuple[np.ndarray, float]:
        examine_all = True
        n_changed = 0
        for _ in range(self.max_sweeps):
            if not (examine_all or n_changed > 0):
                return self.alpha, self.b
            n_changed = 0
            if examine_all:
                candidates = range(len(self.y))
            else:
                candidates = np.flatnonzero(
                    (self.alpha > 0) & (self.alpha < self.c))
            for i in candidates:
                n_changed += self._examine(int(i))
            if examine_all:
                examine_all = False
            elif n_changed == 0:
                examine_all = True
        raise RuntimeError(
            f"SMO did not converge within {self.max_sweeps} sweeps")

    def _examine(self, i2: int) -> int:
        y2 = self.y[i2]
        a2 = self.alpha[i2]
        e2 = self.errors[i2]
        r2 = e2 * y2
        violates = ((r2 < -self.tol and a2 < self.c)
                    or (r2 > self.tol and a2 > 0))
        if not violates:
            return 0
        non_bound = np.flatnonzero((self.alpha > 0) & (self.alpha < self.c))
        if len(non_bound) > 1:
            i1 = int(non_bound[np.argmax(np.abs(self.errors[non_bound] - e2))])
            if self._step(i1, i2):
                return 1
        for i1 in non_bound:
            if self._step(int(i1), i2):
                return 1
        for i1 in range(len(self.y)):
            if self._step(i1, i2):
                return 1
        return 0

    def _step(self, i1: int, i2: int) -> bool:
        if i1 == i2:
            return False
        a1, a2 = self.alpha[i1], self.alpha[i2]
        y1, y2 = self.y[i1], self.y[i2]
        e1, e2 = self.errors[i1], self.errors[i2]
        s = y1 * y2
        if y1 != y2:
            lo = max(0.0, a2 - a1)
            hi = min(self.c, self.c + a2 - a1)
        else:
            lo = max(0.0, a1 + a2 - self.c)
            hi = min(self.c, a1 + a2)
        if lo >= hi:
            return False
        k11 = self.gram[i1, i1]
        k12 = self.gram[i1, i2]
        k22 = self.gram[i2, i2]
        eta = k11 + k22 - 2.0 * k12
        if eta > 1e-15:
            a2_new = a2 + y2 * (e1 - e2) / eta
            a2_new = min(max(a2_new, lo), hi)
        else:
            # flat or concave direction: compare the pair objective at the
            # two feasible endpoints, keeping a1 + s*a2 constant
            f1 = e1 + y1
            f2 = e2 + y2
            v1 = f1 - self.b - y1 * a1 * k11 - y2 * a2 * k12
            v2 = f2 - self.b - y1 * a1 * k12 - y2 * a2 * k22
            pair_sum = a1 + s * a2

            def objective(a2p: float) -> float:
                a1p = pair_sum - s * a2p
                return (0.5 * k11 * a1p * a1p + 0.5 * k22 * a2p * a2p
                        + s * k12 * a1p * a2p
                        + y1 * v1 * a1p + y2 * v2 * a2p - a1p - a2p)

            lo_obj = objective(lo)
            hi_obj = objective(hi)
            if lo_obj < hi_obj - 1e-12:
                a2_new = lo
            elif hi_obj < lo_obj - 1e-12:
                a2_new = hi
            else:
                return False
        if abs(a2_new - a2) < self.eps * (a2_new + a2 + self.eps):
            return False
        a1_new = a1 + s * (a2 - a2_new)
        # snap to the box to keep bound bookkeeping exact
        snap = 1e-10 * self.c
        if a1_new < snap:
            a1_new = 0.0
        elif a1_new > self.c - snap:
            a1_new = self.c
        d1 = a1_new - a1
        d2 = a2_new - a2
        b1 = self.b - e1 - y1 * d1 * k11 - y2 * d2 * k12
        b2 = self.b - e2 - y1 * d1 * k12 - y2 * d2 * k22
        if 0.0 < a1_new < self.c:
            b_new = b1
        elif 0.0 < a2_new < self.c:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)
        self.errors += (y1 * d1 * self.gram[i1] + y2 * d2 * self.gram[i2]
                        + (b_new - self.b))
        self.alpha[i1] = a1_new
        self.alpha[i2] = a2_new
        self.b = b_new
        return True


class SvmModel:
    """Fitted classifier: standardization stats plus the dual solution."""

    def __init__(self, config: SvmConfig, mean: np.ndarray, scale: np.ndarray,
                 support_vectors: np.ndarray, dual_coef: np.ndarray,
                 bias: float, alpha: np.ndarray):
        self.config = config
        self.mean = mean
        self.scale = scale
        self.support_vectors = support_vectors
        self.dual_coef = dual_coef
        self.bias = bias
        self.alpha = alpha

    @property
    def n_support(self) -> int:
        return len(self.dual_coef)

    def standardize(self, features: np.ndarray) -> np.ndarray:
        return (np.asarray(features, dtype=float) - self.mean) / self.scale

    def decision_function(self, features: np.ndarray) -> np.ndarray:
        features = np.atleast_2d(np.asarray(features, dtype=float))
        if features.shape[1] != self.mean.shape[0]:
            raise ValueError(f"expected {self.mean.shape[0]} features, "
                             f"got {features.shape[1]}")
        kernel = rbf_kernel(self.standardize(features), self.support_vectors,
                            self.config.gamma)
        return kernel @ self.dual_coef + self.bias

    def predict(self, features: np.ndarray) -> np.ndarray:
        return (self.decision_function(features) > 0).astype(np.int64)


def fit_svm(features: np.ndarray, labels: np.ndarray,
            config: SvmConfig = SvmConfig()) -> SvmModel:
    """Train on rows of ``features`` with binary ``labels`` in {0, 1}."""
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels)
    if features.ndim != 2:
        raise ValueError(f"features must be 2-D, got shape {features.shape}")
    if labels.shape != (features.shape[0],):
        raise ValueError("labels must be one value per feature row")
    if not np.isfinite(features).all():
        raise ValueError("features contain non-finite values")
    present = np.unique(labels)
    if not np.isin(present, (0, 1)).all():
        raise ValueError(f"labels must be 0 or 1, found {present}")
    if len(present) < 2:
        raise ValueError("training data must contain two classes")

    mean = features.mean(axis=0)
    std = features.std(axis=0)
    scale = np.where(std > 1e-8, std, 1.0)
    z = (features - mean) / scale
    y = np.where(labels == 1, 1.0, -1.0)

    gram = rbf_kernel(z, z, config.gamma)
    alpha, bias = _SmoSolver(gram, y, config).solve()

    support = np.flatnonzero(alpha > 1e-10)
    return SvmModel(config=config, mean=mean, scale=scale,
                    support_vectors=z[support].copy(),
                    dual_coef=(alpha * y)[support], bias=bias, alpha=alpha)
