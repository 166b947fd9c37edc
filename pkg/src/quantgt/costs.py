"""
Local cost models.

Every model exposes per-node ``value``/``grad`` plus a vectorized ``grads``
over the stacked node estimates (shape ``(n, p)``), the global cost
``F(x) = (1/n) sum_i f_i(x)``, a smoothness constant ``L`` and the strong
convexity metadata ``mu`` of the global cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit

__all__ = [
    "CostModel",
    "AcademicParams",
    "AcademicCost",
    "LogisticData",
    "LogisticCost",
    "QuadraticCost",
    "academic_generate",
    "academic_value_grad",
    "academic_L",
    "logistic_value_grad",
    "logistic_L",
    "write_academic",
    "read_academic",
]


class CostModel:
    """Base class; subclasses fill in ``n``, ``dim``, ``L``, ``mu`` and the evaluators."""

    n: int
    dim: int
    L: float
    mu: float

    def value(self, i: int, x) -> float:
        raise NotImplementedError

    def grad(self, i: int, x) -> np.ndarray:
        raise NotImplementedError

    def grads(self, X: np.ndarray) -> np.ndarray:
        return np.stack([self.grad(i, X[i]) for i in range(self.n)])

    def global_value(self, x) -> float:
        return float(np.mean([self.value(i, x) for i in range(self.n)]))

    def global_grad(self, x) -> np.ndarray:
        return np.mean([self.grad(i, x) for i in range(self.n)], axis=0)


# --------------------------------------------------------------------------
# academic benchmark: f_ij(x) = 4x^2 + 3 sin^2 x + a_ij cos x + b_ij x


@dataclass(frozen=True)
class AcademicParams:
    a: np.ndarray
    b: np.ndarray

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def m(self) -> int:
        return self.a.shape[1]


def _zero_sum_draw(rng, size, amplitude, deadband, max_draws):
    for _ in range(max_draws):
        # uniform on [-amplitude, -deadband] U [deadband, amplitude]
        v = rng.uniform(deadband, amplitude, size) * rng.choice((-1.0, 1.0), size)
        v -= v.mean()
        # mean-subtraction must not push entries into the dead-band or out of range
        if np.all(np.abs(v) >= deadband) and np.all(np.abs(v) <= amplitude):
            return v
    raise ValueError(f"could not draw zero-sum parameters in {max_draws} attempts")


def academic_generate(n: int, m: int = 1, seed=None, amplitude: float = 10.0,
                      deadband: float = 0.1, max_draws: int = 1000) -> AcademicParams:
    """Random ``a``, ``b`` in ``[-amplitude, amplitude]``, nonzero, each summing to zero."""
    if n * m < 2:
        raise ValueError("need at least two cost components for a zero-sum draw")
    if amplitude <= deadband:
        raise ValueError(f"amplitude {amplitude} must exceed the dead-band {deadband}")
    rng = np.random.default_rng(seed)
    a = _zero_sum_draw(rng, n * m, amplitude, deadband, max_draws).reshape(n, m)
    b = _zero_sum_draw(rng, n * m, amplitude, deadband, max_draws).reshape(n, m)
    return AcademicParams(a, b)


def academic_value_grad(params: AcademicParams, i: int, x: float):
    abar = params.a[i].mean()
    bbar = params.b[i].mean()
    value = 4 * x**2 + 3 * np.sin(x) ** 2 + abar * np.cos(x) + bbar * x
    grad = 8 * x + 3 * np.sin(2 * x) - abar * np.sin(x) + bbar
    return float(value), float(grad)


def academic_L(params: AcademicParams) -> float:
    # f'' = 8 + 6 cos 2x - abar cos x
    return float(14 + np.abs(params.a.mean(axis=1)).max())


class AcademicCost(CostModel):
    """Non-convex local costs whose average is ``4x^2 + 3 sin^2 x`` (so ``x* = 0``, ``F* = 0``)."""

    dim = 1
    mu = 2.0

    def __init__(self, params: AcademicParams):
        self.params = params
        self.n = params.n
        self.abar = params.a.mean(axis=1)
        self.bbar = params.b.mean(axis=1)
        self.L = academic_L(params)
        # exact sums: the zero-sum terms would otherwise leave ~1e-16 roundoff in F
        self.a_mean = math.fsum(params.a.ravel()) / params.a.size
        self.b_mean = math.fsum(params.b.ravel()) / params.b.size

    def value(self, i, x):
        return academic_value_grad(self.params, i, float(np.asarray(x).reshape(-1)[0]))[0]

    def grad(self, i, x):
        return np.array([academic_value_grad(self.params, i, float(np.asarray(x).reshape(-1)[0]))[1]])

    def grads(self, X):
        x = X[:, 0]
        g = 8 * x + 3 * np.sin(2 * x) - self.abar * np.sin(x) + self.bbar
        return g[:, None]

    def second_derivative(self, i, x):
        return 8 + 6 * np.cos(2 * x) - self.abar[i] * np.cos(x)

    def global_value(self, x):
        x = float(np.asarray(x).reshape(-1)[0])
        return 4 * x**2 + 3 * math.sin(x) ** 2 + self.a_mean * math.cos(x) + self.b_mean * x

    def global_grad(self, x):
        x = float(np.asarray(x).reshape(-1)[0])
        return np.array([8 * x + 3 * math.sin(2 * x) - self.a_mean * math.sin(x) + self.b_mean])


def write_academic(params: AcademicParams, path) -> None:
    """Plain text: ``n m`` header, then the ``a`` rows, then the ``b`` rows."""
    lines = [f"{params.n} {params.m}"]
    for M in (params.a, params.b):
        lines += [" ".join(f"{v:.17g}" for v in row) for row in M]
    Path(path).write_text("\n".join(lines) + "\n")


def read_academic(path) -> AcademicParams:
    rows = [r.split() for r in Path(path).read_text().splitlines() if r.strip()]
    n, m = int(rows[0][0]), int(rows[0][1])
    vals = np.array([[float(v) for v in r] for r in rows[1:]])
    if vals.shape != (2 * n, m):
        raise ValueError(f"{path}: expected {2 * n} rows of {m} values")
    return AcademicParams(vals[:n], vals[n:])


# --------------------------------------------------------------------------
# regularized logistic regression


@dataclass(frozen=True)
class LogisticData:
    """Per-node features ``features[i]`` (m_i x d) and labels in {-1, +1}.

    The decision variable is ``w = (b, c)`` with hyperplane normal ``b`` of
    length ``d`` and intercept ``c``; only ``b`` is regularized.
    """

    features: tuple
    labels: tuple
    lam: float = 0.01
    source_index: tuple | None = None

    def __post_init__(self):
        if len(self.features) != len(self.labels) or not self.features:
            raise ValueError("need matching, non-empty per-node features and labels")
        for i, (X, y) in enumerate(zip(self.features, self.labels)):
            if X.ndim != 2 or X.shape[0] != len(y) or len(y) < 1:
                raise ValueError(f"node {i}: features/labels shape mismatch")
            if not np.all(np.isin(y, (-1, 1))):
                raise ValueError(f"node {i}: labels must be -1 or +1")
        if self.lam < 0:
            raise ValueError("regularizer must be nonnegative")

    @property
    def n(self) -> int:
        return len(self.features)

    @property
    def dim(self) -> int:
        return self.features[0].shape[1] + 1


def logistic_value_grad(data: LogisticData, i: int, w):
    X, y = data.features[i], data.labels[i]
    w = np.asarray(w, dtype=float)
    b, c = w[:-1], w[-1]
    margin = y * (X @ b + c)
    value = np.logaddexp(0.0, -margin).mean() + 0.5 * data.lam * (b @ b)
    s = -y * expit(-margin) / len(y)
    grad = np.empty_like(w)
    grad[:-1] = X.T @ s + data.lam * b
    grad[-1] = s.sum()
    return float(value), grad


def logistic_L(data: LogisticData) -> float:
    per_node = [((X**2).sum() + len(X)) / (4 * len(X)) for X in data.features]
    return float(max(per_node) + data.lam)


class LogisticCost(CostModel):
    def __init__(self, data: LogisticData):
        self.data = data
        self.n = data.n
        self.dim = data.dim
        self.L = logistic_L(data)
        self.mu = data.lam
        self._all_X = np.vstack(data.features)
        self._all_y = np.concatenate(data.labels)
        self._weights = np.concatenate([np.full(len(y), 1.0 / (len(y) * self.n)) for y in data.labels])

    def value(self, i, w):
        return logistic_value_grad(self.data, i, w)[0]

    def grad(self, i, w):
        return logistic_value_grad(self.data, i, w)[1]

    def _global(self, w):
        w = np.asarray(w, dtype=float)
        b, c = w[:-1], w[-1]
        margin = self._all_y * (self._all_X @ b + c)
        value = self._weights @ np.logaddexp(0.0, -margin) + 0.5 * self.data.lam * (b @ b)
        s = -self._all_y * expit(-margin) * self._weights
        grad = np.empty_like(w)
        grad[:-1] = self._all_X.T @ s + self.data.lam * b
        grad[-1] = s.sum()
        return float(value), grad

    def global_value(self, w):
        return self._global(w)[0]

    def global_grad(self, w):
        return self._global(w)[1]

    def hessian(self, w) -> np.ndarray:
        """Dense Hessian of the global cost (``dim x dim``)."""
        w = np.asarray(w, dtype=float)
        Xa = np.hstack([self._all_X, np.ones((len(self._all_y), 1))])
        s = expit(self._all_y * (Xa @ w))
        d = s * (1 - s) * self._weights
        H = Xa.T @ (Xa * d[:, None])
        H[np.arange(self.dim - 1), np.arange(self.dim - 1)] += self.data.lam
        return H

    def hessian_vector(self, i, w, v):
        """Exact Hessian-vector product of ``f_i`` at ``w``."""
        X, y = self.data.features[i], self.data.labels[i]
        b, c = w[:-1], w[-1]
        s = expit(y * (X @ b + c))
        d = s * (1 - s) / len(y)
        t = d * (X @ v[:-1] + v[-1])
        out = np.empty_like(v)
        out[:-1] = X.T @ t + self.data.lam * v[:-1]
        out[-1] = t.sum()
        return out

    def accuracy(self, w) -> float:
        """Training accuracy of the linear classifier ``sign(b.x + c)``."""
        w = np.asarray(w, dtype=float)
        pred = np.where(self._all_X @ w[:-1] + w[-1] >= 0, 1, -1)
        return float(np.mean(pred == self._all_y))


# --------------------------------------------------------------------------
# quadratic test costs f_i(x) = |x - c_i|^2


@dataclass
class QuadraticCost(CostModel):
    """``f_i(x) = ||x - c_i||^2``; the global minimizer is the mean of the centers."""

    centers: np.ndarray
    n: int = field(init=False)
    dim: int = field(init=False)
    L: float = 2.0
    mu: float = 2.0

    def __post_init__(self):
        self.centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        if self.centers.shape[0] == 1 and self.centers.size > 1:
            self.centers = self.centers.T
        self.n, self.dim = self.centers.shape

    def value(self, i, x):
        d = np.asarray(x, dtype=float) - self.centers[i]
        return float(d @ d)

    def grad(self, i, x):
        return 2 * (np.asarray(x, dtype=float) - self.centers[i])

    def grads(self, X):
        return 2 * (X - self.centers)
