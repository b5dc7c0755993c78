"""Concrete losses and regularizers: multinomial logistic regression,
least squares, and composite terms with closed-form proximal maps.

Multiclass parameters are flattened class-block-major: for p features and
K classes the parameter vector has length p*(K-1), with block k
(0-based) at x[k*p:(k+1)*p].  Labels are 1-based and class K is the
reference class (zero parameter block).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .problem import DenseKernelData, FiniteSumProblem


@dataclass(frozen=True)
class Regularizer:
    """Composite term psi with value and closed-form prox.

    kinds: "none" (psi = 0), "l2_scaled" (psi = weight * ||x||^2),
    "l1" (psi = weight * ||x||_1).
    """

    kind: str = "none"
    weight: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "l2_scaled", "l1"):
            raise ValueError(f"unknown regularizer kind {self.kind!r}")
        if self.weight < 0:
            raise ValueError("regularizer weight must be nonnegative")

    def value(self, x: np.ndarray) -> float:
        if self.kind == "l2_scaled":
            return self.weight * float(x @ x)
        if self.kind == "l1":
            return self.weight * float(np.abs(x).sum())
        return 0.0

    def prox(self, z: np.ndarray, step: float) -> np.ndarray:
        """argmin_y psi(y) + ||y - z||^2 / (2*step)."""
        if step <= 0:
            raise ValueError(f"prox step must be positive, got {step}")
        if self.kind == "l2_scaled":
            return z / (1.0 + 2.0 * step * self.weight)
        if self.kind == "l1":
            t = step * self.weight
            return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)
        return z.copy()


def prox(regularizer: Regularizer, z: np.ndarray, step: float) -> np.ndarray:
    return regularizer.prox(np.asarray(z, dtype=np.float64), step)


def _row(features, i):
    if sp.issparse(features):
        return np.asarray(features[i].todense()).ravel()
    return features[i]


@dataclass(frozen=True)
class MulticlassLogistic:
    """Multinomial logistic regression data: n x p features, labels in 1..K."""

    features: object
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "labels", labels)
        if self.num_classes < 2:
            raise ValueError("need at least two classes")
        if labels.shape[0] != self.features.shape[0]:
            raise ValueError("label count does not match feature rows")
        if labels.min() < 1 or labels.max() > self.num_classes:
            raise ValueError(
                f"labels must lie in 1..{self.num_classes}, "
                f"got range [{labels.min()}, {labels.max()}]"
            )

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    @property
    def dim(self) -> int:
        return self.p * (self.num_classes - 1)

    def component_value_grad(self, i, x, ridge=0.0):
        a = _row(self.features, i)
        K, p = self.num_classes, self.p
        z = x.reshape(K - 1, p) @ a
        m = max(0.0, float(z.max()))
        lse = m + np.log(np.exp(-m) + np.exp(z - m).sum())
        y = self.labels[i]
        value = lse - (z[y - 1] if y < K else 0.0)
        coef = np.exp(z - lse)
        if y < K:
            coef[y - 1] -= 1.0
        grad = (coef[:, None] * a[None, :]).ravel()
        if ridge:
            value += ridge * float(x @ x)
            grad += (2.0 * ridge) * x
        return float(value), grad

    def mean_value(self, x, ridge=0.0):
        """(1/n) sum_i f_i(x), vectorized over all rows."""
        K, p = self.num_classes, self.p
        Z = self.features @ x.reshape(K - 1, p).T
        if sp.issparse(Z):  # pragma: no cover - features @ dense is dense
            Z = np.asarray(Z)
        m = np.maximum(0.0, Z.max(axis=1))
        lse = m + np.log(np.exp(-m) + np.exp(Z - m[:, None]).sum(axis=1))
        cols = np.minimum(self.labels, K - 1) - 1
        picked = np.where(self.labels < K, Z[np.arange(self.n), cols], 0.0)
        val = float(np.mean(lse - picked))
        if ridge:
            val += ridge * float(x @ x)
        return val

    def predict_proba(self, x):
        K, p = self.num_classes, self.p
        Z = self.features @ x.reshape(K - 1, p).T
        Z = np.column_stack([Z, np.zeros(self.n)])
        Z -= Z.max(axis=1, keepdims=True)
        E = np.exp(Z)
        return E / E.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class LeastSquares:
    """Least-squares data: f_i(x) = (a_i . x - b_i)^2 / 2."""

    features: object
    targets: np.ndarray

    def __post_init__(self):
        targets = np.asarray(self.targets, dtype=np.float64)
        object.__setattr__(self, "targets", targets)
        if targets.shape[0] != self.features.shape[0]:
            raise ValueError("target count does not match feature rows")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def component_value_grad(self, i, x, ridge=0.0):
        a = _row(self.features, i)
        r = float(a @ x - self.targets[i])
        value = 0.5 * r * r
        grad = r * a
        if ridge:
            value += ridge * float(x @ x)
            grad = grad + (2.0 * ridge) * x
        return value, grad

    def mean_value(self, x, ridge=0.0):
        r = self.features @ x - self.targets
        val = 0.5 * float(r @ r) / self.n
        if ridge:
            val += ridge * float(x @ x)
        return val

    def solve_normal_equations(self, ridge=0.0):
        """Closed-form minimizer of mean_value (+ smooth ridge term)."""
        A = self.features.toarray() if sp.issparse(self.features) else self.features
        H = A.T @ A / self.n + 2.0 * ridge * np.eye(self.dim)
        return np.linalg.solve(H, A.T @ self.targets / self.n)


@dataclass(frozen=True)
class SmoothnessEstimate:
    """Per-row gradient-Lipschitz bounds L_i = 2*||a_i||^2 and their mean
    after dropping the ceil(trim_fraction * n) largest."""

    per_component: np.ndarray
    aggregate: float
    trim_fraction: float
    kept_indices: np.ndarray = field(repr=False, default=None)


def row_smoothness(features) -> np.ndarray:
    if sp.issparse(features):
        sq = np.asarray(features.multiply(features).sum(axis=1)).ravel()
    else:
        sq = np.einsum("ij,ij->i", features, features)
    return 2.0 * sq


def estimate_smoothness(data, trim_fraction: float = 0.0):
    """Row-wise smoothness bounds with outlier trimming.

    Drops the ceil(trim_fraction * n) rows with the largest L_i from the
    dataset and returns (trimmed_data, SmoothnessEstimate).  The estimate's
    aggregate is the mean of the surviving L_i.
    """
    if not 0.0 <= trim_fraction < 1.0:
        raise ValueError("trim_fraction must be in [0, 1)")
    L = row_smoothness(data.features)
    n = L.size
    drop = int(np.ceil(trim_fraction * n)) if trim_fraction > 0 else 0
    if drop >= n:
        raise ValueError("trimming would remove every row")
    if drop:
        order = np.argsort(L, kind="stable")
        kept = np.sort(order[: n - drop])
    else:
        kept = np.arange(n)
    per = L[kept]
    est = SmoothnessEstimate(per, float(per.mean()), trim_fraction, kept)
    if drop:
        if isinstance(data, MulticlassLogistic):
            data = MulticlassLogistic(
                data.features[kept], data.labels[kept], data.num_classes
            )
        elif isinstance(data, LeastSquares):
            data = LeastSquares(data.features[kept], data.targets[kept])
        else:
            raise TypeError(f"cannot trim rows of {type(data).__name__}")
    return data, est


def build_problem(
    data,
    regularizer: Regularizer | None = None,
    smooth_l2: bool = True,
    smoothness: float | None = None,
) -> FiniteSumProblem:
    """Assemble a FiniteSumProblem from a dataset object.

    An l2_scaled regularizer is by default folded into every smooth
    component (adding 2*weight to the smoothness estimate); pass
    ``smooth_l2=False`` to keep it as a composite term with a prox,
    exercising the mirror-proximal solver path.  l1 terms are always
    composite.
    """
    ridge = 0.0
    composite = None
    if regularizer is not None and regularizer.kind != "none":
        if regularizer.kind == "l2_scaled" and smooth_l2:
            ridge = regularizer.weight
        else:
            composite = regularizer

    if isinstance(data, MulticlassLogistic):
        kind = DenseKernelData.KIND_LOGISTIC
        labels = data.labels
        targets = np.zeros(data.n)
        num_classes = data.num_classes
    elif isinstance(data, LeastSquares):
        kind = DenseKernelData.KIND_LEAST_SQUARES
        labels = np.zeros(data.n, dtype=np.int64)
        targets = data.targets
        num_classes = 2
    else:
        raise TypeError(f"unsupported dataset type {type(data).__name__}")

    kernel = None
    if not sp.issparse(data.features):
        kernel = DenseKernelData(
            kind=kind,
            features=np.ascontiguousarray(data.features, dtype=np.float64),
            labels=np.ascontiguousarray(labels),
            targets=np.ascontiguousarray(targets, dtype=np.float64),
            num_classes=num_classes,
            ridge=ridge,
        )

    if smoothness is None:
        smoothness = float(row_smoothness(data.features).mean())
    smoothness += 2.0 * ridge

    return FiniteSumProblem(
        n=data.n,
        dim=data.dim,
        component=lambda i, x: data.component_value_grad(i, x, ridge=ridge),
        regularizer=composite,
        smoothness=smoothness,
        kernel=kernel,
        full_value=lambda x: data.mean_value(x, ridge=ridge),
    )
