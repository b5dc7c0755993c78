"""Dataset ingestion (libsvm / csv) and deterministic synthetic generators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .objectives import LeastSquares, MulticlassLogistic
from .sampling import RngStream


class DatasetFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    """Parsed tabular data with 1-based class labels (classification)."""

    features: np.ndarray
    labels: np.ndarray
    raw_labels: np.ndarray
    num_classes: int

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def to_logistic(self) -> MulticlassLogistic:
        return MulticlassLogistic(self.features, self.labels, self.num_classes)

    def to_least_squares(self) -> LeastSquares:
        return LeastSquares(self.features, self.raw_labels.astype(np.float64))


def _relabel(raw: np.ndarray) -> tuple[np.ndarray, int]:
    classes = np.unique(raw)
    lookup = {c: k + 1 for k, c in enumerate(classes)}
    return np.array([lookup[v] for v in raw], dtype=np.int64), classes.size


def load_libsvm(path) -> Dataset:
    """Parse libsvm lines "label idx:val ..." with 1-based feature indices."""
    rows, raw_labels = [], []
    max_index = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                raw_labels.append(float(parts[0]))
            except ValueError:
                raise DatasetFormatError(f"{path}:{lineno}: bad label {parts[0]!r}")
            row = {}
            for token in parts[1:]:
                try:
                    key, val = token.split(":", 1)
                    index = int(key)
                    value = float(val)
                except ValueError:
                    raise DatasetFormatError(f"{path}:{lineno}: bad feature token {token!r}")
                if index < 1:
                    raise DatasetFormatError(
                        f"{path}:{lineno}: feature indices are 1-based, got {index}"
                    )
                if index in row:
                    raise DatasetFormatError(f"{path}:{lineno}: duplicate index {index}")
                row[index] = value
                max_index = max(max_index, index)
            rows.append(row)
    if not rows:
        raise DatasetFormatError(f"{path}: empty dataset")
    X = np.zeros((len(rows), max_index))
    for i, row in enumerate(rows):
        for index, value in row.items():
            X[i, index - 1] = value
    raw = np.asarray(raw_labels)
    labels, K = _relabel(raw)
    return Dataset(X, labels, raw, K)


def load_csv(path) -> Dataset:
    """CSV with a header row; the last column is the label/target."""
    with open(path) as fh:
        header = fh.readline()
        if not header.strip():
            raise DatasetFormatError(f"{path}: empty file")
        ncols = len(header.split(","))
        if ncols < 2:
            raise DatasetFormatError(f"{path}: need at least one feature column")
        rows = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.split(",")
            if len(parts) != ncols:
                raise DatasetFormatError(
                    f"{path}:{lineno}: expected {ncols} columns, got {len(parts)}"
                )
            try:
                rows.append([float(v) for v in parts])
            except ValueError:
                raise DatasetFormatError(f"{path}:{lineno}: non-numeric value")
    if not rows:
        raise DatasetFormatError(f"{path}: no data rows")
    data = np.asarray(rows)
    raw = data[:, -1]
    labels, K = _relabel(raw)
    return Dataset(np.ascontiguousarray(data[:, :-1]), labels, raw, K)


def load_dataset(path, fmt: str) -> Dataset:
    if fmt == "libsvm":
        return load_libsvm(path)
    if fmt == "csv":
        return load_csv(path)
    raise ValueError(f"unknown dataset format {fmt!r}")


def save_csv(dataset: Dataset, path) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(f"x{j}" for j in range(dataset.p)) + ",label\n")
        for i in range(dataset.n):
            feats = ",".join("%.17g" % v for v in dataset.features[i])
            fh.write(f"{feats},{'%.17g' % dataset.raw_labels[i]}\n")


def synthetic_multiclass(
    n: int = 2000, p: int = 20, num_classes: int = 3, seed: int = 7,
    separation: float = 1.0,
) -> Dataset:
    """Gaussian features with labels sampled from a planted softmax model.

    Labels are stochastic (not linearly separable), so component
    gradients do not all vanish at the optimum and stochastic methods
    exhibit a genuine variance floor.
    """
    rng = RngStream(seed)
    X = rng.standard_normal((n, p))
    W = separation * rng.standard_normal((num_classes - 1, p))
    Z = np.column_stack([X @ W.T, np.zeros(n)])
    Z -= Z.max(axis=1, keepdims=True)
    P = np.exp(Z)
    P /= P.sum(axis=1, keepdims=True)
    u = rng.random(n)
    labels = (np.cumsum(P, axis=1) < u[:, None]).sum(axis=1) + 1
    labels = np.minimum(labels, num_classes).astype(np.int64)
    return Dataset(X, labels, labels.astype(np.float64), num_classes)


def synthetic_least_squares(
    n: int = 500, dim: int = 50, kappa: float = 1e3, noise: float = 0.1, seed: int = 3,
    spectrum: str = "geometric",
) -> LeastSquares:
    """Least-squares rows whose design has a prescribed condition number.

    The Hessian A^T A / n has condition number kappa with eigenvalues
    either geometrically spaced ("geometric") or split into one dominant
    direction plus a flat tail at 1/kappa ("spiked"); Gaussian target
    noise keeps component gradients nonzero at the optimum.
    """
    rng = RngStream(seed)
    G = rng.standard_normal((n, dim))
    U, _, Vt = np.linalg.svd(G, full_matrices=False)
    if spectrum == "geometric":
        eigs = np.geomspace(1.0, 1.0 / kappa, dim)
    elif spectrum == "spiked":
        eigs = np.full(dim, 1.0 / kappa)
        eigs[0] = 1.0
    else:
        raise ValueError(f"unknown spectrum {spectrum!r}")
    A = U * np.sqrt(n * eigs) @ Vt
    x_true = rng.standard_normal(dim)
    y = A @ x_true + noise * rng.standard_normal(n)
    return LeastSquares(np.ascontiguousarray(A), y)
