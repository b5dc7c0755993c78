import numpy as np
import pytest

from scsgbench.datasets import synthetic_least_squares, synthetic_multiclass
from scsgbench.objectives import LeastSquares, build_problem


def central_differences(f, x, h=1e-6):
    """Independent gradient oracle: central finite differences."""
    g = np.zeros_like(x)
    for d in range(x.size):
        e = np.zeros_like(x)
        e[d] = h
        g[d] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def relative_error(approx, exact):
    denom = max(np.linalg.norm(exact), 1e-12)
    return np.linalg.norm(approx - exact) / denom


@pytest.fixture(scope="session")
def tiny_lsq():
    A = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, -1.0]])
    b = np.array([1.0, -1.0, 0.5, 0.0])
    return LeastSquares(A, b)


@pytest.fixture(scope="session")
def tiny_lsq_problem(tiny_lsq):
    return build_problem(tiny_lsq)


@pytest.fixture(scope="session")
def desk_logistic():
    return synthetic_multiclass(n=400, p=6, num_classes=3, seed=11)


@pytest.fixture(scope="session")
def quadratic_data():
    return synthetic_least_squares(n=200, dim=10, kappa=50.0, seed=2)
