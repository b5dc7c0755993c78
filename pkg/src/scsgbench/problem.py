"""Finite-sum problem abstraction and IFO cost accounting.

A finite-sum problem is  F(x) = (1/n) sum_i f_i(x) + psi(x)  where each
f_i is smooth and psi is an optional composite (prox-friendly) term.
Every solver in this package consumes the same component-gradient oracle
and charges its work to an :class:`IfoCounter`: fetching the pair
(f_i(x), grad f_i(x)) for one index costs one unit, and a batch gradient
over an index set I costs |I| units.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

Vector = np.ndarray


class DimensionMismatchError(ValueError):
    pass


class DivergenceError(RuntimeError):
    """Raised when a solver produces a non-finite iterate.

    Carries the partial trace so callers (e.g. a step-size sweep) can
    score the run as failed instead of losing it.
    """

    def __init__(self, message: str, trace: "RunTrace | None" = None):
        super().__init__(message)
        self.trace = trace


class IfoCounter:
    """Monotone accumulator of incremental first-order oracle charges."""

    __slots__ = ("units",)

    def __init__(self) -> None:
        self.units = 0

    def charge(self, amount: int) -> None:
        amount = int(amount)
        if amount < 0:
            raise ValueError(f"negative IFO charge: {amount}")
        self.units += amount

    def __repr__(self) -> str:
        return f"IfoCounter(units={self.units})"


@dataclass(frozen=True)
class DenseKernelData:
    """Dense per-row data enabling the compiled fast path of the solvers.

    kind 0: multinomial logistic rows (labels in 1..num_classes, class
    num_classes is the reference class with a zero parameter block).
    kind 1: least-squares rows.  ``ridge`` is the weight of a smooth
    ridge term folded into every component.
    """

    kind: int
    features: np.ndarray
    labels: np.ndarray
    targets: np.ndarray
    num_classes: int
    ridge: float

    KIND_LOGISTIC = 0
    KIND_LEAST_SQUARES = 1


@dataclass(frozen=True)
class FiniteSumProblem:
    """Immutable bundle of n smooth components plus an optional composite term.

    ``component(i, x)`` returns the pair (f_i(x), grad f_i(x)).  The
    regularizer, when present, must expose ``value(x)`` and
    ``prox(z, step)``.  ``smoothness`` stores the working estimate of the
    (average) Lipschitz constant of the component gradients.
    """

    n: int
    dim: int
    component: Callable[[int, Vector], tuple[float, Vector]]
    regularizer: Optional[Any] = None
    smoothness: Optional[float] = None
    kernel: Optional[DenseKernelData] = None
    full_value: Optional[Callable[[Vector], float]] = field(default=None, repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"need at least one component, got n={self.n}")
        if self.dim < 1:
            raise ValueError(f"need dim >= 1, got {self.dim}")

    def check_iterate(self, x: Vector) -> Vector:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise DimensionMismatchError(
                f"iterate has shape {x.shape}, expected ({self.dim},)"
            )
        return x


def component_value_gradient(
    problem: FiniteSumProblem,
    i: int,
    x: Vector,
    counter: IfoCounter | None = None,
) -> tuple[float, Vector]:
    """Fetch (f_i(x), grad f_i(x)); charges 1 unit. Indices are 0-based."""
    if not 0 <= i < problem.n:
        raise IndexError(f"component index {i} out of range [0, {problem.n})")
    x = problem.check_iterate(x)
    value, grad = problem.component(i, x)
    if grad.shape != (problem.dim,):
        raise DimensionMismatchError(
            f"component {i} returned gradient of shape {grad.shape}"
        )
    if counter is not None:
        counter.charge(1)
    return value, grad


def component_gradient(
    problem: FiniteSumProblem,
    i: int,
    x: Vector,
    counter: IfoCounter | None = None,
) -> Vector:
    return component_value_gradient(problem, i, x, counter)[1]


def batch_gradient(
    problem: FiniteSumProblem,
    index_set,
    x: Vector,
    counter: IfoCounter | None = None,
) -> Vector:
    """Unweighted mean of component gradients over ``index_set``; charges |I|."""
    idx = np.asarray(index_set, dtype=np.int64).ravel()
    if idx.size == 0:
        raise ValueError("empty index set")
    if np.unique(idx).size != idx.size:
        raise ValueError("duplicate index in batch")
    if idx.min() < 0 or idx.max() >= problem.n:
        raise IndexError("batch index out of range")
    x = problem.check_iterate(x)
    acc = np.zeros(problem.dim)
    for i in idx:
        acc += problem.component(int(i), x)[1]
    if counter is not None:
        counter.charge(idx.size)
    return acc / idx.size


def full_objective(
    problem: FiniteSumProblem,
    x: Vector,
    counter: IfoCounter | None = None,
) -> float:
    """F(x) = (1/n) sum_i f_i(x) + psi(x); charges n units.

    Pass the run's *evaluation* counter here, not its solver counter:
    monitoring charges are kept out of solver-cost comparisons.
    """
    x = problem.check_iterate(x)
    if problem.full_value is not None:
        smooth = problem.full_value(x)
    else:
        smooth = float(np.mean([problem.component(i, x)[0] for i in range(problem.n)]))
    if counter is not None:
        counter.charge(problem.n)
    if problem.regularizer is not None:
        smooth += problem.regularizer.value(x)
    return smooth


def effective_passes(counter: IfoCounter, n: int) -> float:
    """IFO units divided by n; one pass = touching n component gradients."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return counter.units / n


@dataclass
class RunTrace:
    """Per-run sequence of (ifo_units, objective) samples plus metadata."""

    algorithm: str
    seed: int
    n: int
    config: dict = field(default_factory=dict)
    samples: list = field(default_factory=list)
    final_x: Optional[Vector] = None
    best_x: Optional[Vector] = None
    best_objective: float = np.inf
    diverged: bool = False

    def append(self, units: int, objective: float, x: Vector | None = None) -> None:
        if self.samples and units <= self.samples[-1][0]:
            raise ValueError(
                f"trace units must strictly increase: {units} after {self.samples[-1][0]}"
            )
        self.samples.append((int(units), float(objective)))
        if x is not None and objective < self.best_objective:
            self.best_objective = float(objective)
            self.best_x = x.copy()

    @property
    def units(self) -> np.ndarray:
        return np.array([s[0] for s in self.samples], dtype=np.int64)

    @property
    def objectives(self) -> np.ndarray:
        return np.array([s[1] for s in self.samples])

    @property
    def passes(self) -> np.ndarray:
        return self.units / self.n

    def final_objective(self) -> float:
        if not self.samples:
            return np.inf
        return self.samples[-1][1]
