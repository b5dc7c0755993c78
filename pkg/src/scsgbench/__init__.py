"""Variance-reduced stochastic solvers for finite-sum convex problems,
with IFO cost accounting and a reproducible benchmark harness."""

from .baselines import GD, SARAH, SGD, SVRG, KatyushaNS
from .geometry import DistanceGenerator, MirrorStepSpec, bregman, mirror_prox_step
from .objectives import (
    LeastSquares,
    MulticlassLogistic,
    Regularizer,
    build_problem,
    estimate_smoothness,
)
from .problem import (
    DivergenceError,
    FiniteSumProblem,
    IfoCounter,
    RunTrace,
    batch_gradient,
    component_gradient,
    effective_passes,
    full_objective,
)
from .sampling import RngStream, sample_geometric, sample_subset
from .scsg import SCSG, EpochSchedule, run_epoch, saturation_epoch, schedule
from .estimators import SCSGClassifier

__version__ = "0.1.0"

__all__ = [
    "SCSG", "SVRG", "SARAH", "KatyushaNS", "SGD", "GD",
    "FiniteSumProblem", "IfoCounter", "RunTrace", "DivergenceError",
    "component_gradient", "batch_gradient", "full_objective", "effective_passes",
    "RngStream", "sample_geometric", "sample_subset",
    "MulticlassLogistic", "LeastSquares", "Regularizer",
    "build_problem", "estimate_smoothness",
    "DistanceGenerator", "MirrorStepSpec", "bregman", "mirror_prox_step",
    "EpochSchedule", "schedule", "saturation_epoch", "run_epoch",
    "SCSGClassifier",
]
