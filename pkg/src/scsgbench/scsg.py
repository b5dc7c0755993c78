"""The SCSG solver: geometrized epoch lengths plus adaptive batch sizes,
with an optional mirror-proximal inner step for composite problems.

Epoch j uses inner-loop scale m_j = m0 * alpha^j, anchor batch size
B_j = ceil(min(B0 * alpha^(2j), n)) and draws its inner-loop length from
Geom(m_j / (m_j + b)), so the expected number of inner steps is m_j / b.

Cost convention: fetching (f_i, grad f_i) for one index costs one unit,
so an inner step that evaluates the minibatch gradient at both the
current iterate and the anchor charges b units by default ("shared"
mode: the same indices are touched twice but fetched once).  A strict
mode charging 2b per inner step is available for wall-clock-faithful
accounting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import NamedTuple, Optional

import numpy as np

from . import kernels
from .geometry import EUCLIDEAN, DistanceGenerator, MirrorStepSpec, mirror_prox_step
from .objectives import Regularizer
from .problem import (
    DivergenceError,
    FiniteSumProblem,
    IfoCounter,
    RunTrace,
    full_objective,
)
from .sampling import (
    GEOMETRIC_CAP,
    RngStream,
    sample_geometric,
    sample_minibatch_indices,
    sample_subset,
)


class ParamsMixin:
    """scikit-learn style parameter access for dataclass solvers."""

    def get_params(self, deep: bool = True) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def set_params(self, **params):
        valid = {f.name for f in fields(self)}
        for key, value in params.items():
            if key not in valid:
                raise ValueError(f"invalid parameter {key!r} for {type(self).__name__}")
            setattr(self, key, value)
        return self


class EpochSchedule(NamedTuple):
    m: float
    B: int
    gamma: float


def default_hyperparams(n: int) -> tuple[float, float, int]:
    """Recommended defaults: m0 = 0.005n, B0 = 0.001n, b = max(1, 1e-4 n)."""
    b = max(1, round(1e-4 * n))
    return 0.005 * n, 0.001 * n, b


def schedule(n: int, j: int, alpha: float, m0: float, B0: float, b: int) -> EpochSchedule:
    """Closed-form epoch settings for epoch j >= 1.

    m stays real-valued (it only enters through gamma, preserving the
    expected inner-loop length m/b exactly); B saturates at n.
    """
    if j < 1:
        raise ValueError("epochs are numbered from 1")
    m_j = m0 * alpha**j
    B_j = int(math.ceil(min(B0 * alpha ** (2 * j), n)))
    gamma_j = m_j / (m_j + b)
    return EpochSchedule(m_j, B_j, gamma_j)


def saturation_epoch(n: int, alpha: float, B0: float) -> int:
    """First epoch index at which the anchor batch reaches the full dataset."""
    return int(math.ceil(math.log(n / B0) / (2.0 * math.log(alpha))))


def _mean_grad(problem, idx, x):
    acc = np.zeros(problem.dim)
    for i in idx:
        acc += problem.component(int(i), x)[1]
    return acc / len(idx)


def _fast_prox_params(problem: FiniteSumProblem):
    reg = problem.regularizer
    if reg is None or reg.kind == "none":
        return kernels.PROX_NONE, 0.0
    if reg.kind == "l2_scaled":
        return kernels.PROX_L2_SCALED, reg.weight
    if reg.kind == "l1":
        return kernels.PROX_L1, reg.weight
    return None


def use_fast_path(problem: FiniteSumProblem, generator: DistanceGenerator) -> bool:
    return (
        problem.kernel is not None
        and generator.kind == "euclidean"
        and _fast_prox_params(problem) is not None
    )


def anchor_gradient(problem, index_set, x, counter: IfoCounter | None = None):
    """Batch gradient at the anchor, vectorized when dense data is available."""
    k = problem.kernel
    if k is not None:
        g = kernels.dense_batch_gradient(k, np.asarray(index_set, dtype=np.int64), x)
    else:
        g = _mean_grad(problem, index_set, x)
    if counter is not None:
        counter.charge(len(index_set))
    return g


def variance_reduced_gradient(
    problem: FiniteSumProblem,
    anchor: np.ndarray,
    mu: np.ndarray,
    minibatch,
    x: np.ndarray,
    counter: IfoCounter | None = None,
    charge_mode: str = "shared",
) -> np.ndarray:
    """nu = grad_batch(x) - grad_batch(anchor) + mu over the given minibatch."""
    idx = np.asarray(minibatch, dtype=np.int64)
    nu = _mean_grad(problem, idx, x) - _mean_grad(problem, idx, anchor) + mu
    if counter is not None:
        counter.charge(_inner_charge(idx.size, charge_mode))
    return nu


def _inner_charge(batch_units: int, charge_mode: str) -> int:
    if charge_mode == "shared":
        return batch_units
    if charge_mode == "strict":
        return 2 * batch_units
    raise ValueError(f"unknown charge mode {charge_mode!r}")


def run_vr_inner(
    problem: FiniteSumProblem,
    x: np.ndarray,
    anchor: np.ndarray,
    mu: np.ndarray,
    eta: float,
    idx: np.ndarray,
    generator: DistanceGenerator = EUCLIDEAN,
    fast: bool = True,
) -> np.ndarray:
    """Shared SCSG/SVRG inner loop over presampled minibatches ``idx``
    of shape (num_steps, b); returns the final iterate."""
    nsteps, b = idx.shape
    if nsteps == 0:
        return x.copy()
    if fast and use_fast_path(problem, generator):
        k = problem.kernel
        pk, pw = _fast_prox_params(problem)
        out = x.copy()
        kernels.vr_inner_loop(
            k.kind, k.features, k.labels, k.targets, k.num_classes, k.ridge,
            out, anchor, mu, eta, idx, b, pk, pw,
        )
        return out
    reg = problem.regularizer if problem.regularizer is not None else Regularizer("none")
    spec = MirrorStepSpec(eta=eta, regularizer=reg, generator=generator)
    cur = x.copy()
    for t in range(nsteps):
        mb = idx[t]
        nu = _mean_grad(problem, mb, cur) - _mean_grad(problem, mb, anchor) + mu
        cur = mirror_prox_step(spec, cur, nu)
    return cur


def run_epoch(
    problem: FiniteSumProblem,
    x_anchor: np.ndarray,
    epoch: EpochSchedule,
    b: int,
    eta: float,
    rng: RngStream,
    counter: IfoCounter,
    generator: DistanceGenerator = EUCLIDEAN,
    charge_mode: str = "shared",
    with_replacement: bool = False,
    fast: bool = True,
    cap: int = GEOMETRIC_CAP,
) -> np.ndarray:
    """One outer iteration: anchor batch, geometric-length inner loop.

    Returns the new anchor.  A zero-length draw passes the anchor through
    unchanged (only the anchor batch is charged).
    """
    index_set = sample_subset(problem.n, epoch.B, rng)
    mu = anchor_gradient(problem, index_set, x_anchor, counter)
    num_steps = sample_geometric(epoch.gamma, rng, cap=cap)
    idx = sample_minibatch_indices(problem.n, b, num_steps, rng, with_replacement)
    x = run_vr_inner(problem, x_anchor, x_anchor, mu, eta, idx, generator, fast)
    counter.charge(_inner_charge(b * num_steps, charge_mode))
    return x


@dataclass
class SCSG(ParamsMixin):
    """Stochastically controlled stochastic gradient solver.

    Hyperparameters left as None default to the recommended fractions of
    the dataset size (m0 = 0.005n, B0 = 0.001n, b = 1e-4 n).
    """

    alpha: float = 1.25
    m0: Optional[float] = None
    B0: Optional[float] = None
    b: Optional[int] = None
    eta: float = 0.01
    pass_budget: float = 50.0
    seed: int = 0
    generator: DistanceGenerator = EUCLIDEAN
    charge_mode: str = "shared"
    with_replacement: bool = False
    fast: bool = True
    geometric_cap: int = GEOMETRIC_CAP

    name = "scsg"

    def _resolved(self, n: int) -> tuple[float, float, int]:
        m0, B0, b = default_hyperparams(n)
        m0 = self.m0 if self.m0 is not None else m0
        B0 = self.B0 if self.B0 is not None else B0
        b = int(self.b) if self.b is not None else b
        if self.alpha <= 1:
            raise ValueError("alpha must exceed 1")
        if m0 <= 0 or B0 <= 0 or b < 1 or self.eta <= 0:
            raise ValueError("m0, B0, eta must be positive and b >= 1")
        if B0 > n:
            raise ValueError(f"initial batch B0={B0} exceeds dataset size {n}")
        return m0, B0, b

    def run(self, problem: FiniteSumProblem, x0: np.ndarray | None = None) -> RunTrace:
        n = problem.n
        m0, B0, b = self._resolved(n)
        rng = RngStream(self.seed)
        counter = IfoCounter()
        eval_counter = IfoCounter()
        x = np.zeros(problem.dim) if x0 is None else problem.check_iterate(x0).copy()

        trace = RunTrace(
            algorithm=self.name,
            seed=self.seed,
            n=n,
            config={
                "alpha": self.alpha, "m0": m0, "B0": B0, "b": b,
                "eta": self.eta, "pass_budget": self.pass_budget,
                "charge_mode": self.charge_mode,
                "generator": self.generator.kind,
            },
        )
        trace.append(0, full_objective(problem, x, eval_counter), x)

        budget_units = self.pass_budget * n
        j = 0
        while counter.units < budget_units:
            j += 1
            epoch = schedule(n, j, self.alpha, m0, B0, b)
            x = run_epoch(
                problem, x, epoch, b, self.eta, rng, counter,
                generator=self.generator, charge_mode=self.charge_mode,
                with_replacement=self.with_replacement, fast=self.fast,
                cap=self.geometric_cap,
            )
            if not np.all(np.isfinite(x)):
                trace.diverged = True
                raise DivergenceError(
                    f"non-finite iterate in epoch {j} (step size too large?)", trace
                )
            trace.append(counter.units, full_objective(problem, x, eval_counter), x)
        trace.final_x = x
        return trace
