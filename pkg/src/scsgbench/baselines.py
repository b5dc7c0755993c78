"""Baseline solvers sharing the SCSG oracle and trace machinery:
SVRG, SARAH, Katyusha-ns, SGD (constant and 1/t-decayed) and full
gradient descent.

All of them honor the same IFO counter contract (one unit per component
gradient fetched; batch of size B charges B) and the same trace format,
so runs are directly comparable on the effective-pass axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .geometry import EUCLIDEAN
from .objectives import Regularizer
from .problem import DivergenceError, FiniteSumProblem, IfoCounter, RunTrace, full_objective
from .sampling import RngStream, sample_minibatch_indices
from .scsg import (
    ParamsMixin,
    _fast_prox_params,
    _inner_charge,
    _mean_grad,
    anchor_gradient,
    run_vr_inner,
    use_fast_path,
)


def default_minibatch(n: int) -> int:
    return max(1, round(1e-4 * n))


def _start(problem, name, seed, eta, extra=None):
    counter = IfoCounter()
    eval_counter = IfoCounter()
    trace = RunTrace(
        algorithm=name, seed=seed, n=problem.n,
        config={"eta": eta, **(extra or {})},
    )
    return counter, eval_counter, trace


def _guard(x, trace, where):
    if not np.all(np.isfinite(x)):
        trace.diverged = True
        raise DivergenceError(f"non-finite iterate in {where} (step size too large?)", trace)


@dataclass
class SVRG(ParamsMixin):
    """SVRG with full-gradient anchors and a fixed-length inner loop.

    snapshot "last" takes the final inner iterate (the common practical
    choice); "uniform" draws the inner-loop length uniformly from
    {0, ..., m-1}, the variant used in the original analysis.
    """

    eta: float = 0.01
    m: Optional[int] = None
    b: Optional[int] = None
    pass_budget: float = 50.0
    seed: int = 0
    snapshot: str = "last"
    charge_mode: str = "shared"
    with_replacement: bool = False
    fast: bool = True

    name = "svrg"

    def run(self, problem: FiniteSumProblem, x0=None) -> RunTrace:
        n = problem.n
        m = 2 * n if self.m is None else int(self.m)
        b = default_minibatch(n) if self.b is None else int(self.b)
        if self.snapshot not in ("last", "uniform"):
            raise ValueError(f"unknown snapshot mode {self.snapshot!r}")
        rng = RngStream(self.seed)
        counter, eval_counter, trace = _start(
            problem, self.name, self.seed, self.eta, {"m": m, "b": b}
        )
        x = np.zeros(problem.dim) if x0 is None else problem.check_iterate(x0).copy()
        trace.append(0, full_objective(problem, x, eval_counter), x)

        everything = np.arange(n, dtype=np.int64)
        budget_units = self.pass_budget * n
        while counter.units < budget_units:
            mu = anchor_gradient(problem, everything, x, counter)
            if self.snapshot == "uniform" and m > 0:
                nsteps = int(rng.integers(m))
            else:
                nsteps = m
            idx = sample_minibatch_indices(n, b, nsteps, rng, self.with_replacement)
            x = run_vr_inner(problem, x, x, mu, self.eta, idx, EUCLIDEAN, self.fast)
            counter.charge(_inner_charge(b * nsteps, self.charge_mode))
            _guard(x, trace, "svrg outer loop")
            trace.append(counter.units, full_objective(problem, x, eval_counter), x)
        trace.final_x = x
        return trace


@dataclass
class SARAH(ParamsMixin):
    """Recursive-gradient method: the search direction accumulates
    minibatch gradient differences between consecutive iterates, reset
    by a full gradient at the start of each outer loop."""

    eta: float = 0.01
    m: Optional[int] = None
    b: Optional[int] = None
    pass_budget: float = 50.0
    seed: int = 0
    charge_mode: str = "shared"
    with_replacement: bool = False
    fast: bool = True

    name = "sarah"

    def run(self, problem: FiniteSumProblem, x0=None) -> RunTrace:
        n = problem.n
        m = 2 * n if self.m is None else int(self.m)
        b = default_minibatch(n) if self.b is None else int(self.b)
        rng = RngStream(self.seed)
        counter, eval_counter, trace = _start(
            problem, self.name, self.seed, self.eta, {"m": m, "b": b}
        )
        x = np.zeros(problem.dim) if x0 is None else problem.check_iterate(x0).copy()
        trace.append(0, full_objective(problem, x, eval_counter), x)

        everything = np.arange(n, dtype=np.int64)
        reg = problem.regularizer
        budget_units = self.pass_budget * n
        while counter.units < budget_units:
            nu = anchor_gradient(problem, everything, x, counter)
            x_prev = x.copy()
            x = x - self.eta * nu
            if reg is not None:
                x = reg.prox(x, self.eta)
            nsteps = max(0, m - 1)
            idx = sample_minibatch_indices(n, b, nsteps, rng, self.with_replacement)
            if nsteps and self.fast and use_fast_path(problem, EUCLIDEAN):
                k = problem.kernel
                pk, pw = _fast_prox_params(problem)
                nu = nu.copy()
                kernels.sarah_inner_loop(
                    k.kind, k.features, k.labels, k.targets, k.num_classes, k.ridge,
                    x, x_prev, nu, self.eta, idx, b, pk, pw,
                )
            else:
                for t in range(nsteps):
                    mb = idx[t]
                    nu = _mean_grad(problem, mb, x) - _mean_grad(problem, mb, x_prev) + nu
                    x_prev = x
                    x = x - self.eta * nu
                    if reg is not None:
                        x = reg.prox(x, self.eta)
            counter.charge(_inner_charge(b * nsteps, self.charge_mode))
            _guard(x, trace, "sarah outer loop")
            trace.append(counter.units, full_objective(problem, x, eval_counter), x)
        trace.final_x = x
        return trace


@dataclass
class KatyushaNS(ParamsMixin):
    """Katyusha for non-strongly convex objectives (negative momentum).

    Momentum weight tau1 = 2/(s+4) in outer loop s; the z-step size is
    eta/(3*tau1), exposing ``eta`` as the swept scale (eta = 1/L recovers
    the customary 1/(3*tau1*L)).  The y-update uses the gradient step
    x - (eta/3)*nu and the snapshot is the average of the epoch's y
    iterates.  Details beyond the two-line summary in the experimental
    protocol follow the algorithm's original publication.
    """

    eta: float = 0.01
    m: Optional[int] = None
    b: Optional[int] = None
    pass_budget: float = 50.0
    seed: int = 0
    charge_mode: str = "shared"
    with_replacement: bool = False
    tau2: float = 0.5
    tau1_override: Optional[float] = None
    tau2_override: Optional[float] = None

    name = "katyusha-ns"

    def run(self, problem: FiniteSumProblem, x0=None) -> RunTrace:
        n = problem.n
        m = 2 * n if self.m is None else int(self.m)
        b = default_minibatch(n) if self.b is None else int(self.b)
        rng = RngStream(self.seed)
        counter, eval_counter, trace = _start(
            problem, self.name, self.seed, self.eta, {"m": m, "b": b}
        )
        xt = np.zeros(problem.dim) if x0 is None else problem.check_iterate(x0).copy()
        z = xt.copy()
        y = xt.copy()
        trace.append(0, full_objective(problem, xt, eval_counter), xt)

        reg = problem.regularizer
        everything = np.arange(n, dtype=np.int64)
        budget_units = self.pass_budget * n
        s = 0
        while counter.units < budget_units:
            mu = anchor_gradient(problem, everything, xt, counter)
            tau1 = self.tau1_override if self.tau1_override is not None else 2.0 / (s + 4.0)
            tau2 = self.tau2_override if self.tau2_override is not None else self.tau2
            alpha_s = self.eta / (3.0 * tau1) if tau1 > 0 else self.eta / 3.0
            idx = sample_minibatch_indices(n, b, m, rng, self.with_replacement)
            ysum = np.zeros(problem.dim)
            for t in range(m):
                xk = tau1 * z + tau2 * xt + (1.0 - tau1 - tau2) * y
                mb = idx[t]
                nu = mu + _mean_grad(problem, mb, xk) - _mean_grad(problem, mb, xt)
                z = z - alpha_s * nu
                if reg is not None:
                    z = reg.prox(z, alpha_s)
                y = xk - (self.eta / 3.0) * nu
                if reg is not None:
                    y = reg.prox(y, self.eta / 3.0)
                ysum += y
            xt = ysum / m
            counter.charge(_inner_charge(b * m, self.charge_mode))
            s += 1
            _guard(xt, trace, "katyusha outer loop")
            trace.append(counter.units, full_objective(problem, xt, eval_counter), xt)
        trace.final_x = xt
        return trace


@dataclass
class SGD(ParamsMixin):
    """Minibatch stochastic gradient descent, constant or 1/(1+t) decay."""

    eta: float = 0.01
    b: Optional[int] = None
    pass_budget: float = 50.0
    seed: int = 0
    decay: bool = False
    with_replacement: bool = False
    fast: bool = True

    name = "sgd"

    def run(self, problem: FiniteSumProblem, x0=None) -> RunTrace:
        n = problem.n
        b = default_minibatch(n) if self.b is None else int(self.b)
        rng = RngStream(self.seed)
        label = "sgd-decay" if self.decay else "sgd"
        counter, eval_counter, trace = _start(
            problem, label, self.seed, self.eta, {"b": b, "decay": self.decay}
        )
        x = np.zeros(problem.dim) if x0 is None else problem.check_iterate(x0).copy()
        trace.append(0, full_objective(problem, x, eval_counter), x)

        reg = problem.regularizer
        chunk = math.ceil(n / b)  # trace cadence: about one pass per sample
        budget_units = self.pass_budget * n
        t0 = 0
        while counter.units < budget_units:
            idx = sample_minibatch_indices(n, b, chunk, rng, self.with_replacement)
            if self.fast and use_fast_path(problem, EUCLIDEAN):
                k = problem.kernel
                pk, pw = _fast_prox_params(problem)
                kernels.sgd_loop(
                    k.kind, k.features, k.labels, k.targets, k.num_classes, k.ridge,
                    x, self.eta, idx, b, t0, self.decay, pk, pw,
                )
            else:
                for t in range(chunk):
                    g = _mean_grad(problem, idx[t], x)
                    step = self.eta / (1.0 + t0 + t) if self.decay else self.eta
                    x = x - step * g
                    if reg is not None:
                        x = reg.prox(x, step)
            t0 += chunk
            counter.charge(chunk * b)
            _guard(x, trace, "sgd loop")
            trace.append(counter.units, full_objective(problem, x, eval_counter), x)
        trace.final_x = x
        return trace


@dataclass
class GD(ParamsMixin):
    """Full-batch (proximal) gradient descent; each step charges n."""

    eta: float = 0.01
    pass_budget: float = 50.0
    seed: int = 0

    name = "gd"

    def run(self, problem: FiniteSumProblem, x0=None) -> RunTrace:
        n = problem.n
        counter, eval_counter, trace = _start(problem, self.name, self.seed, self.eta)
        x = np.zeros(problem.dim) if x0 is None else problem.check_iterate(x0).copy()
        trace.append(0, full_objective(problem, x, eval_counter), x)

        reg = problem.regularizer
        everything = np.arange(n, dtype=np.int64)
        budget_units = self.pass_budget * n
        while counter.units < budget_units:
            g = anchor_gradient(problem, everything, x, counter)
            x = x - self.eta * g
            if reg is not None:
                x = reg.prox(x, self.eta)
            _guard(x, trace, "gd loop")
            trace.append(counter.units, full_objective(problem, x, eval_counter), x)
        trace.final_x = x
        return trace


ALGORITHMS = {
    "svrg": SVRG,
    "sarah": SARAH,
    "katyusha-ns": KatyushaNS,
    "sgd": SGD,
    "sgd-decay": SGD,
    "gd": GD,
}
