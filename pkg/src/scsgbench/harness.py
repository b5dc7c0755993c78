"""Benchmark driver: step-size grid sweeps, optimum estimation,
complexity diagnostics and trace emission.

The sweep follows the standard protocol for this problem family: run
every algorithm with step sizes eta = c/L for c on a power-of-two grid,
for a fixed budget of effective passes, and pick the c with the smallest
final objective.  Suboptimality ratios are reported against an optimum
estimated by a long best-tuned run.
"""

from __future__ import annotations

import json
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .baselines import GD, SARAH, SGD, SVRG, KatyushaNS
from .problem import DivergenceError, FiniteSumProblem, RunTrace
from .sampling import RngStream
from .scsg import SCSG

ALGO_TAGS = ("scsg", "svrg", "sarah", "katyusha-ns", "sgd", "sgd-decay", "gd")


def make_solver(algo: str, eta: float, pass_budget: float, seed: int, **overrides):
    """Instantiate a solver by CLI tag with shared sweep parameters."""
    common = dict(eta=eta, pass_budget=pass_budget, seed=seed)
    if algo == "scsg":
        return SCSG(**common, **overrides)
    if algo == "svrg":
        return SVRG(**common, **overrides)
    if algo == "sarah":
        return SARAH(**common, **overrides)
    if algo == "katyusha-ns":
        return KatyushaNS(**common, **overrides)
    if algo == "sgd":
        return SGD(**common, decay=False, **overrides)
    if algo == "sgd-decay":
        return SGD(**common, decay=True, **overrides)
    if algo == "gd":
        common.pop("seed")
        return GD(eta=eta, pass_budget=pass_budget, **overrides)
    raise ValueError(f"unknown algorithm tag {algo!r}; choose from {ALGO_TAGS}")


@dataclass
class SweepEntry:
    exponent: int
    c: float
    eta: float
    final_objective: float
    trace: Optional[RunTrace]


@dataclass
class SweepResult:
    algorithm: str
    entries: list[SweepEntry] = field(default_factory=list)

    @property
    def best(self) -> SweepEntry:
        finite = [e for e in self.entries if np.isfinite(e.final_objective)]
        if not finite:
            grid = [e.exponent for e in self.entries]
            raise RuntimeError(
                f"every {self.algorithm} run diverged over the grid 2^{grid}"
            )
        return min(finite, key=lambda e: (e.final_objective, e.exponent))


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("BENCH_WORKERS", "1")))
    except ValueError:
        return 1


def sweep(
    problem: FiniteSumProblem,
    algo: str,
    smoothness: float,
    grid_exponents=range(-10, 11),
    pass_budget: float = 50.0,
    seed: int = 0,
    x0: np.ndarray | None = None,
    **overrides,
) -> SweepResult:
    """One run per grid exponent k with eta = 2^k / L; best = smallest
    final objective (diverged runs score +inf and are never selected).

    Runs use independent RNG streams derived from (seed, algo, k), so
    the result is reproducible regardless of worker count.
    """
    if smoothness is None or smoothness <= 0:
        raise ValueError("a positive smoothness estimate is required before sweeping")
    exponents = list(grid_exponents)

    def one(k: int) -> SweepEntry:
        c = 2.0**k
        eta = c / smoothness
        run_seed = RngStream.derive(seed, algo, k).seed
        solver = make_solver(algo, eta, pass_budget, run_seed, **overrides)
        try:
            trace = solver.run(problem, x0=x0)
            final = trace.final_objective()
            if not np.isfinite(final):
                final = np.inf
        except DivergenceError as exc:
            trace = exc.trace
            final = np.inf
        return SweepEntry(k, c, eta, final, trace)

    workers = _workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(one, exponents))
    else:
        entries = [one(k) for k in exponents]
    return SweepResult(algo, entries)


def estimate_optimum(
    problem: FiniteSumProblem,
    eta: float,
    pass_budget: float = 5000.0,
    seed: int = 0,
    cross_check: bool = True,
    cross_check_eta: float | None = None,
    **scsg_overrides,
) -> tuple[np.ndarray, float]:
    """Estimate (x*, F*) by a long SCSG run at the best-tuned step size.

    Returns the best-seen iterate and value.  When ``cross_check`` is
    set, a long SVRG run must not find a lower value (beyond 1e-9); a
    violation warns rather than fails, since this is an empirical
    expectation, not a guarantee.
    """
    solver = SCSG(eta=eta, pass_budget=pass_budget, seed=seed, **scsg_overrides)
    trace = solver.run(problem)
    x_star, f_star = trace.best_x, trace.best_objective
    if cross_check:
        svrg = SVRG(
            eta=cross_check_eta if cross_check_eta is not None else eta,
            pass_budget=pass_budget,
            seed=seed,
        )
        ref = svrg.run(problem)
        if f_star > ref.best_objective + 1e-9:
            warnings.warn(
                f"long SVRG run found a lower objective ({ref.best_objective!r} < "
                f"{f_star!r}); the optimum estimate may be loose",
                RuntimeWarning,
                stacklevel=2,
            )
    return x_star, f_star


@dataclass(frozen=True)
class Diagnostics:
    """Complexity measures evaluated at an optimum estimate.

    H is the mean squared component-gradient norm at x*; D_x the
    smoothness-scaled initial squared distance; D_H = H / L and
    D = max(D_x, D_H).  kappa = L / mu is reported when a strong
    convexity hint is supplied.
    """

    H: float
    D_x: float
    D_H: float
    D: float
    L: float
    mu_hint: Optional[float] = None

    @property
    def kappa(self) -> Optional[float]:
        if self.mu_hint is None or self.mu_hint <= 0:
            return None
        return self.L / self.mu_hint

    def to_dict(self) -> dict:
        out = {"H": self.H, "D_x": self.D_x, "D_H": self.D_H, "D": self.D, "L": self.L}
        if self.mu_hint is not None:
            out["mu_hint"] = self.mu_hint
            out["kappa"] = self.kappa
        return out


def diagnostics(
    problem: FiniteSumProblem,
    x_star: np.ndarray,
    x0: np.ndarray,
    mu_hint: float | None = None,
) -> Diagnostics:
    if problem.smoothness is None or problem.smoothness <= 0:
        raise ValueError("problem needs a positive smoothness estimate")
    L = problem.smoothness
    H = 0.0
    for i in range(problem.n):
        g = problem.component(i, x_star)[1]
        H += float(g @ g)
    H /= problem.n
    d = np.asarray(x0, dtype=np.float64) - np.asarray(x_star, dtype=np.float64)
    D_x = L * float(d @ d)
    D_H = H / L
    return Diagnostics(H=H, D_x=D_x, D_H=D_H, D=max(D_x, D_H), L=L, mu_hint=mu_hint)


def suboptimality_ratios(trace: RunTrace, f_star: float, f0: float) -> np.ndarray:
    if f0 <= f_star:
        raise ValueError("initial objective must exceed the optimum estimate")
    return (trace.objectives - f_star) / (f0 - f_star)


def time_to_accuracy(
    trace: RunTrace, f_star: float, f0: float, epsilon: float
) -> Optional[float]:
    """Effective passes at the first sample after which EVERY subsequent
    sample keeps the suboptimality ratio at or below epsilon; None if
    the trace never settles below epsilon."""
    ratios = suboptimality_ratios(trace, f_star, f0)
    ok = ratios <= epsilon
    # Last index where the criterion fails; everything after qualifies.
    bad = np.nonzero(~ok)[0]
    first = 0 if bad.size == 0 else bad[-1] + 1
    if first >= len(ratios):
        return None
    return float(trace.units[first] / trace.n)


def emit_trace(trace: RunTrace, f_star: float, f0: float, path, fmt: str = "csv") -> None:
    """Write (effective_passes, objective, suboptimality_ratio) rows.

    Floats are formatted with 17 significant digits so parsing the file
    reproduces them exactly; the json flavor embeds the run's config
    snapshot for provenance.
    """
    ratios = suboptimality_ratios(trace, f_star, f0)
    passes = trace.passes
    objectives = trace.objectives
    if fmt == "csv":
        with open(path, "w") as fh:
            fh.write("effective_passes,objective,suboptimality_ratio\n")
            for ep, obj, ratio in zip(passes, objectives, ratios):
                fh.write("%.17g,%.17g,%.17g\n" % (ep, obj, ratio))
    elif fmt == "json":
        payload = {
            "algorithm": trace.algorithm,
            "seed": trace.seed,
            "n": trace.n,
            "config": trace.config,
            "f_star": f_star,
            "f0": f0,
            "samples": [
                {
                    "effective_passes": float(ep),
                    "objective": float(obj),
                    "suboptimality_ratio": float(ratio),
                }
                for ep, obj, ratio in zip(passes, objectives, ratios)
            ],
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2)
    else:
        raise ValueError(f"unknown trace format {fmt!r}")


def parse_config_file(path) -> dict:
    """Flat key=value text; '#' starts a comment. Values stay strings."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out
