"""Distance-generating functions and the mirror-proximal update.

The Euclidean generator w(x) = ||x||^2 / 2 gives the classic proximal
gradient step in closed form.  The q-norm generator w(x) = ||x||_2^q / q
(q > 1) has a radial gradient map, so its mirror step reduces to a scalar
root-find on the norm of the solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .objectives import Regularizer


class UnsupportedConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class DistanceGenerator:
    """Bregman-divergence provider.  kind: "euclidean" or "q_norm"."""

    kind: str = "euclidean"
    q: float = 2.0

    def __post_init__(self):
        if self.kind not in ("euclidean", "q_norm"):
            raise ValueError(f"unknown distance generator kind {self.kind!r}")
        if self.kind == "q_norm" and not self.q > 1.0:
            raise ValueError("q-norm generator requires q > 1")

    def value(self, x: np.ndarray) -> float:
        if self.kind == "euclidean":
            return 0.5 * float(x @ x)
        nrm = float(np.linalg.norm(x))
        return nrm**self.q / self.q

    def grad(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "euclidean":
            return np.asarray(x, dtype=np.float64)
        nrm = float(np.linalg.norm(x))
        if nrm == 0.0:
            return np.zeros_like(x)
        return nrm ** (self.q - 2.0) * x


EUCLIDEAN = DistanceGenerator("euclidean")


def bregman(generator: DistanceGenerator, x: np.ndarray, y: np.ndarray) -> float:
    """B_w(x, y) = w(x) - w(y) - <grad w(y), x - y>; nonnegative by convexity."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError("bregman arguments must share a shape")
    if generator.kind == "euclidean":
        d = x - y
        return 0.5 * float(d @ d)
    return generator.value(x) - generator.value(y) - float(generator.grad(y) @ (x - y))


@dataclass(frozen=True)
class MirrorStepSpec:
    eta: float
    regularizer: Regularizer = Regularizer("none")
    generator: DistanceGenerator = EUCLIDEAN

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError("step size eta must be positive")


def _solve_radial(q: float, coeff: float, target: float, max_iter: int = 200) -> float:
    """Root of h(s) = s^(q-1) + coeff*s = target on s >= 0.

    h is continuous and strictly increasing, so bisection bracketing plus
    Newton polish converges; iteration is capped defensively.
    """
    if target <= 0.0:
        return 0.0
    hi = max(target ** (1.0 / (q - 1.0)), target / coeff if coeff > 0 else 0.0)
    hi = max(hi, 1e-300)
    lo = 0.0
    h = lambda s: s ** (q - 1.0) + coeff * s - target
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if h(mid) > 0.0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-15 * hi:
            break
    s = 0.5 * (lo + hi)
    for _ in range(50):
        hp = (q - 1.0) * s ** (q - 2.0) + coeff if s > 0 else np.inf
        if not np.isfinite(hp) or hp == 0.0:
            break
        step = h(s) / hp
        s_new = s - step
        if s_new <= lo or s_new >= hi:
            break
        s = s_new
        if abs(h(s)) <= 1e-14 * max(1.0, target):
            break
    return s


def mirror_prox_step(spec: MirrorStepSpec, x: np.ndarray, nu: np.ndarray) -> np.ndarray:
    """argmin_y  <nu, y> + psi(y) + B_w(y, x) / eta.

    Euclidean generator: closed-form prox of (x - eta*nu).  q-norm
    generator: supported for psi = 0 and psi = weight*||y||^2 via the
    radial scalar equation; the l1 combination has no radial structure
    and is rejected.
    """
    x = np.asarray(x, dtype=np.float64)
    nu = np.asarray(nu, dtype=np.float64)
    if x.shape != nu.shape:
        raise ValueError("iterate and direction must share a shape")
    gen, reg, eta = spec.generator, spec.regularizer, spec.eta

    if gen.kind == "euclidean":
        return reg.prox(x - eta * nu, eta)

    if reg.kind == "l1" and reg.weight > 0:
        raise UnsupportedConfigurationError(
            "q-norm generator with an l1 term has no radial solution; "
            "use the euclidean generator for l1 composite steps"
        )
    # FOC: grad w(y) + 2*eta*weight*y = grad w(x) - eta*nu =: g, y parallel to g.
    g = gen.grad(x) - eta * nu
    gnorm = float(np.linalg.norm(g))
    if gnorm == 0.0:
        return np.zeros_like(x)
    coeff = 2.0 * eta * reg.weight if reg.kind == "l2_scaled" else 0.0
    s = _solve_radial(gen.q, coeff, gnorm)
    return (s / gnorm) * g


def mirror_step_residual(
    spec: MirrorStepSpec, x: np.ndarray, nu: np.ndarray, y: np.ndarray
) -> float:
    """Norm of the first-order optimality residual at y.

    Picks the subgradient of psi at y that minimizes the residual, so a
    value near zero certifies y as the mirror-prox argmin.
    """
    gen, reg, eta = spec.generator, spec.regularizer, spec.eta
    r = gen.grad(y) - gen.grad(x) + eta * nu
    if reg.kind == "l2_scaled":
        r = r + eta * 2.0 * reg.weight * y
    elif reg.kind == "l1" and reg.weight > 0:
        s = np.where(y != 0, reg.weight * np.sign(y), 0.0)
        free = y == 0
        s[free] = np.clip(-r[free] / eta, -reg.weight, reg.weight)
        r = r + eta * s
    return float(np.linalg.norm(r))
