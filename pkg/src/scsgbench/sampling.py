"""Seedable randomness: geometric epoch lengths and uniform index batches.

All randomness flows through :class:`RngStream`, a thin wrapper around
numpy's PCG64 generator (explicitly specified, reproducible across
platforms).  Parallel runs derive independent streams by hashing a base
seed together with a run id.
"""

from __future__ import annotations

import numpy as np

GEOMETRIC_CAP = 10**8


class GeometricCapExceeded(RuntimeError):
    pass


class RngStream:
    """Deterministic random stream; same seed => identical draw sequence."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    @staticmethod
    def derive(base_seed: int, *run_id) -> "RngStream":
        """Independent child stream for (base_seed, run_id)."""
        ss = np.random.SeedSequence([int(base_seed) & (2**63 - 1), *_encode(run_id)])
        return RngStream(int(ss.generate_state(1, dtype=np.uint64)[0]))

    def uniform_open(self, size=None):
        """Uniform draws in (0, 1]."""
        return 1.0 - self._gen.random(size)

    def integers(self, n: int, size=None):
        return self._gen.integers(0, n, size=size)

    def choice_without_replacement(self, n: int, size: int) -> np.ndarray:
        return self._gen.choice(n, size=size, replace=False, shuffle=False)

    def random(self, size=None):
        return self._gen.random(size)

    def standard_normal(self, size=None):
        return self._gen.standard_normal(size)


def _encode(run_id) -> list[int]:
    out = []
    for part in run_id:
        if isinstance(part, str):
            out.extend(part.encode("utf-8"))
        else:
            out.append(int(part) & (2**63 - 1))
    return out


def sample_geometric(gamma: float, rng: RngStream, size=None, cap: int = GEOMETRIC_CAP):
    """Draw N with P(N = k) = (1 - gamma) * gamma^k for k = 0, 1, ...

    Inverse-CDF sampling: N = floor(log(U) / log(gamma)) with U uniform
    in (0, 1].  Exact, O(1) per draw, no rejection loop.
    """
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"gamma must be in [0, 1), got {gamma}")
    if gamma == 0.0:
        return 0 if size is None else np.zeros(size, dtype=np.int64)
    u = rng.uniform_open(size)
    draws = np.floor(np.log(u) / np.log(gamma)).astype(np.int64)
    if np.any(draws > cap):
        raise GeometricCapExceeded(
            f"geometric draw exceeded safety cap {cap} (gamma={gamma})"
        )
    if size is None:
        return int(draws)
    return draws


def sample_subset(n: int, size: int, rng: RngStream) -> np.ndarray:
    """Uniform subset of {0..n-1} with ``size`` distinct indices."""
    if not 1 <= size <= n:
        raise ValueError(f"subset size must satisfy 1 <= size <= {n}, got {size}")
    if size == n:
        return np.arange(n, dtype=np.int64)
    return np.asarray(rng.choice_without_replacement(n, size), dtype=np.int64)


def sample_minibatch_indices(
    n: int,
    size: int,
    count: int,
    rng: RngStream,
    with_replacement: bool = False,
) -> np.ndarray:
    """``count`` independent minibatches, returned as a (count, size) array.

    The size-1 case (the common one: inner-loop minibatch b = 1) is
    vectorized; larger batches fall back to per-batch subset draws.
    """
    if count == 0:
        return np.empty((0, size), dtype=np.int64)
    if with_replacement or size == 1:
        return rng.integers(n, size=(count, size)).astype(np.int64)
    return np.stack([sample_subset(n, size, rng) for _ in range(count)])


def geometrization_identity_gap(
    d,
    gamma: float,
    num_samples: int,
    rng: RngStream,
    return_stderr: bool = False,
):
    """Monte-Carlo check of the geometric telescoping identity.

    For N ~ Geom(gamma) and any sequence D_0, D_1, ... with E|D_N| finite,
    E(D_N - D_{N+1}) = (1/gamma - 1)(D_0 - E D_N).  Returns the absolute
    gap between Monte-Carlo estimates of both sides; with
    ``return_stderr`` also returns the standard error of the gap.

    ``d`` is either a callable accepting integer arrays or an indexable
    sequence covering all sampled indices plus one.
    """
    if callable(d):
        dfun = d
    else:
        arr = np.asarray(d, dtype=np.float64)

        def dfun(k):
            if np.max(k) + 1 >= arr.size:
                raise IndexError("sequence too short for sampled geometric draws")
            return arr[k]

    if gamma == 0.0:
        # Degenerate: N = 0 almost surely, both sides are D_0 - D_1 exactly.
        return (0.0, 0.0) if return_stderr else 0.0

    draws = sample_geometric(gamma, rng, size=num_samples)
    d0 = float(np.asarray(dfun(np.zeros(1, dtype=np.int64)))[0])
    dn = np.asarray(dfun(draws), dtype=np.float64)
    dn1 = np.asarray(dfun(draws + 1), dtype=np.float64)
    c = 1.0 / gamma - 1.0
    # gap = |mean(D_N - D_{N+1}) - c*(D_0 - mean(D_N))|
    #     = |mean((D_N - D_{N+1}) + c*D_N) - c*D_0|
    combined = (dn - dn1) + c * dn
    gap = abs(float(np.mean(combined)) - c * d0)
    if not return_stderr:
        return gap
    stderr = float(np.std(combined, ddof=1) / np.sqrt(num_samples))
    return gap, stderr
