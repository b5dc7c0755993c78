"""Compiled inner-loop kernels for dense logistic / least-squares problems.

Solvers presample every random quantity in Python (so the slow and fast
paths consume identical RNG streams) and hand the index arrays to these
kernels.  Each kernel mutates the iterate in place and returns nothing;
finiteness is checked by the caller at epoch boundaries.
"""

from __future__ import annotations

import numpy as np
from numba import njit

KIND_LOGISTIC = 0
KIND_LEAST_SQUARES = 1

PROX_NONE = 0
PROX_L2_SCALED = 1
PROX_L1 = 2


def dense_batch_gradient(kdata, idx: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Vectorized (numpy) mean component gradient over ``idx`` rows."""
    A = kdata.features[idx]
    m = idx.size
    if kdata.kind == KIND_LOGISTIC:
        K = kdata.num_classes
        p = A.shape[1]
        Z = A @ x.reshape(K - 1, p).T
        zmax = np.maximum(0.0, Z.max(axis=1))
        lse = zmax + np.log(np.exp(-zmax) + np.exp(Z - zmax[:, None]).sum(axis=1))
        coef = np.exp(Z - lse[:, None])
        y = kdata.labels[idx]
        rows = np.nonzero(y < K)[0]
        coef[rows, y[rows] - 1] -= 1.0
        g = (coef.T @ A).ravel() / m
    else:
        r = A @ x - kdata.targets[idx]
        g = (A.T @ r) / m
    if kdata.ridge != 0.0:
        g = g + (2.0 * kdata.ridge) * x
    return g


@njit(cache=True, nogil=True)
def _add_component_grad(kind, A, labels, targets, K, ridge, x, i, out, scale):
    """out += scale * grad f_i(x)."""
    p = A.shape[1]
    if kind == KIND_LOGISTIC:
        zmax = 0.0
        z = np.empty(K - 1)
        for k in range(K - 1):
            acc = 0.0
            for d in range(p):
                acc += A[i, d] * x[k * p + d]
            z[k] = acc
            if acc > zmax:
                zmax = acc
        sumexp = np.exp(-zmax)
        for k in range(K - 1):
            sumexp += np.exp(z[k] - zmax)
        lse = zmax + np.log(sumexp)
        y = labels[i]
        for k in range(K - 1):
            coef = np.exp(z[k] - lse)
            if y == k + 1:
                coef -= 1.0
            c = scale * coef
            for d in range(p):
                out[k * p + d] += c * A[i, d]
    else:
        r = -targets[i]
        for d in range(p):
            r += A[i, d] * x[d]
        c = scale * r
        for d in range(p):
            out[d] += c * A[i, d]
    if ridge != 0.0:
        c = scale * 2.0 * ridge
        for d in range(x.size):
            out[d] += c * x[d]


@njit(cache=True, nogil=True)
def _apply_prox(x, eta, prox_kind, prox_weight):
    if prox_kind == PROX_L2_SCALED:
        denom = 1.0 + 2.0 * eta * prox_weight
        for d in range(x.size):
            x[d] /= denom
    elif prox_kind == PROX_L1:
        t = eta * prox_weight
        for d in range(x.size):
            v = x[d]
            if v > t:
                x[d] = v - t
            elif v < -t:
                x[d] = v + t
            else:
                x[d] = 0.0


@njit(cache=True, nogil=True)
def vr_inner_loop(
    kind, A, labels, targets, K, ridge,
    x, anchor, mu, eta, idx, b, prox_kind, prox_weight,
):
    """SCSG/SVRG inner loop: x <- prox(x - eta * nu) with
    nu = grad_batch(x) - grad_batch(anchor) + mu, batches given by
    ``idx`` of shape (num_steps, b)."""
    nsteps = idx.shape[0]
    g = np.empty_like(x)
    inv_b = 1.0 / b
    for t in range(nsteps):
        g[:] = mu
        for r in range(b):
            i = idx[t, r]
            _add_component_grad(kind, A, labels, targets, K, ridge, x, i, g, inv_b)
            _add_component_grad(kind, A, labels, targets, K, ridge, anchor, i, g, -inv_b)
        for d in range(x.size):
            x[d] -= eta * g[d]
        _apply_prox(x, eta, prox_kind, prox_weight)


@njit(cache=True, nogil=True)
def sarah_inner_loop(
    kind, A, labels, targets, K, ridge,
    x, x_prev, nu, eta, idx, b, prox_kind, prox_weight,
):
    """Recursive-gradient inner loop: nu <- grad_batch(x) -
    grad_batch(x_prev) + nu, then step.  Mutates x, x_prev and nu."""
    nsteps = idx.shape[0]
    g = np.empty_like(x)
    inv_b = 1.0 / b
    for t in range(nsteps):
        g[:] = nu
        for r in range(b):
            i = idx[t, r]
            _add_component_grad(kind, A, labels, targets, K, ridge, x, i, g, inv_b)
            _add_component_grad(kind, A, labels, targets, K, ridge, x_prev, i, g, -inv_b)
        nu[:] = g
        x_prev[:] = x
        for d in range(x.size):
            x[d] -= eta * g[d]
        _apply_prox(x, eta, prox_kind, prox_weight)


@njit(cache=True, nogil=True)
def sgd_loop(
    kind, A, labels, targets, K, ridge,
    x, eta, idx, b, t0, decay, prox_kind, prox_weight,
):
    """Plain stochastic gradient steps; with ``decay`` the step at global
    iteration t is eta / (1 + t), t counted from t0."""
    nsteps = idx.shape[0]
    g = np.empty_like(x)
    inv_b = 1.0 / b
    for t in range(nsteps):
        g[:] = 0.0
        for r in range(b):
            i = idx[t, r]
            _add_component_grad(kind, A, labels, targets, K, ridge, x, i, g, inv_b)
        step = eta / (1.0 + t0 + t) if decay else eta
        for d in range(x.size):
            x[d] -= step * g[d]
        _apply_prox(x, step, prox_kind, prox_weight)
