"""Compiled twins of the kernels in ``numpy_impl``.

Each function keeps the exact formula of its numpy counterpart but is
written with explicit loops and compiled with ``@njit``. Results may differ
from the numpy backend only by floating-point summation order; within one
backend every kernel is deterministic. ``nogil=True`` lets thread pools in
the protocol layer run workers concurrently.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def decision_value(w, x):
    acc = 0.0
    for i in range(w.shape[0]):
        acc += w[i] * x[i]
    return acc


@njit(cache=True, nogil=True)
def hinge_loss(w, x, y):
    margin = 1.0 - y * decision_value(w, x)
    return margin if margin > 0.0 else 0.0


@njit(cache=True, nogil=True)
def hinge_subgradient(w, x, y):
    # Zero vector on the flat branch and at the kink.
    out = np.zeros(x.shape[0])
    if y * decision_value(w, x) < 1.0:
        for i in range(x.shape[0]):
            out[i] = -y * x[i]
    return out


@njit(cache=True, nogil=True)
def step_w(w, v, z, u, grad, rho, eta):
    d = w.shape[0]
    out = np.empty(d)
    scale = 1.0 / (rho + eta)
    for i in range(d):
        out[i] = (eta * w[i] + rho * (u[i] + v[i]) - grad[i] - z[i]) * scale
    return out


@njit(cache=True, nogil=True)
def step_u(w_stack, z_stack, rho, lam1, lam2, lam3):
    count, d = w_stack.shape
    coef = lam1 + lam3
    denom = coef * (lam2 + rho * count) + lam2 * rho
    out = np.zeros(d)
    for r in range(count):
        for i in range(d):
            out[i] += z_stack[r, i] + rho * w_stack[r, i]
    for i in range(d):
        out[i] = coef * out[i] / denom
    return out


@njit(cache=True, nogil=True)
def step_v(z, w_new, v_mat, omega_inv, task, rho, lam1, lam2, lam3, lam4):
    d, count = v_mat.shape
    denom = lam2 * (lam1 + lam3 + rho) + rho * count * (lam1 + lam3)
    out = np.empty(d)
    for i in range(d):
        out[i] = lam2 * (z[i] + rho * w_new[i]) / denom
    if lam4 != 0.0:
        for j in range(count):
            coef = 0.5 * lam4 * (omega_inv[j, task] + omega_inv[task, j])
            for i in range(d):
                out[i] += coef * v_mat[i, j]
    return out


@njit(cache=True, nogil=True)
def step_z(z, w_new, u_new, v_new, rho):
    d = z.shape[0]
    out = np.empty(d)
    for i in range(d):
        out[i] = z[i] + rho * (w_new[i] - u_new[i] - v_new[i])
    return out


@njit(cache=True, nogil=True)
def mix_step(w_stack, mixing_row, grad, gamma):
    count, d = w_stack.shape
    out = np.zeros(d)
    for j in range(count):
        c = mixing_row[j]
        if c != 0.0:
            for i in range(d):
                out[i] += c * w_stack[j, i]
    for i in range(d):
        out[i] -= gamma * grad[i]
    return out


@njit(cache=True, nogil=True)
def total_hinge(features, labels, w):
    acc = 0.0
    for r in range(features.shape[0]):
        margin = 1.0 - labels[r] * decision_value(w, features[r])
        if margin > 0.0:
            acc += margin
    return acc


@njit(cache=True, nogil=True)
def oracle_fit(features, labels, passes, step0):
    n, d = features.shape
    w = np.zeros(d)
    w_sum = np.zeros(d)
    for p in range(1, passes + 1):
        step = step0 / np.sqrt(p)
        for i in range(n):
            if labels[i] * decision_value(w, features[i]) < 1.0:
                for j in range(d):
                    w[j] += step * labels[i] * features[i, j]
        for j in range(d):
            w_sum[j] += w[j]
    out = np.empty(d)
    for j in range(d):
        out[j] = w_sum[j] / passes
    return out
