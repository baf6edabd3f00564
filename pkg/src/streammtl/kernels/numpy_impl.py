"""Reference numpy implementations of the per-round numeric kernels.

These are the fallback backend: pure numpy, no compilation step, suitable
anywhere. The compiled twins in ``numba_impl`` must agree with these up to
floating-point reassociation. Validation (shapes, ranges) happens in the
callers; kernels assume clean float64 inputs.
"""

from __future__ import annotations

import numpy as np


def decision_value(w: np.ndarray, x: np.ndarray) -> float:
    return float(np.dot(w, x))


def hinge_loss(w: np.ndarray, x: np.ndarray, y: float) -> float:
    return max(0.0, 1.0 - y * float(np.dot(w, x)))


def hinge_subgradient(w: np.ndarray, x: np.ndarray, y: float) -> np.ndarray:
    """Subgradient of the hinge loss in the weights.

    On the active branch (margin strictly below 1) this is ``-y * x``; at the
    kink and on the flat branch the zero vector is chosen.
    """
    if y * float(np.dot(w, x)) < 1.0:
        return -y * x
    return np.zeros_like(x)


def step_w(
    w: np.ndarray,
    v: np.ndarray,
    z: np.ndarray,
    u: np.ndarray,
    grad: np.ndarray,
    rho: float,
    eta: float,
) -> np.ndarray:
    """Closed-form per-task weight update.

    Averages the previous weights (weight ``eta``) against the consensus
    target ``u + v`` (weight ``rho``), shifted by the loss subgradient and
    the dual variable.
    """
    return (eta * w + rho * (u + v) - grad - z) / (rho + eta)


def step_u(
    w_stack: np.ndarray,
    z_stack: np.ndarray,
    rho: float,
    lam1: float,
    lam2: float,
    lam3: float,
) -> np.ndarray:
    """Closed-form shared-component update from stacked task rows.

    ``w_stack`` and ``z_stack`` are (count, d); the divisor uses the row
    count, so a neighbourhood-restricted stack yields the local variant of
    the same rule.
    """
    count = w_stack.shape[0]
    coef = lam1 + lam3
    denom = coef * (lam2 + rho * count) + lam2 * rho
    return coef * (z_stack + rho * w_stack).sum(axis=0) / denom


def step_v(
    z: np.ndarray,
    w_new: np.ndarray,
    v_mat: np.ndarray,
    omega_inv: np.ndarray,
    task: int,
    rho: float,
    lam1: float,
    lam2: float,
    lam3: float,
    lam4: float,
) -> np.ndarray:
    """Closed-form task-specific component update for one task.

    ``v_mat`` is the (d, count) matrix of current task components and
    ``omega_inv`` the regularized inverse of the relationship matrix. The
    relationship coupling picks column ``task`` of
    ``v_mat @ omega_inv + v_mat @ omega_inv.T``; it is skipped entirely when
    its weight ``lam4`` is zero, so the result is then independent of
    ``omega_inv``.
    """
    count = v_mat.shape[1]
    denom = lam2 * (lam1 + lam3 + rho) + rho * count * (lam1 + lam3)
    out = lam2 * (z + rho * w_new) / denom
    if lam4 != 0.0:
        out = out + 0.5 * lam4 * (v_mat @ (omega_inv[:, task] + omega_inv[task, :]))
    return out


def step_z(
    z: np.ndarray,
    w_new: np.ndarray,
    u_new: np.ndarray,
    v_new: np.ndarray,
    rho: float,
) -> np.ndarray:
    return z + rho * (w_new - u_new - v_new)


def mix_step(
    w_stack: np.ndarray,
    mixing_row: np.ndarray,
    grad: np.ndarray,
    gamma: float,
) -> np.ndarray:
    """Gossip step: mix all task weights with one row of the mixing matrix,
    then take a subgradient step of size ``gamma``."""
    return mixing_row @ w_stack - gamma * grad


def total_hinge(features: np.ndarray, labels: np.ndarray, w: np.ndarray) -> float:
    margins = labels * (features @ w)
    return float(np.maximum(0.0, 1.0 - margins).sum())


def oracle_fit(
    features: np.ndarray,
    labels: np.ndarray,
    passes: int,
    step0: float,
) -> np.ndarray:
    """Batch reference solver: multi-pass subgradient descent on the total
    hinge loss with pass-decayed step ``step0 / sqrt(pass)``, returning the
    average of the end-of-pass iterates.

    Deterministic: samples are visited in storage order every pass.
    """
    n, d = features.shape
    w = np.zeros(d)
    w_sum = np.zeros(d)
    for p in range(1, passes + 1):
        step = step0 / np.sqrt(p)
        for i in range(n):
            x = features[i]
            if labels[i] * float(np.dot(w, x)) < 1.0:
                w = w + step * labels[i] * x
        w_sum += w
    return w_sum / passes
