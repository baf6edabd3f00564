"""The five closed-form per-round update rules.

Each is a pure function: validate, then delegate the arithmetic to the
selected kernel backend. ``WorkerSlice`` is the per-task view of the model
state that a single worker owns during a round.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .errors import DimensionError, HyperparameterError
from .model import Hyperparameters
from .symmat import psd_sqrt

__all__ = [
    "WorkerSlice",
    "update_w",
    "update_u",
    "update_v",
    "update_z",
    "update_omega",
]


@dataclass(frozen=True)
class WorkerSlice:
    """One task's weights, decomposition component, dual and index."""

    w: np.ndarray
    v: np.ndarray
    z: np.ndarray
    task_index: int


def _check_vectors(d: int, **named: np.ndarray) -> None:
    for name, vec in named.items():
        if vec.shape != (d,):
            raise DimensionError(f"{name} has shape {vec.shape}, expected ({d},)")


def update_w(
    slice_: WorkerSlice, u: np.ndarray, grad: np.ndarray, hp: Hyperparameters
) -> np.ndarray:
    """Per-task weight update: proximal average of the previous weights and
    the consensus target ``u + v``, shifted by the loss subgradient and dual.
    """
    d = slice_.w.shape[0]
    _check_vectors(d, v=slice_.v, z=slice_.z, u=u, grad=grad)
    if hp.rho + hp.eta <= 0:
        raise HyperparameterError("rho + eta must be positive for the w update")
    return kernels.step_w(slice_.w, slice_.v, slice_.z, u, grad, hp.rho, hp.eta)


def update_u(
    w_new: Sequence[np.ndarray], z: Sequence[np.ndarray], hp: Hyperparameters
) -> np.ndarray:
    """Shared-component update from per-task weights and duals.

    The divisor uses ``len(w_new)``, so passing a neighbourhood-restricted
    subset of tasks yields the decentralized local variant of the same rule.
    Lists are stacked in the order given; callers keep ascending task order
    for reproducibility.
    """
    if len(w_new) == 0 or len(w_new) != len(z):
        raise DimensionError(
            f"need matching non-empty lists, got {len(w_new)} weights and {len(z)} duals"
        )
    w_stack = np.stack(w_new)
    z_stack = np.stack(z)
    if w_stack.shape != z_stack.shape:
        raise DimensionError("weight and dual vectors disagree in dimension")
    return kernels.step_u(w_stack, z_stack, hp.rho, hp.lambda1, hp.lambda2, hp.lambda3)


def update_v(
    slice_: WorkerSlice,
    w_new: np.ndarray,
    v_matrix: np.ndarray,
    omega_inv: np.ndarray,
    hp: Hyperparameters,
) -> np.ndarray:
    """Task-specific component update for ``slice_.task_index``.

    ``v_matrix`` holds the current components of all K tasks as columns and
    ``omega_inv`` is the regularized inverse of the current relationship
    matrix. With ``lambda4 = 0`` the relationship term vanishes and the
    result does not depend on ``omega_inv`` at all.
    """
    d = slice_.z.shape[0]
    _check_vectors(d, w_new=w_new)
    if v_matrix.shape != (d, hp.K):
        raise DimensionError(
            f"v_matrix has shape {v_matrix.shape}, expected ({d}, {hp.K})"
        )
    if omega_inv.shape != (hp.K, hp.K):
        raise DimensionError(
            f"omega_inv has shape {omega_inv.shape}, expected ({hp.K}, {hp.K})"
        )
    if not 0 <= slice_.task_index < hp.K:
        raise DimensionError(f"task_index {slice_.task_index} outside [0, {hp.K})")
    denom = hp.lambda2 * (hp.lambda1 + hp.lambda3 + hp.rho) + hp.rho * hp.K * (
        hp.lambda1 + hp.lambda3
    )
    if denom <= 0:
        raise HyperparameterError("v-update denominator must be positive")
    return kernels.step_v(
        slice_.z,
        w_new,
        v_matrix,
        omega_inv,
        slice_.task_index,
        hp.rho,
        hp.lambda1,
        hp.lambda2,
        hp.lambda3,
        hp.lambda4,
    )


def update_z(
    slice_: WorkerSlice,
    w_new: np.ndarray,
    u_new: np.ndarray,
    v_new: np.ndarray,
    hp: Hyperparameters,
) -> np.ndarray:
    """Dual ascent on the consensus residual ``w - u - v``."""
    d = slice_.z.shape[0]
    _check_vectors(d, w_new=w_new, u_new=u_new, v_new=v_new)
    return kernels.step_z(slice_.z, w_new, u_new, v_new, hp.rho)


def update_omega(
    v_matrix: np.ndarray, previous: np.ndarray, eps_tr: float
) -> np.ndarray:
    """Relationship matrix refresh: normalized square root of the Gram
    matrix of the task components.

    When ``trace(sqrt(V.T V))`` falls below ``eps_tr`` (an all-zero V at
    start-up, or numerically vanished components) the previous matrix is
    returned unchanged, so the uniform initial value survives until the
    components separate from zero.
    """
    if v_matrix.ndim != 2:
        raise DimensionError("v_matrix must be a (d, K) matrix")
    K = v_matrix.shape[1]
    if previous.shape != (K, K):
        raise DimensionError(
            f"previous relationship matrix has shape {previous.shape}, expected ({K}, {K})"
        )
    gram = v_matrix.T @ v_matrix
    root = psd_sqrt(gram)
    tr = float(np.trace(root))
    if tr < eps_tr:
        return previous
    return root / tr
