"""Model state containers and per-sample loss primitives.

Every task ``k`` carries weights ``w[k]`` decomposed as a shared component
``u`` plus a task-specific component ``v[k]``, with a dual vector ``z[k]``
tying the decomposition to the weights. A ``RelationshipMatrix`` (one row
and column per task, symmetric, PSD, unit trace) couples the task-specific
components.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .errors import DimensionError, HyperparameterError, NotPSDError
from .symmat import EIGENVALUE_FLOOR, regularized_inverse, validate_symmetric


@dataclass(frozen=True)
class Sample:
    """One labelled instance: a feature vector and a label in {-1, +1}."""

    features: np.ndarray
    label: int

    def __post_init__(self) -> None:
        if self.label not in (-1, 1):
            raise ValueError(f"label must be -1 or +1, got {self.label!r}")
        if np.asarray(self.features).ndim != 1:
            raise DimensionError("sample features must be a 1-d vector")


@dataclass(frozen=True)
class Hyperparameters:
    """Scalar knobs shared by every update rule.

    ``eta`` defaults to ``sqrt(T)`` when left unset, matching the horizon-
    aware step damping the update rules were derived for.
    """

    K: int
    d: int
    T: int
    rho: float = 0.1
    eta: float | None = None
    lambda1: float = 0.01
    lambda2: float = 0.1
    lambda3: float = 0.01
    lambda4: float = 0.01
    eps_inv: float = 1e-6
    eps_tr: float = 1e-10

    def __post_init__(self) -> None:
        if self.K < 1:
            raise HyperparameterError(f"K must be at least 1, got {self.K}")
        if self.d < 1:
            raise HyperparameterError(f"d must be at least 1, got {self.d}")
        if self.T < 0:
            raise HyperparameterError(f"T must be non-negative, got {self.T}")
        if self.eta is None:
            object.__setattr__(self, "eta", math.sqrt(self.T))
        if self.rho <= 0:
            raise HyperparameterError(f"rho must be positive, got {self.rho}")
        if self.eta < 0:
            raise HyperparameterError(f"eta must be non-negative, got {self.eta}")
        for name in ("lambda1", "lambda2"):
            if getattr(self, name) <= 0:
                raise HyperparameterError(
                    f"{name} must be strictly positive, got {getattr(self, name)}"
                )
        for name in ("lambda3", "lambda4"):
            if getattr(self, name) < 0:
                raise HyperparameterError(
                    f"{name} must be non-negative, got {getattr(self, name)}"
                )
        if self.eps_inv <= 0 or self.eps_tr <= 0:
            raise HyperparameterError("eps_inv and eps_tr must be positive")


@dataclass
class ModelState:
    """Per-task weights, decomposition components and duals.

    ``u_locals`` is populated only by the decentralized protocol, where each
    worker keeps its own estimate of the shared component; ``u`` then mirrors
    worker 0's estimate so downstream code can stay protocol-agnostic.
    """

    w: list[np.ndarray]
    v: list[np.ndarray]
    z: list[np.ndarray]
    u: np.ndarray
    u_locals: list[np.ndarray] | None = field(default=None)

    @classmethod
    def zeros(cls, K: int, d: int) -> "ModelState":
        if K < 1 or d < 1:
            raise DimensionError(f"need K >= 1 and d >= 1, got K={K}, d={d}")
        return cls(
            w=[np.zeros(d) for _ in range(K)],
            v=[np.zeros(d) for _ in range(K)],
            z=[np.zeros(d) for _ in range(K)],
            u=np.zeros(d),
        )

    @property
    def K(self) -> int:
        return len(self.w)

    @property
    def d(self) -> int:
        return self.u.shape[0]

    def validate(self) -> None:
        K, d = self.K, self.d
        if not (len(self.v) == len(self.z) == K):
            raise DimensionError("w, v and z must have one entry per task")
        for name, group in (("w", self.w), ("v", self.v), ("z", self.z)):
            for k, vec in enumerate(group):
                if vec.shape != (d,):
                    raise DimensionError(
                        f"{name}[{k}] has shape {vec.shape}, expected ({d},)"
                    )
        if self.u_locals is not None and len(self.u_locals) != K:
            raise DimensionError("u_locals must have one entry per task")
        for vec in (self.u, *self.w, *self.v, *self.z):
            if not np.all(np.isfinite(vec)):
                raise ValueError("model state contains non-finite values")

    def v_matrix(self) -> np.ndarray:
        """Task-specific components as a (d, K) matrix, column per task."""
        return np.column_stack(self.v)


def initial_relationship(K: int) -> np.ndarray:
    """Uniform starting relationship matrix: identity scaled to unit trace."""
    if K < 1:
        raise DimensionError(f"K must be at least 1, got {K}")
    return np.eye(K) / K


def validate_relationship(omega: np.ndarray) -> None:
    """Check symmetry, PSD-ness (within the eigenvalue floor) and unit trace."""
    validate_symmetric(omega)
    vals = np.linalg.eigvalsh(omega)
    if vals[0] < EIGENVALUE_FLOOR:
        raise NotPSDError(
            f"relationship matrix has eigenvalue {vals[0]:.3e} below floor"
        )
    tr = float(np.trace(omega))
    if abs(tr - 1.0) > 1e-8:
        raise ValueError(f"relationship matrix trace {tr!r} is not 1")


def predict(w: np.ndarray, x: np.ndarray) -> int:
    """Sign of the decision value, with ties broken toward +1."""
    if w.shape != x.shape:
        raise DimensionError(f"weight shape {w.shape} != feature shape {x.shape}")
    return 1 if kernels.decision_value(w, x) >= 0.0 else -1


def hinge_loss(w: np.ndarray, sample: Sample) -> float:
    if w.shape != sample.features.shape:
        raise DimensionError(
            f"weight shape {w.shape} != feature shape {sample.features.shape}"
        )
    return float(kernels.hinge_loss(w, sample.features, float(sample.label)))


def hinge_subgradient(w: np.ndarray, sample: Sample) -> np.ndarray:
    if w.shape != sample.features.shape:
        raise DimensionError(
            f"weight shape {w.shape} != feature shape {sample.features.shape}"
        )
    return kernels.hinge_subgradient(w, sample.features, float(sample.label))


def evaluate_objective(
    state: ModelState,
    omega: np.ndarray,
    samples: Sequence[Sample],
    hp: Hyperparameters,
) -> float:
    """Regularized instantaneous objective at the current state.

    Sum of per-task hinge losses plus the squared-norm penalties on the
    decomposition components and the relationship coupling
    ``tr(V @ inv(omega) @ V.T)``. Diagnostic only; not on the hot path.
    """
    if len(samples) != state.K:
        raise DimensionError("need exactly one sample per task")
    total = sum(
        hinge_loss(state.w[k], samples[k]) for k in range(state.K)
    )
    vmat = state.v_matrix()
    om_inv = regularized_inverse(omega, hp.eps_inv)
    total += 0.5 * hp.lambda1 * float(sum(np.dot(v, v) for v in state.v))
    total += 0.5 * hp.lambda2 * float(np.dot(state.u, state.u))
    total += 0.5 * hp.lambda3 * float(np.sum(vmat * vmat))
    total += 0.5 * hp.lambda4 * float(np.sum((vmat @ om_inv) * vmat))
    return total


def evaluate_lagrangian(
    state: ModelState,
    omega: np.ndarray,
    samples: Sequence[Sample],
    w_prev: Sequence[np.ndarray],
    hp: Hyperparameters,
) -> float:
    """Augmented Lagrangian at the current state.

    Extends the objective with the dual terms on the consensus gap
    ``w - u - v``, the quadratic penalty of weight ``rho`` and the proximal
    term of weight ``eta`` against the previous weights. Diagnostic only.
    """
    total = evaluate_objective(state, omega, samples, hp)
    for k in range(state.K):
        gap = state.w[k] - state.u - state.v[k]
        total += float(np.dot(state.z[k], gap))
        total += 0.5 * hp.rho * float(np.dot(gap, gap))
        diff = w_prev[k] - state.w[k]
        total += 0.5 * hp.eta * float(np.dot(diff, diff))
    return total
