"""Reference learners for comparisons.

* ADMM-Single: each task runs the one-task specialization of the consensus
  updates (task-specific component pinned at zero), with no cross-task
  traffic at all.
* D-PSGD: decentralized parallel stochastic gradient descent; workers mix
  weights with their closed neighbourhood, then take a hinge subgradient
  step with a decaying step size.

Both consume the same streams, round loop and metrics as the main learners.
"""

from __future__ import annotations

from concurrent.futures import Executor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .errors import (
    DimensionError,
    HyperparameterError,
    InvalidRoundError,
)
from .model import Hyperparameters, Sample
from .protocol import VECTOR_ENTRY_BYTES, RoundTrace, _map_tasks
from .topology import Topology, mixing_matrix
from .updates import WorkerSlice, update_u, update_w, update_z

STEP_SCHEDULES = ("inv_sqrt", "inv_square")


@dataclass
class SingleTaskState:
    """Weights, local shared component and dual for one isolated task."""

    w: np.ndarray
    u_local: np.ndarray
    z: np.ndarray

    @classmethod
    def zeros(cls, d: int) -> "SingleTaskState":
        return cls(np.zeros(d), np.zeros(d), np.zeros(d))


def admm_single_round(
    state: SingleTaskState, sample: Sample, hp: Hyperparameters
) -> SingleTaskState:
    """One-task consensus round: weight step against the local shared
    component, singleton shared-component update, dual step with the
    task-specific component fixed at zero."""
    d = state.w.shape[0]
    if sample.features.shape != (d,):
        raise DimensionError(
            f"sample has {sample.features.shape[0]} features, expected {d}"
        )
    zero_v = np.zeros(d)
    grad = kernels.hinge_subgradient(state.w, sample.features, float(sample.label))
    sl = WorkerSlice(state.w, zero_v, state.z, 0)
    w_new = update_w(sl, state.u_local, grad, hp)
    u_new = update_u([w_new], [state.z], hp)
    z_new = update_z(sl, w_new, u_new, zero_v, hp)
    return SingleTaskState(w=w_new, u_local=u_new, z=z_new)


def run_single_tasks_round(
    states: Sequence[SingleTaskState],
    samples: Sequence[Sample],
    hp: Hyperparameters,
    *,
    round_index: int = 0,
    pool: Executor | None = None,
) -> tuple[list[SingleTaskState], RoundTrace]:
    """Advance every isolated task one round and assemble the usual trace.

    Tasks never communicate, so the message and byte counts are zero.
    """
    if len(states) != len(samples):
        raise DimensionError("need one sample per task state")

    def one(k: int):
        w = states[k].w
        x = samples[k].features
        pred = 1 if kernels.decision_value(w, x) >= 0.0 else -1
        loss = float(kernels.hinge_loss(w, x, float(samples[k].label)))
        return pred, loss, admm_single_round(states[k], samples[k], hp)

    results = _map_tasks(one, len(states), pool)
    trace = RoundTrace(
        round_index=round_index,
        predictions=np.array([r[0] for r in results], dtype=np.int64),
        labels=np.array([s.label for s in samples], dtype=np.int64),
        losses=np.array([r[1] for r in results]),
        messages_sent=0,
        bytes_sent=0,
    )
    return [r[2] for r in results], trace


@dataclass
class DPSGDState:
    """Per-worker weights plus the gossip mixing matrix and step schedule."""

    w: list[np.ndarray]
    step0: float
    mixing: np.ndarray
    schedule: str = "inv_sqrt"

    def __post_init__(self) -> None:
        if self.step0 <= 0:
            raise HyperparameterError(f"step0 must be positive, got {self.step0}")
        if self.schedule not in STEP_SCHEDULES:
            raise HyperparameterError(
                f"schedule must be one of {STEP_SCHEDULES}, got {self.schedule!r}"
            )
        K = len(self.w)
        if self.mixing.shape != (K, K):
            raise DimensionError(
                f"mixing matrix shape {self.mixing.shape} does not match {K} workers"
            )
        if np.any(self.mixing < 0):
            raise ValueError("mixing entries must be non-negative")
        rows = self.mixing.sum(axis=1)
        if np.max(np.abs(rows - 1.0)) > 1e-12:
            raise ValueError("mixing rows must sum to 1")

    @classmethod
    def zeros(
        cls, topo: Topology, d: int, step0: float = 0.1, schedule: str = "inv_sqrt"
    ) -> "DPSGDState":
        return cls(
            w=[np.zeros(d) for _ in range(topo.K)],
            step0=step0,
            mixing=mixing_matrix(topo),
            schedule=schedule,
        )


def step_size(state: DPSGDState, t: int) -> float:
    """Decaying step at round ``t >= 1``: ``step0/sqrt(t)`` or ``step0/t^2``."""
    if t < 1:
        raise InvalidRoundError(f"round index must be at least 1, got {t}")
    if state.schedule == "inv_sqrt":
        return state.step0 / np.sqrt(t)
    return state.step0 / (t * t)


def dpsgd_round(
    state: DPSGDState, samples: Sequence[Sample], t: int
) -> DPSGDState:
    """Synchronous gossip round: every worker mixes the previous weights of
    its closed neighbourhood, then steps along its own hinge subgradient."""
    K = len(state.w)
    if len(samples) != K:
        raise DimensionError(f"need {K} samples, got {len(samples)}")
    gamma = step_size(state, t)
    w_stack = np.stack(state.w)
    w_next = [
        kernels.mix_step(
            w_stack,
            state.mixing[k],
            kernels.hinge_subgradient(
                state.w[k], samples[k].features, float(samples[k].label)
            ),
            gamma,
        )
        for k in range(K)
    ]
    return DPSGDState(
        w=w_next, step0=state.step0, mixing=state.mixing, schedule=state.schedule
    )


def run_dpsgd_round(
    state: DPSGDState,
    samples: Sequence[Sample],
    topo: Topology,
    t: int,
    *,
    pool: Executor | None = None,
) -> tuple[DPSGDState, RoundTrace]:
    """One gossip round with the usual trace; one weight-vector message per
    directed neighbour pair."""
    K = len(state.w)
    d = state.w[0].shape[0]

    def one(k: int):
        w = state.w[k]
        x = samples[k].features
        pred = 1 if kernels.decision_value(w, x) >= 0.0 else -1
        return pred, float(kernels.hinge_loss(w, x, float(samples[k].label)))

    results = _map_tasks(one, K, pool)
    new_state = dpsgd_round(state, samples, t)
    edge_count = sum(len(nbs) for nbs in topo.adjacency)
    trace = RoundTrace(
        round_index=t,
        predictions=np.array([r[0] for r in results], dtype=np.int64),
        labels=np.array([s.label for s in samples], dtype=np.int64),
        losses=np.array([r[1] for r in results]),
        messages_sent=edge_count,
        bytes_sent=edge_count * d * VECTOR_ENTRY_BYTES,
    )
    return new_state, trace
