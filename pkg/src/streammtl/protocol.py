"""Simulated execution of one learning round over a worker topology.

Two protocols share the same per-worker mathematics and differ in where the
shared component comes from:

* centralized: workers report to a server that computes one shared ``u`` and
  refreshes the relationship matrix;
* decentralized: each worker builds a local ``u`` from its 1-hop neighbours
  and the task components travel by multi-hop flooding so every worker can
  refresh the same relationship matrix.

Rounds are synchronous with phase barriers (weights -> shared component ->
components/duals -> relationship matrix). Per-worker phases may run on a
thread pool; results are collected by ascending task index and every sum
over tasks iterates in ascending index order, so outputs are bit-identical
at any thread count.

Message accounting is a fixed convention, not a transport: one message per
(sender, receiver, payload) with 8 bytes per vector entry. A centralized
round with relationship learning costs 3K messages (K worker reports of 3
length-d vectors, K shared-component broadcasts, K relationship packets of
one length-K column plus the d x K component digest). A decentralized round
costs one message per directed neighbour pair for the weight/dual gather,
the same for the shared-component exchange, and that again per flooding hop.
When relationship learning is off the relationship traffic disappears and
reports shrink to 2 vectors.
"""

from __future__ import annotations

from concurrent.futures import Executor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .errors import DimensionError, TopologyError
from .model import Hyperparameters, ModelState, Sample
from .symmat import regularized_inverse
from .topology import Topology, diameter
from .updates import WorkerSlice, update_omega, update_u, update_v, update_w, update_z

VECTOR_ENTRY_BYTES = 8


@dataclass(frozen=True)
class WorkerReport:
    """Upward payload of one worker: fresh weights, the pre-update dual, and
    the task component riding along for the relationship refresh."""

    task_index: int
    w_new: np.ndarray
    z: np.ndarray
    v: np.ndarray


@dataclass(frozen=True)
class ServerBroadcast:
    """Downward payload for one worker: the new shared component plus the
    relationship column and component digest its v-update needs."""

    u_new: np.ndarray
    omega_inv_column: np.ndarray
    v_matrix_digest: np.ndarray


@dataclass
class RoundTrace:
    """Observable outcome of one round.

    ``wall_clock`` is left at zero here; the caller that times the protocol
    call fills it in (timing excludes data loading and file writes).
    """

    round_index: int
    predictions: np.ndarray
    labels: np.ndarray
    losses: np.ndarray
    messages_sent: int
    bytes_sent: int
    wall_clock: float = 0.0

    @property
    def mistakes(self) -> np.ndarray:
        return self.predictions != self.labels


def _check_round_inputs(
    state: ModelState,
    omega: np.ndarray,
    samples: Sequence[Sample],
    hp: Hyperparameters,
) -> None:
    state.validate()
    if state.K != hp.K or state.d != hp.d:
        raise DimensionError(
            f"state is K={state.K}, d={state.d} but hyperparameters say "
            f"K={hp.K}, d={hp.d}"
        )
    if len(samples) != hp.K:
        raise DimensionError(f"need {hp.K} samples, got {len(samples)}")
    for k, s in enumerate(samples):
        if s.features.shape != (hp.d,):
            raise DimensionError(
                f"sample {k} has {s.features.shape[0]} features, expected {hp.d}"
            )
    if omega.shape != (hp.K, hp.K):
        raise DimensionError(
            f"relationship matrix has shape {omega.shape}, expected ({hp.K}, {hp.K})"
        )


def _map_tasks(fn: Callable[[int], object], count: int, pool: Executor | None):
    """Run ``fn`` for every task index; results in ascending index order."""
    if pool is None:
        return [fn(k) for k in range(count)]
    return list(pool.map(fn, range(count)))


def _weight_phase(
    state: ModelState,
    samples: Sequence[Sample],
    u_for_task: Callable[[int], np.ndarray],
    hp: Hyperparameters,
    pool: Executor | None,
):
    """Predict with the pre-update weights, record the loss, take the
    weight step. Shared by both protocols."""

    def one(k: int):
        x = samples[k].features
        y = float(samples[k].label)
        w = state.w[k]
        pred = 1 if kernels.decision_value(w, x) >= 0.0 else -1
        loss = float(kernels.hinge_loss(w, x, y))
        grad = kernels.hinge_subgradient(w, x, y)
        sl = WorkerSlice(w, state.v[k], state.z[k], k)
        return pred, loss, update_w(sl, u_for_task(k), grad, hp)

    results = _map_tasks(one, hp.K, pool)
    preds = np.array([r[0] for r in results], dtype=np.int64)
    losses = np.array([r[1] for r in results])
    w_new = [r[2] for r in results]
    return preds, losses, w_new


def run_centralized_round(
    state: ModelState,
    omega: np.ndarray,
    samples: Sequence[Sample],
    hp: Hyperparameters,
    *,
    round_index: int = 0,
    learn_relationships: bool = True,
    pool: Executor | None = None,
) -> tuple[ModelState, np.ndarray, RoundTrace]:
    """One server-coordinated round.

    Order: per-worker predict/loss/weight step; gather; server shared-
    component update; broadcast; per-worker component and dual steps against
    the fresh shared component but the previous round's component matrix and
    relationship matrix; relationship refresh from the new components.

    With ``learn_relationships=False`` the relationship matrix is frozen and
    its traffic is not accounted.
    """
    _check_round_inputs(state, omega, samples, hp)
    K, d = hp.K, hp.d

    preds, losses, w_new = _weight_phase(state, samples, lambda k: state.u, hp, pool)

    reports = [WorkerReport(k, w_new[k], state.z[k], state.v[k]) for k in range(K)]
    report_entries = 3 * d if learn_relationships else 2 * d
    messages = K
    payload = K * report_entries

    u_new = update_u([r.w_new for r in reports], [r.z for r in reports], hp)
    messages += K
    payload += K * d

    v_old = state.v_matrix()
    omega_inv = regularized_inverse(omega, hp.eps_inv)
    broadcasts = [
        ServerBroadcast(u_new, omega_inv[:, k] + omega_inv[k, :], v_old)
        for k in range(K)
    ]
    if learn_relationships:
        messages += K
        payload += K * (K + d * K)

    def vz(k: int):
        b = broadcasts[k]
        sl = WorkerSlice(state.w[k], state.v[k], state.z[k], k)
        v_next = update_v(sl, w_new[k], b.v_matrix_digest, omega_inv, hp)
        z_next = update_z(sl, w_new[k], b.u_new, v_next, hp)
        return v_next, z_next

    vz_out = _map_tasks(vz, K, pool)
    v_new = [r[0] for r in vz_out]
    z_new = [r[1] for r in vz_out]

    if learn_relationships:
        omega_new = update_omega(np.column_stack(v_new), omega, hp.eps_tr)
    else:
        omega_new = omega

    labels = np.array([s.label for s in samples], dtype=np.int64)
    trace = RoundTrace(
        round_index=round_index,
        predictions=preds,
        labels=labels,
        losses=losses,
        messages_sent=messages,
        bytes_sent=payload * VECTOR_ENTRY_BYTES,
    )
    new_state = ModelState(w=w_new, v=v_new, z=z_new, u=u_new)
    return new_state, omega_new, trace


def run_decentralized_round(
    state: ModelState,
    omega: np.ndarray,
    samples: Sequence[Sample],
    topo: Topology,
    hp: Hyperparameters,
    *,
    round_index: int = 0,
    learn_relationships: bool = True,
    average_neighbor_u: bool = False,
    pool: Executor | None = None,
) -> tuple[ModelState, np.ndarray, RoundTrace]:
    """One serverless round over a connected worker graph.

    Each worker gathers fresh weights and previous duals from its 1-hop
    neighbours and runs the shared-component rule restricted to that closed
    neighbourhood (the task-count divisor becomes the neighbourhood size).
    Local shared components are then exchanged with neighbours; by default
    the exchange is only recorded, with ``average_neighbor_u=True`` each
    worker instead averages its closed neighbourhood's values. Component and
    dual steps run against the worker's own local shared component. Fresh
    components travel by flooding for ``diameter(topo)`` hops so every
    worker assembles the complete component matrix and computes the same
    relationship refresh.

    On the full graph every closed neighbourhood is the whole task set, so
    the round is bit-identical to ``run_centralized_round``.

    ``state.u_locals`` carries the per-worker shared components between
    rounds; ``state.u`` mirrors worker 0's value.
    """
    if topo.kind not in ("ring", "full"):
        raise TopologyError(
            f"decentralized protocol requires a ring or full topology, got {topo.kind!r}"
        )
    if topo.K != hp.K:
        raise DimensionError(f"topology has {topo.K} workers, expected {hp.K}")
    _check_round_inputs(state, omega, samples, hp)
    K, d = hp.K, hp.d
    adjacency = topo.adjacency
    edge_count = sum(len(nbs) for nbs in adjacency)

    if state.u_locals is not None:
        u_prev = state.u_locals
    else:
        u_prev = [state.u] * K

    preds, losses, w_new = _weight_phase(
        state, samples, lambda k: u_prev[k], hp, pool
    )

    # weight/dual gather along every directed neighbour pair
    messages = edge_count
    payload = edge_count * 2 * d

    def local_u(k: int) -> np.ndarray:
        hood = topo.closed_neighborhood(k)
        return update_u(
            [w_new[j] for j in hood], [state.z[j] for j in hood], hp
        )

    u_candidates = _map_tasks(local_u, K, pool)
    messages += edge_count
    payload += edge_count * d

    if average_neighbor_u:
        u_final = [
            np.mean(np.stack([u_candidates[j] for j in topo.closed_neighborhood(k)]), axis=0)
            for k in range(K)
        ]
    else:
        u_final = u_candidates

    # The complete previous component matrix is known to every worker from
    # the flooding at the end of the previous round (all-zero at start-up).
    v_old = state.v_matrix()
    omega_inv = regularized_inverse(omega, hp.eps_inv)

    def vz(k: int):
        sl = WorkerSlice(state.w[k], state.v[k], state.z[k], k)
        v_next = update_v(sl, w_new[k], v_old, omega_inv, hp)
        z_next = update_z(sl, w_new[k], u_final[k], v_next, hp)
        return v_next, z_next

    vz_out = _map_tasks(vz, K, pool)
    v_new = [r[0] for r in vz_out]
    z_new = [r[1] for r in vz_out]

    if learn_relationships:
        hops = diameter(topo)
        known: list[set[int]] = [{k} for k in range(K)]
        for _ in range(hops):
            snapshot = [frozenset(s) for s in known]
            for k in range(K):
                for nb in adjacency[k]:
                    messages += 1
                    payload += len(snapshot[k]) * d
                    known[nb] |= snapshot[k]
        if any(len(s) != K for s in known):
            raise TopologyError(
                "flooding over the graph diameter failed to assemble all components"
            )
        omega_new = update_omega(np.column_stack(v_new), omega, hp.eps_tr)
    else:
        omega_new = omega

    labels = np.array([s.label for s in samples], dtype=np.int64)
    trace = RoundTrace(
        round_index=round_index,
        predictions=preds,
        labels=labels,
        losses=losses,
        messages_sent=messages,
        bytes_sent=payload * VECTOR_ENTRY_BYTES,
    )
    new_state = ModelState(
        w=w_new, v=v_new, z=z_new, u=u_final[0], u_locals=list(u_final)
    )
    return new_state, omega_new, trace
