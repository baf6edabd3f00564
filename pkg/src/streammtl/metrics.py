"""Run metrics: mistake ledger, cumulative error, rounds-to-target, regret.

The ledger keeps raw per-round flags and incrementally maintained running
mistake counts side by side; the two must always agree, which the tests
check. Regret compares the learner's recorded online losses to the best
fixed per-task weights in hindsight, found by an approximate batch solver
whose settings are fixed and reported.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .errors import MetricError, OracleDivergenceError
from .datasets import TaskStream
from .protocol import RoundTrace

ORACLE_PASSES = 200
ORACLE_STEP0 = 1.0

ORACLE_SETTINGS = {
    "kind": "averaged_subgradient",
    "passes": ORACLE_PASSES,
    "step0": ORACLE_STEP0,
}


@dataclass
class MetricsLedger:
    """Fixed-capacity per-round record for a T-round, K-task run."""

    K: int
    T: int
    mistakes: np.ndarray = field(init=False)
    losses: np.ndarray = field(init=False)
    cum_mistakes: np.ndarray = field(init=False)
    ms_per_round: np.ndarray = field(init=False)
    messages: np.ndarray = field(init=False)
    wire_bytes: np.ndarray = field(init=False)
    recorded: int = field(default=0, init=False)
    rounds_to_target: int | None = field(default=None, init=False)

    def __post_init__(self) -> None:
        self.mistakes = np.zeros((self.T, self.K), dtype=bool)
        self.losses = np.zeros((self.T, self.K))
        self.cum_mistakes = np.zeros((self.T, self.K), dtype=np.int64)
        self.ms_per_round = np.zeros(self.T)
        self.messages = np.zeros(self.T, dtype=np.int64)
        self.wire_bytes = np.zeros(self.T, dtype=np.int64)

    def record(self, trace: RoundTrace, elapsed_seconds: float) -> None:
        """Append round ``recorded + 1``; traces must arrive in order."""
        t = self.recorded
        if t >= self.T:
            raise MetricError(f"ledger already holds all {self.T} rounds")
        flags = np.asarray(trace.mistakes, dtype=bool)
        self.mistakes[t] = flags
        self.losses[t] = trace.losses
        prev = self.cum_mistakes[t - 1] if t > 0 else 0
        self.cum_mistakes[t] = prev + flags
        self.ms_per_round[t] = elapsed_seconds * 1000.0
        self.messages[t] = trace.messages_sent
        self.wire_bytes[t] = trace.bytes_sent
        self.recorded += 1

    def per_task_error(self, t: int) -> np.ndarray:
        """Per-task mistake rates over rounds 1..t (t is 1-based)."""
        if not 1 <= t <= self.recorded:
            raise MetricError(
                f"round {t} not recorded (have 1..{self.recorded})"
            )
        return self.cum_mistakes[t - 1] / t


def cumulative_error(ledger: MetricsLedger, t: int) -> float:
    """Averaged cumulative error rate after round ``t``: the mean over tasks
    of mistakes-so-far divided by rounds-so-far."""
    if t < 1:
        raise MetricError(f"cumulative error undefined at round {t}")
    return float(np.mean(ledger.per_task_error(t)))


def final_average_error(ledger: MetricsLedger) -> float | None:
    if ledger.recorded == 0:
        return None
    return cumulative_error(ledger, ledger.recorded)


def rounds_to_target(ledger: MetricsLedger, target: float) -> int | None:
    """Smallest round at which average accuracy reaches ``target``, if any."""
    if not 0.0 < target < 1.0:
        raise MetricError(f"target accuracy must be in (0, 1), got {target}")
    if ledger.recorded == 0:
        return None
    rates = np.cumsum(ledger.mistakes[: ledger.recorded].sum(axis=1)) / (
        ledger.K * np.arange(1, ledger.recorded + 1)
    )
    hits = np.nonzero(1.0 - rates >= target)[0]
    return int(hits[0]) + 1 if hits.size else None


def best_fixed_loss(
    stream: TaskStream,
    horizon: int,
    passes: int = ORACLE_PASSES,
    step0: float = ORACLE_STEP0,
) -> float:
    """Total hinge loss of the approximate best fixed weights over the first
    ``horizon`` draws of a fresh replay of ``stream``."""
    stream.reset()
    feats = np.empty((horizon, stream.d))
    labels = np.empty(horizon)
    for t in range(horizon):
        s = stream.draw()
        feats[t] = s.features
        labels[t] = float(s.label)
    w_star = kernels.oracle_fit(feats, labels, passes, step0)
    loss = float(kernels.total_hinge(feats, labels, w_star))
    if not np.isfinite(loss):
        raise OracleDivergenceError(
            f"batch solver diverged on task {stream.task_index}"
        )
    return loss


def compute_regret(
    losses: np.ndarray,
    streams: Sequence[TaskStream],
    *,
    passes: int = ORACLE_PASSES,
    step0: float = ORACLE_STEP0,
) -> float:
    """Cumulative online loss minus the total loss of the best fixed
    per-task weights in hindsight.

    ``losses`` is the (T, K) matrix of recorded per-round losses; ``streams``
    are reset and replayed, so they must reproduce the exact feed the
    learner saw. One task is replayed at a time to bound memory.
    """
    horizon, K = losses.shape
    if len(streams) != K:
        raise MetricError(f"got {len(streams)} streams for {K} loss columns")
    online = float(losses.sum())
    hindsight = 0.0
    for stream in streams:
        hindsight += best_fixed_loss(stream, horizon, passes, step0)
    return online - hindsight
