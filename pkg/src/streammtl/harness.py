"""Experiment orchestration: config parsing, the round loop, result files.

A run is a pure function of (config, seed): datasets, stream cycling and
every update are seeded deterministically, and timing can be switched off
(``record_timing: false``) when byte-identical result files matter more
than wall-clock columns.

Result files per run: ``rounds.csv`` (one row per round) and
``summary.json``. A seed list produces ``seed_<s>/`` subdirectories plus an
``aggregate.json`` with mean/stddev across seeds.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from . import baselines, kernels, metrics, protocol
from .datasets import (
    DatasetManifest,
    SyntheticConfig,
    TaskStream,
    generate_synthetic,
    load_csv,
    next_round,
    reseed_streams,
)
from .errors import ConfigError
from .model import Hyperparameters, ModelState, initial_relationship
from .topology import Topology, make_topology

ALGORITHMS = ("c-admm", "d-admm", "admm-single", "d-psgd")
CENTRALIZED_ALGORITHMS = ("c-admm", "admm-single")
ETA_SCHEDULES = ("horizon", "per_round")

HYPERPARAMETER_KEYS = (
    "rho",
    "eta",
    "lambda1",
    "lambda2",
    "lambda3",
    "lambda4",
    "eps_inv",
    "eps_tr",
    "eta_schedule",
)

SYNTHETIC_KEYS = ("K", "n_per_task", "rotation_step", "noise", "seed")
CSV_KEYS = ("path", "schema", "epoch_reshuffle")


@dataclass
class ExperimentConfig:
    algorithm: str
    dataset: dict
    rounds: int
    seed: int | list[int] = 0
    output_dir: str = "results"
    topology: str = ""
    hyperparameters: dict = field(default_factory=dict)
    relationship_learning: bool = True
    target_accuracy: float | None = None
    n_threads: int = 1
    record_timing: bool = True
    compute_regret: bool = True
    average_neighbor_u: bool = False
    dpsgd_step0: float = 0.1
    dpsgd_schedule: str = "inv_sqrt"

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        missing = {"algorithm", "dataset", "rounds"} - set(raw)
        if missing:
            raise ConfigError(f"missing config fields: {sorted(missing)}")
        cfg = cls(**raw)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path} is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{path} must contain a JSON object")
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        return asdict(self)

    def resolved_topology(self) -> str:
        if self.topology:
            return self.topology
        return "star" if self.algorithm in CENTRALIZED_ALGORITHMS else ""

    def validate(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(
                f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}"
            )
        topo = self.resolved_topology()
        if self.algorithm in CENTRALIZED_ALGORITHMS:
            if topo != "star":
                raise ConfigError(
                    f"{self.algorithm} runs on the star topology, got {topo!r}"
                )
        else:
            if topo not in ("ring", "full"):
                raise ConfigError(
                    f"{self.algorithm} requires topology 'ring' or 'full', got {topo!r}"
                )
        if not isinstance(self.rounds, int) or self.rounds < 0:
            raise ConfigError(f"rounds must be a non-negative integer, got {self.rounds}")
        if isinstance(self.seed, list):
            if not self.seed or not all(isinstance(s, int) for s in self.seed):
                raise ConfigError("seed list must be non-empty integers")
        elif not isinstance(self.seed, int):
            raise ConfigError(f"seed must be an integer or list, got {self.seed!r}")
        if self.target_accuracy is not None and not 0.0 < self.target_accuracy < 1.0:
            raise ConfigError(
                f"target_accuracy must be in (0, 1), got {self.target_accuracy}"
            )
        if self.n_threads < 1:
            raise ConfigError(f"n_threads must be at least 1, got {self.n_threads}")
        if self.dpsgd_schedule not in baselines.STEP_SCHEDULES:
            raise ConfigError(
                f"dpsgd_schedule must be one of {baselines.STEP_SCHEDULES}"
            )
        if self.dpsgd_step0 <= 0:
            raise ConfigError(f"dpsgd_step0 must be positive, got {self.dpsgd_step0}")
        unknown_hp = set(self.hyperparameters) - set(HYPERPARAMETER_KEYS)
        if unknown_hp:
            raise ConfigError(f"unknown hyperparameters: {sorted(unknown_hp)}")
        schedule = self.hyperparameters.get("eta_schedule", "horizon")
        if schedule not in ETA_SCHEDULES:
            raise ConfigError(
                f"eta_schedule must be one of {ETA_SCHEDULES}, got {schedule!r}"
            )
        if not isinstance(self.dataset, dict) or len(self.dataset) != 1:
            raise ConfigError(
                "dataset must be an object with exactly one of: 'synthetic', 'csv'"
            )
        kind = next(iter(self.dataset))
        if kind == "synthetic":
            unknown = set(self.dataset[kind]) - set(SYNTHETIC_KEYS)
            if unknown:
                raise ConfigError(f"unknown synthetic dataset fields: {sorted(unknown)}")
        elif kind == "csv":
            entry = self.dataset[kind]
            unknown = set(entry) - set(CSV_KEYS)
            if unknown:
                raise ConfigError(f"unknown csv dataset fields: {sorted(unknown)}")
            if "path" not in entry:
                raise ConfigError("csv dataset needs a 'path'")
        else:
            raise ConfigError(f"unknown dataset kind {kind!r}")


@dataclass
class ExperimentResult:
    seed: int
    out_dir: Path
    ledger: metrics.MetricsLedger
    summary: dict


def build_streams(
    cfg: ExperimentConfig, seed: int
) -> tuple[list[TaskStream], DatasetManifest]:
    """Construct the task streams for one run; cycling reshuffle order is
    always derived from the experiment seed."""
    kind = next(iter(cfg.dataset))
    if kind == "synthetic":
        params = dict(cfg.dataset["synthetic"])
        params.setdefault("K", 5)
        params.setdefault("seed", seed)
        streams, manifest = generate_synthetic(SyntheticConfig(**params))
    else:
        params = dict(cfg.dataset["csv"])
        streams, manifest = load_csv(
            params["path"],
            params.get("schema", "task_column"),
            epoch_reshuffle=params.get("epoch_reshuffle", True),
        )
    reseed_streams(streams, seed)
    return streams, manifest


def build_hyperparameters(cfg: ExperimentConfig, K: int, d: int) -> Hyperparameters:
    params = {k: v for k, v in cfg.hyperparameters.items() if k != "eta_schedule"}
    hp = Hyperparameters(K=K, d=d, T=cfg.rounds, **params)
    if not cfg.relationship_learning:
        hp = replace(hp, lambda4=0.0)
    return hp


def _eta_at(hp: Hyperparameters, schedule: str, t: int) -> Hyperparameters:
    if schedule == "per_round":
        return replace(hp, eta=math.sqrt(t))
    return hp


def run_experiment(cfg: ExperimentConfig, *, seed: int | None = None) -> ExperimentResult:
    """Run one seed of the configured experiment and write its result files."""
    cfg.validate()
    if seed is None:
        if isinstance(cfg.seed, list):
            raise ConfigError("config has a seed list; use run_many")
        seed = cfg.seed

    streams, manifest = build_streams(cfg, seed)
    K, d, T = manifest.K, manifest.d, cfg.rounds
    hp = build_hyperparameters(cfg, K, d)
    eta_schedule = cfg.hyperparameters.get("eta_schedule", "horizon")
    topo_kind = cfg.resolved_topology()
    topo: Topology | None = (
        make_topology(topo_kind, K) if topo_kind in ("ring", "full") else None
    )

    ledger = metrics.MetricsLedger(K=K, T=T)
    pool = ThreadPoolExecutor(max_workers=cfg.n_threads) if cfg.n_threads > 1 else None

    state = ModelState.zeros(K, d)
    omega = initial_relationship(K)
    single_states = [baselines.SingleTaskState.zeros(d) for _ in range(K)]
    dpsgd_state = (
        baselines.DPSGDState.zeros(topo, d, cfg.dpsgd_step0, cfg.dpsgd_schedule)
        if cfg.algorithm == "d-psgd"
        else None
    )

    try:
        for t in range(1, T + 1):
            samples = next_round(streams)
            hp_t = _eta_at(hp, eta_schedule, t)
            start = time.perf_counter()
            if cfg.algorithm == "c-admm":
                state, omega, trace = protocol.run_centralized_round(
                    state,
                    omega,
                    samples,
                    hp_t,
                    round_index=t,
                    learn_relationships=cfg.relationship_learning,
                    pool=pool,
                )
            elif cfg.algorithm == "d-admm":
                state, omega, trace = protocol.run_decentralized_round(
                    state,
                    omega,
                    samples,
                    topo,
                    hp_t,
                    round_index=t,
                    learn_relationships=cfg.relationship_learning,
                    average_neighbor_u=cfg.average_neighbor_u,
                    pool=pool,
                )
            elif cfg.algorithm == "admm-single":
                single_states, trace = baselines.run_single_tasks_round(
                    single_states, samples, hp_t, round_index=t, pool=pool
                )
            else:
                dpsgd_state, trace = baselines.run_dpsgd_round(
                    dpsgd_state, samples, topo, t, pool=pool
                )
            elapsed = time.perf_counter() - start
            ledger.record(trace, elapsed if cfg.record_timing else 0.0)
    finally:
        if pool is not None:
            pool.shutdown()

    if cfg.target_accuracy is not None and T > 0:
        ledger.rounds_to_target = metrics.rounds_to_target(ledger, cfg.target_accuracy)

    regret = None
    if cfg.compute_regret and T > 0:
        replay_streams, _ = build_streams(cfg, seed)
        regret = metrics.compute_regret(ledger.losses[:T], replay_streams)

    summary = _build_summary(cfg, seed, manifest, ledger, regret)
    out_dir = Path(cfg.output_dir)
    if isinstance(cfg.seed, list):
        out_dir = out_dir / f"seed_{seed}"
    _write_result_files(out_dir, ledger, summary)
    return ExperimentResult(seed=seed, out_dir=out_dir, ledger=ledger, summary=summary)


def run_many(cfg: ExperimentConfig) -> tuple[list[ExperimentResult], dict]:
    """Run every seed in the config (a single int counts as one), then write
    and return the cross-seed aggregate."""
    cfg.validate()
    seeds = cfg.seed if isinstance(cfg.seed, list) else [cfg.seed]
    results = [run_experiment(cfg, seed=s) for s in seeds]
    aggregate = _aggregate(cfg, results)
    if isinstance(cfg.seed, list):
        out = Path(cfg.output_dir) / "aggregate.json"
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", encoding="utf-8") as fh:
            json.dump(aggregate, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return results, aggregate


def _mean_std(values: list[float]) -> dict:
    arr = np.array(values, dtype=float)
    return {
        "mean": float(arr.mean()),
        "std": float(arr.std()),
        "values": [float(v) for v in values],
    }


def _aggregate(cfg: ExperimentConfig, results: list[ExperimentResult]) -> dict:
    agg: dict[str, Any] = {
        "config": cfg.to_dict(),
        "seeds": [r.seed for r in results],
    }
    finals = [r.summary["final_avg_err"] for r in results]
    if all(v is not None for v in finals):
        agg["final_avg_err"] = _mean_std(finals)
    regrets = [r.summary["regret"] for r in results]
    if all(v is not None for v in regrets):
        agg["regret"] = _mean_std(regrets)
    reached = [
        r.summary["rounds_to_target"]
        for r in results
        if r.summary["rounds_to_target"] is not None
    ]
    agg["rounds_to_target"] = {
        "reached": len(reached),
        "of": len(results),
        **({"mean": float(np.mean(reached))} if reached else {}),
    }
    return agg


def _build_summary(
    cfg: ExperimentConfig,
    seed: int,
    manifest: DatasetManifest,
    ledger: metrics.MetricsLedger,
    regret: float | None,
) -> dict:
    echo = cfg.to_dict()
    echo["seed"] = seed
    echo["topology"] = cfg.resolved_topology()
    return {
        "config": echo,
        "backend": kernels.active_backend(),
        "dataset": manifest.to_dict(),
        "rounds": ledger.recorded,
        "final_avg_err": metrics.final_average_error(ledger),
        "target_accuracy": cfg.target_accuracy,
        "rounds_to_target": ledger.rounds_to_target,
        "regret": regret,
        "oracle": metrics.ORACLE_SETTINGS if regret is not None else None,
        "total_messages": int(ledger.messages[: ledger.recorded].sum()),
        "total_bytes": int(ledger.wire_bytes[: ledger.recorded].sum()),
        "wall_clock_total": float(ledger.ms_per_round[: ledger.recorded].sum()) / 1000.0,
        "mean_ms_per_round": (
            float(ledger.ms_per_round[: ledger.recorded].mean())
            if ledger.recorded
            else None
        ),
    }


def _write_result_files(out_dir: Path, ledger: metrics.MetricsLedger, summary: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "rounds.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["round"]
            + [f"task_{k}_err" for k in range(ledger.K)]
            + ["avg_err", "ms_per_round", "messages", "bytes"]
        )
        for t in range(1, ledger.recorded + 1):
            per_task = ledger.per_task_error(t)
            writer.writerow(
                [str(t)]
                + [repr(float(e)) for e in per_task]
                + [
                    repr(float(per_task.mean())),
                    repr(float(ledger.ms_per_round[t - 1])),
                    str(int(ledger.messages[t - 1])),
                    str(int(ledger.wire_bytes[t - 1])),
                ]
            )
    with open(out_dir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


REPORT_COLUMNS = (
    "run",
    "algorithm",
    "topology",
    "relationship_learning",
    "rounds",
    "final_avg_err",
    "rounds_to_target",
    "regret",
    "mean_ms_per_round",
    "total_messages",
)


def consolidate_report(results_dir: str | Path, out_path: str | Path | None = None):
    """Collect every ``summary.json`` under ``results_dir`` into one table.

    Returns (rows, table text); also writes ``report.csv`` (or ``out_path``).
    """
    results_dir = Path(results_dir)
    rows = []
    for summary_path in sorted(results_dir.rglob("summary.json")):
        with open(summary_path, encoding="utf-8") as fh:
            summary = json.load(fh)
        cfg = summary.get("config", {})
        rows.append(
            {
                "run": str(summary_path.parent.relative_to(results_dir)),
                "algorithm": cfg.get("algorithm"),
                "topology": cfg.get("topology"),
                "relationship_learning": cfg.get("relationship_learning"),
                "rounds": summary.get("rounds"),
                "final_avg_err": summary.get("final_avg_err"),
                "rounds_to_target": summary.get("rounds_to_target"),
                "regret": summary.get("regret"),
                "mean_ms_per_round": summary.get("mean_ms_per_round"),
                "total_messages": summary.get("total_messages"),
            }
        )
    out = Path(out_path) if out_path else results_dir / "report.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    return rows, _format_table(rows)


def _format_table(rows: list[dict]) -> str:
    def fmt(value: Any) -> str:
        if value is None:
            return "-"
        if isinstance(value, float):
            return f"{value:.4f}"
        return str(value)

    table = [[fmt(r[c]) for c in REPORT_COLUMNS] for r in rows]
    widths = [
        max(len(c), *(len(row[i]) for row in table)) if table else len(c)
        for i, c in enumerate(REPORT_COLUMNS)
    ]
    lines = ["  ".join(c.ljust(w) for c, w in zip(REPORT_COLUMNS, widths))]
    for row in table:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)))
    return "\n".join(lines)
