"""Online multi-task learning with consensus ADMM over simulated topologies.

K binary classification tasks each receive one labelled instance per round.
Every task's linear classifier is the sum of a shared component and a
task-specific component; a trace-one PSD relationship matrix, refreshed
every round from the task components, couples the tasks. Rounds run either
through a central server or fully decentralized over ring/full worker
graphs, with identical mathematics and documented message accounting.
"""

from .baselines import DPSGDState, SingleTaskState, admm_single_round, dpsgd_round
from .datasets import (
    DatasetManifest,
    SyntheticConfig,
    TaskStream,
    generate_synthetic,
    load_csv,
    next_round,
    save_csv,
)
from .harness import ExperimentConfig, ExperimentResult, run_experiment, run_many
from .kernels import active_backend
from .metrics import (
    MetricsLedger,
    compute_regret,
    cumulative_error,
    rounds_to_target,
)
from .model import (
    Hyperparameters,
    ModelState,
    Sample,
    evaluate_lagrangian,
    evaluate_objective,
    hinge_loss,
    hinge_subgradient,
    initial_relationship,
    predict,
)
from .protocol import (
    RoundTrace,
    ServerBroadcast,
    WorkerReport,
    run_centralized_round,
    run_decentralized_round,
)
from .symmat import psd_sqrt, regularized_inverse
from .topology import Topology, diameter, make_topology, mixing_matrix
from .updates import (
    WorkerSlice,
    update_omega,
    update_u,
    update_v,
    update_w,
    update_z,
)

__version__ = "0.1.0"

__all__ = [
    "DPSGDState",
    "DatasetManifest",
    "ExperimentConfig",
    "ExperimentResult",
    "Hyperparameters",
    "MetricsLedger",
    "ModelState",
    "RoundTrace",
    "Sample",
    "ServerBroadcast",
    "SingleTaskState",
    "SyntheticConfig",
    "TaskStream",
    "Topology",
    "WorkerReport",
    "WorkerSlice",
    "active_backend",
    "admm_single_round",
    "compute_regret",
    "cumulative_error",
    "diameter",
    "dpsgd_round",
    "evaluate_lagrangian",
    "evaluate_objective",
    "generate_synthetic",
    "hinge_loss",
    "hinge_subgradient",
    "initial_relationship",
    "load_csv",
    "make_topology",
    "mixing_matrix",
    "next_round",
    "predict",
    "psd_sqrt",
    "regularized_inverse",
    "rounds_to_target",
    "run_centralized_round",
    "run_decentralized_round",
    "run_experiment",
    "run_many",
    "save_csv",
    "update_omega",
    "update_u",
    "update_v",
    "update_w",
    "update_z",
    "__version__",
]
