"""Deterministic federated-learning simulator with robust server-side aggregation.

The package simulates communication rounds between a server and clients
holding private, possibly non-iid data shards. Alongside plain averaging
and sample-count weighting it implements inverse-distance weighting of
client models and inverse-training-accuracy weighting, plus their
multiplicative combinations, and ships scenario drivers for ablation,
participation-rate, data-doubling, and poisoned-client experiments.
"""

from .aggregation import (
    AggregationStrategy,
    ClientUpdate,
    CoefficientSet,
    aggregate,
    combine_weights,
    fedavg_weights,
    ida_weights,
    intrac_weights,
    mean_weights,
    strategy_weights,
)
from .data import Dataset, SyntheticSpec, generate_synthetic, load_csv, load_idx, split_train_test
from .metrics import RoundRecord, global_accuracy, local_accuracy_stats, write_history
from .models import Batch, ModelSpec, TrainConfig, evaluate, init_params, loss_and_grad, train_local
from .orchestrator import (
    AblationScenario,
    FederationConfig,
    FederationState,
    GridScenario,
    LowParticipationScenario,
    PoisonedScenario,
    SeverityDoublingScenario,
    run_federation,
    run_round,
    run_scenario,
)
from .params import ParamVector, average, l1_distance, weighted_sum
from .partition import FederatedSplit, PartitionSpec, double_client_samples, partition

__version__ = "0.1.0"

__all__ = [
    "AggregationStrategy",
    "ClientUpdate",
    "CoefficientSet",
    "aggregate",
    "combine_weights",
    "fedavg_weights",
    "ida_weights",
    "intrac_weights",
    "mean_weights",
    "strategy_weights",
    "Dataset",
    "SyntheticSpec",
    "generate_synthetic",
    "load_csv",
    "load_idx",
    "split_train_test",
    "RoundRecord",
    "global_accuracy",
    "local_accuracy_stats",
    "write_history",
    "Batch",
    "ModelSpec",
    "TrainConfig",
    "evaluate",
    "init_params",
    "loss_and_grad",
    "train_local",
    "AblationScenario",
    "FederationConfig",
    "FederationState",
    "GridScenario",
    "LowParticipationScenario",
    "PoisonedScenario",
    "SeverityDoublingScenario",
    "run_federation",
    "run_round",
    "run_scenario",
    "ParamVector",
    "average",
    "l1_distance",
    "weighted_sum",
    "FederatedSplit",
    "PartitionSpec",
    "double_client_samples",
    "partition",
]
