"""Round metrics: pooled global accuracy, per-client local accuracies, CSV history.

The headline number is the accuracy of the global model on the union of
every client's test shard (sample-weighted pooling). Local accuracy is
the same model scored on each client's own test shard, reported as an
unweighted mean with population standard deviation across clients.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .aggregation import CoefficientSet
from .models import ModelSpec, evaluate
from .params import ParamVector
from .partition import FederatedSplit

__all__ = [
    "RoundRecord",
    "global_accuracy",
    "local_accuracy_stats",
    "write_history",
    "write_sidecar",
    "read_history",
    "CSV_HEADER",
]

CSV_HEADER = [
    "round",
    "participants",
    "strategy",
    "global_acc",
    "local_acc_mean",
    "local_acc_std",
    "min_alpha",
    "max_alpha",
    "wall_ms",
]


@dataclass(frozen=True)
class RoundRecord:
    """One row of federation history; accuracies are NaN on rounds the
    evaluation stride skipped."""

    round: int
    participants: list[int]
    coefficients: CoefficientSet
    strategy: str
    global_accuracy: float
    local_accuracies: dict[int, float]
    local_mean: float
    local_std: float
    wall_ms: int


def global_accuracy(spec: ModelSpec, params: ParamVector, split: FederatedSplit) -> float:
    """Accuracy on the pooled union of all clients' test shards."""
    feats = [s.test.features for s in split.shards if len(s.test)]
    labels = [s.test.labels for s in split.shards if len(s.test)]
    if not feats:
        raise ValueError("union of client test shards is empty")
    pooled = _Pooled(np.concatenate(feats), np.concatenate(labels))
    return evaluate(spec, params, pooled)


@dataclass(frozen=True)
class _Pooled:
    features: np.ndarray
    labels: np.ndarray


def local_accuracy_stats(
    spec: ModelSpec, params: ParamVector, split: FederatedSplit
) -> tuple[dict[int, float], float, float]:
    """Per-client test accuracy of one model, with mean and population std."""
    per_client: dict[int, float] = {}
    for shard in split.shards:
        if len(shard.test) == 0:
            raise ValueError(f"client {shard.client_id} has an empty test shard")
        per_client[shard.client_id] = evaluate(spec, params, shard.test)
    values = np.fromiter(per_client.values(), dtype=np.float64)
    return per_client, float(values.mean()), float(values.std())


def write_history(history: list[RoundRecord], path) -> None:
    """Write one CSV row per round; floats carry six decimals."""
    try:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(CSV_HEADER)
            for rec in history:
                writer.writerow(
                    [
                        rec.round,
                        ";".join(str(c) for c in rec.participants),
                        rec.strategy,
                        f"{rec.global_accuracy:.6f}",
                        f"{rec.local_mean:.6f}",
                        f"{rec.local_std:.6f}",
                        f"{rec.coefficients.min():.6f}",
                        f"{rec.coefficients.max():.6f}",
                        rec.wall_ms,
                    ]
                )
    except OSError as exc:
        raise OSError(f"cannot write history to {path}: {exc}") from exc


def write_sidecar(history: list[RoundRecord], path) -> None:
    """JSON sidecar with the full per-client accuracy maps and coefficient sets."""
    rows = []
    for rec in history:
        rows.append(
            {
                "round": rec.round,
                "participants": rec.participants,
                "strategy": rec.strategy,
                "global_accuracy": _json_float(rec.global_accuracy),
                "local_mean": _json_float(rec.local_mean),
                "local_std": _json_float(rec.local_std),
                "local_accuracies": {str(c): _json_float(a) for c, a in sorted(rec.local_accuracies.items())},
                "coefficients": {str(c): rec.coefficients[c] for c in rec.coefficients.client_ids()},
                "wall_ms": rec.wall_ms,
            }
        )
    try:
        with open(path, "w") as f:
            json.dump(rows, f, indent=2)
            f.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write sidecar to {path}: {exc}") from exc


def _json_float(x: float) -> float | None:
    return None if math.isnan(x) else x


def read_history(path) -> list[dict]:
    """Parse a history CSV back into per-round dicts (numbers as floats/ints)."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        rows = []
        for row in reader:
            rows.append(
                {
                    "round": int(row[0]),
                    "participants": [int(c) for c in row[1].split(";") if c],
                    "strategy": row[2],
                    "global_acc": float(row[3]),
                    "local_acc_mean": float(row[4]),
                    "local_acc_std": float(row[5]),
                    "min_alpha": float(row[6]),
                    "max_alpha": float(row[7]),
                    "wall_ms": int(row[8]),
                }
            )
    return rows
