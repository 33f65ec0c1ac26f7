"""Server-side weighting schemes and the round aggregation step.

Five strategies are supported, selected by name:

* ``mean``        — every client contributes equally.
* ``fedavg``      — clients weighted by their training-set size.
* ``ida``         — clients weighted by the inverse L1 distance of their
                    parameters to the participants' average parameters,
                    stabilized by a small epsilon.
* ``ida+fedavg``  — elementwise product of ida and fedavg weights.
* ``ida+intrac``  — ida combined with inverse-training-accuracy weights,
                    which dampen overfitted clients and boost
                    under-trained ones (accuracy floored at chance 1/K).

Every scheme returns a convex weight set (nonnegative, summing to 1), so
the aggregated model always lies in the coordinatewise hull of the
participants' models.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .params import ParamVector, average, l1_distance, weighted_sum

__all__ = [
    "STRATEGY_NAMES",
    "AggregationStrategy",
    "ClientUpdate",
    "CoefficientSet",
    "mean_weights",
    "fedavg_weights",
    "ida_weights",
    "intrac_weights",
    "combine_weights",
    "strategy_weights",
    "aggregate",
]

STRATEGY_NAMES = ("mean", "fedavg", "ida", "ida+fedavg", "ida+intrac")

DEFAULT_EPSILON = 1e-8

COEFF_SUM_TOL = 1e-9


@dataclass(frozen=True)
class ClientUpdate:
    """One client's contribution to a round: parameters plus metadata."""

    client_id: int
    params: ParamVector
    n_samples: int
    train_accuracy: float

    def __post_init__(self) -> None:
        if self.n_samples < 1:
            raise ValueError(f"client {self.client_id}: n_samples must be >= 1, got {self.n_samples}")
        if not 0.0 <= self.train_accuracy <= 1.0:
            raise ValueError(
                f"client {self.client_id}: train_accuracy must be in [0, 1], got {self.train_accuracy}"
            )


@dataclass(frozen=True)
class AggregationStrategy:
    """A weighting scheme name plus the epsilon stabilizer for distance weights."""

    kind: str
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self) -> None:
        if self.kind not in STRATEGY_NAMES:
            raise ValueError(f"unknown strategy {self.kind!r}; expected one of {STRATEGY_NAMES}")
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")


@dataclass(frozen=True)
class CoefficientSet:
    """Convex aggregation weights keyed by client id."""

    alphas: dict[int, float] = field(repr=True)

    def __post_init__(self) -> None:
        if not self.alphas:
            raise ValueError("empty coefficient set")
        total = float(np.sum(np.fromiter(self.alphas.values(), dtype=np.float64)))
        if abs(total - 1.0) > COEFF_SUM_TOL:
            raise ValueError(f"coefficients must sum to 1 within {COEFF_SUM_TOL:g}, got sum {total!r}")
        for cid, a in self.alphas.items():
            if a < 0.0 or a > 1.0 + COEFF_SUM_TOL:
                raise ValueError(f"coefficient for client {cid} out of range: {a!r}")

    def __getitem__(self, client_id: int) -> float:
        return self.alphas[client_id]

    def client_ids(self) -> list[int]:
        return sorted(self.alphas)

    def min(self) -> float:
        return min(self.alphas.values())

    def max(self) -> float:
        return max(self.alphas.values())


def _normalized(updates: list[ClientUpdate], raw: np.ndarray) -> CoefficientSet:
    """Divide raw nonnegative weights by their sum.

    Exact ties short-circuit to exactly 1/K each, so fully symmetric
    inputs yield bit-identical coefficients under every scheme.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if np.all(raw == raw[0]):
        if raw[0] == 0.0:
            raise ValueError("all combined coefficients are zero; cannot normalize")
        alphas = np.full(len(raw), 1.0 / len(raw))
    else:
        alphas = raw / raw.sum()
    return CoefficientSet({u.client_id: float(a) for u, a in zip(updates, alphas)})


def _require_updates(updates: list[ClientUpdate]) -> None:
    if not updates:
        raise ValueError("cannot compute weights for an empty update set")
    ids = [u.client_id for u in updates]
    if len(set(ids)) != len(ids):
        raise ValueError(f"duplicate client ids in update set: {sorted(ids)}")


def mean_weights(updates: list[ClientUpdate]) -> CoefficientSet:
    """Uniform weights 1/K (the equal-vote baseline in normalized form)."""
    _require_updates(updates)
    return _normalized(updates, np.ones(len(updates)))


def fedavg_weights(updates: list[ClientUpdate]) -> CoefficientSet:
    """Weights proportional to each client's training-set size."""
    _require_updates(updates)
    return _normalized(updates, np.array([float(u.n_samples) for u in updates]))


def ida_weights(updates: list[ClientUpdate], epsilon: float = DEFAULT_EPSILON) -> CoefficientSet:
    """Weights proportional to 1 / (L1 distance to the participant average + epsilon).

    A client sitting exactly at the average gets the largest (finite)
    weight; far-away outliers are driven toward zero.
    """
    _require_updates(updates)
    if not epsilon > 0.0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    center = average([u.params for u in updates])
    dists = np.array([l1_distance(center, u.params) for u in updates])
    return _normalized(updates, 1.0 / (dists + epsilon))


def intrac_weights(updates: list[ClientUpdate]) -> CoefficientSet:
    """Weights inverse to training accuracy, floored at chance level 1/K.

    raw_k = Z' / max(1/K, acc_k) with Z' the sum of floored accuracies;
    the final division by sum(raw) maps the result into (0, 1] summing
    to 1 (Z' itself cancels there, which the scale-invariance tests pin).
    """
    _require_updates(updates)
    k = len(updates)
    floor = 1.0 / k
    accs = np.array([u.train_accuracy for u in updates])
    if np.any(accs < 0.0) or np.any(accs > 1.0):
        raise ValueError("train accuracies must lie in [0, 1]")
    floored = np.maximum(floor, accs)
    z_prime = floored.sum()
    return _normalized(updates, z_prime / floored)


def combine_weights(sets: list[CoefficientSet]) -> CoefficientSet:
    """Multiply coefficient sets over the same clients, then renormalize."""
    if not sets:
        raise ValueError("cannot combine an empty list of coefficient sets")
    ids = sets[0].client_ids()
    for s in sets[1:]:
        if s.client_ids() != ids:
            diff = set(s.client_ids()) ^ set(ids)
            raise ValueError(f"coefficient sets cover different clients; mismatch: {sorted(diff)}")
    raw = np.ones(len(ids))
    for s in sets:
        raw *= np.array([s[cid] for cid in ids])
    if np.all(raw == 0.0):
        raise ValueError("all combined coefficients are zero; cannot normalize")
    if np.all(raw == raw[0]):
        alphas = np.full(len(ids), 1.0 / len(ids))
    else:
        alphas = raw / raw.sum()
    return CoefficientSet({cid: float(a) for cid, a in zip(ids, alphas)})


def strategy_weights(updates: list[ClientUpdate], strategy: AggregationStrategy) -> CoefficientSet:
    """Dispatch to the scheme named by the strategy."""
    _require_updates(updates)
    if strategy.kind == "mean":
        return mean_weights(updates)
    if strategy.kind == "fedavg":
        return fedavg_weights(updates)
    if strategy.kind == "ida":
        return ida_weights(updates, strategy.epsilon)
    if strategy.kind == "ida+fedavg":
        return combine_weights([ida_weights(updates, strategy.epsilon), fedavg_weights(updates)])
    if strategy.kind == "ida+intrac":
        return combine_weights([ida_weights(updates, strategy.epsilon), intrac_weights(updates)])
    raise ValueError(f"unknown strategy {strategy.kind!r}")  # unreachable; guarded in strategy


def aggregate(updates: list[ClientUpdate], strategy: AggregationStrategy) -> ParamVector:
    """Produce the new global parameters from one round's updates.

    Updates are ordered by client id before the reduction so the result
    does not depend on arrival order.
    """
    _require_updates(updates)
    ordered = sorted(updates, key=lambda u: u.client_id)
    coeffs = strategy_weights(ordered, strategy)
    return weighted_sum([u.params for u in ordered], [coeffs[u.client_id] for u in ordered])
