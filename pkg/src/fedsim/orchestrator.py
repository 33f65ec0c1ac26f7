"""The federated training loop and the experiment scenario drivers.

Each communication round samples a subset of clients, trains them locally
from the broadcast global model, and aggregates the returned parameters
with the configured weighting strategy. Everything is seeded: participant
sampling from (seed, round), each client's local shuffling from
(train seed, round, client id), so runs are exactly reproducible and
independent of client execution order.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .aggregation import AggregationStrategy, ClientUpdate, strategy_weights
from .data import Dataset
from .metrics import RoundRecord, global_accuracy, local_accuracy_stats
from .models import ModelSpec, TrainConfig, evaluate, init_params, random_params, train_local
from .params import ParamVector, weighted_sum
from .partition import FederatedSplit, PartitionSpec, double_client_samples, partition

__all__ = [
    "FederationConfig",
    "ClientState",
    "FederationState",
    "PoisonBehavior",
    "GridScenario",
    "AblationScenario",
    "LowParticipationScenario",
    "SeverityDoublingScenario",
    "PoisonedScenario",
    "Scenario",
    "participant_count",
    "run_round",
    "run_federation",
    "run_scenario",
]

# Role tags keep the seeded sub-streams of one federation disjoint.
_ROLE_SAMPLING = 1
_ROLE_TRAIN = 2
_ROLE_POISON = 3
_ROLE_NOISE = 4
_ROLE_DOUBLE = 5

# Slack for the coordinatewise convex-hull check on aggregated parameters.
_HULL_TOL = 1e-9


def _child_seed(seed: int, *keys: int) -> int:
    return int(np.random.SeedSequence([int(seed), *keys]).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class FederationConfig:
    """Full description of one federated run."""

    rounds: int
    participation_rate: float
    strategy: AggregationStrategy
    train: TrainConfig
    model: ModelSpec
    seed: int = 0
    eval_stride: int = 1

    def __post_init__(self) -> None:
        if self.rounds < 1:
            raise ValueError(f"rounds must be >= 1, got {self.rounds}")
        if not 0.0 < self.participation_rate <= 1.0:
            raise ValueError(f"participation_rate must lie in (0, 1], got {self.participation_rate}")
        if self.eval_stride < 1:
            raise ValueError(f"eval_stride must be >= 1, got {self.eval_stride}")


@dataclass(frozen=True)
class ClientState:
    client_id: int
    train: Dataset
    test: Dataset
    params: ParamVector
    train_accuracy: float = 0.0

    @property
    def n_samples(self) -> int:
        return len(self.train)


@dataclass(frozen=True)
class FederationState:
    global_params: ParamVector
    round: int
    clients: list[ClientState]
    history: list[RoundRecord] = field(default_factory=list)
    hull_violations: int = 0

    def final_record(self) -> RoundRecord:
        if not self.history:
            raise ValueError("federation has no history yet")
        return self.history[-1]


@dataclass(frozen=True)
class PoisonBehavior:
    """What a misbehaving client submits instead of an honest update.

    kind "random_params": ignore training and upload parameters drawn
    from the init distribution rescaled by `scale`, reporting
    n_samples inflated by `sample_factor`.
    kind "additive_noise": train honestly, then add Gaussian noise with
    standard deviation `scale` times the RMS of the trained parameters.
    """

    kind: str
    scale: float = 10.0
    sample_factor: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("random_params", "additive_noise"):
            raise ValueError(f"unknown behavior kind {self.kind!r}")
        if self.scale < 0 or self.sample_factor <= 0:
            raise ValueError("scale must be >= 0 and sample_factor > 0")


def participant_count(pr: float, n_clients: int) -> int:
    """ceil(pr * K), computed so float representation noise cannot change the count."""
    return max(1, min(n_clients, math.ceil(pr * n_clients - 1e-9)))


def _client_submission(
    state: FederationState,
    cfg: FederationConfig,
    client: ClientState,
    behavior: PoisonBehavior | None,
) -> tuple[ParamVector, float, int]:
    t = state.round
    cid = client.client_id
    if behavior is not None and behavior.kind == "random_params":
        params = random_params(
            cfg.model, [cfg.seed, _ROLE_POISON, t, cid], scale=behavior.scale
        )
        acc = evaluate(cfg.model, params, client.train)
        n = max(1, int(round(client.n_samples * behavior.sample_factor)))
        return params, acc, n

    train_cfg = replace(cfg.train, seed=_child_seed(cfg.train.seed, _ROLE_TRAIN, t, cid))
    params, acc = train_local(cfg.model, state.global_params, client.train, train_cfg)
    if behavior is not None and behavior.kind == "additive_noise":
        rng = np.random.default_rng([cfg.seed, _ROLE_NOISE, t, cid])
        rms = float(np.sqrt(np.mean(params.values**2)))
        params = ParamVector(params.values + rng.normal(0.0, behavior.scale * rms, params.dim))
        acc = evaluate(cfg.model, params, client.train)
    return params, acc, client.n_samples


def run_round(
    state: FederationState,
    cfg: FederationConfig,
    behaviors: dict[int, PoisonBehavior] | None = None,
    split: FederatedSplit | None = None,
) -> FederationState:
    """Advance the federation by one communication round.

    Samples ceil(pr*K) clients without replacement, trains them from the
    current global model, aggregates their submissions, and appends a
    RoundRecord. `split` is only needed for the accuracy evaluations; the
    round itself runs entirely off the client states.
    """
    if state.round >= cfg.rounds:
        raise ValueError(f"round {state.round} is past the configured {cfg.rounds} rounds")
    behaviors = behaviors or {}
    t = state.round
    k = len(state.clients)
    m = participant_count(cfg.participation_rate, k)
    if m < 1:
        raise ValueError("round would have zero participants")

    t0 = time.perf_counter()
    rng = np.random.default_rng([cfg.seed, _ROLE_SAMPLING, t])
    ids = sorted(int(i) for i in rng.choice(k, size=m, replace=False))

    by_id = {c.client_id: c for c in state.clients}
    updates = []
    for cid in ids:
        params, acc, n = _client_submission(state, cfg, by_id[cid], behaviors.get(cid))
        updates.append(ClientUpdate(cid, params, n, acc))

    coeffs = strategy_weights(updates, cfg.strategy)
    new_global = weighted_sum([u.params for u in updates], [coeffs[u.client_id] for u in updates])

    stacked = np.stack([u.params.values for u in updates])
    lo, hi = stacked.min(axis=0), stacked.max(axis=0)
    slack = _HULL_TOL * np.maximum(1.0, np.maximum(np.abs(lo), np.abs(hi)))
    violated = bool(np.any(new_global.values < lo - slack) or np.any(new_global.values > hi + slack))

    new_clients = _updated_clients(state.clients, updates)

    evaluate_now = (t + 1) % cfg.eval_stride == 0 or t == cfg.rounds - 1
    if evaluate_now and split is not None:
        g_acc = global_accuracy(cfg.model, new_global, split)
        locals_map, l_mean, l_std = local_accuracy_stats(cfg.model, new_global, split)
    else:
        g_acc, locals_map, l_mean, l_std = float("nan"), {}, float("nan"), float("nan")

    wall_ms = int((time.perf_counter() - t0) * 1000)
    record = RoundRecord(
        round=t,
        participants=ids,
        coefficients=coeffs,
        strategy=cfg.strategy.kind,
        global_accuracy=g_acc,
        local_accuracies=locals_map,
        local_mean=l_mean,
        local_std=l_std,
        wall_ms=wall_ms,
    )
    return FederationState(
        global_params=new_global,
        round=t + 1,
        clients=new_clients,
        history=[*state.history, record],
        hull_violations=state.hull_violations + (1 if violated else 0),
    )


def _updated_clients(clients: list[ClientState], updates: list[ClientUpdate]) -> list[ClientState]:
    by_id = {u.client_id: u for u in updates}
    out = []
    for c in clients:
        u = by_id.get(c.client_id)
        if u is None:
            out.append(c)
        else:
            out.append(replace(c, params=u.params, train_accuracy=u.train_accuracy))
    return out


def run_federation(
    cfg: FederationConfig,
    split: FederatedSplit,
    behaviors: dict[int, PoisonBehavior] | None = None,
) -> FederationState:
    """Run the configured number of rounds from freshly initialized parameters."""
    if not split.shards:
        raise ValueError("federated split has no clients")
    dim = split.shards[0].train.input_dim
    if dim != cfg.model.input_dim:
        raise ValueError(f"model expects input_dim {cfg.model.input_dim}, data provides {dim}")

    global_params = init_params(cfg.model)
    clients = [
        ClientState(s.client_id, s.train, s.test, global_params) for s in split.shards
    ]
    state = FederationState(global_params=global_params, round=0, clients=clients)
    for _ in range(cfg.rounds):
        state = run_round(state, cfg, behaviors=behaviors, split=split)
    return state


@dataclass(frozen=True)
class GridScenario:
    """Cross-product sweep over label-skew severity and participation rate."""

    partition: PartitionSpec
    n_cc_values: list[int]
    pr_values: list[float]


@dataclass(frozen=True)
class AblationScenario:
    """One run per strategy on a single shared split."""

    partition: PartitionSpec
    strategies: list[str]


@dataclass(frozen=True)
class LowParticipationScenario:
    """Runs at several participation rates on one many-client split."""

    partition: PartitionSpec
    pr_values: list[float]


@dataclass(frozen=True)
class SeverityDoublingScenario:
    """Two-phase protocol: train, double the weakest clients' samples, retrain.

    The n_lowest clients with the worst final local accuracy in the first
    strategy's phase-1 run get their train shards doubled; when
    noise_scale > 0 those same clients also submit noise-corrupted
    parameters throughout phase 2.
    """

    partition: PartitionSpec
    n_lowest: int = 3
    strategies: list[str] | None = None
    noise_scale: float = 0.0

    def __post_init__(self) -> None:
        if self.n_lowest < 1:
            raise ValueError(f"n_lowest must be >= 1, got {self.n_lowest}")


@dataclass(frozen=True)
class PoisonedScenario:
    """Designated clients submit random parameters instead of trained ones."""

    partition: PartitionSpec
    adversaries: list[int]
    param_scale: float = 10.0
    sample_factor: float = 1.0
    strategies: list[str] | None = None


Scenario = (
    GridScenario
    | AblationScenario
    | LowParticipationScenario
    | SeverityDoublingScenario
    | PoisonedScenario
)


def _with_strategy(base: FederationConfig, kind: str) -> FederationConfig:
    return replace(base, strategy=AggregationStrategy(kind, base.strategy.epsilon))


def run_scenario(
    scenario: Scenario, base: FederationConfig, data: Dataset
) -> list[tuple[str, FederationState]]:
    """Execute a scenario and return its labeled final states (history included)."""
    if isinstance(scenario, GridScenario):
        results = []
        for n_cc in scenario.n_cc_values:
            split = partition(data, replace(scenario.partition, classes_per_client=n_cc))
            for pr in scenario.pr_values:
                cfg = replace(base, participation_rate=pr)
                results.append((f"ncc{n_cc}_pr{pr:g}", run_federation(cfg, split)))
        return results

    if isinstance(scenario, AblationScenario):
        split = partition(data, scenario.partition)
        return [
            (kind, run_federation(_with_strategy(base, kind), split))
            for kind in scenario.strategies
        ]

    if isinstance(scenario, LowParticipationScenario):
        split = partition(data, scenario.partition)
        return [
            (f"pr{pr:g}", run_federation(replace(base, participation_rate=pr), split))
            for pr in scenario.pr_values
        ]

    if isinstance(scenario, SeverityDoublingScenario):
        strategies = scenario.strategies or [base.strategy.kind]
        split = partition(data, scenario.partition)
        results = []
        for kind in strategies:
            results.append((f"{kind}_phase1", run_federation(_with_strategy(base, kind), split)))

        # Weakest clients by final local accuracy of the first phase-1 run;
        # all strategies then face the identical modified distribution.
        reference = results[0][1].final_record().local_accuracies
        weakest = sorted(reference, key=lambda cid: (reference[cid], cid))[: scenario.n_lowest]
        doubled = double_client_samples(
            split, data, weakest, _child_seed(scenario.partition.seed, _ROLE_DOUBLE)
        )
        behaviors = (
            {cid: PoisonBehavior("additive_noise", scale=scenario.noise_scale) for cid in weakest}
            if scenario.noise_scale > 0
            else None
        )
        for kind in strategies:
            state = run_federation(_with_strategy(base, kind), doubled, behaviors=behaviors)
            results.append((f"{kind}_phase2", state))
        return results

    if isinstance(scenario, PoisonedScenario):
        split = partition(data, scenario.partition)
        behaviors = {
            cid: PoisonBehavior(
                "random_params", scale=scenario.param_scale, sample_factor=scenario.sample_factor
            )
            for cid in scenario.adversaries
        }
        strategies = scenario.strategies or [base.strategy.kind]
        return [
            (kind, run_federation(_with_strategy(base, kind), split, behaviors=behaviors))
            for kind in strategies
        ]

    raise TypeError(f"unknown scenario type {type(scenario).__name__}")
