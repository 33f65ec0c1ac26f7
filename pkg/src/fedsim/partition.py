"""Non-iid federated data partitioning.

Each client is assigned a fixed number of classes (label skew: fewer
classes per client means a more severe shift); samples are then dealt
from per-class pools without replacement so the federation is a true
partition of the source dataset. Each client's local data is finally
split into private train and test shards.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, split_train_test

__all__ = ["PartitionSpec", "ClientShard", "FederatedSplit", "partition", "double_client_samples"]

log = logging.getLogger(__name__)

SAMPLES_LAWS = ("balanced", "uniform")


def _child_seed(seed: int, *keys: int) -> int:
    """Independent child seed for a namespaced sub-stream."""
    return int(np.random.SeedSequence([int(seed), *keys]).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class PartitionSpec:
    """Recipe for splitting one dataset across a federation.

    classes_per_client == C reproduces the iid setting. The "balanced"
    law deals each class pool evenly to its holders; "uniform" draws a
    per-(client, class) count uniformly in [1, max_per_class].
    """

    n_clients: int
    classes_per_client: int
    samples_law: str = "balanced"
    max_per_class: int | None = None
    train_fraction: float = 0.9
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_clients < 1:
            raise ValueError(f"n_clients must be >= 1, got {self.n_clients}")
        if self.classes_per_client < 1:
            raise ValueError(f"classes_per_client must be >= 1, got {self.classes_per_client}")
        if self.samples_law not in SAMPLES_LAWS:
            raise ValueError(f"unknown samples_law {self.samples_law!r}; expected one of {SAMPLES_LAWS}")
        if self.samples_law == "uniform" and (self.max_per_class is None or self.max_per_class < 1):
            raise ValueError("uniform samples_law requires max_per_class >= 1")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")


@dataclass(frozen=True)
class ClientShard:
    client_id: int
    train: Dataset
    test: Dataset


@dataclass(frozen=True)
class FederatedSplit:
    """Per-client shards plus the class assignment that produced them.

    leftover_indices maps each class to the source-dataset rows that no
    client received; double_client_samples draws from them first.
    """

    shards: list[ClientShard]
    assignment: dict[int, list[int]]
    leftover_indices: dict[int, np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def n_clients(self) -> int:
        return len(self.shards)

    def client(self, client_id: int) -> ClientShard:
        for shard in self.shards:
            if shard.client_id == client_id:
                return shard
        raise KeyError(f"no client with id {client_id}")

    def summary(self) -> dict:
        """JSON-serializable partition provenance: classes and counts per client."""
        clients = []
        for shard in self.shards:
            train_counts = shard.train.class_counts
            test_counts = shard.test.class_counts
            clients.append(
                {
                    "client_id": shard.client_id,
                    "classes": self.assignment[shard.client_id],
                    "train_size": len(shard.train),
                    "test_size": len(shard.test),
                    "train_counts": {str(c): n for c, n in sorted(train_counts.items())},
                    "test_counts": {str(c): n for c, n in sorted(test_counts.items())},
                }
            )
        return {"n_clients": self.n_clients, "clients": clients}

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2)


def partition(d: Dataset, spec: PartitionSpec) -> FederatedSplit:
    """Deal the dataset to n_clients clients according to the spec.

    Deterministic in spec.seed: class assignment, pool shuffles, sample
    counts, and every per-client train/test split all derive from it.
    """
    c = d.n_classes
    k = spec.n_clients
    n_cc = spec.classes_per_client
    if n_cc > c:
        raise ValueError(f"classes_per_client={n_cc} exceeds the dataset's {c} classes")

    rng = np.random.default_rng(spec.seed)
    assignment = {cid: sorted(int(x) for x in rng.choice(c, size=n_cc, replace=False)) for cid in range(k)}

    pools = {cls: rng.permutation(np.flatnonzero(d.labels == cls)) for cls in range(c)}
    cursors = {cls: 0 for cls in range(c)}
    holders = {cls: [cid for cid in range(k) if cls in assignment[cid]] for cls in range(c)}

    counts = np.zeros((k, c), dtype=np.int64)
    rotation = 0
    for cls in range(c):
        hs = holders[cls]
        if not hs:
            continue
        pool_size = pools[cls].size
        if spec.samples_law == "balanced":
            base, extra = divmod(pool_size, len(hs))
            for i, cid in enumerate(hs):
                counts[cid, cls] = base
            # Rotate which holders absorb the remainder so client totals
            # stay within one sample of each other in the iid case.
            for i in range(extra):
                counts[hs[(rotation + i) % len(hs)], cls] += 1
            rotation += extra
        else:
            for cid in hs:
                counts[cid, cls] = int(rng.integers(1, spec.max_per_class + 1))

    taken: dict[int, list[np.ndarray]] = {cid: [] for cid in range(k)}
    for cls in range(c):
        for cid in holders[cls]:
            want = int(counts[cid, cls])
            pool = pools[cls]
            got = pool[cursors[cls] : cursors[cls] + want]  # truncates when supply runs out
            cursors[cls] += got.size
            if got.size:
                taken[cid].append(got)

    shards = []
    for cid in range(k):
        if not taken[cid]:
            raise ValueError(f"client {cid} received zero samples (classes {assignment[cid]})")
        idx = np.sort(np.concatenate(taken[cid]))
        local = d.take(idx, name=f"{d.name}-client{cid}")
        try:
            train, test = split_train_test(local, spec.train_fraction, _child_seed(spec.seed, 1, cid))
        except ValueError as exc:
            raise ValueError(f"client {cid}: {exc}") from None
        shards.append(ClientShard(cid, train, test))

    leftover = {cls: pools[cls][cursors[cls] :].copy() for cls in range(c)}
    return FederatedSplit(shards, assignment, leftover)


def double_client_samples(
    split: FederatedSplit, pool: Dataset, client_ids: list[int], seed
) -> FederatedSplit:
    """Double the targeted clients' train shards, preserving per-class proportions.

    For every class the client holds, as many fresh samples as it already
    has are drawn from the unused remainder of `pool` (the dataset that
    was partitioned); if the remainder runs dry the deficit is resampled
    with replacement from the client's own rows. Untargeted clients are
    returned untouched.
    """
    known = {s.client_id for s in split.shards}
    for cid in client_ids:
        if cid not in known:
            raise ValueError(f"unknown client id {cid}; federation has clients {sorted(known)}")
    if not client_ids:
        return split

    rng = np.random.default_rng(seed)
    targets = set(client_ids)
    leftover = {cls: idx.copy() for cls, idx in split.leftover_indices.items()}

    shards = []
    for shard in split.shards:
        if shard.client_id not in targets:
            shards.append(shard)
            continue
        train = shard.train
        extra_feats = []
        extra_labels = []
        for cls, have in sorted(train.class_counts.items()):
            avail = leftover.get(cls, np.empty(0, dtype=np.int64))
            n_pool = min(have, avail.size)
            if n_pool:
                pick = rng.choice(avail.size, size=n_pool, replace=False)
                rows = avail[pick]
                leftover[cls] = np.delete(avail, pick)
                extra_feats.append(pool.features[rows])
                extra_labels.append(pool.labels[rows])
            deficit = have - n_pool
            if deficit:
                log.warning(
                    "client %d class %d: pool exhausted, resampling %d of %d with replacement",
                    shard.client_id, cls, deficit, have,
                )
                own = np.flatnonzero(train.labels == cls)
                rows = own[rng.integers(0, own.size, size=deficit)]
                extra_feats.append(train.features[rows])
                extra_labels.append(train.labels[rows])
        new_train = Dataset(
            np.concatenate([train.features, *extra_feats]),
            np.concatenate([train.labels, *extra_labels]),
            train.n_classes,
            name=train.name,
        )
        shards.append(ClientShard(shard.client_id, new_train, shard.test))

    return FederatedSplit(shards, dict(split.assignment), leftover)
