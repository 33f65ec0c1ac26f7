"""Trainable classifiers with analytic gradients, plain SGD, and accuracy evaluation.

Two architectures cover the desk-scale experiments: multinomial logistic
regression and a one-hidden-layer ReLU MLP. Both train with softmax
cross-entropy and expose their weights as a single flat vector so the
aggregation layer never needs to know the layer structure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import ParamVector

__all__ = [
    "ModelSpec",
    "Batch",
    "TrainConfig",
    "init_params",
    "random_params",
    "loss_and_grad",
    "train_local",
    "evaluate",
]


@dataclass(frozen=True)
class ModelSpec:
    """Architecture descriptor; the parameter count is fully determined by it."""

    kind: str  # "logistic" or "mlp"
    input_dim: int
    n_classes: int
    hidden_dim: int = 0
    init_seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("logistic", "mlp"):
            raise ValueError(f"unknown model kind {self.kind!r}; expected 'logistic' or 'mlp'")
        if self.input_dim < 1:
            raise ValueError(f"input_dim must be >= 1, got {self.input_dim}")
        if self.n_classes < 2:
            raise ValueError(f"n_classes must be >= 2, got {self.n_classes}")
        if self.kind == "mlp" and self.hidden_dim < 1:
            raise ValueError("mlp requires hidden_dim >= 1")
        if self.kind == "logistic" and self.hidden_dim != 0:
            raise ValueError("logistic model takes hidden_dim = 0")

    @property
    def param_count(self) -> int:
        if self.kind == "logistic":
            return self.input_dim * self.n_classes + self.n_classes
        return (
            self.input_dim * self.hidden_dim
            + self.hidden_dim
            + self.hidden_dim * self.n_classes
            + self.n_classes
        )


@dataclass(frozen=True)
class Batch:
    """A block of feature rows and integer labels."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        feats = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if feats.ndim != 2 or feats.shape[0] != labels.shape[0]:
            raise ValueError(f"features {feats.shape} do not match labels {labels.shape}")
        if not np.all(np.isfinite(feats)):
            raise ValueError("batch features contain non-finite values")
        if labels.size and labels.min() < 0:
            raise ValueError("labels must be nonnegative integers")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return int(self.labels.shape[0])


@dataclass(frozen=True)
class TrainConfig:
    """Local SGD settings: step size, batch size, epochs over the shard, seed."""

    learning_rate: float = 0.05
    batch_size: int = 128
    local_iterations: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.learning_rate >= 0.0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.local_iterations < 1:
            raise ValueError(f"local_iterations must be >= 1, got {self.local_iterations}")


def _unpack(spec: ModelSpec, params: ParamVector) -> tuple[np.ndarray, ...]:
    if params.dim != spec.param_count:
        raise ValueError(f"parameter vector has dim {params.dim}, spec expects {spec.param_count}")
    v = params.values
    d, c = spec.input_dim, spec.n_classes
    if spec.kind == "logistic":
        w = v[: d * c].reshape(d, c)
        b = v[d * c :]
        return w, b
    h = spec.hidden_dim
    i = 0
    w1 = v[i : i + d * h].reshape(d, h)
    i += d * h
    b1 = v[i : i + h]
    i += h
    w2 = v[i : i + h * c].reshape(h, c)
    i += h * c
    b2 = v[i:]
    return w1, b1, w2, b2


def _draw_params(spec: ModelSpec, rng: np.random.Generator, scale: float) -> ParamVector:
    # Weights uniform in +-scale/sqrt(fan_in), biases zero.
    d, c, h = spec.input_dim, spec.n_classes, spec.hidden_dim
    if spec.kind == "logistic":
        bound = scale / np.sqrt(d)
        w = rng.uniform(-bound, bound, size=d * c)
        return ParamVector(np.concatenate([w, np.zeros(c)]))
    b1 = scale / np.sqrt(d)
    b2 = scale / np.sqrt(h)
    w1 = rng.uniform(-b1, b1, size=d * h)
    w2 = rng.uniform(-b2, b2, size=h * c)
    return ParamVector(np.concatenate([w1, np.zeros(h), w2, np.zeros(c)]))


def init_params(spec: ModelSpec) -> ParamVector:
    """Deterministic initial parameters for the given spec."""
    return _draw_params(spec, np.random.default_rng(spec.init_seed), 1.0)


def random_params(spec: ModelSpec, seed, scale: float = 1.0) -> ParamVector:
    """Parameters drawn from the init distribution rescaled by `scale`.

    Used to fabricate out-of-distribution submissions for poisoning
    scenarios; `seed` accepts anything numpy's default_rng does.
    """
    return _draw_params(spec, np.random.default_rng(seed), scale)


def _forward_logits(spec: ModelSpec, params: ParamVector, features: np.ndarray) -> np.ndarray:
    if spec.kind == "logistic":
        w, b = _unpack(spec, params)
        return features @ w + b
    w1, b1, w2, b2 = _unpack(spec, params)
    hidden = np.maximum(features @ w1 + b1, 0.0)
    return hidden @ w2 + b2


def _softmax_loss(logits: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy via log-sum-exp (finite for any finite logits)
    and the per-logit gradient of the mean."""
    n = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    loss = float((lse[:, 0] - shifted[np.arange(n), y]).mean())
    dlogits = np.exp(shifted - lse)
    dlogits[np.arange(n), y] -= 1.0
    dlogits /= n
    return loss, dlogits


def loss_and_grad(spec: ModelSpec, params: ParamVector, batch: Batch) -> tuple[float, ParamVector]:
    """Mean softmax cross-entropy over the batch and its exact gradient."""
    if len(batch) == 0:
        raise ValueError("cannot compute loss on an empty batch")
    x, y = batch.features, batch.labels
    if y.max() >= spec.n_classes:
        raise ValueError(f"label {int(y.max())} out of range for {spec.n_classes} classes")

    if spec.kind == "logistic":
        w, b = _unpack(spec, params)
        loss, dlogits = _softmax_loss(x @ w + b, y)
        grad = np.concatenate([(x.T @ dlogits).ravel(), dlogits.sum(axis=0)])
        return loss, ParamVector(grad)

    w1, b1, w2, b2 = _unpack(spec, params)
    pre = x @ w1 + b1
    hidden = np.maximum(pre, 0.0)
    loss, dlogits = _softmax_loss(hidden @ w2 + b2, y)
    dw2 = hidden.T @ dlogits
    db2 = dlogits.sum(axis=0)
    dhidden = dlogits @ w2.T
    dhidden[pre <= 0.0] = 0.0
    dw1 = x.T @ dhidden
    db1 = dhidden.sum(axis=0)
    grad = np.concatenate([dw1.ravel(), db1, dw2.ravel(), db2])
    return loss, ParamVector(grad)


def train_local(spec: ModelSpec, start: ParamVector, shard, cfg: TrainConfig) -> tuple[ParamVector, float]:
    """Run mini-batch SGD over the shard and report the post-training accuracy.

    `shard` is anything with `.features` and `.labels` arrays. Each of
    cfg.local_iterations epochs reshuffles the shard from cfg.seed; when a
    single batch covers the whole shard no shuffle is drawn, since the
    gradient is then order-independent and equal shards must train
    identically regardless of who owns them.
    """
    features = np.asarray(shard.features, dtype=np.float64)
    labels = np.asarray(shard.labels, dtype=np.int64)
    n = labels.shape[0]
    if n == 0:
        raise ValueError("cannot train on an empty shard")

    rng = np.random.default_rng(cfg.seed)
    values = start.values
    for _ in range(cfg.local_iterations):
        if cfg.batch_size >= n:
            order = np.arange(n)
        else:
            order = rng.permutation(n)
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo : lo + cfg.batch_size]
            batch = Batch(features[idx], labels[idx])
            _, grad = loss_and_grad(spec, ParamVector(values), batch)
            values = values - cfg.learning_rate * grad.values

    final = ParamVector(values)
    return final, evaluate(spec, final, shard)


def evaluate(spec: ModelSpec, params: ParamVector, data) -> float:
    """Fraction of samples whose argmax prediction matches the label."""
    features = np.asarray(data.features, dtype=np.float64)
    labels = np.asarray(data.labels, dtype=np.int64)
    if labels.shape[0] == 0:
        raise ValueError("cannot evaluate on empty data")
    logits = _forward_logits(spec, params, features)
    return float((logits.argmax(axis=1) == labels).mean())
