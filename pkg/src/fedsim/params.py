"""Flat parameter vectors and the vector algebra used by server-side aggregation.

A model's weights are handled as one flat float64 vector: the unit that
clients upload and the server combines. All reductions accumulate in
float64 and walk the input list in the order given, so results are
bit-reproducible for a fixed ordering (callers order by client id).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["ParamVector", "l1_distance", "average", "weighted_sum"]

# |sum(alphas) - 1| above this is rejected as an unnormalized weighting.
ALPHA_SUM_TOL = 1e-9


@dataclass(frozen=True)
class ParamVector:
    """Immutable flat vector of model parameters.

    Entries must be finite; the backing array is float64 and marked
    read-only so vectors can be shared freely across threads.
    """

    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError(f"parameter vector must be 1-D and nonempty, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("parameter vector contains non-finite entries")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def dim(self) -> int:
        return int(self.values.size)

    def __len__(self) -> int:
        return self.dim

    def __add__(self, other: "ParamVector") -> "ParamVector":
        _check_dims(self, other)
        return ParamVector(self.values + other.values)

    def __sub__(self, other: "ParamVector") -> "ParamVector":
        _check_dims(self, other)
        return ParamVector(self.values - other.values)

    def scale(self, factor: float) -> "ParamVector":
        return ParamVector(self.values * float(factor))

    def allclose(self, other: "ParamVector", rtol: float = 1e-12, atol: float = 0.0) -> bool:
        return self.dim == other.dim and bool(
            np.allclose(self.values, other.values, rtol=rtol, atol=atol)
        )


def _check_dims(a: ParamVector, b: ParamVector) -> None:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")


def l1_distance(a: ParamVector, b: ParamVector) -> float:
    """Sum of absolute coordinate differences between two vectors."""
    _check_dims(a, b)
    return float(np.abs(a.values - b.values).sum())


def average(vs: list[ParamVector]) -> ParamVector:
    """Elementwise arithmetic mean of a nonempty list of same-dim vectors."""
    if not vs:
        raise ValueError("cannot average an empty list of parameter vectors")
    dim = vs[0].dim
    for v in vs[1:]:
        _check_dims(vs[0], v)
    acc = np.zeros(dim, dtype=np.float64)
    for v in vs:
        acc += v.values
    return ParamVector(acc / len(vs))


def weighted_sum(vs: list[ParamVector], alphas: list[float]) -> ParamVector:
    """Convex combination sum_k alphas[k] * vs[k].

    The weights must be nonnegative and sum to 1 within ALPHA_SUM_TOL;
    accumulation runs in list order in float64.
    """
    if not vs:
        raise ValueError("cannot combine an empty list of parameter vectors")
    if len(vs) != len(alphas):
        raise ValueError(f"got {len(vs)} vectors but {len(alphas)} weights")
    for v in vs[1:]:
        _check_dims(vs[0], v)
    total = float(np.sum(np.asarray(alphas, dtype=np.float64)))
    if abs(total - 1.0) > ALPHA_SUM_TOL:
        raise ValueError(f"weights must sum to 1 within {ALPHA_SUM_TOL:g}, got sum {total!r}")
    if any(a < 0.0 for a in alphas):
        raise ValueError("weights must be nonnegative")
    if all(np.array_equal(v.values, vs[0].values) for v in vs[1:]):
        # A convex combination of one point is that point; returning it
        # directly keeps fixed-point identities exact in float arithmetic.
        return vs[0]
    acc = np.zeros(vs[0].dim, dtype=np.float64)
    for v, a in zip(vs, alphas):
        acc += float(a) * v.values
    return ParamVector(acc)
