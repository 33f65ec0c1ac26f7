"""Datasets: synthetic Gaussian blobs, IDX/CSV file ingestion, train/test splitting.

The IDX reader/writer follow the MNIST convention exactly (big-endian,
magic 2051 for images and 2049 for labels) so real fashion-mnist files
load unchanged; pixels are scaled to [0, 1] and images flattened.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "Dataset",
    "SyntheticSpec",
    "generate_synthetic",
    "load_idx",
    "write_idx",
    "load_csv",
    "split_train_test",
]

IDX_IMAGE_MAGIC = 2051
IDX_LABEL_MAGIC = 2049


@dataclass(frozen=True)
class Dataset:
    """An immutable labelled feature matrix."""

    features: np.ndarray
    labels: np.ndarray
    n_classes: int
    name: str = "dataset"
    class_counts: dict[int, int] = field(init=False)

    def __post_init__(self) -> None:
        feats = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if feats.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {feats.shape}")
        if labels.ndim != 1 or labels.shape[0] != feats.shape[0]:
            raise ValueError(f"labels shape {labels.shape} does not match features {feats.shape}")
        if not np.all(np.isfinite(feats)):
            raise ValueError(f"{self.name}: features contain non-finite values")
        if labels.size and (labels.min() < 0 or labels.max() >= self.n_classes):
            raise ValueError(
                f"{self.name}: labels must lie in [0, {self.n_classes}), "
                f"found range [{int(labels.min())}, {int(labels.max())}]"
            )
        feats = feats.copy()
        feats.setflags(write=False)
        labels = labels.copy()
        labels.setflags(write=False)
        counts = np.bincount(labels, minlength=self.n_classes)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "class_counts", {c: int(n) for c, n in enumerate(counts) if n})

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def input_dim(self) -> int:
        return int(self.features.shape[1])

    def take(self, indices: np.ndarray, name: str | None = None) -> "Dataset":
        """New dataset holding the given rows (order preserved)."""
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx], self.n_classes, name or self.name)


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for Gaussian-blob classification data.

    samples_per_class is either one count applied to every class or a
    per-class list, which allows heavily unbalanced class profiles.
    """

    n_classes: int = 10
    input_dim: int = 16
    samples_per_class: int | list[int] = 100
    cluster_spread: float = 1.0
    class_separation: float = 5.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_classes < 2:
            raise ValueError(f"n_classes must be >= 2, got {self.n_classes}")
        if self.input_dim < 1:
            raise ValueError(f"input_dim must be >= 1, got {self.input_dim}")
        if not self.cluster_spread > 0 or not self.class_separation > 0:
            raise ValueError("cluster_spread and class_separation must be > 0")
        counts = self.counts()
        if len(counts) != self.n_classes:
            raise ValueError(f"samples_per_class list has length {len(counts)}, expected {self.n_classes}")
        if min(counts) < 1:
            raise ValueError("every class needs at least one sample")

    def counts(self) -> list[int]:
        if isinstance(self.samples_per_class, int):
            return [self.samples_per_class] * self.n_classes
        return [int(c) for c in self.samples_per_class]


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Isotropic Gaussian blobs, one seeded centroid per class."""
    rng = np.random.default_rng(spec.seed)
    centroids = rng.normal(size=(spec.n_classes, spec.input_dim)) * spec.class_separation
    counts = spec.counts()
    feats = []
    labels = []
    for c, n in enumerate(counts):
        feats.append(centroids[c] + rng.normal(size=(n, spec.input_dim)) * spec.cluster_spread)
        labels.append(np.full(n, c, dtype=np.int64))
    return Dataset(
        np.concatenate(feats),
        np.concatenate(labels),
        spec.n_classes,
        name=f"synthetic-{spec.n_classes}c",
    )


def _read_be32(buf: bytes, offset: int, path: str) -> int:
    if offset + 4 > len(buf):
        raise ValueError(f"{path}: truncated header at offset {offset}")
    return struct.unpack_from(">I", buf, offset)[0]


def load_idx(images_path, labels_path, n_classes: int | None = None) -> Dataset:
    """Load an MNIST-convention IDX image/label file pair.

    Pixels are scaled to [0, 1] and each image flattened to rows*cols
    features. When n_classes is given, labels are range-checked against
    it; otherwise the class count is inferred as max(label) + 1.
    """
    images_path, labels_path = str(images_path), str(labels_path)
    img_buf = Path(images_path).read_bytes()
    lbl_buf = Path(labels_path).read_bytes()

    magic = _read_be32(img_buf, 0, images_path)
    if magic != IDX_IMAGE_MAGIC:
        raise ValueError(f"{images_path}: bad image magic {magic} at offset 0, expected {IDX_IMAGE_MAGIC}")
    n_images = _read_be32(img_buf, 4, images_path)
    rows = _read_be32(img_buf, 8, images_path)
    cols = _read_be32(img_buf, 12, images_path)
    if n_images == 0:
        raise ValueError(f"{images_path}: file declares zero images")
    expected = 16 + n_images * rows * cols
    if len(img_buf) != expected:
        raise ValueError(
            f"{images_path}: expected {expected} bytes for {n_images} images of {rows}x{cols}, "
            f"found {len(img_buf)} (pixel data starts at offset 16)"
        )

    magic = _read_be32(lbl_buf, 0, labels_path)
    if magic != IDX_LABEL_MAGIC:
        raise ValueError(f"{labels_path}: bad label magic {magic} at offset 0, expected {IDX_LABEL_MAGIC}")
    n_labels = _read_be32(lbl_buf, 4, labels_path)
    if n_labels != n_images:
        raise ValueError(f"{labels_path}: {n_labels} labels but {images_path} holds {n_images} images")
    if len(lbl_buf) != 8 + n_labels:
        raise ValueError(
            f"{labels_path}: expected {8 + n_labels} bytes, found {len(lbl_buf)} "
            f"(label data starts at offset 8)"
        )

    pixels = np.frombuffer(img_buf, dtype=np.uint8, offset=16).reshape(n_images, rows * cols)
    labels = np.frombuffer(lbl_buf, dtype=np.uint8, offset=8).astype(np.int64)
    inferred = int(labels.max()) + 1
    if n_classes is not None and inferred > n_classes:
        raise ValueError(
            f"{labels_path}: label {int(labels.max())} out of range for {n_classes} classes"
        )
    return Dataset(
        pixels.astype(np.float64) / 255.0,
        labels,
        n_classes if n_classes is not None else inferred,
        name=Path(images_path).stem,
    )


def write_idx(d: Dataset, images_path, labels_path, rows: int, cols: int) -> None:
    """Write a dataset as an IDX pair; features must be [0, 1] with rows*cols columns."""
    if d.input_dim != rows * cols:
        raise ValueError(f"dataset has {d.input_dim} features, cannot reshape to {rows}x{cols}")
    pixels = np.clip(np.rint(d.features * 255.0), 0, 255).astype(np.uint8)
    with open(images_path, "wb") as f:
        f.write(struct.pack(">IIII", IDX_IMAGE_MAGIC, len(d), rows, cols))
        f.write(pixels.tobytes())
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">II", IDX_LABEL_MAGIC, len(d)))
        f.write(d.labels.astype(np.uint8).tobytes())


def load_csv(path) -> Dataset:
    """Load a headered CSV with a 'label' column; all other columns are numeric features."""
    path = str(path)
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if "label" not in header:
            raise ValueError(f"{path}: no 'label' column in header {header}")
        label_col = header.index("label")
        feats = []
        labels = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}")
            try:
                labels.append(int(float(row[label_col])))
                feats.append([float(v) for i, v in enumerate(row) if i != label_col])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-numeric value ({exc})") from None
    if not labels:
        raise ValueError(f"{path}: no data rows")
    labels_arr = np.asarray(labels, dtype=np.int64)
    return Dataset(np.asarray(feats), labels_arr, int(labels_arr.max()) + 1, name=Path(path).stem)


def split_train_test(d: Dataset, train_fraction: float, seed) -> tuple[Dataset, Dataset]:
    """Seed-deterministic random partition into |train| = round(fraction * N) and the rest."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n = len(d)
    if n < 2:
        raise ValueError(f"need at least 2 samples to split, got {n}")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(round(train_fraction * n))
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    return (
        d.take(train_idx, name=f"{d.name}-train"),
        d.take(test_idx, name=f"{d.name}-test"),
    )
