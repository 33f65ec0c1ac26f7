#!/usr/bin/env python3
"""Running the federation on IDX image files (the MNIST/fashion-mnist format).

Pass real files to federate actual data:

    python demos/07_idx_ingestion.py train-images-idx3-ubyte train-labels-idx1-ubyte

Without arguments the demo writes a small synthetic IDX pair first, so it
also documents the byte format end to end. Images are flattened and
scaled to [0, 1]; an MLP head handles the higher input dimension.
"""

import sys
import tempfile
from pathlib import Path

import numpy as np

from fedsim import (
    AggregationStrategy,
    Dataset,
    FederationConfig,
    ModelSpec,
    PartitionSpec,
    SyntheticSpec,
    TrainConfig,
    generate_synthetic,
    load_idx,
    partition,
    run_federation,
)
from fedsim.data import write_idx

if len(sys.argv) == 3:
    images_path, labels_path = sys.argv[1], sys.argv[2]
    print(f"loading {images_path} / {labels_path}")
else:
    # Fabricate an 8x8-pixel, 10-class stand-in and round-trip it through disk.
    blobs = generate_synthetic(
        SyntheticSpec(n_classes=10, input_dim=64, samples_per_class=120, class_separation=3.0, seed=7)
    )
    pixels = 1 / (1 + np.exp(-blobs.features))  # squash into [0, 1] pixel range
    imageish = Dataset(pixels, blobs.labels, blobs.n_classes, name="synthetic-images")
    tmp = Path(tempfile.mkdtemp(prefix="fedsim-idx-"))
    images_path, labels_path = tmp / "images.idx", tmp / "labels.idx"
    write_idx(imageish, images_path, labels_path, rows=8, cols=8)
    print(f"wrote synthetic IDX pair to {tmp}")

data = load_idx(images_path, labels_path)
print(f"loaded {len(data)} images, input_dim={data.input_dim}, classes={data.n_classes}")

split = partition(data, PartitionSpec(n_clients=8, classes_per_client=5, seed=11))
cfg = FederationConfig(
    rounds=30,
    participation_rate=1.0,
    strategy=AggregationStrategy("ida"),
    train=TrainConfig(learning_rate=0.05, batch_size=128, local_iterations=1, seed=13),
    model=ModelSpec("mlp", data.input_dim, data.n_classes, hidden_dim=32, init_seed=17),
    seed=19,
)
state = run_federation(cfg, split)
rec = state.final_record()
print(
    f"after {cfg.rounds} rounds: global {100 * rec.global_accuracy:.2f}%, "
    f"local {100 * rec.local_mean:.2f}% +- {100 * rec.local_std:.2f}%"
)
