"""Dataset generation, IDX/CSV ingestion, and train/test splitting."""

import struct

import numpy as np
import pytest

from fedsim.data import (
    Dataset,
    SyntheticSpec,
    generate_synthetic,
    load_csv,
    load_idx,
    split_train_test,
    write_idx,
)
from fedsim.models import ModelSpec, TrainConfig, init_params, train_local


class TestDataset:
    def test_class_counts_consistent(self):
        d = Dataset(np.zeros((4, 2)), [0, 1, 1, 2], n_classes=3)
        assert d.class_counts == {0: 1, 1: 2, 2: 1}

    def test_label_out_of_range(self):
        with pytest.raises(ValueError, match=r"\[0, 2\)"):
            Dataset(np.zeros((2, 2)), [0, 2], n_classes=2)

    def test_non_finite_features_rejected(self):
        with pytest.raises(ValueError, match="non-finite"):
            Dataset(np.array([[np.nan, 0.0]]), [0], n_classes=2)

    def test_take_preserves_rows(self):
        d = Dataset(np.arange(8).reshape(4, 2).astype(float), [0, 1, 0, 1], n_classes=2)
        sub = d.take([2, 0])
        assert sub.features.tolist() == [[4.0, 5.0], [0.0, 1.0]]
        assert sub.labels.tolist() == [0, 0]


class TestGenerateSynthetic:
    def test_count_bookkeeping(self):
        d = generate_synthetic(SyntheticSpec(n_classes=2, input_dim=3, samples_per_class=10, seed=1))
        assert len(d) == 20
        assert d.class_counts == {0: 10, 1: 10}

    def test_unbalanced_counts(self):
        spec = SyntheticSpec(n_classes=3, input_dim=2, samples_per_class=[5, 50, 17], seed=2)
        d = generate_synthetic(spec)
        assert d.class_counts == {0: 5, 1: 50, 2: 17}

    def test_deterministic(self):
        spec = SyntheticSpec(n_classes=3, input_dim=4, samples_per_class=7, seed=3)
        a, b = generate_synthetic(spec), generate_synthetic(spec)
        assert a.features.tolist() == b.features.tolist()
        assert a.labels.tolist() == b.labels.tolist()

    def test_wide_separation_is_separable(self):
        # A centralized model must fit near-perfectly when the blobs are
        # far apart relative to their spread.
        spec = SyntheticSpec(
            n_classes=3, input_dim=4, samples_per_class=80,
            cluster_spread=0.5, class_separation=10.0, seed=4,
        )
        d = generate_synthetic(spec)
        model = ModelSpec("logistic", 4, 3, init_seed=5)
        _, acc = train_local(
            model, init_params(model), d, TrainConfig(learning_rate=0.2, batch_size=32, local_iterations=60, seed=6)
        )
        assert acc >= 0.99

    def test_per_class_list_length_checked(self):
        with pytest.raises(ValueError, match="length"):
            SyntheticSpec(n_classes=3, samples_per_class=[1, 2])


class TestIdx:
    def small_dataset(self):
        rng = np.random.default_rng(11)
        feats = rng.integers(0, 256, size=(12, 28 * 28)).astype(np.float64) / 255.0
        labels = rng.integers(0, 10, size=12)
        return Dataset(feats, labels, n_classes=10)

    def test_round_trip(self, tmp_path):
        d = self.small_dataset()
        img, lbl = tmp_path / "img.idx", tmp_path / "lbl.idx"
        write_idx(d, img, lbl, rows=28, cols=28)
        loaded = load_idx(img, lbl, n_classes=10)
        assert loaded.input_dim == 784
        np.testing.assert_array_equal(loaded.features, d.features)
        np.testing.assert_array_equal(loaded.labels, d.labels)

    def test_pixel_range_scaled(self, tmp_path):
        d = self.small_dataset()
        write_idx(d, tmp_path / "i", tmp_path / "l", rows=28, cols=28)
        loaded = load_idx(tmp_path / "i", tmp_path / "l")
        assert loaded.features.min() >= 0.0 and loaded.features.max() <= 1.0

    def test_bad_image_magic(self, tmp_path):
        p = tmp_path / "bad.idx"
        p.write_bytes(struct.pack(">IIII", 1234, 1, 2, 2) + bytes(4))
        lbl = tmp_path / "l.idx"
        lbl.write_bytes(struct.pack(">II", 2049, 1) + bytes(1))
        with pytest.raises(ValueError, match="magic"):
            load_idx(p, lbl)

    def test_truncated_images(self, tmp_path):
        p = tmp_path / "trunc.idx"
        p.write_bytes(struct.pack(">IIII", 2051, 3, 2, 2) + bytes(5))  # needs 12 pixel bytes
        lbl = tmp_path / "l.idx"
        lbl.write_bytes(struct.pack(">II", 2049, 3) + bytes(3))
        with pytest.raises(ValueError, match="expected 28 bytes"):
            load_idx(p, lbl)

    def test_zero_items_rejected(self, tmp_path):
        p = tmp_path / "zero.idx"
        p.write_bytes(struct.pack(">IIII", 2051, 0, 2, 2))
        lbl = tmp_path / "l.idx"
        lbl.write_bytes(struct.pack(">II", 2049, 0))
        with pytest.raises(ValueError, match="zero"):
            load_idx(p, lbl)

    def test_count_mismatch_between_files(self, tmp_path):
        img = tmp_path / "i.idx"
        img.write_bytes(struct.pack(">IIII", 2051, 2, 1, 1) + bytes(2))
        lbl = tmp_path / "l.idx"
        lbl.write_bytes(struct.pack(">II", 2049, 3) + bytes(3))
        with pytest.raises(ValueError, match="3 labels but"):
            load_idx(img, lbl)

    def test_label_out_of_declared_range(self, tmp_path):
        img = tmp_path / "i.idx"
        img.write_bytes(struct.pack(">IIII", 2051, 1, 1, 1) + bytes(1))
        lbl = tmp_path / "l.idx"
        lbl.write_bytes(struct.pack(">II", 2049, 1) + bytes([10]))
        with pytest.raises(ValueError, match="label 10 out of range"):
            load_idx(img, lbl, n_classes=10)


class TestCsv:
    def test_load_with_label_column(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("x0,label,x1\n1.0,0,2.0\n3.0,1,4.0\n")
        d = load_csv(p)
        assert d.features.tolist() == [[1.0, 2.0], [3.0, 4.0]]
        assert d.labels.tolist() == [0, 1]
        assert d.n_classes == 2

    def test_missing_label_column(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError, match="label"):
            load_csv(p)

    def test_bad_value_names_line(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("label,x\n0,1.0\n1,oops\n")
        with pytest.raises(ValueError, match=":3"):
            load_csv(p)


class TestSplitTrainTest:
    def dataset(self, n=100):
        rng = np.random.default_rng(13)
        return Dataset(rng.normal(size=(n, 3)), rng.integers(0, 4, size=n), n_classes=4)

    def test_ninety_ten(self):
        train, test = split_train_test(self.dataset(100), 0.9, seed=1)
        assert len(train) == 90 and len(test) == 10

    def test_partition_property(self):
        d = self.dataset(37)
        train, test = split_train_test(d, 0.8, seed=2)
        merged = np.concatenate([train.features, test.features])
        assert len(train) + len(test) == 37
        assert sorted(map(tuple, merged.tolist())) == sorted(map(tuple, d.features.tolist()))

    def test_deterministic(self):
        d = self.dataset(50)
        a = split_train_test(d, 0.9, seed=3)
        b = split_train_test(d, 0.9, seed=3)
        assert a[0].features.tolist() == b[0].features.tolist()
        assert a[1].labels.tolist() == b[1].labels.tolist()

    def test_fraction_bounds(self):
        d = self.dataset(10)
        for bad in (0.0, 1.0, -0.1, 1.7):
            with pytest.raises(ValueError, match="train_fraction"):
                split_train_test(d, bad, seed=1)
