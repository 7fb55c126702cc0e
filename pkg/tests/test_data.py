import json

import numpy as np
import pytest

from riskcdf.data import (
    Dataset,
    blob_mixture_sampler,
    generate_blobs,
    load_dataset_csv,
    load_loss_table,
    save_dataset_csv,
    toy_blobs,
)
from riskcdf.errors import ConfigError, EmptySample, FormatError, InvalidLoss
from riskcdf.seeds import rng_from


class TestGenerateBlobs:
    def test_preset_shape(self):
        ds = toy_blobs(seed=0)
        assert ds.n == 1050 and ds.dim == 2
        counts = np.bincount(ds.y.astype(int))
        assert counts.tolist() == [1000, 50]
        # Cluster blocks are contiguous and unshuffled.
        assert np.all(ds.y[:1000] == 0) and np.all(ds.y[1000:] == 1)

    def test_degenerate_spread(self):
        ds = generate_blobs([3], [[0.0, 0.0]], [1e-12], seed=1)
        assert np.allclose(ds.X, 0.0, atol=1e-10)

    def test_determinism(self):
        a = generate_blobs([10, 5], [[0, 0], [2, 2]], [1.0, 0.5], seed=9)
        b = generate_blobs([10, 5], [[0, 0], [2, 2]], [1.0, 0.5], seed=9)
        c = generate_blobs([10, 5], [[0, 0], [2, 2]], [1.0, 0.5], seed=10)
        assert np.array_equal(a.X, b.X)
        assert not np.array_equal(a.X, c.X)

    def test_mismatched_lengths(self):
        with pytest.raises(ConfigError):
            generate_blobs([3, 4], [[0, 0]], [1.0])

    def test_sample_means_converge(self):
        size, std = 10_000, 1.5
        ds = generate_blobs([size], [[2.0, -1.0]], [std], seed=4)
        mean = ds.X.mean(axis=0)
        tol = 5 * std / np.sqrt(size)
        assert abs(mean[0] - 2.0) < tol and abs(mean[1] + 1.0) < tol

    def test_mixture_sampler_weights(self):
        sampler = blob_mixture_sampler()
        X, y = sampler(rng_from(0, "mix"), 20_000)
        assert X.shape == (20_000, 2)
        frac = float(np.mean(y == 1.0))
        assert frac == pytest.approx(50 / 1050, abs=0.01)


class TestDatasetCsv:
    def test_round_trip(self, tmp_path):
        ds = generate_blobs([4, 3], [[0, 0], [1, 1]], [1.0, 1.0], seed=2)
        path = tmp_path / "ds.csv"
        save_dataset_csv(ds, path)
        loaded = load_dataset_csv(path, label_column="label")
        assert np.array_equal(loaded.X, ds.X)
        assert np.array_equal(loaded.y, ds.y)
        sidecar = json.loads((tmp_path / "ds.csv.meta.json").read_text())
        assert sidecar["source"] == "blobs" and sidecar["seed"] == 2

    def test_basic_load(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,b,label\n1,2,0\n3,4,1\n5,6,0\n")
        ds = load_dataset_csv(path, label_column="label")
        assert ds.n == 3 and ds.dim == 2
        assert ds.y.tolist() == [0.0, 1.0, 0.0]
        assert ds[1].x.tolist() == [3.0, 4.0]

    def test_missing_label_column(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(FormatError):
            load_dataset_csv(path, label_column="label")

    def test_non_numeric_cell_named(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,label\n1,0\noops,1\n")
        with pytest.raises(FormatError, match="row 3, column 1"):
            load_dataset_csv(path, label_column="label")

    def test_headerless_by_index(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("1,2,0\n3,4,1\n")
        ds = load_dataset_csv(path, label_column=2, has_header=False)
        assert ds.dim == 2 and ds.y.tolist() == [0.0, 1.0]


class TestLossTable:
    def test_load_and_column_access(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("m1,m2\n1,2\n2,3\n3,4\n4,5\n")
        table = load_loss_table(path)
        assert table.names == ("m1", "m2")
        assert table.column("m1").mean() == pytest.approx(2.5)

    def test_pretrained_model_style_header(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text(
            "VGG-11,GoogLeNet,ShuffleNet,Inception,ResNet-18\n"
            "1.2,1.3,1.4,1.8,1.2\n"
            "0.9,1.1,1.2,1.9,1.0\n"
        )
        table = load_loss_table(path)
        assert table.n_models == 5
        assert table.column("ResNet-18").tolist() == [1.2, 1.0]

    def test_zero_column(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("only\n0\n0\n")
        table = load_loss_table(path)
        assert np.all(table.values == 0.0)

    def test_negative_rejected(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("m\n1\n-1\n")
        with pytest.raises(InvalidLoss):
            load_loss_table(path)

    def test_ragged_rejected(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("m1,m2\n1,2\n3\n")
        with pytest.raises(FormatError):
            load_loss_table(path)

    def test_empty_rejected(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("m1,m2\n")
        with pytest.raises(EmptySample):
            load_loss_table(path)


class TestDatasetType:
    def test_shape_consistency(self):
        with pytest.raises(FormatError):
            Dataset(X=np.zeros((3, 2)), y=np.zeros(2))

    def test_examples_view(self):
        ds = Dataset(X=np.array([[1.0, 2.0]]), y=np.array([1.0]))
        assert len(ds.examples) == 1
        assert ds.examples[0].y == 1.0
