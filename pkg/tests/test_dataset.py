"""Dataset container, noise model, normalization, splitting, CSV format."""

import io

import numpy as np
import pytest

from dfsl import (FunctionalDataset, NoiseModel, normalize_channels, read_csv,
                  split, write_csv)
from dfsl.dataset import to_csv_string


class TestFunctionalDataset:
    def test_defaults(self):
        d = FunctionalDataset(np.zeros((2, 5, 3)))
        assert d.n_samples == 2 and d.n_times == 5 and d.n_channels == 3
        np.testing.assert_array_equal(d.time_points, np.arange(5.0))
        assert d.channel_names == ("1", "2", "3")

    def test_rejects_non_finite(self):
        bad = np.zeros((2, 3, 2))
        bad[1, 2, 0] = np.nan
        with pytest.raises(ValueError):
            FunctionalDataset(bad)

    def test_rejects_wrong_rank(self):
        with pytest.raises(ValueError):
            FunctionalDataset(np.zeros((4, 5)))

    def test_rejects_unequal_spacing(self):
        with pytest.raises(ValueError):
            FunctionalDataset(np.zeros((1, 4, 1)),
                              time_points=np.array([0.0, 1.0, 2.0, 4.0]))

    def test_rejects_decreasing_times(self):
        with pytest.raises(ValueError):
            FunctionalDataset(np.zeros((1, 3, 1)),
                              time_points=np.array([0.0, 2.0, 1.0]))


class TestNoiseModel:
    def test_identity(self):
        nm = NoiseModel.identity(3, 4, sigma=0.5)
        assert nm.is_identity
        np.testing.assert_array_equal(nm.sigma, [0.5, 0.5, 0.5])
        np.testing.assert_array_equal(nm.gamma[2], np.eye(4))

    def test_covariance_is_sigma2_gamma_over_n(self):
        lags = np.abs(np.subtract.outer(np.arange(5), np.arange(5)))
        gamma = np.broadcast_to(0.3 ** lags, (2, 5, 5)).copy()
        nm = NoiseModel(np.array([0.1, 0.2]), gamma)
        np.testing.assert_array_equal(nm.covariance(2), 0.2 ** 2 * gamma[1] / 5)

    def test_rejects_non_unit_diagonal(self):
        g = np.broadcast_to(2.0 * np.eye(3), (1, 3, 3)).copy()
        with pytest.raises(ValueError):
            NoiseModel(np.array([0.1]), g)

    def test_rejects_asymmetric(self):
        g = np.eye(4)
        g[0, 1] = 0.5
        with pytest.raises(ValueError):
            NoiseModel(np.array([0.1]), g[None])

    def test_rejects_negative_sigma(self):
        with pytest.raises(ValueError):
            NoiseModel(np.array([-0.1]), np.eye(3)[None])


class TestNormalize:
    def test_three_four_five(self):
        values = np.array([[[3.0], [4.0]]])  # one sample, n=2, one channel
        out = normalize_channels(FunctionalDataset(values))
        np.testing.assert_allclose(out.values[0, :, 0], [0.6, 0.8])

    def test_idempotent(self, tiny_data):
        once = normalize_channels(tiny_data)
        twice = normalize_channels(once)
        np.testing.assert_allclose(twice.values, once.values, atol=1e-12)

    def test_all_norms_one(self):
        values = np.random.default_rng(1).standard_normal((5, 10, 3))
        out = normalize_channels(FunctionalDataset(values))
        norms = np.linalg.norm(out.values, axis=1)
        np.testing.assert_allclose(norms, 1.0, atol=1e-12)

    def test_zero_column_reported(self):
        values = np.ones((2, 3, 2))
        values[1, :, 0] = 0.0
        with pytest.raises(ValueError, match="sample 1.*channel 1"):
            normalize_channels(FunctionalDataset(values))


class TestSplit:
    def test_train_test_sizes(self):
        data = FunctionalDataset(
            np.random.default_rng(2).standard_normal((500, 3, 2)))
        train, test = split(data, 450, seed=0)
        assert train.n_samples == 450 and test.n_samples == 50

    def test_deterministic(self, tiny_data):
        a1, b1 = split(tiny_data, 2, seed=9)
        a2, b2 = split(tiny_data, 2, seed=9)
        np.testing.assert_array_equal(a1.values, a2.values)
        np.testing.assert_array_equal(b1.values, b2.values)

    def test_partition_complete(self):
        data = FunctionalDataset(
            np.random.default_rng(3).standard_normal((10, 2, 2)))
        for seed in (1, 2):
            train, test = split(data, 6, seed=seed)
            merged = np.concatenate([train.values, test.values])
            key = np.lexsort(merged.reshape(merged.shape[0], -1).T[::-1])
            orig = np.lexsort(data.values.reshape(10, -1).T[::-1])
            np.testing.assert_array_equal(merged[key],
                                          data.values[orig])

    def test_seeds_differ(self):
        data = FunctionalDataset(
            np.random.default_rng(4).standard_normal((10, 2, 2)))
        t1, _ = split(data, 5, seed=1)
        t2, _ = split(data, 5, seed=2)
        assert not np.array_equal(t1.values, t2.values)

    def test_range_checks(self, tiny_data):
        with pytest.raises(ValueError):
            split(tiny_data, 0, seed=0)
        with pytest.raises(ValueError):
            split(tiny_data, tiny_data.n_samples, seed=0)


class TestCsv:
    def test_roundtrip(self, tiny_data):
        text = to_csv_string(tiny_data)
        back = read_csv(io.StringIO(text))
        np.testing.assert_array_equal(back.values, tiny_data.values)
        assert back.channel_names == tiny_data.channel_names

    def test_header_and_zero_based_time(self, tiny_data):
        lines = to_csv_string(tiny_data).splitlines()
        assert lines[0] == "sample_id,time_index,channel_id,value"
        first = lines[1].split(",")
        assert first[0] == "0" and first[1] == "0"

    def test_missing_cell_rejected(self, tiny_data):
        lines = to_csv_string(tiny_data).splitlines()
        with pytest.raises(ValueError, match="missing"):
            read_csv(io.StringIO("\n".join(lines[:-1]) + "\n"))

    def test_duplicate_cell_rejected(self, tiny_data):
        lines = to_csv_string(tiny_data).splitlines()
        with pytest.raises(ValueError, match="duplicate"):
            read_csv(io.StringIO("\n".join(lines + [lines[-1]]) + "\n"))

    def test_channel_order_by_first_appearance(self):
        text = ("sample_id,time_index,channel_id,value\n"
                "0,0,beta,1.0\n0,0,alpha,2.0\n"
                "0,1,beta,3.0\n0,1,alpha,4.0\n")
        data = read_csv(io.StringIO(text))
        assert data.channel_names == ("beta", "alpha")
        np.testing.assert_array_equal(data.values[0], [[1.0, 2.0], [3.0, 4.0]])

    def test_file_roundtrip(self, tiny_data, tmp_path):
        path = tmp_path / "data.csv"
        write_csv(tiny_data, path)
        back = read_csv(path)
        np.testing.assert_array_equal(back.values, tiny_data.values)
