"""Block-coordinate loop alternating coefficient fits with noise estimation."""

import numpy as np

from dfsl import (FunctionalDataset, NoiseModel, PenaltyConfig, fit_bcd,
                  fit_dfsl, generate, model_I)
from dfsl.simulate import _segment

PEN = PenaltyConfig.from_lambda0(0.2, 0.9)


class TestFixedNoise:
    def test_single_outer_matches_plain_fit(self):
        data, truth = model_I(20, 0.05, seed=0)
        path, noise = fit_bcd(data, PEN, max_outer=1,
                              noise_init=truth.noise, update_noise=False)
        direct = fit_dfsl(data, PEN, noise=truth.noise)
        assert np.array_equal(path.values, direct.values)
        assert noise is truth.noise

    def test_identity_init_matches_unwhitened_fit(self, rng):
        data = FunctionalDataset(rng.standard_normal((5, 8, 3)))
        path, _ = fit_bcd(data, PenaltyConfig(0.1, 0.1), max_outer=1,
                          update_noise=False)
        direct = fit_dfsl(data, PenaltyConfig(0.1, 0.1))
        assert np.array_equal(path.values, direct.values)


class TestNoiseUpdate:
    def test_recovers_autocorrelation(self):
        data, truth = model_I(60, 0.05, seed=3)
        path, noise = fit_bcd(data, PEN, max_outer=3)
        g_true = truth.noise.gamma[0]
        rel = (np.linalg.norm(noise.gamma[0] - g_true, 2)
               / np.linalg.norm(g_true, 2))
        base = (np.linalg.norm(np.eye(40) - g_true, 2)
                / np.linalg.norm(g_true, 2))
        assert rel < 0.15 < base
        assert 0.03 < noise.sigma[0] < 0.07
        assert all(path.converged)

    def test_white_noise_detected_as_identity(self):
        specs = [_segment(20, ["bspline", "fourier"]) for _ in range(2)]
        data, _ = generate(specs, 60, 0.05, None, 3)
        _, noise = fit_bcd(data, PEN, max_outer=3)
        assert np.array_equal(noise.gamma[0], np.eye(40))

    def test_returned_noise_is_valid_model(self):
        data, _ = model_I(30, 0.1, seed=1)
        path, noise = fit_bcd(data, PEN, max_outer=2)
        assert isinstance(noise, NoiseModel)
        assert noise.sigma.shape == (8,)
        assert np.all(noise.sigma > 0)
        w = np.linalg.eigvalsh(noise.gamma[0])
        assert w.min() > -1e-10
        diag = path.values[np.arange(8), np.arange(8)]
        assert np.all(diag == 0.0)

    def test_deterministic(self):
        data, _ = model_I(30, 0.1, seed=5)
        a = fit_bcd(data, PEN, max_outer=2)
        b = fit_bcd(data, PEN, max_outer=2)
        assert np.array_equal(a[0].values, b[0].values)
        assert np.array_equal(a[1].gamma, b[1].gamma)
