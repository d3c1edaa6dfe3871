"""Basis-function generators: B-splines, sampled cosines, wavelets."""

import numpy as np
import pytest

from dfsl import (bspline_basis, bspline_design_matrix, fourier_basis,
                  orthogonalize, wavelet_basis)


class TestBspline:
    def test_model_shape(self):
        b = bspline_basis(20, order=3, selected=[1, 4, 7])
        assert b.columns.shape == (20, 3)
        assert b.family == "bspline"

    def test_unit_columns(self):
        b = bspline_basis(20, order=3, selected=[1, 4, 7])
        np.testing.assert_allclose(np.linalg.norm(b.columns, axis=0), 1.0,
                                   atol=1e-12)

    def test_partition_of_unity(self):
        dm = bspline_design_matrix(25, order=3)
        np.testing.assert_allclose(dm.sum(axis=1), 1.0, atol=1e-10)

    def test_one_based_selection(self):
        dm = bspline_design_matrix(15, order=3)
        b = bspline_basis(15, order=3, selected=[1])
        np.testing.assert_allclose(
            b.columns[:, 0], dm[:, 0] / np.linalg.norm(dm[:, 0]), atol=1e-12)

    def test_selection_out_of_range(self):
        with pytest.raises(ValueError):
            bspline_basis(10, order=3, selected=[999])
        with pytest.raises(ValueError):
            bspline_basis(10, order=3, selected=[0])


class TestFourier:
    def test_golden_n4(self):
        # t in {0, 2pi/3, 4pi/3, 2pi} inclusive; cos(t + pi) by hand
        b = fourier_basis(4, q_max=1)
        expect = np.array([-1.0, 0.5, 0.5, -1.0])
        expect /= np.linalg.norm(expect)
        np.testing.assert_allclose(b.columns[:, 0], expect, atol=1e-12)

    def test_first_point_negative(self):
        # cos(q*0 + q*pi) = (-1)^q before normalization
        b = fourier_basis(50, q_max=3)
        assert b.columns[0, 0] < 0 and b.columns[0, 2] < 0
        assert b.columns[0, 1] > 0

    def test_near_orthogonal(self):
        b = fourier_basis(200, q_max=3)
        gram = b.columns.T @ b.columns
        off = gram - np.diag(np.diag(gram))
        assert np.abs(off).max() < 0.02

    def test_shape(self):
        assert fourier_basis(20, q_max=3).columns.shape == (20, 3)

    def test_validation(self):
        with pytest.raises(ValueError):
            fourier_basis(10, q_max=0)


class TestWavelet:
    def test_haar_orthogonal(self):
        b = wavelet_basis(8, 3, "haar")
        np.testing.assert_allclose(b.columns.T @ b.columns, np.eye(3),
                                   atol=1e-12)

    def test_gram_identity_all_families(self):
        for family in ("haar", "d4"):
            b = wavelet_basis(16, 5, family)
            np.testing.assert_allclose(b.columns.T @ b.columns, np.eye(5),
                                       atol=1e-10)

    def test_haar_first_column_constant(self):
        b = wavelet_basis(4, 1, "haar")
        np.testing.assert_allclose(b.columns[:, 0], 0.5, atol=1e-12)

    def test_non_power_of_two_rejected(self):
        with pytest.raises(ValueError, match="power-of-two"):
            wavelet_basis(12, 3, "haar")

    def test_too_many_functions_rejected(self):
        with pytest.raises(ValueError):
            wavelet_basis(8, 9, "haar")

    def test_unknown_family_rejected(self):
        with pytest.raises(ValueError):
            wavelet_basis(8, 3, "vaidyanathan")


class TestOrthogonalize:
    def test_fixed_point(self):
        b = wavelet_basis(8, 3, "haar")
        out = orthogonalize(b)
        np.testing.assert_allclose(out.columns, b.columns, atol=1e-12)

    def test_hand_case(self):
        cols = np.zeros((4, 2))
        cols[0, 0] = 1.0
        cols[0, 1] = 1.0
        cols[1, 1] = 1.0
        from dfsl import BasisMatrix
        out = orthogonalize(BasisMatrix(cols, "custom", {}))
        expect = np.zeros((4, 2))
        expect[0, 0] = 1.0
        expect[1, 1] = 1.0
        np.testing.assert_allclose(out.columns, expect, atol=1e-12)

    def test_span_preserved(self, rng):
        from dfsl import BasisMatrix
        cols = rng.standard_normal((20, 3))
        out = orthogonalize(BasisMatrix(cols, "custom", {}))
        q_in, _ = np.linalg.qr(cols)
        p_in = q_in @ q_in.T
        p_out = out.columns @ out.columns.T
        assert np.linalg.norm(p_in - p_out) < 1e-10

    def test_first_direction_preserved(self, rng):
        from dfsl import BasisMatrix
        cols = rng.standard_normal((10, 2))
        out = orthogonalize(BasisMatrix(cols, "custom", {}))
        cos = cols[:, 0] @ out.columns[:, 0]
        assert cos > 0
        np.testing.assert_allclose(out.columns[:, 0],
                                   cols[:, 0] / np.linalg.norm(cols[:, 0]),
                                   atol=1e-12)

    def test_rank_deficiency_rejected(self):
        from dfsl import BasisMatrix
        cols = np.ones((6, 2))
        with pytest.raises(ValueError):
            orthogonalize(BasisMatrix(cols, "custom", {}))


class TestInvariants:
    def test_deterministic(self):
        for make in (lambda: bspline_basis(20, 3, [1, 4, 7]),
                     lambda: fourier_basis(20, 3),
                     lambda: wavelet_basis(16, 3, "d4")):
            assert np.array_equal(make().columns, make().columns)

    def test_self_affinity_sqrt_d(self):
        for b in (bspline_basis(20, 3, [1, 4, 7]), fourier_basis(20, 3),
                  wavelet_basis(16, 3, "haar")):
            o = orthogonalize(b)
            aff = np.linalg.norm(o.columns.T @ o.columns)
            assert abs(aff - np.sqrt(3)) < 1e-8
