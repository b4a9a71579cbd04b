"""
Tests for the sphere partition of unity and the diagonal charts
"""

import numpy as np
import pytest

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from schurlab.core.error_handling import IndexOutOfRangeError, OnDiagonalError
from schurlab.services.partition import CoverChart, cutoff, sphere_partition, theta_eval


class TestCutoff:

    def test_plateaus(self):
        values = cutoff(np.array([0.0, 0.5, 0.75, 1.0, 2.0, np.inf]))
        np.testing.assert_array_equal(values, [1.0, 1.0, 1.0, 0.0, 0.0, 0.0])

    def test_monotone_transition(self):
        x = np.linspace(0.8, 0.95, 50)
        values = cutoff(x)
        assert np.all((values > 0.0) & (values < 1.0))
        assert np.all(np.diff(values) <= 0.0)


class TestSpherePartition:

    @pytest.fixture
    def rng(self):
        return np.random.default_rng(2024)

    def test_unit_vectors(self):
        """e_l lies in chart l only"""
        partition = sphere_partition(3)
        assert partition.eval(1, [1.0, 0.0, 0.0]) == pytest.approx(1.0)
        assert partition.eval(2, [1.0, 0.0, 0.0]) == 0.0
        assert partition.eval(3, [0.0, 0.0, -2.0]) == pytest.approx(1.0)

    def test_symmetric_point(self):
        """All coordinates equal in modulus: equal weights"""
        partition = sphere_partition(3)
        np.testing.assert_allclose(partition.eval_all(np.array([1.0, -1.0, 1.0])), [1 / 3] * 3)

    @pytest.mark.parametrize("k", [2, 3, 4])
    def test_sums_to_one(self, rng, k):
        xi = rng.standard_normal((500, k))
        weights = sphere_partition(k).eval_all(xi)
        np.testing.assert_allclose(weights.sum(axis=-1), 1.0, atol=1e-12)
        assert np.all(weights >= 0.0)

    @pytest.mark.parametrize("k", [2, 3, 4])
    def test_homogeneous_of_degree_zero(self, rng, k):
        xi = rng.standard_normal((200, k))
        partition = sphere_partition(k)
        for scale in (0.01, 3.0, 1e4):
            np.testing.assert_allclose(partition.eval_all(scale * xi), partition.eval_all(xi), atol=1e-12)

    def test_support_inside_chart(self, rng):
        """θ̃_{k,l}(ξ) > 0 only where |ξ_b| < 2|ξ_l|"""
        partition = sphere_partition(3)
        xi = rng.standard_normal((2000, 3))
        weights = partition.eval_all(xi)
        for l in range(1, 4):
            positive = weights[:, l - 1] > 0.0
            assert all(partition.in_chart(l, v) for v in xi[positive])

    def test_zero_vector(self):
        np.testing.assert_array_equal(sphere_partition(2).eval_all(np.zeros(2)), [0.0, 0.0])

    def test_invalid_chart(self):
        with pytest.raises(IndexOutOfRangeError):
            sphere_partition(2).eval(3, [1.0, 1.0])
        with pytest.raises(IndexOutOfRangeError):
            sphere_partition(0)


class TestDiagonalCharts:

    def test_theta_near_collision(self):
        """λ_2 − λ_1 tiny: the first difference dominates"""
        assert theta_eval((0, 1, 2), 1, [0.0, 1.0, 1.0005]) == pytest.approx(1.0)
        assert theta_eval((0, 1, 2), 2, [0.0, 1.0, 1.0005]) == pytest.approx(0.0)

    def test_theta_sums_over_I(self):
        lam = [0.3, -1.2, 2.0, 0.9]
        I = (0, 1, 3)
        total = sum(theta_eval(I, i, lam) for i in I[1:])
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_translation_invariance(self):
        lam = np.array([0.3, -1.2, 2.0, 0.9])
        for shift in (-5.0, 10.0):
            assert theta_eval((0, 2, 3), 2, lam + shift) == pytest.approx(
                theta_eval((0, 2, 3), 2, lam), abs=1e-12)

    def test_on_diagonal(self):
        with pytest.raises(OnDiagonalError):
            theta_eval((0, 2), 2, [1.0, 0.0, 1.0])

    def test_minimum_not_a_chart(self):
        with pytest.raises(IndexOutOfRangeError):
            theta_eval((0, 1, 2), 0, [0.0, 1.0, 2.0])

    def test_membership(self):
        chart = CoverChart((2, 0, 1), 1)
        assert chart.I == (0, 1, 2)
        np.testing.assert_allclose(chart.q_map([0.0, 1.0, 1.5]), [1.0, 0.5])
        assert chart.membership([0.0, 1.0, 1.5])
        assert not chart.membership([0.0, 0.1, 1.5])
        assert not chart.membership([1.0, 1.0, 1.0])
