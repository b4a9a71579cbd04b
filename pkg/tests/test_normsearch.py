"""
Tests for the norm lower-bound search and the experiments built on it
"""

import math

import numpy as np
import pytest

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from schurlab.core.error_handling import DimensionMismatchError, NonpositiveInputError
from schurlab.models.numerics import SchattenParams
from schurlab.services.normsearch import (
    ConstructionKind,
    WitnessKind,
    bound_curve,
    convergence_check,
    estimate_norm,
    estimate_to_record,
    fit_exponent,
    lattice_uniformity,
    norm_envelope,
    norming_matrix,
    remark_identity,
    truncation_norm_identity,
    truncation_ratio,
    volterra_sweep,
    volterra_witness,
)
from schurlab.services.schatten import DiscreteSymbol, lattice_symbol, schatten_norm
from schurlab.services.task_manager import TaskManager


class TestNormingMatrix:

    @pytest.fixture
    def z(self):
        rng = np.random.default_rng(31)
        return rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))

    @pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0, math.inf])
    def test_pairing(self, z, p):
        """‖W‖_{p*} = 1 and Tr(z W*) = ‖z‖_p"""
        W = norming_matrix(z, p)
        dual = math.inf if p == 1.0 else (1.0 if math.isinf(p) else p / (p - 1.0))
        assert schatten_norm(W, dual) == pytest.approx(1.0, rel=1e-10)
        assert np.trace(z @ W.conj().T) == pytest.approx(schatten_norm(z, p), rel=1e-10)

    def test_zero_input(self):
        np.testing.assert_array_equal(norming_matrix(np.zeros((3, 3)), 2.0), np.zeros((3, 3)))


class TestEstimateNorm:

    @pytest.fixture
    def manager(self):
        return TaskManager(threads=2)

    def test_ordinary_product(self, manager):
        """‖x_1x_2‖_2 ≤ ‖x_1‖_4‖x_2‖_4 with equality at matrix units"""
        estimate = estimate_norm(DiscreteSymbol.ones(2, 4), SchattenParams((4.0, 4.0)),
                                 restarts=3, iters=10, seed=5, task_manager=manager)
        assert estimate.value == pytest.approx(1.0, rel=1e-9)
        assert estimate.restarts == 3

    def test_linear_hilbert_schmidt(self, manager):
        """A linear multiplier on S_2 has norm max|φ|"""
        table = np.random.default_rng(3).standard_normal((5, 5))
        phi = DiscreteSymbol(1, tuple(range(5)), table)
        estimate = estimate_norm(phi, SchattenParams((2.0,)), restarts=2, iters=10, seed=1,
                                 task_manager=manager)
        assert estimate.value == pytest.approx(np.abs(table).max(), rel=1e-9)

    def test_value_is_attained(self, manager):
        phi = lattice_symbol(1, 0.5, 1, 2, 2, (0, 1, 2))
        params = SchattenParams.uniform(2, 2.0)
        estimate = estimate_norm(phi, params, restarts=3, iters=15, seed=9, task_manager=manager)
        assert estimate.recompute(phi) == pytest.approx(estimate.value, rel=1e-12)
        assert estimate.value <= estimate.envelope * (1.0 + 1e-9)
        assert estimate.envelope == pytest.approx(norm_envelope(phi, params))
        assert all(v <= estimate.value * (1.0 + 1e-12) for v in estimate.restart_values)
        assert all(b >= a for a, b in zip(estimate.trace, estimate.trace[1:]))

    def test_reproducible(self):
        phi = lattice_symbol(2, 0.5, 1, 1, 2, (0, 1, 2))
        params = SchattenParams.uniform(2, 3.0)
        first = estimate_norm(phi, params, restarts=3, iters=8, seed=42)
        second = estimate_norm(phi, params, restarts=3, iters=8, seed=42)
        assert first.value == pytest.approx(second.value, rel=1e-12)

    def test_dimension_checks(self):
        phi = DiscreteSymbol.ones(2, 3)
        with pytest.raises(DimensionMismatchError):
            estimate_norm(phi, SchattenParams.uniform(2, 2.0), N=4)
        with pytest.raises(DimensionMismatchError):
            estimate_norm(phi, SchattenParams((2.0,)))

    def test_record(self):
        estimate = estimate_norm(DiscreteSymbol.ones(1, 3), SchattenParams((2.0,)),
                                 restarts=1, iters=2, seed=0)
        record = estimate_to_record(estimate, witnesses=False)
        assert record.value == pytest.approx(estimate.value)
        assert record.witnesses == []
        assert record.p_list == [2.0]


class TestTruncationExperiments:

    def test_hilbert_witness_ratio(self):
        """The half-shifted kernel splits its S_2 mass almost evenly"""
        x = volterra_witness(128, WitnessKind.HILBERT)
        assert 0.65 < truncation_ratio(x, 2.0) < 0.72

    def test_witness_normalization(self):
        x = volterra_witness(16, WitnessKind.PATTERN, p=3.0)
        assert schatten_norm(x, 3.0) == pytest.approx(1.0)
        assert np.all(np.triu(x, 1) == 0.0)

    def test_norm_identity(self):
        x = np.random.default_rng(4).standard_normal((6, 6))
        left, right = truncation_norm_identity(x, 4.0)
        assert left == pytest.approx(right, rel=1e-10)

    def test_sweep_starts_from_witness(self):
        """Every estimate dominates the witness ratio; S_2 is contractive"""
        result = volterra_sweep(16, [2.0, 4.0], restarts=1, iters=3, seed=0)
        for p, value in zip(result.p_grid, result.estimates):
            ratio = truncation_ratio(volterra_witness(16, WitnessKind.HILBERT), p)
            assert value >= ratio * (1.0 - 1e-12)
        assert result.estimates[0] <= 1.0 + 1e-9


class TestLatticeExperiments:

    @pytest.mark.parametrize("construction,n,bound", [
        (ConstructionKind.FIRST, 2, 1e-3),
        (ConstructionKind.SECOND, 2, 1e-3),
        (ConstructionKind.SECOND, 3, 1e-2),
    ])
    def test_convergence(self, construction, n, bound):
        residual = convergence_check(construction, n, 0.5, 30, 60, (0, 1, 2, 3), seed=7)
        assert residual <= bound

    def test_convergence_improves_with_k(self):
        """Matched seeds: deeper lattices sit closer to the limit"""
        coarse = convergence_check(ConstructionKind.FIRST, 2, 0.5, 2, 4, (0, 1, 2, 3), seed=7)
        fine = convergence_check(ConstructionKind.FIRST, 2, 0.5, 20, 40, (0, 1, 2, 3), seed=7)
        assert fine < coarse

    def test_uniformity(self):
        records = lattice_uniformity(1, 2, 0.5, (0, 1), [(2, 4)], SchattenParams.uniform(2, 2.0),
                                     restarts=1, iters=5, seed=3)
        assert len(records) == 1
        record = records[0]
        assert (record.k, record.l) == (2, 4)
        assert record.embedded == pytest.approx(record.lattice, rel=1e-9)
        assert record.reference >= record.lattice * (1.0 - 1e-9)


class TestRemarkIdentity:

    def test_balanced_point(self):
        terms = remark_identity((1.0, 1.0, 1.0, 1.0))
        assert terms.terms == pytest.approx((0.0, 0.0, 0.25, -0.25))
        assert terms.lhs == pytest.approx(0.0)
        assert terms.residual <= 1e-12

    def test_random_points(self):
        rng = np.random.default_rng(10)
        for t in rng.uniform(0.01, 5.0, size=(50, 4)):
            assert remark_identity(t).residual <= 1e-9

    def test_nonpositive(self):
        with pytest.raises(NonpositiveInputError):
            remark_identity((1.0, 0.0, 1.0, 1.0))


class TestExponentFits:

    def test_exact_power(self):
        fit = fit_exponent([1.0, 2.0, 4.0, 8.0], [3.0, 12.0, 48.0, 192.0])
        assert fit.exponent == pytest.approx(2.0)
        assert fit.intercept == pytest.approx(math.log(3.0))
        assert fit.points == 4
        assert fit.claimed

    def test_too_few_points(self):
        assert fit_exponent([2.0], [1.0]) is None
        assert fit_exponent([2.0, 3.0], [0.0, -1.0]) is None

    def test_bound_curve(self):
        """B = 12p^2 for n = 2 once p ≥ 2"""
        result = bound_curve(2, [2.0, 3.0, 4.0, 8.0])
        assert result.estimates == pytest.approx([48.0, 108.0, 192.0, 768.0])
        assert result.large_p.exponent == pytest.approx(2.0)
        assert result.large_p.claimed
        assert result.small_p is None

        print("✅ Bound curve test passed")
