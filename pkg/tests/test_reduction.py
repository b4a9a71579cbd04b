"""
Tests for the node-insertion reductions
"""

import numpy as np
import pytest

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from schurlab.core.error_handling import (
    DegenerateDenominatorError,
    IndexOutOfRangeError,
    ZeroNodeError,
)
from schurlab.models.numerics import MultiIndex, NodeVector
from schurlab.services.divdiff import (
    divdiff_eval,
    divdiff_points,
    make_abs_power,
    make_exp,
    make_power,
    make_sin,
)
from schurlab.services.reduction import (
    ReductionSource,
    binomial_prefactor,
    reduce_algebraic,
    reduce_general,
    reduce_insert_xi,
    reduce_zero_insert,
)


class TestPointReductions:
    """Single-variable insertion and zero insertion"""

    @pytest.fixture
    def points(self):
        return [-1.4, -0.3, 0.8, 1.9]

    def test_insert_xi(self, points):
        """Two terms reproduce the divided difference"""
        f = make_exp()
        lhs = divdiff_points(f, points)
        expansion = reduce_insert_xi(f, points, 0, 2, 0.35)
        assert len(expansion) == 2
        assert expansion.source == ReductionSource.INSERT_XI
        assert expansion.residual(f, lhs) < 1e-12

    def test_zero_insert(self, points):
        f = make_sin()
        lhs = divdiff_points(f, points)
        expansion = reduce_zero_insert(f, points, 3, 0)
        assert expansion.residual(f, lhs) < 1e-12

    def test_zero_insert_abs_power(self):
        """a_3 at (2, 0, 0, −1) via one zero insertion"""
        a3 = make_abs_power(3)
        expansion = reduce_zero_insert(a3, [2.0, 0.0, 0.0, -1.0], 0, 3)
        assert expansion.evaluate(a3) == pytest.approx(2.0)

    @pytest.mark.parametrize("t0,t1", [(2.0, 0.5), (1.0, 3.0), (0.7, 0.7)])
    def test_zero_insert_first_order(self, t0, t1):
        """a_1 at (t_0, −t_1) is (t_0 − t_1)/(t_0 + t_1)"""
        a1 = make_abs_power(1)
        expansion = reduce_zero_insert(a1, [t0, -t1], 0, 1)
        assert [t.coefficient for t in expansion.terms] == pytest.approx([t0 / (t0 + t1), t1 / (t0 + t1)])
        assert expansion.evaluate(a1) == pytest.approx((t0 - t1) / (t0 + t1), abs=1e-15)
        assert divdiff_points(a1, [t0, -t1]) == pytest.approx((t0 - t1) / (t0 + t1), abs=1e-15)

    def test_zero_insert_alternating_signs(self):
        """a_3 at (1, −2, 3, −4) is 3!·(−31/105)"""
        a3 = make_abs_power(3)
        points = [1.0, -2.0, 3.0, -4.0]
        lhs = divdiff_points(a3, points)
        assert lhs == pytest.approx(-62.0 / 35.0, rel=1e-12)
        assert reduce_zero_insert(a3, points, 0, 1).residual(a3, lhs) <= 1e-10

    def test_zero_pivot(self, points):
        with pytest.raises(ZeroNodeError):
            reduce_zero_insert(make_sin(), [0.0, 1.0, 2.0], 0, 1)

    def test_equal_pivots(self):
        with pytest.raises(DegenerateDenominatorError):
            reduce_insert_xi(make_exp(), [1.0, 1.0, 2.0], 0, 1, 0.5)

    def test_pivots_within_tolerance(self):
        """A nonzero span below the node tolerance is still degenerate"""
        with pytest.raises(DegenerateDenominatorError):
            reduce_insert_xi(make_exp(), [1.0, 1.0 + 1e-14, 2.0], 0, 1, 0.5)
        with pytest.raises(DegenerateDenominatorError):
            reduce_zero_insert(make_exp(), [1.0, 1.0 + 1e-14, 2.0], 1, 0)

    def test_index_out_of_range(self, points):
        with pytest.raises(IndexOutOfRangeError):
            reduce_insert_xi(make_exp(), points, 0, 4, 0.5)


class TestBlockReductions:
    """Insertion between blocks with multiplicities"""

    @pytest.fixture
    def nodes(self):
        return NodeVector((-1.0, 0.4, 1.7), MultiIndex((2, 3, 1)))

    def test_general_first_order(self):
        """x^2 over (3, 1) with ξ = 0: 3/2·f[3, 0] − 1/2·f[0, 1] = 4"""
        f = make_power(2)
        expansion = reduce_general(f, NodeVector.simple(3.0, 1.0), 0, 1, 0.0)
        assert [t.coefficient for t in expansion.terms] == pytest.approx([1.5, -0.5])
        assert [t.nodes.distinct_nodes for t in expansion.terms] == [(3.0, 0.0), (0.0, 1.0)]
        assert [divdiff_eval(f, t.nodes) for t in expansion.terms] == pytest.approx([3.0, 1.0])
        assert expansion.evaluate(f) == pytest.approx(4.0)

    def test_general_term_count(self, nodes):
        """α_i + α_j terms, coefficients from p_{a,l}"""
        expansion = reduce_general(make_exp(), nodes, 0, 1, 0.9)
        assert len(expansion) == 5
        assert binomial_prefactor(3, 1) == 3

    @pytest.mark.parametrize("xi", [0.9, -2.3, 0.1])
    def test_general_identity(self, nodes, xi):
        """ξ inside and outside the block span"""
        f = make_exp()
        lhs = divdiff_eval(f, nodes)
        expansion = reduce_general(f, nodes, 0, 1, xi)
        assert expansion.residual(f, lhs) < 1e-9

    def test_polynomial_exact(self, nodes):
        """Polynomials of degree |α| − 1 give the leading coefficient on both sides"""
        f = make_power(5)
        expansion = reduce_general(f, nodes, 1, 2, -0.2)
        assert expansion.evaluate(f) == pytest.approx(1.0, abs=1e-9)

    def test_algebraic_absorbs_block(self, nodes):
        """ξ = λ_k merges into block k"""
        f = make_sin()
        lhs = divdiff_eval(f, nodes)
        expansion = reduce_algebraic(f, nodes, 0, 1, 2)
        assert expansion.source == ReductionSource.ALGEBRAIC
        assert all(len(t.nodes.distinct_nodes) == 2 for t in expansion.terms)
        assert all(t.nodes.order == nodes.order for t in expansion.terms)
        assert expansion.residual(f, lhs) < 1e-9

    @pytest.mark.parametrize("k", [0, 1])
    def test_algebraic_pivot_block(self, nodes, k):
        """k = i or k = j collapses to the left side with weight 1"""
        f = make_sin()
        expansion = reduce_algebraic(f, nodes, 0, 1, k)
        weighted = [t for t in expansion.terms if t.coefficient != 0.0]
        assert len(weighted) == 1
        assert weighted[0].coefficient == pytest.approx(1.0)
        assert weighted[0].nodes.order == nodes.order
        assert expansion.residual(f, divdiff_eval(f, nodes)) < 1e-12

    def test_algebraic_block_out_of_range(self, nodes):
        with pytest.raises(IndexOutOfRangeError):
            reduce_algebraic(make_sin(), nodes, 0, 1, 3)

    def test_same_block_rejected(self, nodes):
        with pytest.raises(DegenerateDenominatorError):
            reduce_general(make_sin(), nodes, 1, 1, 0.0)

    def test_random_identities(self):
        """Random spaced nodes and insertion points"""
        rng = np.random.default_rng(4)
        f = make_exp()
        for _ in range(25):
            lam = np.sort(rng.uniform(-2, 2, size=3))
            if np.diff(lam).min() < 0.3:
                continue
            xi = rng.uniform(-2, 2)
            if np.min(np.abs(lam - xi)) < 0.3:
                continue
            nodes = NodeVector(tuple(lam), MultiIndex((2, 2, 1)))
            expansion = reduce_general(f, nodes, 0, 2, xi)
            assert expansion.residual(f, divdiff_eval(f, nodes)) < 1e-8
