"""
Tests for choice sequences, ξ/ζ coordinates and the combinatorial bound
"""

import math
from fractions import Fraction

import numpy as np
import pytest

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from schurlab.core.error_handling import (
    DegenerateDenominatorError,
    IndexOutOfRangeError,
    InvalidExponentsError,
    SingularSystemError,
)
from schurlab.models.numerics import SchattenParams
from schurlab.services.combinatorics import (
    MINUS,
    PLUS,
    ChoiceSequence,
    as_float,
    difference_basis,
    enumerate_choice_sequences,
    index_data,
    invert_exact,
    is_in_D_n,
    is_in_Delta_I,
    theoretical_bound,
    xi_vector,
    zeta_vector,
    zeta_xi_eval,
)


class TestChoiceSequence:
    """Index bookkeeping for F = ((1,+), (2,−), (4,−)) with n = 4"""

    @pytest.fixture
    def F(self):
        return ChoiceSequence(4, ((1, PLUS), (2, MINUS), (4, MINUS)))

    def test_index_sets(self, F):
        assert F.index_sets == (
            (0, 1, 2, 3, 4),
            (0, 2, 3, 4),
            (2, 3, 4),
            (2, 4),
        )
        assert F.label() == "1+,2-,4-"

    def test_first_step(self, F):
        data = index_data(F, 1)
        assert (data.current, data.lower, data.upper) == (1, 0, 2)

    def test_second_step(self, F):
        data = index_data(F, 2)
        assert data.index_set == (0, 2, 3, 4)
        assert (data.current, data.lower, data.upper) == (2, 0, 3)

    def test_cyclic_upper_neighbour(self, F):
        """The maximum's upper neighbour wraps to the minimum"""
        data = index_data(F, 3)
        assert data.index_set == (2, 3, 4)
        assert (data.current, data.lower, data.upper) == (4, 3, 2)

    def test_terminal_step(self, F):
        """At l = n only F_n = max and F_n^− = min remain"""
        data = index_data(F, 4)
        assert data.index_set == (2, 4)
        assert (data.current, data.lower, data.upper) == (4, 2, None)

    def test_invalid_pick(self):
        """The minimum of the surviving set cannot be picked"""
        with pytest.raises(IndexOutOfRangeError):
            ChoiceSequence(3, ((0, PLUS),))
        with pytest.raises(IndexOutOfRangeError):
            ChoiceSequence(3, ((1, PLUS), (1, MINUS)))
        with pytest.raises(IndexOutOfRangeError):
            ChoiceSequence(2, ((1, PLUS), (2, PLUS)))

    def test_enumeration_counts(self):
        """|F_{n,k}| = Π_{j<k} 2(n − j)"""
        assert len(enumerate_choice_sequences(2, 1)) == 4
        assert len(enumerate_choice_sequences(3, 2)) == 24
        assert len(enumerate_choice_sequences(4, 0)) == 1
        with pytest.raises(IndexOutOfRangeError):
            enumerate_choice_sequences(3, 3)


class TestCoordinates:

    def test_xi_zeta(self):
        """λ = (0, 1, 3, 6, 10): ξ_1 = 1, ζ_1 = (λ_2 − λ_0)/ξ_1 = 3"""
        F = ChoiceSequence(4, ((1, PLUS), (2, MINUS), (4, MINUS)))
        lam = (0.0, 1.0, 3.0, 6.0, 10.0)
        xi, zeta = zeta_xi_eval(F, 1, lam)
        assert xi == 1.0
        assert zeta == 3.0

    def test_minus_sign_zeta(self):
        """σ = −: ζ = (λ_{F_l} − λ_{F_l^+})/ξ"""
        F = ChoiceSequence(4, ((1, PLUS), (2, MINUS), (4, MINUS)))
        lam = (0.0, 1.0, 3.0, 6.0, 10.0)
        xi, zeta = zeta_xi_eval(F, 2, lam)
        assert xi == 3.0
        assert zeta == pytest.approx(-1.0)

    def test_small_vectors(self):
        """n = 2, F = ((1,+)), λ = (0, 1, 3)"""
        F = ChoiceSequence(2, ((1, PLUS),))
        lam = (0.0, 1.0, 3.0)
        np.testing.assert_allclose(xi_vector(F, lam), [1.0, 3.0])
        np.testing.assert_allclose(zeta_vector(F, lam), [3.0])

    def test_vanishing_xi(self):
        F = ChoiceSequence(2, ((1, PLUS),))
        with pytest.raises(DegenerateDenominatorError):
            zeta_xi_eval(F, 1, (1.0, 1.0, 3.0))

    def test_domains(self):
        assert is_in_D_n([0.0, 1.0, -2.0])
        assert not is_in_D_n([0.0, 1.0, 1.0])
        assert is_in_Delta_I([0.0, 2.0, 2.0], (1, 2))
        assert not is_in_Delta_I([0.0, 2.0, 2.0], (0, 2))


class TestDifferenceBasis:

    @pytest.mark.parametrize("F", enumerate_choice_sequences(3, 2))
    def test_R_reproduces_zeta_numerators(self, F):
        """(Rξ)_l / ξ_l = ζ_l for every F ∈ F_{3,2}"""
        lam = (0.0, 0.7, 1.9, 3.4)
        xi = xi_vector(F, lam)
        R = as_float(difference_basis(F, 1).R)
        assert R.shape == (2, 3)
        np.testing.assert_allclose((R @ xi) / xi[:2], zeta_vector(F, lam), rtol=1e-12)

    @pytest.mark.parametrize("F", enumerate_choice_sequences(3, 2))
    def test_T_maps_to_consecutive_differences(self, F):
        lam = np.array([0.0, 0.7, 1.9, 3.4])
        xi = xi_vector(F, lam)
        for k in range(1, 4):
            basis = difference_basis(F, k)
            I = F.index_sets[k - 1]
            np.testing.assert_allclose(as_float(basis.T) @ xi[k - 1:], np.diff(lam[list(I)]),
                                       rtol=1e-12, atol=1e-12)

    def test_needs_full_sequence(self):
        with pytest.raises(IndexOutOfRangeError):
            difference_basis(ChoiceSequence(3, ((1, PLUS),)), 1)

    def test_exact_inverse(self):
        M = [[Fraction(2), Fraction(1)], [Fraction(1), Fraction(1)]]
        assert invert_exact(M) == [[1, -1], [-1, 2]]
        with pytest.raises(SingularSystemError):
            invert_exact([[Fraction(1), Fraction(2)], [Fraction(2), Fraction(4)]])


class TestTheoreticalBound:

    def test_linear_case(self):
        """n = 1: B = max(p, p*)"""
        assert theoretical_bound(SchattenParams((4.0,))) == pytest.approx(4.0)

    def test_bilinear_uniform(self):
        """n = 2, p_i = 2p, p >= 2: B = 12p^2"""
        assert theoretical_bound(SchattenParams.uniform(2, 3.0)) == pytest.approx(108.0)
        assert theoretical_bound(SchattenParams.uniform(2, 5.0)) == pytest.approx(300.0)

    def test_endpoints_rejected(self):
        with pytest.raises(InvalidExponentsError):
            theoretical_bound(SchattenParams((math.inf, 4.0), allow_endpoints=True))
