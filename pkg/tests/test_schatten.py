"""
Tests for Schatten norms, Schur multiplication and the lattice symbols
"""

import itertools
import math

import numpy as np
import pytest

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from schurlab.core.error_handling import (
    DimensionMismatchError,
    IndexOutOfRangeError,
    InvalidExponentsError,
)
from schurlab.services.divdiff import make_abs_power, make_exp
from schurlab.services.schatten import (
    DiscreteSymbol,
    TruncationKind,
    embed_matrix,
    embed_symbol,
    lattice_inner_limit,
    lattice_limit,
    lattice_position_nodes,
    lattice_symbol,
    nested_multiply,
    sampled_symbol,
    schatten_norm,
    schur_multiply,
    symbol_from_payload,
    symbol_to_payload,
    truncate,
    truncation_symbol,
)


class TestSchattenNorm:

    def test_diagonal(self):
        x = np.diag([3.0, 4.0])
        assert schatten_norm(x, 1) == pytest.approx(7.0)
        assert schatten_norm(x, 2) == pytest.approx(5.0)
        assert schatten_norm(x, math.inf) == pytest.approx(4.0)

    def test_unitary_invariance(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((6, 6))
        q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
        assert schatten_norm(q @ x, 3.0) == pytest.approx(schatten_norm(x, 3.0), rel=1e-12)

    def test_zero_matrix(self):
        assert schatten_norm(np.zeros((3, 3)), 2.5) == 0.0

    def test_invalid_exponent(self):
        with pytest.raises(InvalidExponentsError):
            schatten_norm(np.eye(2), 0.5)

    @pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 4.0, math.inf])
    def test_diagonal_projection_contracts(self, p):
        rng = np.random.default_rng(int(10 * min(p, 9.0)))
        for _ in range(20):
            x = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
            assert schatten_norm(truncate(x, "diagonal"), p) <= schatten_norm(x, p) * (1.0 + 1e-12)

    def test_hoelder(self):
        """‖x_1x_2‖_p ≤ ‖x_1‖_{p_1}‖x_2‖_{p_2} with 1/p = 1/p_1 + 1/p_2"""
        rng = np.random.default_rng(5)
        for p1, p2 in [(2.0, 2.0), (3.0, 6.0), (4.0, math.inf)]:
            p = 1.0 / (1.0 / p1 + 1.0 / p2)
            for _ in range(20):
                x1, x2 = rng.standard_normal((2, 4, 4))
                bound = schatten_norm(x1, p1) * schatten_norm(x2, p2)
                assert schatten_norm(x1 @ x2, p) <= bound * (1.0 + 1e-12)


class TestSchurMultiply:

    @pytest.fixture
    def rng(self):
        return np.random.default_rng(12)

    def test_ones_is_ordinary_product(self, rng):
        xs = [rng.standard_normal((4, 4)) for _ in range(3)]
        out = schur_multiply(DiscreteSymbol.ones(3, 4), xs)
        np.testing.assert_allclose(out, xs[0] @ xs[1] @ xs[2], atol=1e-12)

    def test_factor_path_matches_table(self, rng):
        factors = [rng.standard_normal((5, 5)) for _ in range(2)]
        phi = DiscreteSymbol.from_factors(factors)
        xs = [rng.standard_normal((5, 5)) for _ in range(2)]
        np.testing.assert_allclose(schur_multiply(phi, xs), schur_multiply(phi, xs, direct=True), atol=1e-12)
        np.testing.assert_allclose(nested_multiply(factors, xs), (factors[0] * xs[0]) @ (factors[1] * xs[1]))

    def test_table_definition(self, rng):
        """T_φ(x)[s_0, s_2] = Σ_{s_1} φ(s_0, s_1, s_2) x_1[s_0, s_1] x_2[s_1, s_2]"""
        phi = DiscreteSymbol(2, (0, 1, 2), rng.standard_normal((3, 3, 3)))
        xs = [rng.standard_normal((3, 3)) for _ in range(2)]
        out = schur_multiply(phi, xs)
        expected = np.zeros((3, 3))
        for a, b, c in itertools.product(range(3), repeat=3):
            expected[a, c] += phi.table[a, b, c] * xs[0][a, b] * xs[1][b, c]
        np.testing.assert_allclose(out, expected, atol=1e-12)

    def test_dimension_mismatch(self, rng):
        phi = DiscreteSymbol.ones(2, 3)
        with pytest.raises(DimensionMismatchError):
            schur_multiply(phi, [np.eye(3)])
        with pytest.raises(DimensionMismatchError):
            schur_multiply(phi, [np.eye(3), np.eye(4)])
        with pytest.raises(DimensionMismatchError):
            DiscreteSymbol(1, (0, 1), np.ones((3, 3)))

    def test_truncations(self):
        x = np.arange(9.0).reshape(3, 3)
        np.testing.assert_array_equal(truncate(x, "upper"), [[0, 1, 2], [0, 0, 5], [0, 0, 0]])
        np.testing.assert_array_equal(truncate(x, TruncationKind.LOWER), [[0, 0, 0], [3, 0, 0], [6, 7, 0]])
        np.testing.assert_array_equal(truncate(x, "diagonal"), np.diag([0.0, 4.0, 8.0]))
        for kind in TruncationKind:
            np.testing.assert_array_equal(schur_multiply(truncation_symbol(kind, 3), [x]), truncate(x, kind))


class TestLatticeSymbols:

    def test_position_nodes(self):
        nodes = lattice_position_nodes(1, 0.5, 1, 2, 2, (0, 1))
        np.testing.assert_allclose(nodes[0], [0.5, 0.25])
        np.testing.assert_allclose(nodes[1], [0.5 ** 4, 0.5 ** 6])
        np.testing.assert_allclose(nodes[2], [-0.5, -0.25])
        second = lattice_position_nodes(2, 0.5, 1, 2, 3, (0, 1))
        np.testing.assert_allclose(second[1], -second[0])
        np.testing.assert_allclose(second[2], second[0])

    def test_invalid_parameters(self):
        with pytest.raises(IndexOutOfRangeError):
            lattice_position_nodes(1, 1.5, 1, 2, 2, (0, 1))
        with pytest.raises(IndexOutOfRangeError):
            lattice_position_nodes(3, 0.5, 1, 2, 2, (0, 1))
        with pytest.raises(IndexOutOfRangeError):
            lattice_position_nodes(2, 0.5, 1, 2, 1, (0, 1))

    @pytest.mark.parametrize("variant", [1, 2])
    def test_deep_lattice_near_limit(self, variant):
        """Large k and l give the double limit up to q^k-small corrections"""
        phi = lattice_symbol(variant, 0.5, 30, 60, 2, (0, 1, 2))
        for pos in itertools.product(range(3), repeat=3):
            assert phi.table[pos] == pytest.approx(lattice_limit(variant, pos, 2), abs=1e-6)

    def test_first_limit_values(self):
        assert lattice_limit(1, (0, 2, 1), 2) == 2.0
        assert lattice_limit(1, (1, 0, 0), 2) == -2.0
        assert lattice_limit(1, (1, 0, 1), 2) == 0.0

    def test_inner_limit(self):
        """Large l at fixed k collapses the middle nodes"""
        phi = lattice_symbol(1, 0.5, 2, 40, 2, (0, 1, 2))
        for pos in itertools.product(range(3), repeat=3):
            assert phi.table[pos] == pytest.approx(lattice_inner_limit(1, 0.5, 2, pos, 2), abs=1e-6)

    def test_sup_norm_bounded(self):
        """|a_n^{[n]}| ≤ n! everywhere"""
        phi = lattice_symbol(2, 0.5, 3, 5, 3, (0, 1, 2))
        assert phi.sup_norm <= 6.0 + 1e-12


class TestSampledSymbols:

    def test_abs_power_on_positive_grid(self):
        """One-signed off the diagonal, 0 on it"""
        phi = sampled_symbol(make_abs_power(2), [0.5, 1.0, 2.0], 2)
        for pos in itertools.product(range(3), repeat=3):
            expected = 0.0 if pos[0] == pos[1] == pos[2] else 2.0
            assert phi.table[pos] == pytest.approx(expected)

    def test_symmetric_in_positions(self):
        phi = sampled_symbol(make_exp(), [-1.0, 0.0, 0.5, 2.0], 2)
        np.testing.assert_allclose(phi.table, np.transpose(phi.table, (2, 0, 1)))

    def test_embedding(self):
        phi = DiscreteSymbol(1, (1, 3), np.array([[1.0, 2.0], [3.0, 4.0]]))
        big = embed_symbol(phi, (0, 1, 2, 3))
        np.testing.assert_array_equal(big.table[np.ix_([1, 3], [1, 3])], phi.table)
        assert big.table[0].sum() == 0.0
        x = np.array([[5.0, 6.0], [7.0, 8.0]])
        np.testing.assert_array_equal(schur_multiply(big, [embed_matrix(x, (1, 3), range(4))]),
                                      embed_matrix(phi.table * x, (1, 3), range(4)))
        with pytest.raises(IndexOutOfRangeError):
            embed_symbol(phi, (0, 1, 2))

    def test_payload_round_trip(self):
        phi = lattice_symbol(1, 0.5, 2, 4, 2, (0, 2))
        again = symbol_from_payload(symbol_to_payload(phi))
        assert again.index_set == phi.index_set
        np.testing.assert_array_equal(again.table, phi.table)
