"""
Verification suites at small trial counts
"""

import math

import pytest

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from schurlab.models.schemas import VerifySuite
from schurlab.services.verification import (
    DEFAULT_TOLERANCES,
    complete_homogeneous,
    run_suite,
    verify_decomposition,
    verify_divdiff,
    verify_partition,
    verify_reductions,
    verify_remark,
)


class TestVerificationSuites:

    def test_complete_homogeneous(self):
        """h_2(1, 2) = 1 + 2 + 4"""
        assert complete_homogeneous([1.0, 2.0], 2) == 7.0
        assert complete_homogeneous([3.0], 0) == 1.0

    def test_reductions(self):
        report = verify_reductions(n=3, trials=12, seed=1)
        assert report.passed
        assert report.tol == DEFAULT_TOLERANCES[VerifySuite.REDUCTIONS]
        assert {"insert_xi", "zero_insert"} <= set(report.details["max_by_check"])

    def test_divdiff(self):
        report = verify_divdiff(n=3, trials=12, seed=2, oracle_samples=4000)
        assert report.max_residual <= report.tol
        assert math.isfinite(report.details["oracle_sigma"])
        cases = report.details["oracle_sigma_by_case"]
        assert len(cases) == 3 * 3 + 1
        assert {"exp_n3", "sin_n1", "x^4_n2", "a_2_n2"} <= set(cases)

    def test_decomposition(self):
        """n = 2 keeps the Q-table small"""
        report = verify_decomposition(n=2, trials=5, seed=3)
        assert report.passed
        assert report.details["monomials_positive"]

    def test_partition(self):
        report = verify_partition(trials=10, seed=4)
        assert report.passed
        assert report.details["max_by_check"]["support"] == 0.0

    def test_remark(self):
        report = verify_remark(trials=20, seed=5)
        assert report.passed
        assert report.trials == 20

    def test_same_seed_same_report(self):
        first = verify_reductions(n=3, trials=6, seed=9)
        second = verify_reductions(n=3, trials=6, seed=9)
        assert first.max_residual == second.max_residual

    def test_tolerance_breach_is_reported(self):
        """A tolerance below rounding fails without raising"""
        report = run_suite(VerifySuite.REDUCTIONS, n=3, trials=10, seed=0, tol=1e-300)
        assert not report.passed

    @pytest.mark.parametrize("suite", ["remark", "partition"])
    def test_dispatch(self, suite):
        report = run_suite(suite, trials=4, seed=0)
        assert report.suite == suite

        print("✅ Suite dispatch test passed")
