import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from cutproject.diophantine import (
    PsiFamily,
    SeriesVerdict,
    approximation_profile,
    continued_fraction,
    kg_classify,
    linear_form_norm,
    transference,
    transference_verify,
    value_from_quotients,
)
from cutproject.errors import Overflow

from conftest import ALPHA_GOLDEN


class TestContinuedFraction:
    def test_golden_conjugate(self):
        cf = continued_fraction(ALPHA_GOLDEN, depth=5)
        assert cf.quotients == (0, 1, 1, 1, 1)
        assert cf.convergents == ((0, 1), (1, 1), (1, 2), (2, 3), (3, 5))

    def test_rational_terminates(self):
        cf = continued_fraction(0.5, depth=10)
        assert cf.quotients == (0, 2)
        assert cf.rational_termination

    def test_best_approximation_decreasing(self):
        cf = continued_fraction((np.sqrt(5) - 1) / 2, depth=15)
        errs = [abs(q * cf.x - p) for p, q in cf.convergents]
        assert all(a > b for a, b in zip(errs, errs[1:]))

    def test_convergent_quality(self):
        cf = continued_fraction(np.pi % 1, depth=8)
        for p, q in cf.convergents[1:]:
            assert abs(cf.x - p / q) < 1.0 / q**2

    def test_value_round_trip(self):
        quotients = (0, 1, 4, 16, 64, 2, 3)
        x = value_from_quotients(quotients)
        assert continued_fraction(x, depth=7).quotients == quotients


class TestApproximationProfile:
    def test_fibonacci_records(self):
        profile = approximation_profile([[(np.sqrt(5) - 1) / 2]], q_max=13)
        assert [r.height for r in profile.records] == [1, 2, 3, 5, 8, 13]

    def test_single_record_at_qmax_one(self):
        profile = approximation_profile([[0.3818]], q_max=1)
        assert len(profile.records) == 1
        assert profile.records[0].height == 1

    def test_invariant_under_mod_one(self):
        a, b = 3.7183, 0.7183
        pa = approximation_profile([[a]], q_max=30)
        pb = approximation_profile([[b]], q_max=30)
        assert [r.height for r in pa.records] == [r.height for r in pb.records]
        assert_allclose(
            [r.norm for r in pa.records], [r.norm for r in pb.records], atol=1e-12
        )

    def test_fast_path_matches_sweep(self):
        # force the generic sweep by shaping the matrix as 2 forms, one trivial
        alpha = 0.5411961001461969
        fast = approximation_profile([[alpha]], q_max=40)
        q = np.arange(1, 41)
        norms = np.abs(alpha * q - np.round(alpha * q))
        best = np.minimum.accumulate(norms)
        expected_heights = [1] + [int(q[i]) for i in range(1, 40) if norms[i] < best[i - 1]]
        assert [r.height for r in fast.records] == expected_heights

    def test_records_strictly_monotone(self):
        profile = approximation_profile(np.array([[0.31, 0.77], [0.52, 0.18]]), q_max=25)
        norms = [r.norm for r in profile.records]
        heights = [r.height for r in profile.records]
        assert all(a > b for a, b in zip(norms, norms[1:]))
        assert all(a < b for a, b in zip(heights, heights[1:]))
        # brute-force cross check of the final minimum
        qs = [(i, j) for i in range(-25, 26) for j in range(-25, 26) if (i, j) != (0, 0)]
        brute = min(linear_form_norm(np.array([[0.31, 0.77], [0.52, 0.18]]), q) for q in qs)
        assert_allclose(norms[-1], brute, atol=1e-14)


class TestKGClassify:
    def test_convergent_setup(self):
        # psi(r) = (r^d (log r)^{1+eps})^{-1} with one form: converges
        family = PsiFamily(a=1.0, b=1.5)
        assert kg_classify(family, m=1, n=1).verdict == SeriesVerdict.CONVERGES

    def test_critical_log_diverges(self):
        family = PsiFamily(a=2.0, b=1.0)
        assert kg_classify(family, m=2, n=1).verdict == SeriesVerdict.DIVERGES

    def test_supercritical_power(self):
        family = PsiFamily(a=2.0 / 3.0 + 0.05, b=0.0)
        assert kg_classify(family, m=2, n=3).verdict == SeriesVerdict.CONVERGES

    def test_partial_sum_tracks_verdict(self):
        conv = kg_classify(PsiFamily(a=2.0, b=0.0), m=1, n=1, display_terms=10**5)
        div = kg_classify(PsiFamily(a=0.5, b=0.0), m=1, n=1, display_terms=10**5)
        assert conv.partial_sum < 10
        assert div.partial_sum > 100


class TestTransference:
    def test_direct_substitution(self):
        c, R, h = transference(0.1, 10.0, d=1, k=2)
        assert (c, R, h) == (0.1, 10.0, 1)

    def test_unit_case(self):
        c, R, h = transference(1.0, 1.0, d=1, k=2)
        assert (c, R, h) == (1.0, 1.0, 1)

    def test_overflow(self):
        with pytest.raises(Overflow):
            transference(1e-8, 1e-8, d=1, k=3)

    def test_golden_end_to_end(self):
        alpha = (np.sqrt(5) - 1) / 2
        # no |n| <= 12 has ||n alpha|| <= psi just below ||8 alpha||
        psi = abs(8 * alpha - round(8 * alpha)) * 0.999
        check = transference_verify([[alpha]], psi_value=psi, X=12.0, gamma_grid=1000)
        assert check.hypothesis_ok
        assert check.conclusion_ok
        assert check.worst_gap <= check.c + 1e-12

    def test_two_dim_end_to_end(self):
        alpha = np.array([[0.287514, 0.701923]])
        profile = approximation_profile(alpha, q_max=6)
        psi = profile.min_norm_up_to(6) * 0.99
        check = transference_verify(alpha, psi_value=psi, X=6.0, gamma_grid=400)
        assert check.hypothesis_ok and check.conclusion_ok


class TestPsiFamily:
    def test_decreasing_threshold(self):
        fam = PsiFamily(a=1.0, b=-2.0)  # increasing log factor
        r0 = fam.r_decreasing_from
        rs = np.linspace(r0 + 1, r0 + 50, 20)
        vals = fam.value(rs)
        assert np.all(np.diff(vals) < 0)

    def test_psi_at_one_equals_two(self):
        fam = PsiFamily(a=1.0, b=1.0)
        assert fam.value(1.0) == fam.value(2.0)
