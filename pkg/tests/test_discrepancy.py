import numpy as np
import pytest
from numpy.testing import assert_allclose

from cutproject.acceptance import ComponentId, all_frequencies, build_grid
from cutproject.discrepancy import (
    KroneckerOrbit,
    component_counts,
    empirical_frequency,
    etk_bound,
    exp_sum_closed_form,
    fit_log_exponent,
    kendall_trend,
    log_power_sum,
    r_weight,
    sup_discrepancy,
)
from cutproject.errors import ResonantFrequency
from cutproject.scheme import SchemeSpec, frac, window_coord, window_coords

from conftest import random_spec


class TestComponentCounts:
    def test_trivial_grid_full_count(self, golden_exact):
        grid = build_grid(golden_exact, 0)
        res = component_counts(golden_exact, grid, [0], 50)
        assert res.counts.tolist() == [101]
        assert empirical_frequency(golden_exact, grid, ComponentId((0,)), [0], 50) == 1.0

    @pytest.mark.parametrize("d,k,seed,R", [(1, 2, 0, 500), (1, 3, 1, 300), (2, 4, 2, 12)])
    def test_count_conservation_stream(self, d, k, seed, R):
        spec = random_spec(d, k, seed)
        grid = build_grid(spec, 2)
        res = component_counts(spec, grid, [1] * d, R, method="stream")
        assert res.counts.sum() == (2 * R + 1) ** d == res.n_points

    def test_coverage_matches_stream_d1(self, golden_exact):
        grid = build_grid(golden_exact, 3)
        a = component_counts(golden_exact, grid, [2], 2000, method="coverage")
        b = component_counts(golden_exact, grid, [2], 2000, method="stream")
        assert np.array_equal(a.counts, b.counts)
        assert a.n_points == b.n_points

    def test_coverage_matches_stream_d2(self):
        spec = random_spec(2, 3, 5)
        grid = build_grid(spec, 2)
        a = component_counts(spec, grid, [0, 0], 150, method="coverage")
        b = component_counts(spec, grid, [0, 0], 150, method="stream")
        assert np.array_equal(a.counts, b.counts)
        assert a.counts.sum() == 301**2

    def test_empirical_partition(self):
        spec = random_spec(1, 3, 7)
        grid = build_grid(spec, 2)
        res = component_counts(spec, grid, [0], 200)
        total = sum(
            empirical_frequency(spec, grid, cid, [0], 200) for cid in grid.all_ids()
        )
        assert total == 1.0
        assert res.counts.sum() == res.n_points

    def test_golden_sturmian_rate(self, golden_exact):
        # middle component of the r=1 grid has frequency 2 - golden ratio
        grid = build_grid(golden_exact, 1)
        R = 10**4
        emp = empirical_frequency(golden_exact, grid, ComponentId((1,)), [0], R)
        assert abs(emp - 0.2360679774997896) < 10 * np.log(R) / R


class TestSupDiscrepancy:
    def test_zero_on_trivial_grid(self, golden_exact):
        grid = build_grid(golden_exact, 0)
        rep = sup_discrepancy(golden_exact, grid, [0], 1000)
        assert rep.discrepancy == 0.0

    def test_golden_log_growth(self, golden_exact):
        # Sturmian discrepancy of a bounded-type slope grows like log R
        grid = build_grid(golden_exact, 3)
        ratios = []
        for R in (10**3, 10**4, 10**5, 10**6):
            rep = sup_discrepancy(golden_exact, grid, [0], R, method="coverage")
            ratios.append(rep.discrepancy / np.log(R))
        assert max(ratios) < 3.0  # observed ~0.3; generous ceiling

    def test_random_two_dim_envelope(self):
        spec = random_spec(2, 3, 3)
        grid = build_grid(spec, 2)
        rep = sup_discrepancy(spec, grid, [0, 0], 500)
        c_fit = rep.discrepancy / np.log(500.0) ** (spec.k + 0.5)
        assert np.isfinite(c_fit)
        assert rep.n_points == 1001**2


class TestEtkBound:
    def test_r_weight(self):
        assert r_weight(np.array([[3, -2]]))[0] == pytest.approx(1 / 6)

    def test_single_point_bound(self):
        pts = np.array([[0.37]])
        H = 7
        got = etk_bound(pts, H, c_m=1.0)
        hs = np.arange(-H, H + 1)
        hs = hs[hs != 0]
        expected = 1.0 / H + np.sum(1.0 / np.maximum(1, np.abs(hs)))
        assert_allclose(got, expected, rtol=1e-12)

    def test_orbit_closed_form_matches_points(self, golden_exact):
        N = 400
        orbit = KroneckerOrbit(
            w0=window_coord(golden_exact, [0]), alpha=golden_exact.alpha, N=N
        )
        pts = window_coords(golden_exact, np.arange(-N, N + 1).reshape(-1, 1))
        assert_allclose(etk_bound(orbit, 20), etk_bound(pts, 20), rtol=1e-9)

    def test_domination_of_measured_discrepancy(self, golden_exact):
        grid = build_grid(golden_exact, 2)
        freqs = all_frequencies(grid)
        for R in (10**3, 10**4):
            res = component_counts(golden_exact, grid, [0], R)
            sup = np.max(np.abs(res.counts - res.n_points * freqs)) / res.n_points
            orbit = KroneckerOrbit(
                w0=window_coord(golden_exact, [0]), alpha=golden_exact.alpha, N=R
            )
            for H in (10, 100):
                assert sup <= etk_bound(orbit, H)


class TestExpSum:
    def test_golden_unit_frequency(self, golden_exact):
        res = exp_sum_closed_form(golden_exact, [1], 100)
        assert res.bound == pytest.approx(1.3090169943749475, rel=1e-9)
        assert res.abs_value <= res.bound

    def test_half_integer_extreme(self):
        spec = SchemeSpec(d=1, k=2, alpha=[[0.5]], t=[0.25])
        res = exp_sum_closed_form(spec, [1], 50)
        assert res.bound == pytest.approx(1.0)
        assert res.abs_value <= 1.0 + 1e-12

    def test_resonance_raises(self):
        spec = SchemeSpec(d=1, k=2, alpha=[[0.25]], t=[0.1])
        with pytest.raises(ResonantFrequency):
            exp_sum_closed_form(spec, [4], 10)

    def test_bounded_in_n(self, golden_exact):
        vals = [exp_sum_closed_form(golden_exact, [1], N).abs_value for N in (10, 100, 1000)]
        bound = exp_sum_closed_form(golden_exact, [1], 10).bound
        assert all(v <= bound for v in vals)


class TestLogPowerSum:
    def test_h_equals_one_enumeration(self):
        # sup-norm ball: all nonzero h in {-1,0,1}^(k-d)
        spec = random_spec(1, 3, 9)
        got = log_power_sum(spec, 1)
        expected = 0.0
        for h1 in (-1, 0, 1):
            for h2 in (-1, 0, 1):
                if (h1, h2) == (0, 0):
                    continue
                theta = np.asarray([h1, h2], float) @ spec.alpha
                expected += 1.0 / np.prod(np.abs(theta - np.round(theta)))
        assert_allclose(got, expected, rtol=1e-12)

    def test_matches_naive_double_loop(self, golden_exact):
        H = 10
        got = log_power_sum(golden_exact, H)
        alpha = golden_exact.alpha[0, 0]
        expected = 0.0
        for h in range(-H, H + 1):
            if h == 0:
                continue
            theta = h * alpha
            expected += (1.0 / max(1, abs(h))) / abs(theta - round(theta))
        assert_allclose(got, expected, rtol=1e-12)

    def test_exponent_fit_mostly_below_k_plus_one(self):
        hits = 0
        n_seeds = 40
        Hs = [2**j for j in range(4, 14)]
        for seed in range(n_seeds):
            spec = random_spec(1, 2, 1000 + seed)
            try:
                sums = [log_power_sum(spec, H) for H in Hs]
            except ResonantFrequency:
                continue
            if fit_log_exponent(Hs, sums) <= spec.k + 1:
                hits += 1
        assert hits >= 0.9 * n_seeds


class TestTrendHelpers:
    def test_kendall_signs(self):
        assert kendall_trend([5, 4, 3, 2, 1]) < 0
        assert kendall_trend([1, 2, 3, 4, 5]) > 0
