import math
from fractions import Fraction

import numpy as np
import pytest

from ruinlab.core import RngStream
from ruinlab.errors import ConfigurationError, DomainError, ResourceError
from ruinlab.lookahead import (
    DEFAULT_ZOO,
    BaselineStrategy,
    brute_force_best_deterministic,
    build_lookahead_instance,
    estimate_gap,
    lemma1_grid,
    lemma1_margin,
    lookahead_plan,
    lookahead_utility,
    run_baseline,
    simulate_baseline,
    utility_gaps,
    _vector_baseline,
)

XS = np.linspace(0, 1, 101)


class TestInstance:
    def test_examples(self):
        assert build_lookahead_instance(4, 0.5).income == (1.0, 1.0, 0.5, 0.5)
        assert build_lookahead_instance(2, 0).income == (1.0, 0.0)

    @pytest.mark.parametrize("k", [3, 0, -2, 1])
    def test_bad_k(self, k):
        with pytest.raises(ConfigurationError):
            build_lookahead_instance(k, 0.5)

    @pytest.mark.parametrize("x", [-0.1, 1.1])
    def test_bad_x(self, x):
        with pytest.raises(DomainError):
            build_lookahead_instance(4, x)

    def test_income_bounds(self):
        for k in (2, 8, 16):
            for x in XS:
                inc = build_lookahead_instance(k, float(x)).income
                assert all(0 <= y <= 1 for y in inc)
                assert inc[: k // 2] == (1.0,) * (k // 2)


class TestLookaheadPlan:
    def test_examples(self):
        assert lookahead_utility(4, 0.5) == pytest.approx(3.46410, abs=1e-5)
        assert lookahead_utility(4, 1) == 4.0
        assert lookahead_utility(4, 0) == pytest.approx(2.82843, abs=1e-5)
        res = lookahead_plan(4, 0.5)
        assert res.consumption == (0.75,) * 4 and res.feasible

    def test_exact_feasibility(self):
        # running assets with income-first accounting, in exact rationals
        for k in range(2, 65, 2):
            for i in range(101):
                x = Fraction(i, 100)
                level = (1 + x) / 2
                assets = Fraction(0)
                for t in range(k):
                    assets += (1 if t < k // 2 else x) - level
                    assert assets >= 0
            assert lookahead_plan(k, 0.37).feasible

    def test_scale(self):
        assert lookahead_utility(8, 0.3, Y=4.0) == pytest.approx(2 * lookahead_utility(8, 0.3))
        s = BaselineStrategy("expected_constant")
        inst4 = build_lookahead_instance(8, 0.3, Y=4.0)
        assert run_baseline(s, inst4) == pytest.approx(2 * run_baseline(s, build_lookahead_instance(8, 0.3)))


class TestBaselines:
    def test_examples(self):
        ci = BaselineStrategy("consume_income")
        ec = BaselineStrategy("expected_constant", level=0.75)
        assert run_baseline(ci, build_lookahead_instance(4, 0.5)) == pytest.approx(3.41421, abs=1e-5)
        assert run_baseline(ec, build_lookahead_instance(4, 0.5)) == pytest.approx(3.46410, abs=1e-5)
        assert run_baseline(ec, build_lookahead_instance(4, 0.0)) == pytest.approx(2.43916, abs=1e-5)

    def test_clamping_path(self):
        run = simulate_baseline(BaselineStrategy("expected_constant"), build_lookahead_instance(4, 0.0))
        assert run.consumption == pytest.approx((0.75, 0.75, 0.5, 0.0))
        assert run.first_half_total == pytest.approx(1.5)

    def test_asset_fraction(self):
        run = simulate_baseline(BaselineStrategy("asset_fraction", phi=0.5), build_lookahead_instance(2, 1.0))
        assert run.consumption == pytest.approx((0.5, 0.75))

    def test_invalid(self):
        with pytest.raises(ConfigurationError):
            BaselineStrategy("hoard")
        with pytest.raises(ConfigurationError):
            BaselineStrategy("asset_fraction", phi=0)
        with pytest.raises(ConfigurationError):
            BaselineStrategy("expected_constant", level=-1)

    @pytest.mark.parametrize("strategy", DEFAULT_ZOO + (BaselineStrategy("asset_fraction", phi=1.0),), ids=lambda s: s.label())
    def test_feasible_and_dominated(self, strategy):
        for k in range(2, 17, 2):
            for x in XS:
                inst = build_lookahead_instance(k, float(x))
                run = simulate_baseline(strategy, inst)
                assets = 0.0
                for y, z in zip(inst.income, run.consumption):
                    assert 0 <= z <= assets + y + 1e-15
                    assets += y - z
                assert run.utility <= lookahead_utility(k, float(x)) + 1e-12

    @pytest.mark.parametrize("strategy", DEFAULT_ZOO, ids=lambda s: s.label())
    def test_vector_matches_scalar(self, strategy):
        for k in (2, 6, 16):
            vec = _vector_baseline(strategy, k, XS)
            ref = [run_baseline(strategy, build_lookahead_instance(k, float(x))) for x in XS]
            np.testing.assert_allclose(vec, ref, rtol=0, atol=1e-12)

    @pytest.mark.parametrize("strategy", DEFAULT_ZOO, ids=lambda s: s.label())
    def test_gap_positive_for_every_baseline(self, strategy):
        for k in (2, 4, 8, 16):
            est = estimate_gap(k, 2000, RngStream(3, k), strategies=(strategy,), include_brute_force=False)
            assert est.mean > 0


class TestBruteForce:
    def test_k2_plan_and_gap(self):
        plan = brute_force_best_deterministic(2, 257, 256)
        # first-period amount maximising E[sqrt(z) + sqrt(1 - z + x)]
        assert 0.6 < plan.first_half[0] < 0.8
        xs = (np.arange(256) + 0.5) / 256
        assert plan.expected_utility < np.mean(2 * np.sqrt((1 + xs) / 2))

    def test_degenerate_x_has_no_gap(self):
        plan = brute_force_best_deterministic(2, 33, x_values=[1.0])
        assert plan.expected_utility == pytest.approx(lookahead_utility(2, 1.0))

    def test_gap_grows_from_2_to_4(self):
        def gap(k):
            plan = brute_force_best_deterministic(k, 33, 64)
            xs = (np.arange(64) + 0.5) / 64
            return np.mean(k * np.sqrt((1 + xs) / 2)) - plan.expected_utility

        assert gap(4) / gap(2) >= 1.5

    def test_plan_utility_matches_completion(self):
        plan = brute_force_best_deterministic(4, 17, 16)
        z = plan.first_half
        x = 0.3
        left = 2 - sum(z)
        manual = sum(math.sqrt(v) for v in z) + 2 * math.sqrt(left / 2 + x)
        assert plan.utility(x)[0] == pytest.approx(manual)

    def test_resource_guard(self):
        with pytest.raises(ResourceError):
            brute_force_best_deterministic(16, 33, 64)

    def test_odd_k(self):
        with pytest.raises(ConfigurationError):
            brute_force_best_deterministic(3)


class TestConcavityMargin:
    def test_examples(self):
        assert lemma1_margin(0.25, 0.75) == pytest.approx(0.04610, abs=1e-5)
        assert lemma1_margin(0.6, 0.6) == 0.0
        ra = math.sqrt(0.51)
        expected = ra + 0.48 / (2 * ra) - 0.48**2 / 8 - math.sqrt(0.99)
        assert lemma1_margin(0.99, 0.51) == pytest.approx(expected, abs=1e-15)
        assert lemma1_margin(0.99, 0.51) == pytest.approx(0.026423, abs=1e-6)

    @pytest.mark.parametrize("w,a", [(0, 0.7), (1, 0.7), (0.5, 0.5), (0.5, 1.0)])
    def test_domain(self, w, a):
        with pytest.raises(DomainError):
            lemma1_margin(w, a)

    def test_grid(self):
        grid = lemma1_grid()
        assert grid.shape == (99, 49)
        assert grid.min() >= -1e-12


class TestEstimateGap:
    def test_degenerate_at_mean(self):
        est = estimate_gap(8, 100, RngStream(0), strategies=(BaselineStrategy("expected_constant"),),
                           include_brute_force=False, x_values=[0.5])
        assert est.mean == pytest.approx(0.0, abs=1e-12)

    def test_errors(self):
        with pytest.raises(ConfigurationError):
            estimate_gap(8, 0, RngStream(0))
        with pytest.raises(ConfigurationError):
            estimate_gap(7, 100, RngStream(0))

    def test_reproducible(self):
        a = estimate_gap(8, 500, RngStream(5, 8), include_brute_force=False)
        b = estimate_gap(8, 500, RngStream(5, 8), include_brute_force=False)
        assert a == b

    def test_utility_gaps_nonnegative(self):
        for k in (2, 4, 8, 16):
            assert np.all(utility_gaps(k, XS) >= -1e-12)

    def test_brute_force_joins_small_k(self):
        with_bf = estimate_gap(4, 400, RngStream(1, 4))
        without = estimate_gap(4, 400, RngStream(1, 4), include_brute_force=False)
        assert with_bf.mean <= without.mean
