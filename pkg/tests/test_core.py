import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ruinlab.core import (
    IncomeProcess,
    ModelParams,
    RngStream,
    SubsistenceProcess,
    Trajectory,
    UtilityFunction,
    detect_ruin,
    discounted_utility,
    draw_income,
    eval_utility,
    invert_utility,
    lognormal_log_params,
    simulate_trajectory,
    step_assets,
)
from ruinlab.errors import ConfigurationError, DivergenceError, DomainError

ALL_UTILITIES = [
    UtilityFunction("sqrt"),
    UtilityFunction("log"),
    UtilityFunction("isoelastic_shifted", 0.5),
    UtilityFunction("isoelastic_shifted", 2.0),
    UtilityFunction("isoelastic_unshifted", 0.5),
    UtilityFunction("isoelastic_unshifted", 3.0),
]


class TestUtility:
    def test_examples(self):
        assert eval_utility(UtilityFunction("sqrt"), 4) == 2.0
        assert eval_utility(UtilityFunction("isoelastic_shifted", 2), 2) == pytest.approx(0.5, abs=1e-15)
        assert eval_utility(UtilityFunction("isoelastic_unshifted", 0.5), 4) == pytest.approx(4.0, abs=1e-15)

    def test_inverse_examples(self):
        assert invert_utility(UtilityFunction("sqrt"), 2) == 4.0
        assert invert_utility(UtilityFunction("log"), 0) == 1.0
        assert invert_utility(UtilityFunction("sqrt"), 1.11803) == pytest.approx(1.25, abs=1e-5)

    def test_negative_consumption_is_domain_error(self):
        for u in ALL_UTILITIES:
            with pytest.raises(DomainError):
                eval_utility(u, -1.0)

    @pytest.mark.parametrize(
        "u", [UtilityFunction("log"), UtilityFunction("isoelastic_shifted", 2), UtilityFunction("isoelastic_unshifted", 3)]
    )
    def test_zero_diverges(self, u):
        with pytest.raises(DivergenceError):
            eval_utility(u, 0.0)
        assert not u.finite_at_zero

    def test_finite_values_at_zero(self):
        assert eval_utility(UtilityFunction("sqrt"), 0.0) == 0.0
        assert eval_utility(UtilityFunction("isoelastic_unshifted", 0.5), 0.0) == 0.0
        assert eval_utility(UtilityFunction("isoelastic_shifted", 0.5), 0.0) == pytest.approx(-2.0)
        assert UtilityFunction("isoelastic_shifted", 0.5).value_at_zero() == pytest.approx(-2.0)

    def test_shifted_and_unshifted_differ_by_constant(self):
        for lam in (0.3, 0.5, 2.0, 3.0):
            c = np.logspace(-2, 3, 50)
            gap = UtilityFunction("isoelastic_unshifted", lam)(c) - UtilityFunction("isoelastic_shifted", lam)(c)
            np.testing.assert_allclose(gap, 1.0 / (1.0 - lam), rtol=1e-9, atol=1e-9)

    @pytest.mark.parametrize("lam", [0, -1, 1])
    def test_bad_lambda(self, lam):
        with pytest.raises(ConfigurationError):
            UtilityFunction("isoelastic_shifted", lam)

    def test_lambda_only_for_isoelastic(self):
        with pytest.raises(ConfigurationError):
            UtilityFunction("sqrt", 0.5)
        with pytest.raises(ConfigurationError):
            UtilityFunction("isoelastic_unshifted")
        with pytest.raises(ConfigurationError):
            UtilityFunction("cubic")

    @pytest.mark.parametrize("u", ALL_UTILITIES, ids=lambda u: f"{u.kind}-{u.lam}")
    def test_increasing_and_concave_on_log_grid(self, u):
        c = np.logspace(-3, 6, 400)
        v = u(c)
        assert np.all(np.diff(v) > 0)
        # u(c2) must lie on or above the chord through its neighbours
        w = (c[1:-1] - c[:-2]) / (c[2:] - c[:-2])
        chord = v[:-2] + w * (v[2:] - v[:-2])
        slack = v[1:-1] - chord
        assert np.all(slack >= -1e-12 * np.maximum(1.0, np.abs(v[1:-1])))

    @pytest.mark.parametrize("u", ALL_UTILITIES, ids=lambda u: f"{u.kind}-{u.lam}")
    def test_inverse_round_trip(self, u):
        c = np.logspace(-3, 6, 400)
        back = u.inverse(u(c))
        np.testing.assert_allclose(back, c, rtol=1e-10)

    def test_inverse_out_of_range(self):
        with pytest.raises(DomainError):
            invert_utility(UtilityFunction("sqrt"), -0.1)
        # shifted lambda=2 has values in (-inf, 1)
        with pytest.raises(DomainError):
            invert_utility(UtilityFunction("isoelastic_shifted", 2.0), 1.0)
        with pytest.raises(DomainError):
            invert_utility(UtilityFunction("isoelastic_unshifted", 0.5), -0.5)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(1e-3, 1e6), st.sampled_from(ALL_UTILITIES))
    def test_round_trip_property(self, c, u):
        assert invert_utility(u, eval_utility(u, c)) == pytest.approx(c, rel=1e-10)


class TestDiscountedUtility:
    def test_examples(self, sqrt_u):
        assert discounted_utility([1, 1, 1], 0.5, sqrt_u) == pytest.approx(1.75)
        assert discounted_utility([4], 0.9, sqrt_u) == pytest.approx(2.0)
        assert discounted_utility([0.8, 0.2], 0.5, sqrt_u) == pytest.approx(1.11803, abs=1e-5)

    def test_two_period_optimum_by_grid_search(self, sqrt_u):
        # total 1, beta 0.5: the best split puts 1/(1 + beta^2) first
        c0 = np.linspace(0, 1, 100001)
        totals = np.sqrt(c0) + 0.5 * np.sqrt(1 - c0)
        assert c0[np.argmax(totals)] == pytest.approx(0.8, abs=1e-4)

    def test_propagates_domain_error(self, sqrt_u):
        with pytest.raises(DomainError):
            discounted_utility([1, -1], 0.5, sqrt_u)


class TestModelParams:
    @pytest.mark.parametrize("beta", [0, 1, 1.2, -0.1])
    def test_beta_bounds(self, beta):
        with pytest.raises(ConfigurationError):
            ModelParams(beta)

    def test_negative_assets(self):
        with pytest.raises(ConfigurationError):
            ModelParams(0.9, 1.0, -1.0)


class TestDynamics:
    def test_step_examples(self):
        assert step_assets(100, 40, 1, 10) == 70
        assert step_assets(141140, 5253, 1, 5957.25) == 141844.25
        assert step_assets(50, 50, 1.05, 0) == 0

    @given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6), st.floats(0, 2), st.floats(0, 1e6))
    def test_step_operation_order(self, a, c, R, y):
        d = a - c
        m = R * d
        assert step_assets(a, c, R, y) == m + y

    def test_detect_ruin_examples(self):
        assert detect_ruin([100, 70, 40, 10, -20]) == 3
        assert detect_ruin([100, 90, 80]) is None
        assert detect_ruin([10, 0]) == 0

    def test_detect_ruin_empty(self):
        with pytest.raises(ConfigurationError):
            detect_ruin([])

    @given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=30))
    def test_ruin_minimality(self, series):
        T = detect_ruin(series)
        stop = len(series) - 1 if T is None else T
        assert all(series[s + 1] > 0 for s in range(stop))
        if T is not None:
            assert series[T + 1] <= 0

    def test_trajectory_length_check(self):
        with pytest.raises(ConfigurationError):
            Trajectory((1.0, 2.0), (1.0, 1.0), (0.0, 0.0))

    def test_countdown_trajectory(self):
        traj = simulate_trajectory(100, 1.0, [0.0] * 10, lambda t, a: 30.0)
        assert traj.assets == (100.0, 70.0, 40.0, 10.0, -20.0)
        assert traj.ruin_time == 3
        assert detect_ruin(traj.assets) == traj.ruin_time

    def test_trajectory_identity_before_ruin(self):
        gen = np.random.default_rng(3)
        income = gen.uniform(0.5, 1.5, 50)
        traj = simulate_trajectory(5.0, 1.02, income, lambda t, a: 0.3 * a)
        for t in range(len(traj.consumption)):
            a, c, y = traj.assets[t], traj.consumption[t], traj.income[t]
            assert 0 < c <= a
            assert traj.assets[t + 1] == pytest.approx(1.02 * (a - c) + y, rel=1e-9)
        assert traj.ruin_time is None


class TestIncome:
    def test_constant(self):
        p = IncomeProcess("constant", mean=1.0)
        assert all(draw_income(p, RngStream(0, i)) == 1.0 for i in range(5))

    def test_bounded_uniform_support(self):
        p = IncomeProcess("bounded_uniform", mean=1.0, half_width=0.1)
        draws = p.sample(RngStream(1).generator, 10_000)
        assert draws.min() >= 0.9 and draws.max() <= 1.1

    def test_bounded_uniform_requires_nonnegative_support(self):
        with pytest.raises(ConfigurationError):
            IncomeProcess("bounded_uniform", mean=1.0, half_width=1.5)

    def test_lognormal_level_mean(self):
        p = IncomeProcess("lognormal", mean=5957.25, std=378.74)
        draws = p.sample(RngStream(2024).generator, 100_000)
        assert abs(draws.mean() / 5957.25 - 1) < 0.01
        assert abs(draws.std() / 378.74 - 1) < 0.05
        assert draws.min() >= 0

    def test_lognormal_log_params(self):
        mu, sigma = lognormal_log_params(5957.25, 378.74)
        assert math.exp(mu + sigma**2 / 2) == pytest.approx(5957.25, rel=1e-12)

    def test_fixed_sequence_repeats(self):
        p = IncomeProcess("fixed_sequence", sequence=(1, 2, 3))
        np.testing.assert_array_equal(p.sample(RngStream(0).generator, 7), [1, 2, 3, 1, 2, 3, 1])
        assert p.expected == 2.0

    def test_lookahead_instance_shape(self):
        p = IncomeProcess("lookahead_instance", mean=1.0, k=4)
        y = p.sample(RngStream(5).generator, 6)
        assert list(y[:2]) == [1.0, 1.0]
        assert y[2] == y[3] and 0 <= y[2] <= 1
        assert y[4] == pytest.approx((1 + y[2]) / 2)
        with pytest.raises(ConfigurationError):
            p.nodes(7)
        with pytest.raises(ConfigurationError):
            IncomeProcess("lookahead_instance", mean=1.0, k=3)

    def test_nodes(self):
        np.testing.assert_allclose(
            IncomeProcess("bounded_uniform", mean=1.0, half_width=0.1).nodes(2), [0.95, 1.05]
        )
        assert list(IncomeProcess("constant", mean=2.0).nodes(7)) == [2.0]
        nodes = IncomeProcess("lognormal", mean=100.0, std=10.0).nodes(7)
        assert np.all(np.diff(nodes) > 0)
        assert nodes.mean() == pytest.approx(100.0, rel=0.01)


class TestSubsistence:
    def test_bounded_support(self):
        s = SubsistenceProcess("bounded_uniform", mean=1.2, half_width=0.1)
        draws = s.sample(RngStream(9).generator, 10_000)
        assert draws.min() >= 1.1 and draws.max() <= 1.3

    def test_constant_has_no_spread(self):
        with pytest.raises(ConfigurationError):
            SubsistenceProcess("constant", mean=1.0, half_width=0.1)
        assert list(SubsistenceProcess("constant", mean=1.0).sample(RngStream(0).generator, 3)) == [1.0] * 3

    def test_lognormal_mean(self):
        s = SubsistenceProcess("lognormal", mean=5253.0, std=5253.0)
        assert s.sample(RngStream(4).generator, 200_000).mean() == pytest.approx(5253.0, rel=0.02)


class TestRngStream:
    def test_determinism(self):
        a = RngStream(42, 7).generator.random(10_000)
        b = RngStream(42, 7).generator.random(10_000)
        np.testing.assert_array_equal(a, b)

    def test_streams_differ(self):
        a = RngStream(42, 0).generator.random(1000)
        b = RngStream(42, 1).generator.random(1000)
        c = RngStream(43, 0).generator.random(1000)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.1

    def test_rejects_negative(self):
        with pytest.raises(ConfigurationError):
            RngStream(-1)
