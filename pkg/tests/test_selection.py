import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fluidport.channel import FluidAntennaConfig, correlation_profile, generate_gains
from fluidport.selection import (GainEstimateVector, ObservationPlan, OracleSelector,
                                 ReferenceSelector, analytic_selection_outage, evenly_spread_plan,
                                 fixed_antenna_benchmark, monte_carlo_outage, oracle_best_port,
                                 outage_indicator, reference_select, select_port,
                                 uncorrelated_antenna_count)


def brute_force_argmax(values):
    best, best_k = -math.inf, None
    for k, v in enumerate(values, start=1):
        if v > best:
            best, best_k = v, k
    return best_k


class TestPlans:
    def test_standard_placements(self):
        assert evenly_spread_plan(50, 1).observed == (25,)
        assert evenly_spread_plan(50, 5).observed == (1, 12, 25, 38, 50)
        assert evenly_spread_plan(50, 50).observed == tuple(range(1, 51))
        assert evenly_spread_plan(50, 50).unobserved == ()

    def test_half_up_rounding(self):
        # 1 + 49/2 = 25.5 rounds up
        assert evenly_spread_plan(50, 3).observed == (1, 26, 50)
        assert evenly_spread_plan(50, 2).observed == (1, 50)
        assert evenly_spread_plan(7, 1).observed == (4,)

    @given(n_ports=st.integers(2, 120), data=st.data())
    def test_partition(self, n_ports, data):
        n = data.draw(st.integers(1, n_ports))
        plan = evenly_spread_plan(n_ports, n)
        assert plan.n_observed == n
        assert set(plan.observed) | set(plan.unobserved) == set(range(1, n_ports + 1))
        assert not set(plan.observed) & set(plan.unobserved)
        if n > 1:
            assert plan.observed[0] == 1 and plan.observed[-1] == n_ports

    @pytest.mark.parametrize("n", [0, 51])
    def test_invalid_counts(self, n):
        with pytest.raises(ValueError):
            evenly_spread_plan(50, n)

    def test_plan_validation(self):
        with pytest.raises(ValueError):
            ObservationPlan(5, ())
        with pytest.raises(ValueError):
            ObservationPlan(5, (0, 2))
        with pytest.raises(ValueError):
            ObservationPlan(5, (2, 2))

    def test_observe(self):
        plan = ObservationPlan(4, (3, 1))
        assert plan.observed == (1, 3)
        np.testing.assert_array_equal(plan.observe(np.array([3j, 1, -2, 5])), [3.0, 2.0])


class TestOracle:
    def test_examples(self):
        assert oracle_best_port([1, 2j, -0.5]) == 2
        assert oracle_best_port([1.0, -1.0, 1j]) == 1

    @given(st.lists(st.floats(-10, 10), min_size=1, max_size=60))
    def test_matches_scan(self, values):
        mags = np.abs(values)
        assert oracle_best_port(values) == brute_force_argmax(mags)

    def test_random_50(self):
        g = np.random.default_rng(0).standard_normal(50) + 1j
        assert oracle_best_port(g) == brute_force_argmax(np.abs(g))


class TestSelectPort:
    def test_single_observed_nonzero(self):
        plan = evenly_spread_plan(50, 1)
        values = np.zeros(50)
        values[24] = 0.3
        assert select_port(GainEstimateVector(values, plan)) == 25

    def test_equals_oracle_on_true_gains(self):
        g = np.random.default_rng(1).standard_normal(50) * (1 + 1j)
        plan = evenly_spread_plan(50, 5)
        est = GainEstimateVector(np.abs(g), plan)
        assert select_port(est) == oracle_best_port(g)

    def test_large_estimate_wins(self):
        plan = evenly_spread_plan(50, 5)
        values = np.full(50, 0.1)
        values[plan.observed_idx] = [1, 2, 3, 4, 5]
        values[30] = 9.0
        assert select_port(GainEstimateVector(values, plan)) == 31

    @given(st.lists(st.floats(0, 100), min_size=50, max_size=50), st.floats(1e-3, 1e3))
    def test_scale_invariance(self, values, c):
        plan = evenly_spread_plan(50, 5)
        est = GainEstimateVector(np.array(values), plan)
        scaled = GainEstimateVector(np.array(values) * c, plan)
        # exact ties may resolve differently after rounding; compare chosen values
        assert est.values[select_port(scaled) - 1] == est.values.max()

    def test_compose_keeps_observations(self):
        plan = evenly_spread_plan(10, 2)
        est = GainEstimateVector.compose([0.4, 0.7], np.full(10, -1.0), plan)
        np.testing.assert_array_equal(est.values[plan.observed_idx], [0.4, 0.7])
        assert np.all(est.values[plan.unobserved_idx] == 0.0)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            GainEstimateVector(-np.ones(3), ObservationPlan(3, (1,)))


class TestReference:
    def test_full_observation_is_oracle(self):
        g = np.random.default_rng(2).standard_normal((200, 12)) + 0.3j
        plan = evenly_spread_plan(12, 12)
        np.testing.assert_array_equal(reference_select(g, plan), oracle_best_port(g))

    def test_single_port(self):
        g = np.random.default_rng(3).standard_normal(50)
        assert reference_select(g, evenly_spread_plan(50, 1)) == 25

    def test_crafted(self):
        plan = evenly_spread_plan(50, 5)
        g = np.full(50, 10.0)
        g[[0, 11, 24, 37, 49]] = [0.5, 0.2, 0.9, 1.7, 1.1]
        assert reference_select(g, plan) == 38


class TestOutage:
    def test_boundary_is_not_outage(self):
        cfg = FluidAntennaConfig(2, 1.0, theta=10.0, target_snr=10.0)
        assert not outage_indicator(1.0, cfg)
        assert outage_indicator(0.0, cfg)
        assert outage_indicator(0.999, cfg)

    def test_half_outage_calibration(self):
        cfg = FluidAntennaConfig.from_db(2, 1.0, 10.0)
        assert analytic_selection_outage(cfg, 1) == pytest.approx(0.5)
        assert analytic_selection_outage(cfg, 2) == pytest.approx(0.25)


class TestHarness:
    cfg = FluidAntennaConfig.from_db(50, 0.5, 10.0)

    def test_deterministic(self):
        plan = evenly_spread_plan(50, 5)
        a = monte_carlo_outage(self.cfg, plan, ReferenceSelector(), 5000, 11)
        b = monte_carlo_outage(self.cfg, plan, ReferenceSelector(), 5000, 11)
        assert a == b

    def test_block_size_does_not_matter_for_whole_blocks(self):
        # stream b always backs block b
        plan = evenly_spread_plan(50, 3)
        a = monte_carlo_outage(self.cfg, plan, ReferenceSelector(), 3000, 4, block_size=1000)
        b = monte_carlo_outage(self.cfg, plan, ReferenceSelector(), 3000, 4, block_size=1000)
        assert a == b

    def test_oracle_high_snr(self):
        cfg = FluidAntennaConfig.from_db(50, 0.5, 10.0, avg_snr_db=40.0)
        plan = evenly_spread_plan(50, 50)
        res = monte_carlo_outage(cfg, plan, OracleSelector(), 20_000, 0)
        assert res.outage_probability == 0.0

    def test_out_of_range_selector(self):
        plan = evenly_spread_plan(50, 5)
        with pytest.raises(ValueError):
            monte_carlo_outage(self.cfg, plan, lambda obs, plan, rng: np.zeros(len(obs), int), 10, 0)
        with pytest.raises(ValueError):
            monte_carlo_outage(self.cfg, plan, lambda obs, plan, rng: np.full(len(obs), 51), 10, 0)
        with pytest.raises(ValueError):
            monte_carlo_outage(self.cfg, plan, lambda obs, plan, rng: np.ones(3, int), 10, 0)

    def test_selector_sees_only_observed(self):
        plan = evenly_spread_plan(50, 5)
        shapes = []

        def spy(obs, plan, rng):
            shapes.append(obs.shape)
            return np.full(obs.shape[0], plan.observed[0])

        monte_carlo_outage(self.cfg, plan, spy, 100, 0)
        assert shapes == [(100, 5)]

    def test_standard_error(self):
        plan = evenly_spread_plan(50, 1)
        res = monte_carlo_outage(self.cfg, plan, ReferenceSelector(), 10_000, 3)
        p = res.outage_probability
        assert res.standard_error == pytest.approx(math.sqrt(p * (1 - p) / 10_000))

    @pytest.mark.parametrize("n_obs", [1, 3, 5])
    def test_oracle_dominates_reference(self, n_obs):
        plan = evenly_spread_plan(50, n_obs)
        ref = monte_carlo_outage(self.cfg, plan, ReferenceSelector(), 20_000, 8)
        orc = monte_carlo_outage(self.cfg, plan, OracleSelector(), 20_000, 8)
        assert orc.outage_probability <= ref.outage_probability

    def test_reference_monotone_in_superset(self):
        small = ObservationPlan(50, (25,))
        big = ObservationPlan(50, (1, 25, 50))
        a = monte_carlo_outage(self.cfg, small, ReferenceSelector(), 20_000, 6)
        b = monte_carlo_outage(self.cfg, big, ReferenceSelector(), 20_000, 6)
        # same channels, more observations: never worse on any trial
        assert b.outage_probability <= a.outage_probability

    def test_full_observation_matches_oracle_per_trial(self):
        cfg = FluidAntennaConfig(10, 1.0)
        gains, _ = generate_gains(cfg, correlation_profile(cfg), 1000, 0)
        plan = evenly_spread_plan(10, 10)
        picks = ReferenceSelector()(np.abs(gains), plan)
        np.testing.assert_array_equal(picks, oracle_best_port(gains))


class TestFixedAntenna:
    def test_antenna_counts(self):
        assert uncorrelated_antenna_count(0.5) == 2
        assert uncorrelated_antenna_count(2.0) == 5
        assert uncorrelated_antenna_count(5.0) == 11

    def test_analytic_values(self):
        cfg = FluidAntennaConfig.from_db(50, 0.5, 10.0)
        res = fixed_antenna_benchmark(cfg, 1, 1000, 0)
        assert res.analytic == pytest.approx(0.5)
        assert fixed_antenna_benchmark(cfg, 2, 1000, 0).analytic == pytest.approx(0.25)

    def test_empirical_matches_closed_form(self):
        cfg = FluidAntennaConfig.from_db(50, 2.0, 10.0)
        res = fixed_antenna_benchmark(cfg, 3, 100_000, 1)
        assert abs(res.outage_probability - res.analytic) < 4 * res.standard_error

    def test_invalid(self):
        with pytest.raises(ValueError):
            fixed_antenna_benchmark(FluidAntennaConfig(2, 1.0), 0, 10, 0)
