"""Event-time generation, accrual, trial replication and aggregation."""

import dataclasses
import math

import numpy as np
import pytest

from prodose.designs import DesignKind
from prodose.errors import ConfigError
from prodose.simulate import (
    Scenario,
    SimJob,
    clayton_pair,
    clayton_theta_from_tau,
    draw_event_times,
    next_arrival,
    replicate_rng,
    run_simulation,
    run_trial,
    summarize_results,
    weibull_scale,
)

from helpers import SCENARIOS, make_config
from oracles import clayton_conditional_inverse_bisect, weibull_conditional_median


class _ScriptedRng:
    """Stands in for a Generator when a test needs exact uniforms."""

    def __init__(self, values):
        self._values = list(values)

    def uniform(self):
        return self._values.pop(0)


class TestWeibullScale:
    def test_exponential_case(self):
        assert weibull_scale(0.25, 6, 1) == pytest.approx(20.856356980693242)

    def test_shape_three(self):
        assert weibull_scale(0.35, 6, 3) == pytest.approx(7.94447299502217)

    def test_unit_exponent(self):
        assert weibull_scale(1 - math.exp(-1), 6, 1) == pytest.approx(6.0)

    def test_probability_zero_never_fails(self):
        assert weibull_scale(0.0, 6, 1) == math.inf

    def test_probability_one_invalid(self):
        with pytest.raises(ConfigError):
            weibull_scale(1.0, 6, 1)

    @pytest.mark.parametrize("prob,shape", [(0.05, 1.0), (0.25, 0.3), (0.65, 3.0)])
    def test_substitution_round_trip(self, prob, shape):
        scale = weibull_scale(prob, 6.0, shape)
        assert 1 - math.exp(-((6.0 / scale) ** shape)) == pytest.approx(prob)


class TestClaytonPair:
    def test_independence_limit_passes_uniforms_through(self):
        u, v = clayton_pair(0.0, _ScriptedRng([0.3, 0.8]))
        assert (u, v) == (0.3, 0.8)

    def test_conditional_inversion_matches_bisection_oracle(self):
        u, v = clayton_pair(0.9, _ScriptedRng([0.5, 0.5]))
        assert u == 0.5
        assert v == pytest.approx(clayton_conditional_inverse_bisect(0.9, 0.5, 0.5), abs=1e-9)
        assert v == pytest.approx(0.5455460821171982, abs=1e-9)

    def test_rejects_negative_theta(self):
        with pytest.raises(ConfigError):
            clayton_pair(-0.1, _ScriptedRng([0.5, 0.5]))

    def test_kendall_tau_smoke(self):
        # the 10^6-draw check lives in the acceptance suite
        scipy_stats = pytest.importorskip("scipy.stats")
        rng = np.random.default_rng(5)
        pairs = np.array([clayton_pair(0.9, rng) for _ in range(60000)])
        tau, _ = scipy_stats.kendalltau(pairs[:, 0], pairs[:, 1])
        assert tau == pytest.approx(0.9 / 2.9, abs=0.02)

    def test_tau_mapping(self):
        assert clayton_theta_from_tau(0.0) == 0.0
        theta = clayton_theta_from_tau(0.31034482758620696)
        assert theta / (theta + 2) == pytest.approx(0.31034482758620696)


class TestDrawEventTimes:
    def test_marginal_probability_by_window(self):
        scenario = SCENARIOS["1"]
        rng = np.random.default_rng(3)
        n = 20000
        hits = sum(
            t is not None and t <= 6.0
            for t, _ in (draw_event_times(3, scenario, 6.0, rng) for _ in range(n))
        )
        se = math.sqrt(0.25 * 0.75 / n)
        assert hits / n == pytest.approx(0.25, abs=3 * se)

    def test_independence_at_tau_zero(self):
        scenario = dataclasses.replace(SCENARIOS["1"], copula_tau=0.0)
        rng = np.random.default_rng(4)
        draws = [draw_event_times(3, scenario, 6.0, rng) for _ in range(30000)]
        ic = np.array([t is not None and t <= 6.0 for t, _ in draws], dtype=float)
        ip = np.array([t is not None and t <= 6.0 for _, t in draws], dtype=float)
        corr = np.corrcoef(ic, ip)[0, 1]
        assert abs(corr) < 0.02

    def test_zero_probability_dose_yields_none(self):
        scenario = Scenario(clin_probs=(0.0, 0.2), pat_probs=(0.1, 0.3))
        clin_t, pat_t = draw_event_times(1, scenario, 6.0, np.random.default_rng(0))
        assert clin_t is None and pat_t is not None

    def test_shape_changes_timing_but_not_marginal(self):
        rng = np.random.default_rng(9)
        medians = {}
        for shape in (0.3, 3.0):
            scenario = dataclasses.replace(SCENARIOS["1"], hazard_shape=shape)
            times = [
                t
                for t, _ in (draw_event_times(3, scenario, 6.0, rng) for _ in range(20000))
                if t is not None and t <= 6.0
            ]
            frac = len(times) / 20000
            assert frac == pytest.approx(0.25, abs=3 * math.sqrt(0.25 * 0.75 / 20000))
            medians[shape] = np.median(times)
            expected = weibull_conditional_median(6.0, weibull_scale(0.25, 6.0, shape), shape)
            assert medians[shape] == pytest.approx(expected, rel=0.05)
        assert medians[0.3] < medians[3.0]


class TestNextArrival:
    def test_mean_gap_accrual_two(self):
        rng = np.random.default_rng(6)
        gaps = [next_arrival(0.0, 2.0, 6.0, rng) for _ in range(20000)]
        assert np.mean(gaps) == pytest.approx(3.0, abs=0.05)

    def test_mean_gap_accrual_four(self):
        rng = np.random.default_rng(7)
        gaps = [next_arrival(10.0, 4.0, 6.0, rng) - 10.0 for _ in range(20000)]
        assert np.mean(gaps) == pytest.approx(1.5, abs=0.03)


class TestRunTrial:
    def test_no_toxicity_forces_monotone_escalation_to_top(self):
        scenario = Scenario(clin_probs=(0.0,) * 5, pat_probs=(0.0,) * 5)
        design = make_config(DesignKind.TITE_PRO_CRM)
        result = run_trial(design, scenario, replicate_rng(1, 0))
        assert all(a <= b for a, b in zip(result.assignments, result.assignments[1:]))
        assert result.assignments[0] == 1 and result.assignments[-1] == 5
        assert result.final_dose == 5
        assert not any(result.clin_dlt) and not any(result.pat_dlt)

    def test_gated_design_waits_out_each_window(self):
        design = make_config(DesignKind.PRO_CRM, n_max=6)
        result = run_trial(design, SCENARIOS["1"], replicate_rng(2, 0))
        assert result.duration_weeks >= 5 * 6.0 + 6.0

    def test_continuous_designs_run_faster_than_gated(self):
        scenario = SCENARIOS["1"]
        fast = run_trial(make_config(DesignKind.TITE_PRO_CRM), scenario, replicate_rng(3, 0))
        slow = run_trial(make_config(DesignKind.PRO_CRM), scenario, replicate_rng(3, 0))
        assert fast.duration_weeks < slow.duration_weeks

    def test_same_stream_for_comparator_kinds(self):
        scenario = SCENARIOS["6"]
        for rep in range(40):
            a = run_trial(make_config(DesignKind.TITE_CRM), scenario, replicate_rng(4, rep))
            b = run_trial(make_config(DesignKind.TITE_CRM_PLUS_PRO), scenario, replicate_rng(4, rep))
            assert a.assignments == b.assignments
            assert a.clin_dlt == b.clin_dlt and a.pat_dlt == b.pat_dlt
            assert a.duration_weeks == b.duration_weeks
            assert b.final_dose <= a.final_dose


class TestRunSimulation:
    def _job(self, **overrides):
        defaults = dict(
            scenario=SCENARIOS["1"],
            design=make_config(DesignKind.TITE_PRO_CRM),
            n_replicates=60,
            seed=99,
        )
        defaults.update(overrides)
        return SimJob(**defaults)

    def test_bitwise_deterministic(self):
        assert run_simulation(self._job()) == run_simulation(self._job())

    def test_worker_count_invariance(self):
        assert run_simulation(self._job(), workers=1) == run_simulation(self._job(), workers=2)

    def test_selection_sums_to_hundred(self):
        oc = run_simulation(self._job())
        assert sum(oc.selection_pct) == pytest.approx(100.0)
        assert oc.true_dose == 3
        assert oc.pcs == oc.selection_pct[2]

    def test_allocation_conservation_per_replicate(self):
        job = self._job(n_replicates=30)
        for rep in range(job.n_replicates):
            r = run_trial(job.design, job.scenario, replicate_rng(job.seed, rep))
            doses = np.asarray(r.assignments)
            below = int(np.sum(doses < 3))
            at = int(np.sum(doses == 3))
            above = int(np.sum(doses > 3))
            assert below + at + above == job.design.n_max

    def test_top_dose_optimum_means_zero_overdose(self):
        oc = run_simulation(self._job(scenario=SCENARIOS["3"], n_replicates=40))
        assert oc.true_dose == 5
        assert oc.mean_overdose_patients == 0.0

    def test_no_admissible_dose_counts_everything_as_overdose(self):
        scenario = Scenario(clin_probs=(0.5, 0.6, 0.7, 0.8, 0.9),
                            pat_probs=(0.5, 0.6, 0.7, 0.8, 0.9))
        oc = run_simulation(self._job(scenario=scenario, n_replicates=10))
        assert oc.true_dose is None
        assert oc.pcs == 0.0
        assert oc.mean_overdose_patients == 18.0
        assert oc.mean_mtd_patients == 0.0

    def test_summary_is_pure_function_of_results(self):
        job = self._job(n_replicates=25)
        results = [
            run_trial(job.design, job.scenario, replicate_rng(job.seed, r))
            for r in range(job.n_replicates)
        ]
        assert summarize_results(results, job) == run_simulation(job)


class TestScenarioValidation:
    def test_rejects_decreasing_probs(self):
        with pytest.raises(ConfigError, match="nondecreasing"):
            Scenario(clin_probs=(0.3, 0.2), pat_probs=(0.1, 0.2))

    def test_rejects_probability_one(self):
        with pytest.raises(ConfigError):
            Scenario(clin_probs=(0.3, 1.0), pat_probs=(0.1, 0.2))

    def test_rejects_mismatched_design(self):
        with pytest.raises(ConfigError, match="dose counts"):
            SimJob(
                scenario=Scenario(clin_probs=(0.1, 0.2), pat_probs=(0.1, 0.2)),
                design=make_config(),
                n_replicates=1,
                seed=0,
            )
