"""Acceptance suite: published operating characteristics and structural identities.

Every simulation-backed criterion runs at a pinned seed with at least 2,000
replicates (tolerances: ±3 percentage points on selection, ±0.5 on mean
patient counts, ±3 weeks on durations). Each criterion prints one PASS/FAIL
line; run with ``pytest tests/test_acceptance.py -s`` to watch them stream.
The whole module takes several minutes on one core: it simulates ~30,000
trials.
"""

import dataclasses
import math

import numpy as np
import pytest

from prodose.designs import DesignKind, Stream, next_dose, recommend_next
from prodose.model import PriorSpec, Skeleton, WeightedObservation, posterior_mean, weighted_likelihood
from prodose.simulate import (
    SimJob,
    clayton_pair,
    draw_event_times,
    replicate_rng,
    run_simulation,
    run_trial,
    weibull_scale,
)
from prodose.store import (
    OutcomeReported,
    PatientEnrolled,
    TrialCreated,
    TrialDocument,
    TrialEvent,
    apply_event,
    recommendation,
)

from helpers import SCENARIOS, U18, make_config
from oracles import plain_binomial_likelihood, trapezoid_posterior_mean

SEED = 20260809
REPS_N18 = 2000
REPS_N40 = 3000

_CELLS = {}


def cell(scenario_name, kind, n_max=18, reps=REPS_N18, **scenario_overrides):
    key = (scenario_name, kind, n_max, reps, tuple(sorted(scenario_overrides.items())))
    if key not in _CELLS:
        scenario = SCENARIOS[scenario_name]
        if scenario_overrides:
            scenario = dataclasses.replace(scenario, **scenario_overrides)
        job = SimJob(
            scenario=scenario,
            design=make_config(kind, n_max=n_max),
            n_replicates=reps,
            seed=SEED,
        )
        _CELLS[key] = run_simulation(job)
    return _CELLS[key]


class Criterion:
    """Collects comparisons, prints one summary line, then asserts."""

    def __init__(self, title):
        self.title = title
        self.failures = []
        self.count = 0

    def within(self, label, got, want, tol):
        self.count += 1
        if abs(got - want) > tol:
            self.failures.append(f"{label}: {got:.2f} vs {want}±{tol}")

    def holds(self, label, condition):
        self.count += 1
        if not condition:
            self.failures.append(label)

    def finish(self):
        status = "FAIL" if self.failures else "PASS"
        print(f"[{status}] {self.title} ({self.count} checks)")
        for failure in self.failures:
            print(f"       {failure}")
        assert not self.failures, f"{self.title}: {self.failures}"


def test_c1_benchmark_scenario1_n18_dual_designs():
    c = Criterion("criterion 1: scenario 1, N=18: dual-stream designs match published row")
    tite_pro = cell("1", DesignKind.TITE_PRO_CRM)
    for i, want in enumerate((2, 28, 63, 7, 0)):
        c.within(f"tite-pro-crm selection d{i+1}", tite_pro.selection_pct[i], want, 3.0)
    c.within("tite-pro-crm No. OD", tite_pro.mean_overdose_patients, 1.77, 0.5)
    c.within("tite-pro-crm No. Clin DLT", tite_pro.mean_clin_dlt, 3.13, 0.5)
    c.within("tite-pro-crm No. MTD", tite_pro.mean_mtd_patients, 8.06, 0.5)
    pro = cell("1", DesignKind.PRO_CRM)
    for i, want in enumerate((2, 28, 63, 7, 0)):
        c.within(f"pro-crm selection d{i+1}", pro.selection_pct[i], want, 3.0)
    c.within("pro-crm No. OD", pro.mean_overdose_patients, 1.57, 0.5)
    c.finish()


def test_c2_benchmark_scenario6_n18_safety_contrast():
    c = Criterion("criterion 2: scenario 6, N=18: patient constraint's safety effect")
    tite = cell("6", DesignKind.TITE_CRM)
    at_or_above_3 = sum(tite.selection_pct[2:])
    c.within("tite-crm selection at/above dose 3", at_or_above_3, 80.0, 3.0)
    c.within("tite-crm No. OD", tite.mean_overdose_patients, 12.56, 0.5)
    tite_pro = cell("6", DesignKind.TITE_PRO_CRM)
    for i, want in enumerate((16, 60, 22, 1, 0)):
        c.within(f"tite-pro-crm selection d{i+1}", tite_pro.selection_pct[i], want, 3.0)
    c.within("tite-pro-crm No. OD", tite_pro.mean_overdose_patients, 5.17, 0.5)
    c.finish()


def test_c3_n40_probability_of_correct_selection():
    c = Criterion("criterion 3: N=40: tite-pro-crm PCS across all seven scenarios")
    expected = {"1": 78, "2": 75, "3": 60, "4": 66, "5": 74, "6": 76, "7": 73}
    for name, want in expected.items():
        oc = cell(name, DesignKind.TITE_PRO_CRM, n_max=40, reps=REPS_N40)
        c.within(f"scenario {name} PCS", oc.pcs, want, 3.0)
    c.finish()


def test_c4_trial_duration_halved_by_partial_follow_up():
    c = Criterion("criterion 4: N=18, accrual 2: 57- vs 108-week mean durations")
    c.within(
        "pro-crm mean duration",
        cell("1", DesignKind.PRO_CRM).mean_duration_weeks, 108.0, 3.0,
    )
    c.within(
        "tite-pro-crm mean duration",
        cell("1", DesignKind.TITE_PRO_CRM).mean_duration_weeks, 57.0, 3.0,
    )
    c.finish()


def test_c5_sensitivity_directions():
    c = Criterion("criterion 5: correlation, accrual and hazard-shape sensitivity")
    sc3_low = cell("3", DesignKind.TITE_PRO_CRM, reps=3000)
    sc3_high = cell("3", DesignKind.TITE_PRO_CRM, reps=4000, copula_tau=0.9)
    c.within("scenario 3 PCS at correlation 0.1", sc3_low.pcs, 41.0, 3.0)
    c.within("scenario 3 PCS at correlation 0.9", sc3_high.pcs, 50.0, 3.0)
    c.holds("scenario 3 PCS rises with correlation", sc3_high.pcs > sc3_low.pcs)
    sc1_low = cell("1", DesignKind.TITE_PRO_CRM)
    sc1_high = cell("1", DesignKind.TITE_PRO_CRM, copula_tau=0.9)
    c.within("scenario 1 PCS at correlation 0.1", sc1_low.pcs, 63.0, 3.0)
    c.within("scenario 1 PCS at correlation 0.9", sc1_high.pcs, 58.0, 3.0)
    c.holds("scenario 1 PCS falls with correlation", sc1_high.pcs < sc1_low.pcs)
    base = sc1_low.pcs
    c.within("accrual 4 leaves PCS in place",
             cell("1", DesignKind.TITE_PRO_CRM, accrual_per_window=4.0).pcs, base, 4.0)
    c.within("decreasing hazard leaves PCS in place",
             cell("1", DesignKind.TITE_PRO_CRM, hazard_shape=0.3).pcs, base, 4.0)
    c.within("increasing hazard leaves PCS in place",
             cell("1", DesignKind.TITE_PRO_CRM, hazard_shape=3.0).pcs, base, 4.0)
    c.finish()


def test_c6_structural_identities_exact():
    c = Criterion("criterion 6: structural identities (exact, not statistical)")
    for name in ("1", "6"):
        scenario = SCENARIOS[name]
        clin_only = make_config(DesignKind.TITE_CRM)
        plus_pro = make_config(DesignKind.TITE_CRM_PLUS_PRO)
        identical = final_leq = True
        for rep in range(300):
            a = run_trial(clin_only, scenario, replicate_rng(SEED, rep))
            b = run_trial(plus_pro, scenario, replicate_rng(SEED, rep))
            identical &= (
                a.assignments == b.assignments
                and a.clin_dlt == b.clin_dlt
                and a.pat_dlt == b.pat_dlt
            )
            final_leq &= b.final_dose <= a.final_dose
        c.holds(f"scenario {name}: identical assignment sequences per seed", identical)
        c.holds(f"scenario {name}: tite-crm+pro final <= tite-crm final per replicate", final_leq)
    c.holds(
        "scenario 3 overdose count is exactly zero",
        cell("3", DesignKind.TITE_PRO_CRM, n_max=40, reps=REPS_N40).mean_overdose_patients == 0.0
        and cell("3", DesignKind.TITE_PRO_CRM, reps=3000).mean_overdose_patients == 0.0,
    )
    for key, oc in list(_CELLS.items()):
        c.holds(f"selection sums to 100 for {key[:2]}", math.isclose(sum(oc.selection_pct), 100.0))
    c.finish()


def test_c7_numerical_oracles():
    c = Criterion("criterion 7: quadrature, copula and margin oracles")
    # posterior mean vs 100,001-point trapezoid over ±10 sd on 100 random fixtures
    rng = np.random.default_rng(SEED)
    prior = PriorSpec(sd=0.522)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 41))
        doses = rng.integers(1, 6, size=n)
        ys = (rng.random(n) < 0.3).astype(int)
        weights = np.where(ys == 1, 1.0, rng.integers(1, 7, size=n) / 6.0)
        observations = [
            WeightedObservation(int(d), float(w), int(y))
            for d, y, w in zip(doses, ys, weights)
        ]
        got = posterior_mean(prior, observations, U18)
        want = trapezoid_posterior_mean(
            0.522,
            [(int(d), float(w), int(y)) for d, y, w in zip(doses, ys, weights)],
            U18.values,
        )
        worst = max(worst, abs(got - want))
    c.holds(f"posterior mean within 1e-4 of trapezoid oracle (worst {worst:.2e})", worst <= 1e-4)

    # Clayton Kendall tau at theta=0.9 over 10^6 draws
    from scipy.stats import kendalltau

    rng = np.random.default_rng(SEED + 1)
    pairs = np.empty((1_000_000, 2))
    for i in range(pairs.shape[0]):
        pairs[i] = clayton_pair(0.9, rng)
    tau, _ = kendalltau(pairs[:, 0], pairs[:, 1])
    c.within("Clayton Kendall tau vs theta/(theta+2)", tau, 0.9 / 2.9, 0.01)

    # Weibull marginal fidelity at 10^5 draws, 3 standard errors
    rng = np.random.default_rng(SEED + 2)
    n = 100_000
    for shape in (1.0, 0.3, 3.0):
        for tau_level in (0.1, 0.9):
            scenario = dataclasses.replace(
                SCENARIOS["1"], hazard_shape=shape, copula_tau=tau_level
            )
            clin_hits = pat_hits = 0
            for _ in range(n):
                t_c, t_p = draw_event_times(3, scenario, 6.0, rng)
                clin_hits += t_c is not None and t_c <= 6.0
                pat_hits += t_p is not None and t_p <= 6.0
            se_c = math.sqrt(0.25 * 0.75 / n)
            se_p = math.sqrt(0.35 * 0.65 / n)
            c.within(f"clinician margin (shape {shape}, tau {tau_level})",
                     clin_hits / n, 0.25, 3 * se_c)
            c.within(f"patient margin (shape {shape}, tau {tau_level})",
                     pat_hits / n, 0.35, 3 * se_p)
    c.finish()


def test_c8_property_spot_checks_and_store_round_trip():
    # the full property suites run in the other test modules of this package;
    # this criterion re-executes one deterministic instance of each family
    c = Criterion("criterion 8: property spot checks and trial-store round trip")

    obs = [WeightedObservation(d, 1.0, y) for d, y in [(1, 0), (2, 0), (3, 1), (3, 0)]]
    c.within(
        "complete-data likelihood reduces to binomial form",
        weighted_likelihood(0.3, obs, U18),
        plain_binomial_likelihood(0.3, [(o.dose_index, 1.0, o.dlt) for o in obs], U18.values),
        1e-12,
    )

    c.within(
        "weibull scale closed form",
        weibull_scale(0.25, 6.0, 1.0), 6.0 / -math.log(0.75), 1e-12,
    )

    doc = TrialDocument(trial_id="acceptance")
    doc = apply_event(doc, TrialEvent(seq=1, at=0.0, kind=TrialCreated(config=make_config())))
    doc = apply_event(doc, TrialEvent(seq=2, at=0.0, kind=PatientEnrolled(1, 1)))
    doc = apply_event(doc, TrialEvent(seq=3, at=2.0, kind=OutcomeReported(1, Stream.CLINICIAN, 1.5)))
    dose = next_dose(doc.state.at(2.5))
    doc = apply_event(doc, TrialEvent(seq=4, at=2.5, kind=PatientEnrolled(2, dose)))
    clone = TrialDocument.from_dict(doc.to_dict())
    c.holds("persisted document replays to the identical state", clone.state == doc.state)
    c.holds(
        "store recommendation is a pure facade over the engine",
        recommendation(doc, 4.0) == recommend_next(doc.state.at(4.0)),
    )
    c.finish()
