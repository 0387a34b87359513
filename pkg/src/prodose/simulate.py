"""Correlated event-time generation, accrual, trial replication and aggregation.

A scenario fixes the true per-dose toxicity probabilities for both outcome
streams, the hazard shape, the correlation between the two time-to-toxicity
streams, and the accrual rate. Event-time pairs are drawn once per patient at
enrollment from a Clayton copula over Weibull margins; the design only ever
sees them through the decision clock.

Replicates are deterministic in (seed, replicate index): each replicate owns a
Generator seeded by SeedSequence((seed, index)) and draws in a fixed order
(patient 1: copula pair; each later patient: arrival gap, then copula pair).
Because decisions consume no randomness, every design sees identical draws
under the same seed, which is what makes the comparator identities exact.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .designs import DesignConfig, DesignKind, PatientRecord, TrialState, next_dose, final_recommendation, true_optimal_dose
from .errors import ConfigError

__all__ = [
    "Scenario",
    "SimJob",
    "TrialResult",
    "OperatingCharacteristics",
    "weibull_scale",
    "clayton_theta_from_tau",
    "clayton_pair",
    "draw_event_times",
    "next_arrival",
    "replicate_rng",
    "run_trial",
    "run_simulation",
    "summarize_results",
]


@dataclass(frozen=True)
class Scenario:
    """True toxicity landscape plus data-generation settings.

    ``copula_tau`` is the correlation level between the two time-to-toxicity
    streams on the Kendall's-tau scale; it maps to the Clayton association
    parameter as theta = 2 tau / (1 - tau).
    """

    clin_probs: tuple[float, ...]
    pat_probs: tuple[float, ...]
    hazard_shape: float = 1.0
    copula_tau: float = 0.1
    accrual_per_window: float = 2.0
    name: str = ""

    def __post_init__(self):
        clin = tuple(float(p) for p in self.clin_probs)
        pat = tuple(float(p) for p in self.pat_probs)
        object.__setattr__(self, "clin_probs", clin)
        object.__setattr__(self, "pat_probs", pat)
        if len(clin) != len(pat):
            raise ConfigError("clin_probs and pat_probs must share one length")
        for label, probs in (("clin_probs", clin), ("pat_probs", pat)):
            for p in probs:
                if not 0.0 <= p < 1.0:
                    raise ConfigError(f"{label}: probability {p} outside [0, 1)")
            if any(b < a for a, b in zip(probs, probs[1:])):
                raise ConfigError(f"{label}: probabilities must be nondecreasing")
        if not self.hazard_shape > 0:
            raise ConfigError(f"hazard_shape must be positive, got {self.hazard_shape}")
        if not 0.0 <= self.copula_tau < 1.0:
            raise ConfigError(f"copula_tau {self.copula_tau} outside [0, 1)")
        if not self.accrual_per_window > 0:
            raise ConfigError(
                f"accrual_per_window must be positive, got {self.accrual_per_window}"
            )

    @property
    def n_levels(self) -> int:
        return len(self.clin_probs)


@dataclass(frozen=True)
class SimJob:
    scenario: Scenario
    design: DesignConfig
    n_replicates: int
    seed: int

    def __post_init__(self):
        if self.n_replicates < 1:
            raise ConfigError(f"n_replicates must be >= 1, got {self.n_replicates}")
        if self.scenario.n_levels != self.design.n_levels:
            raise ConfigError("scenario and design cover different dose counts")


@dataclass(frozen=True)
class TrialResult:
    """One replicate: final recommendation plus per-patient trajectories."""

    final_dose: int
    assignments: tuple[int, ...]
    clin_dlt: tuple[bool, ...]
    pat_dlt: tuple[bool, ...]
    duration_weeks: float


@dataclass(frozen=True)
class OperatingCharacteristics:
    """Aggregates over replicates, in the units the summary tables use."""

    selection_pct: tuple[float, ...]
    pcs: float
    mean_overdose_patients: float
    mean_mtd_patients: float
    mean_clin_dlt: float
    mean_pat_dlt: float
    mean_duration_weeks: float
    true_dose: int | None
    n_replicates: int


def weibull_scale(prob_by_window: float, window: float, shape: float) -> float:
    """Scale parameter giving P(event <= window) = prob under Weibull(shape).

    A probability of 0 returns +inf (the patient never fails).
    """
    if not window > 0:
        raise ConfigError(f"window must be positive, got {window}")
    if not shape > 0:
        raise ConfigError(f"shape must be positive, got {shape}")
    if prob_by_window == 0.0:
        return math.inf
    if not 0.0 < prob_by_window < 1.0:
        raise ConfigError(f"probability {prob_by_window} outside [0, 1)")
    return window / (-math.log1p(-prob_by_window)) ** (1.0 / shape)


def clayton_theta_from_tau(tau: float) -> float:
    """Clayton association parameter with Kendall's tau equal to ``tau``."""
    if not 0.0 <= tau < 1.0:
        raise ConfigError(f"tau {tau} outside [0, 1)")
    return 2.0 * tau / (1.0 - tau)


def clayton_pair(theta: float, rng: np.random.Generator) -> tuple[float, float]:
    """One (U, V) draw from the Clayton copula by conditional inversion.

    theta below 1e-9 degenerates to independent uniforms.
    """
    if theta < 0:
        raise ConfigError(f"theta must be nonnegative, got {theta}")
    s = rng.uniform()
    t = rng.uniform()
    if theta < 1e-9:
        return s, t
    v = ((t ** (-theta / (1.0 + theta)) - 1.0) * s ** -theta + 1.0) ** (-1.0 / theta)
    return s, v


def draw_event_times(
    dose_index: int, scenario: Scenario, window: float, rng: np.random.Generator
) -> tuple[float | None, float | None]:
    """Latent (clinician, patient) event times for one patient at a dose.

    Margins are Weibull with scales pinned so P(event <= window) equals the
    scenario probability at that dose; the pair is coupled through the Clayton
    copula. None means the event never happens (probability 0 at this dose);
    times beyond the window are real values and simply never count as DLTs.
    """
    if not 1 <= dose_index <= scenario.n_levels:
        raise ConfigError(f"dose_index {dose_index} out of range")
    shape = scenario.hazard_shape
    u, v = clayton_pair(clayton_theta_from_tau(scenario.copula_tau), rng)
    times = []
    for prob, quantile in ((scenario.clin_probs[dose_index - 1], u),
                           (scenario.pat_probs[dose_index - 1], v)):
        scale = weibull_scale(prob, window, shape)
        if math.isinf(scale):
            times.append(None)
        else:
            times.append(scale * (-math.log(quantile)) ** (1.0 / shape))
    return times[0], times[1]


def next_arrival(
    previous_entry: float, accrual_per_window: float, window: float, rng: np.random.Generator
) -> float:
    """Next candidate arrival under Poisson accrual; the first patient arrives at 0."""
    if not accrual_per_window > 0:
        raise ConfigError(f"accrual rate must be positive, got {accrual_per_window}")
    return previous_entry + rng.exponential(window / accrual_per_window)


def replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    """Deterministic per-replicate stream; independent across replicate indices."""
    return np.random.default_rng(np.random.SeedSequence((seed, replicate)))


def run_trial(design: DesignConfig, scenario: Scenario, rng: np.random.Generator) -> TrialResult:
    """Simulate one trial from first enrollment to the final recommendation.

    Candidate arrivals form a single Poisson stream regardless of design; the
    complete-follow-up comparator defers each entry to the previous patient's
    window completion, so queued candidates enter the moment the design can
    use them.
    """
    window = design.window
    gated = design.kind is DesignKind.PRO_CRM
    state = TrialState(config=design)
    candidate = 0.0
    for i in range(design.n_max):
        if i > 0:
            candidate = next_arrival(candidate, scenario.accrual_per_window, window, rng)
            entry = candidate
            if gated:
                entry = max(candidate, state.patients[-1].entry_time + window)
        else:
            entry = 0.0
        state = state.at(entry)
        dose = next_dose(state)
        clin_t, pat_t = draw_event_times(dose, scenario, window, rng)
        state = state.with_patient(
            PatientRecord(
                id=i + 1,
                entry_time=entry,
                dose_index=dose,
                clin_event_time=clin_t,
                pat_event_time=pat_t,
            )
        )
    duration = state.patients[-1].entry_time + window
    state = state.at(duration)
    final = final_recommendation(state)
    return TrialResult(
        final_dose=final,
        assignments=tuple(p.dose_index for p in state.patients),
        clin_dlt=tuple(
            p.clin_event_time is not None and p.clin_event_time <= window
            for p in state.patients
        ),
        pat_dlt=tuple(
            p.pat_event_time is not None and p.pat_event_time <= window
            for p in state.patients
        ),
        duration_weeks=duration,
    )


def _run_replicate_range(job: SimJob, start: int, stop: int) -> list[TrialResult]:
    return [
        run_trial(job.design, job.scenario, replicate_rng(job.seed, r))
        for r in range(start, stop)
    ]


def summarize_results(results, job: SimJob) -> OperatingCharacteristics:
    """Ordered reduction of per-replicate results into the reported metrics."""
    m = job.design.n_levels
    d_star = true_optimal_dose(
        job.scenario.clin_probs,
        job.scenario.pat_probs,
        job.design.clinician_target,
        job.design.patient_target,
    )
    n = len(results)
    selections = np.zeros(m, dtype=np.int64)
    overdose = mtd = clin = pat = 0
    durations = np.empty(n)
    for i, r in enumerate(results):
        selections[r.final_dose - 1] += 1
        doses = np.asarray(r.assignments)
        if d_star is None:
            overdose += doses.size
        else:
            overdose += int(np.sum(doses > d_star))
            mtd += int(np.sum(doses == d_star))
        clin += sum(r.clin_dlt)
        pat += sum(r.pat_dlt)
        durations[i] = r.duration_weeks
    selection_pct = tuple(float(100.0 * s / n) for s in selections)
    return OperatingCharacteristics(
        selection_pct=selection_pct,
        pcs=selection_pct[d_star - 1] if d_star is not None else 0.0,
        mean_overdose_patients=overdose / n,
        mean_mtd_patients=mtd / n,
        mean_clin_dlt=clin / n,
        mean_pat_dlt=pat / n,
        mean_duration_weeks=float(np.sum(durations) / n),
        true_dose=d_star,
        n_replicates=n,
    )


def run_simulation(job: SimJob, workers: int = 1) -> OperatingCharacteristics:
    """Run all replicates and aggregate. Output depends only on (seed, job)."""
    if workers <= 1 or job.n_replicates < 2 * workers:
        results = _run_replicate_range(job, 0, job.n_replicates)
    else:
        bounds = np.linspace(0, job.n_replicates, workers + 1, dtype=int)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = pool.map(
                _run_replicate_range,
                [job] * workers,
                bounds[:-1].tolist(),
                bounds[1:].tolist(),
            )
            results = [r for chunk in chunks for r in chunk]
    return summarize_results(results, job)
