"""Sequential decision engines for the four dose-finding designs.

Given a trial snapshot (enrolled patients, latent or reported event times and a
decision clock), these functions produce the next dose assignment or the final
recommended dose. They are pure: callers (the simulator, the trial store) own
all mutation and scheduling. The four designs share one estimation pipeline and
differ only in which outcome streams drive assignment and final selection:

    tite-crm       assignment: clinician     final: clinician
    pro-crm        assignment: both (min)    final: both (min)
    tite-pro-crm   assignment: both (min)    final: both (min)
    tite-crm+pro   assignment: clinician     final: both (min)

pro-crm and tite-pro-crm are the same decision rule; they differ only in
enrollment scheduling (complete follow-up gating), which lives in the simulator.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import ConfigError, NotReadyError, TrialCompleteError
from .model import (
    PriorSpec,
    Skeleton,
    ToxicityTarget,
    WeightedObservation,
    estimated_probabilities,
    follow_up_weight,
    posterior_mean,
    select_dose,
)

__all__ = [
    "Stream",
    "DesignKind",
    "DesignConfig",
    "PatientRecord",
    "TrialState",
    "StreamEstimate",
    "Recommendation",
    "snapshot_observations",
    "constrained_next_dose",
    "recommend_next",
    "next_dose",
    "recommend_final",
    "final_recommendation",
    "true_optimal_dose",
]


class Stream(str, Enum):
    CLINICIAN = "clinician"
    PATIENT = "patient"


class DesignKind(str, Enum):
    TITE_CRM = "tite-crm"
    PRO_CRM = "pro-crm"
    TITE_PRO_CRM = "tite-pro-crm"
    TITE_CRM_PLUS_PRO = "tite-crm+pro"

    @property
    def assigns_with_patient_stream(self) -> bool:
        return self in (DesignKind.PRO_CRM, DesignKind.TITE_PRO_CRM)

    @property
    def recommends_with_patient_stream(self) -> bool:
        return self is not DesignKind.TITE_CRM


@dataclass(frozen=True)
class DesignConfig:
    """Statistician-facing contract for one trial."""

    kind: DesignKind
    n_max: int
    window: float
    clinician_target: ToxicityTarget
    patient_target: ToxicityTarget
    clinician_skeleton: Skeleton
    patient_skeleton: Skeleton
    clinician_prior: PriorSpec
    patient_prior: PriorSpec
    start_dose: int = 1
    no_skip: bool = True

    def __post_init__(self):
        if self.n_max < 1:
            raise ConfigError(f"n_max must be >= 1, got {self.n_max}")
        if not self.window > 0:
            raise ConfigError(f"window must be positive, got {self.window}")
        if len(self.clinician_skeleton) != len(self.patient_skeleton):
            raise ConfigError(
                "clinician and patient skeletons must cover the same dose levels"
            )
        if not 1 <= self.start_dose <= self.n_levels:
            raise ConfigError(
                f"start_dose {self.start_dose} outside [1, {self.n_levels}]"
            )

    @property
    def n_levels(self) -> int:
        return len(self.clinician_skeleton)

    def stream_params(self, stream: Stream):
        if stream is Stream.CLINICIAN:
            return self.clinician_skeleton, self.clinician_prior, self.clinician_target
        return self.patient_skeleton, self.patient_prior, self.patient_target


@dataclass(frozen=True)
class PatientRecord:
    """One enrolled patient. Event times are in weeks since that patient's entry.

    The simulator stores latent times here (revealed to the design only through
    the snapshot clock); live conduct stores reported times. Times beyond the
    window are kept but never count as DLTs.
    """

    id: int
    entry_time: float
    dose_index: int
    clin_event_time: float | None = None
    pat_event_time: float | None = None

    def __post_init__(self):
        for t in (self.clin_event_time, self.pat_event_time):
            if t is not None and not t > 0:
                raise ConfigError(f"event time must be > 0 relative to entry, got {t}")

    def event_time(self, stream: Stream) -> float | None:
        return self.clin_event_time if stream is Stream.CLINICIAN else self.pat_event_time


@dataclass(frozen=True)
class TrialState:
    """Immutable snapshot of a trial: config, enrolled patients, decision clock."""

    config: DesignConfig
    patients: tuple[PatientRecord, ...] = ()
    now: float = 0.0

    def __post_init__(self):
        if len(self.patients) > self.config.n_max:
            raise ConfigError(
                f"{len(self.patients)} patients exceed n_max {self.config.n_max}"
            )
        prev = 0.0
        for p in self.patients:
            if p.entry_time < prev:
                raise ConfigError("patient entry times must be nondecreasing")
            prev = p.entry_time
            if not 1 <= p.dose_index <= self.config.n_levels:
                raise ConfigError(f"patient {p.id}: dose {p.dose_index} out of range")
        if self.patients and self.now < prev:
            raise ConfigError("decision clock is behind the latest entry time")

    @property
    def n_enrolled(self) -> int:
        return len(self.patients)

    @property
    def highest_dose_given(self) -> int:
        return max((p.dose_index for p in self.patients), default=0)

    def at(self, now: float) -> "TrialState":
        """Same trial viewed at a later clock value."""
        return replace(self, now=now)

    def with_patient(self, record: PatientRecord) -> "TrialState":
        return replace(self, patients=self.patients + (record,))

    def follow_up_complete(self) -> bool:
        # compare as entry + window to stay exact at the final-analysis clock
        return all(self.now >= p.entry_time + self.config.window for p in self.patients)


def snapshot_observations(state: TrialState, stream: Stream) -> list[WeightedObservation]:
    """What the chosen stream has revealed by the decision clock.

    A DLT counts only if its event time falls inside the window and has already
    happened; the follow-up weight is the elapsed in-window fraction.
    """
    window = state.config.window
    out = []
    for p in state.patients:
        if state.now >= p.entry_time + window:
            elapsed = window
        else:
            elapsed = max(state.now - p.entry_time, 0.0)
        t = p.event_time(stream)
        dlt = 1 if (t is not None and t <= elapsed) else 0
        out.append(
            WeightedObservation(
                dose_index=p.dose_index,
                weight=follow_up_weight(elapsed, window, bool(dlt)),
                dlt=dlt,
            )
        )
    return out


def constrained_next_dose(model_choice: int, state: TrialState) -> int:
    """Apply the start-dose and no-skip escalation rules to the model's choice."""
    if state.n_enrolled == 0:
        return state.config.start_dose
    if state.config.no_skip:
        return min(model_choice, state.highest_dose_given + 1)
    return model_choice


@dataclass(frozen=True)
class StreamEstimate:
    """Per-stream posterior summary backing one decision."""

    stream: Stream
    posterior_param: float
    probabilities: tuple[float, ...]
    target: float
    choice: int


@dataclass(frozen=True)
class Recommendation:
    """A dose decision plus the diagnostics an operator needs to audit it."""

    dose: int
    mode: str  # "assignment" | "final"
    clinician: StreamEstimate
    patient: StreamEstimate
    model_choice: int
    highest_dose_given: int = 0
    constraint_applied: bool = False


def _stream_estimate(state: TrialState, stream: Stream) -> StreamEstimate:
    skeleton, prior, target = state.config.stream_params(stream)
    obs = snapshot_observations(state, stream)
    param = posterior_mean(prior, obs, skeleton)
    probs = estimated_probabilities(skeleton, param)
    return StreamEstimate(
        stream=stream,
        posterior_param=param,
        probabilities=tuple(float(p) for p in probs),
        target=target.value,
        choice=select_dose(skeleton, param, target),
    )


def recommend_next(state: TrialState) -> Recommendation:
    """Next-dose recommendation with per-stream curves and constraint diagnostics."""
    if state.n_enrolled >= state.config.n_max:
        raise TrialCompleteError(
            f"all {state.config.n_max} patients enrolled; no further assignments"
        )
    clin = _stream_estimate(state, Stream.CLINICIAN)
    pat = _stream_estimate(state, Stream.PATIENT)
    if state.config.kind.assigns_with_patient_stream:
        model_choice = min(clin.choice, pat.choice)
    else:
        model_choice = clin.choice
    dose = constrained_next_dose(model_choice, state)
    return Recommendation(
        dose=dose,
        mode="assignment",
        clinician=clin,
        patient=pat,
        model_choice=model_choice,
        highest_dose_given=state.highest_dose_given,
        constraint_applied=dose != model_choice,
    )


def next_dose(state: TrialState) -> int:
    """Dose for the next patient at the current clock."""
    return recommend_next(state).dose


def recommend_final(state: TrialState) -> Recommendation:
    """End-of-trial recommendation from complete data; no escalation constraint."""
    if state.n_enrolled < state.config.n_max:
        raise NotReadyError(
            f"final recommendation needs all {state.config.n_max} patients enrolled"
        )
    if not state.follow_up_complete():
        raise NotReadyError("final recommendation needs complete follow-up")
    clin = _stream_estimate(state, Stream.CLINICIAN)
    pat = _stream_estimate(state, Stream.PATIENT)
    if state.config.kind.recommends_with_patient_stream:
        dose = min(clin.choice, pat.choice)
    else:
        dose = clin.choice
    return Recommendation(
        dose=dose,
        mode="final",
        clinician=clin,
        patient=pat,
        model_choice=dose,
        highest_dose_given=state.highest_dose_given,
    )


def final_recommendation(state: TrialState) -> int:
    return recommend_final(state).dose


def true_optimal_dose(
    clin_probs,
    pat_probs,
    clinician_target: ToxicityTarget,
    patient_target: ToxicityTarget,
) -> int | None:
    """Best dose under the true curves: min of the two per-stream tolerated maxima.

    Returns None when either constraint admits no dose at all (every dose is
    then an overdose for the metrics).
    """
    clin = np.asarray(clin_probs, dtype=float)
    pat = np.asarray(pat_probs, dtype=float)
    if clin.shape != pat.shape:
        raise ConfigError("probability vectors must share one length")
    ok_c = np.nonzero(clin <= clinician_target.value)[0]
    ok_p = np.nonzero(pat <= patient_target.value)[0]
    if ok_c.size == 0 or ok_p.size == 0:
        return None
    return int(min(ok_c[-1], ok_p[-1])) + 1
