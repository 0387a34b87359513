"""Shared builders for design configs, states and scenarios used across tests."""

from itertools import product

from prodose.designs import DesignConfig, DesignKind, PatientRecord, TrialState
from prodose.model import PriorSpec, Skeleton, ToxicityTarget
from prodose.simulate import Scenario

U18 = Skeleton((0.08, 0.16, 0.25, 0.35, 0.46))
V18 = Skeleton((0.13, 0.23, 0.35, 0.47, 0.58))
V40 = Skeleton((0.10, 0.21, 0.35, 0.49, 0.61))

SCENARIOS = {
    "1": Scenario(name="1", clin_probs=(0.05, 0.05, 0.25, 0.40, 0.55),
                  pat_probs=(0.17, 0.18, 0.35, 0.50, 0.65)),
    "2": Scenario(name="2", clin_probs=(0.05, 0.25, 0.40, 0.55, 0.70),
                  pat_probs=(0.10, 0.15, 0.35, 0.50, 0.65)),
    "3": Scenario(name="3", clin_probs=(0.01, 0.02, 0.05, 0.10, 0.25),
                  pat_probs=(0.04, 0.09, 0.17, 0.20, 0.35)),
    "4": Scenario(name="4", clin_probs=(0.02, 0.05, 0.10, 0.25, 0.40),
                  pat_probs=(0.09, 0.17, 0.20, 0.35, 0.50)),
    "5": Scenario(name="5", clin_probs=(0.05, 0.10, 0.16, 0.25, 0.40),
                  pat_probs=(0.05, 0.20, 0.35, 0.50, 0.65)),
    "6": Scenario(name="6", clin_probs=(0.05, 0.18, 0.20, 0.25, 0.40),
                  pat_probs=(0.17, 0.35, 0.50, 0.65, 0.80)),
    "7": Scenario(name="7", clin_probs=(0.01, 0.05, 0.10, 0.16, 0.25),
                  pat_probs=(0.04, 0.05, 0.20, 0.35, 0.50)),
}


def make_config(kind=DesignKind.TITE_PRO_CRM, n_max=18, **overrides) -> DesignConfig:
    if n_max == 40:
        patient_skeleton, patient_sd = V40, 0.8307
    else:
        patient_skeleton, patient_sd = V18, 0.69
    kwargs = dict(
        kind=kind,
        n_max=n_max,
        window=6.0,
        clinician_target=ToxicityTarget(0.25),
        patient_target=ToxicityTarget(0.35),
        clinician_skeleton=U18,
        patient_skeleton=patient_skeleton,
        clinician_prior=PriorSpec(sd=0.522),
        patient_prior=PriorSpec(sd=patient_sd),
        start_dose=1,
        no_skip=True,
    )
    kwargs.update(overrides)
    return DesignConfig(**kwargs)


def make_state(kind, patients, now, n_max=18, **overrides) -> TrialState:
    """patients: list of (entry, dose, clin_event_or_None, pat_event_or_None)."""
    records = tuple(
        PatientRecord(id=i + 1, entry_time=entry, dose_index=dose,
                      clin_event_time=clin, pat_event_time=pat)
        for i, (entry, dose, clin, pat) in enumerate(patients)
    )
    return TrialState(config=make_config(kind, n_max=n_max, **overrides),
                      patients=records, now=now)


def enumerate_small_states(kind, max_patients=4):
    """Every outcome pattern over a few no-skip-consistent dose paths.

    Entries are 3 weeks apart with the clock 3 weeks past the last entry, so
    the states mix full and partial follow-up.
    """
    dose_paths = {
        1: [(1,)],
        2: [(1, 2), (1, 1)],
        3: [(1, 2, 3), (1, 2, 1), (1, 1, 2)],
        4: [(1, 2, 3, 4), (1, 2, 3, 2), (1, 2, 2, 3), (1, 2, 1, 2)],
    }
    for n in range(1, max_patients + 1):
        for path in dose_paths[n]:
            for pattern in product((None, 2.0), repeat=2 * n):
                clin, pat = pattern[:n], pattern[n:]
                patients = [
                    (3.0 * i, path[i], clin[i], pat[i]) for i in range(n)
                ]
                yield make_state(kind, patients, now=3.0 * n)
