"""Dose-finding with clinician- and patient-reported toxicity streams.

Library layout:

- ``model``     one-stream working model, weighted likelihood, posterior mean
- ``designs``   the four sequential decision engines over trial snapshots
- ``simulate``  correlated event-time generation and replicate aggregation
- ``configs``   versioned JSON schemas and bundled reference configurations
- ``store``     event-sourced live-trial documents with JSON persistence
- ``service``   HTTP facade for trial conduct and simulation jobs
- ``cli``       batch entry points (simulate / sensitivity / serve / ...)
"""

from .designs import (
    DesignConfig,
    DesignKind,
    PatientRecord,
    Recommendation,
    Stream,
    TrialState,
    final_recommendation,
    next_dose,
    true_optimal_dose,
)
from .errors import (
    ConfigError,
    ConflictError,
    IntegrityError,
    NotReadyError,
    NumericalError,
    ProdoseError,
    StateError,
    TrialCompleteError,
    ValidationError,
)
from .model import (
    PriorSpec,
    Skeleton,
    ToxicityTarget,
    WeightedObservation,
    follow_up_weight,
    model_probability,
    posterior_mean,
    select_dose,
    weighted_likelihood,
)
from .simulate import (
    OperatingCharacteristics,
    Scenario,
    SimJob,
    TrialResult,
    run_simulation,
    run_trial,
)

__version__ = "0.1.0"
