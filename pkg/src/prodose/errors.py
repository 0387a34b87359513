"""Exception hierarchy shared across the library, service and CLI."""


class ProdoseError(Exception):
    """Base class for all errors raised by this package."""

    code = "error"


class ConfigError(ProdoseError, ValueError):
    """A configuration value or document violates an invariant."""

    code = "invalid-configuration"


class ValidationError(ProdoseError, ValueError):
    """An event or request is inconsistent with the current trial state."""

    code = "validation-error"


class ConflictError(ProdoseError):
    """An event sequence number conflicts with the stored document."""

    code = "sequence-conflict"


class StateError(ProdoseError):
    """The operation is not allowed in the trial's current lifecycle state."""

    code = "state-error"


class TrialCompleteError(StateError):
    """Enrollment capacity has been reached; no further assignments."""

    code = "trial-complete"


class NotReadyError(StateError):
    """Follow-up is incomplete; the final recommendation is not available yet."""

    code = "not-ready"


class NumericalError(ProdoseError, RuntimeError):
    """A numerical routine failed to converge; carries diagnostics."""

    code = "numerical-error"

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class IntegrityError(ProdoseError):
    """A persisted document is corrupt or diverges from its event log."""

    code = "integrity-error"

    def __init__(self, message, first_divergence_seq=None):
        super().__init__(message)
        self.first_divergence_seq = first_divergence_seq
