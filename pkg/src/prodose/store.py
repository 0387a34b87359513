"""Event-sourced state for a live trial: append events, replay, persist, recommend.

A trial document is an append-only list of events; the trial state is a pure
fold over them. Every applied event records a hash of the resulting derived
state, so a reload can verify the replay event by event and report the exact
sequence number at which a persisted file diverges.

Time is measured in trial weeks (real-valued). Each event may carry a
wall-clock annotation for audit purposes; all statistics use trial weeks only.
Documents are persisted one per trial as canonical JSON (sorted keys, version
field "1").
"""

from __future__ import annotations

import hashlib
import json
import re
import uuid
from dataclasses import dataclass, field, replace
from pathlib import Path

from .configs import (
    DOC_TRIAL_DOCUMENT,
    SCHEMA_VERSION,
    design_config_from_dict,
    design_config_to_dict,
)
from .designs import (
    DesignConfig,
    PatientRecord,
    Recommendation,
    Stream,
    TrialState,
    next_dose,
    recommend_final,
    recommend_next,
)
from .errors import ConfigError, ConflictError, IntegrityError, StateError, ValidationError

__all__ = [
    "TrialCreated",
    "PatientEnrolled",
    "OutcomeReported",
    "FollowupClockAdvanced",
    "TrialFinalized",
    "TrialEvent",
    "TrialDocument",
    "TrialStore",
    "apply_event",
    "recommendation",
    "new_trial_id",
]


@dataclass(frozen=True)
class TrialCreated:
    config: DesignConfig


@dataclass(frozen=True)
class PatientEnrolled:
    patient_id: int
    dose_index: int
    override: bool = False
    note: str = ""


@dataclass(frozen=True)
class OutcomeReported:
    patient_id: int
    stream: Stream
    event_time_weeks: float


@dataclass(frozen=True)
class FollowupClockAdvanced:
    now: float


@dataclass(frozen=True)
class TrialFinalized:
    final_dose: int


_KIND_NAMES = {
    TrialCreated: "trial-created",
    PatientEnrolled: "patient-enrolled",
    OutcomeReported: "outcome-reported",
    FollowupClockAdvanced: "followup-clock-advanced",
    TrialFinalized: "trial-finalized",
}
_KIND_BY_NAME = {v: k for k, v in _KIND_NAMES.items()}


@dataclass(frozen=True)
class TrialEvent:
    """One entry of the append-only log.

    ``at`` is the event time in trial weeks; ``recorded_at`` is an optional
    wall-clock annotation (ISO 8601) that plays no role in any statistic.
    """

    seq: int
    at: float
    kind: object
    recorded_at: str = ""

    def to_dict(self) -> dict:
        data = {
            k: (v.value if isinstance(v, Stream) else v)
            for k, v in vars(self.kind).items()
        }
        if isinstance(self.kind, TrialCreated):
            data = {"config": design_config_to_dict(self.kind.config)}
        return {
            "seq": self.seq,
            "at": self.at,
            "event": _KIND_NAMES[type(self.kind)],
            "data": data,
            "recorded_at": self.recorded_at,
        }

    @classmethod
    def from_dict(cls, raw: dict, path: str) -> "TrialEvent":
        for key in ("seq", "at", "event", "data"):
            if key not in raw:
                raise ConfigError(f"{path}: missing required field '{key}'")
        unknown = set(raw) - {"seq", "at", "event", "data", "recorded_at"}
        if unknown:
            raise ConfigError(f"{path}: unknown field(s): {', '.join(sorted(unknown))}")
        name = raw["event"]
        if name not in _KIND_BY_NAME:
            raise ConfigError(f"{path}.event: unknown event kind {name!r}")
        data = raw["data"]
        if not isinstance(data, dict):
            raise ConfigError(f"{path}.data: expected a JSON object")
        kind_cls = _KIND_BY_NAME[name]
        try:
            if kind_cls is TrialCreated:
                kind = TrialCreated(config=design_config_from_dict(data.get("config"), f"{path}.data.config"))
            elif kind_cls is OutcomeReported:
                kind = OutcomeReported(
                    patient_id=int(data["patient_id"]),
                    stream=Stream(data["stream"]),
                    event_time_weeks=float(data["event_time_weeks"]),
                )
            elif kind_cls is PatientEnrolled:
                kind = PatientEnrolled(
                    patient_id=int(data["patient_id"]),
                    dose_index=int(data["dose_index"]),
                    override=bool(data.get("override", False)),
                    note=str(data.get("note", "")),
                )
            elif kind_cls is FollowupClockAdvanced:
                kind = FollowupClockAdvanced(now=float(data["now"]))
            else:
                kind = TrialFinalized(final_dose=int(data["final_dose"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{path}.data: {exc}") from exc
        return cls(
            seq=int(raw["seq"]),
            at=float(raw["at"]),
            kind=kind,
            recorded_at=str(raw.get("recorded_at", "")),
        )


@dataclass(frozen=True)
class TrialDocument:
    """Event log plus the derived state cache (always equal to the replay)."""

    trial_id: str
    events: tuple[TrialEvent, ...] = ()
    state: TrialState | None = None
    finalized_dose: int | None = None

    @property
    def last_seq(self) -> int:
        return self.events[-1].seq if self.events else 0

    @property
    def finalized(self) -> bool:
        return self.finalized_dose is not None

    def state_hash(self) -> str:
        return _hash_state(self.state, self.finalized_dose)

    def to_dict(self) -> dict:
        records = []
        doc = TrialDocument(trial_id=self.trial_id)
        for event in self.events:
            doc = apply_event(doc, event)
            record = event.to_dict()
            record["state_hash"] = doc.state_hash()
            records.append(record)
        return {
            "version": SCHEMA_VERSION,
            "type": DOC_TRIAL_DOCUMENT,
            "trial_id": self.trial_id,
            "events": records,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "TrialDocument":
        if not isinstance(raw, dict):
            raise ConfigError("trial document must be a JSON object")
        unknown = set(raw) - {"version", "type", "trial_id", "events"}
        if unknown:
            raise ConfigError(f"unknown field(s): {', '.join(sorted(unknown))}")
        if raw.get("version") != SCHEMA_VERSION:
            raise ConfigError(f"version: unsupported version {raw.get('version')!r}")
        if raw.get("type") != DOC_TRIAL_DOCUMENT:
            raise ConfigError(f"type: expected {DOC_TRIAL_DOCUMENT!r}")
        trial_id = raw.get("trial_id")
        if not isinstance(trial_id, str) or not trial_id:
            raise ConfigError("trial_id: expected a non-empty string")
        records = raw.get("events")
        if not isinstance(records, list):
            raise ConfigError("events: expected a list")
        doc = cls(trial_id=trial_id)
        for i, record in enumerate(records):
            path = f"events[{i}]"
            if not isinstance(record, dict):
                raise ConfigError(f"{path}: expected a JSON object")
            claimed_hash = record.pop("state_hash", None)
            event = TrialEvent.from_dict(record, path)
            doc = apply_event(doc, event)
            if claimed_hash is not None and claimed_hash != doc.state_hash():
                raise IntegrityError(
                    f"persisted state hash diverges from replay at seq {event.seq}",
                    first_divergence_seq=event.seq,
                )
        return doc


def _hash_state(state: TrialState | None, finalized_dose: int | None) -> str:
    if state is None:
        payload = {"initialized": False}
    else:
        payload = {
            "now": state.now,
            "finalized_dose": finalized_dose,
            "patients": [
                [p.id, p.entry_time, p.dose_index, p.clin_event_time, p.pat_event_time]
                for p in state.patients
            ],
        }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def apply_event(doc: TrialDocument, event: TrialEvent) -> TrialDocument:
    """Fold one event into the document; validates sequence, clock and content."""
    if event.seq != doc.last_seq + 1:
        raise ConflictError(
            f"expected seq {doc.last_seq + 1}, got {event.seq} (concurrent edit?)"
        )
    kind = event.kind
    if doc.state is None:
        if not isinstance(kind, TrialCreated):
            raise ValidationError("first event must create the trial")
        if event.at != 0.0:
            raise ValidationError("trial creation must happen at week 0")
        state = TrialState(config=kind.config)
        return TrialDocument(doc.trial_id, doc.events + (event,), state, None)
    if isinstance(kind, TrialCreated):
        raise ValidationError("trial already created")
    if doc.finalized:
        raise StateError("trial is finalized; no further events accepted")
    if event.at < doc.state.now:
        raise ValidationError(
            f"clock regression: event at {event.at} before current time {doc.state.now}"
        )
    state = doc.state.at(event.at)
    finalized = doc.finalized_dose

    if isinstance(kind, PatientEnrolled):
        if state.n_enrolled >= state.config.n_max:
            raise ValidationError("enrollment capacity reached")
        if kind.patient_id != state.n_enrolled + 1:
            raise ValidationError(
                f"expected patient id {state.n_enrolled + 1}, got {kind.patient_id}"
            )
        if not 1 <= kind.dose_index <= state.config.n_levels:
            raise ValidationError(f"dose {kind.dose_index} out of range")
        engine_dose = next_dose(state)
        if kind.dose_index != engine_dose:
            if not kind.override:
                raise ValidationError(
                    f"dose {kind.dose_index} differs from the engine's choice "
                    f"{engine_dose}; set override with an audit note to allow it"
                )
            if not kind.note.strip():
                raise ValidationError("a dose override requires an audit note")
        state = state.with_patient(
            PatientRecord(id=kind.patient_id, entry_time=event.at, dose_index=kind.dose_index)
        )
    elif isinstance(kind, OutcomeReported):
        index = kind.patient_id - 1
        if not 0 <= index < state.n_enrolled:
            raise ValidationError(f"unknown patient {kind.patient_id}")
        patient = state.patients[index]
        if patient.event_time(kind.stream) is not None:
            raise ValidationError(
                f"{kind.stream.value} outcome already reported for patient {kind.patient_id}"
            )
        if not kind.event_time_weeks > 0:
            raise ValidationError("event time must be > 0 weeks after entry")
        if patient.entry_time + kind.event_time_weeks > event.at:
            raise ValidationError("cannot report an event that has not happened yet")
        field_name = "clin_event_time" if kind.stream is Stream.CLINICIAN else "pat_event_time"
        patients = list(state.patients)
        patients[index] = replace(patient, **{field_name: kind.event_time_weeks})
        state = replace(state, patients=tuple(patients))
    elif isinstance(kind, FollowupClockAdvanced):
        if kind.now != event.at:
            raise ValidationError("clock event payload must equal its event time")
    elif isinstance(kind, TrialFinalized):
        engine = recommend_final(state)  # raises NotReadyError when premature
        if kind.final_dose != engine.dose:
            raise ValidationError(
                f"final dose {kind.final_dose} differs from the engine's "
                f"recommendation {engine.dose}"
            )
        finalized = kind.final_dose
    else:
        raise ValidationError(f"unsupported event kind {type(kind).__name__}")

    return TrialDocument(doc.trial_id, doc.events + (event,), state, finalized)


def recommendation(doc: TrialDocument, at: float) -> Recommendation:
    """Next-dose (or final) recommendation for the trial as of week ``at``."""
    if doc.state is None:
        raise StateError("trial has no creation event yet")
    if doc.finalized:
        raise StateError("trial is finalized")
    if at < doc.state.now:
        raise ValidationError(
            f"cannot evaluate at week {at}: trial clock is already at {doc.state.now}"
        )
    state = doc.state.at(at)
    if state.n_enrolled >= state.config.n_max:
        return recommend_final(state)  # NotReadyError when follow-up incomplete
    return recommend_next(state)


def new_trial_id() -> str:
    return uuid.uuid4().hex[:12]


_ID_RE = re.compile(r"^[A-Za-z0-9_-]{1,64}$")


class TrialStore:
    """One JSON file per trial under a data directory; replay-verified on load."""

    def __init__(self, data_dir):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)

    def _path(self, trial_id: str) -> Path:
        if not _ID_RE.match(trial_id):
            raise ValidationError(f"invalid trial id {trial_id!r}")
        return self.data_dir / f"{trial_id}.json"

    def exists(self, trial_id: str) -> bool:
        return self._path(trial_id).is_file()

    def list_ids(self) -> list[str]:
        return sorted(p.stem for p in self.data_dir.glob("*.json"))

    def persist(self, doc: TrialDocument) -> Path:
        path = self._path(doc.trial_id)
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(dump_document(doc), encoding="utf-8")
        tmp.replace(path)
        return path

    def load(self, trial_id: str) -> TrialDocument:
        path = self._path(trial_id)
        if not path.is_file():
            raise KeyError(trial_id)
        return load_document(path)


def dump_document(doc: TrialDocument) -> str:
    return json.dumps(doc.to_dict(), sort_keys=True, indent=2) + "\n"


def load_document(path) -> TrialDocument:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise IntegrityError(f"{path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise IntegrityError(f"{path}:{exc.lineno}: not valid JSON ({exc.msg})") from exc
    return TrialDocument.from_dict(raw)
