"""HTTP facade over the trial store and the simulator.

Endpoints are pure views of library results: a recommendation response is
exactly what the decision engine returns for the replayed document, and a
finished simulation job carries exactly what ``run_simulation`` produced for
the posted (seed, job). The service keeps no statistical state of its own;
trial documents live on disk, the simulation job registry is in memory (jobs
restart with the process).

Configuration: ``--port`` (default 8173), ``--data-dir``, ``--workers``, each
overridable through PRODOSE_PORT / PRODOSE_DATA_DIR / PRODOSE_WORKERS.
"""

from __future__ import annotations

import datetime as _dt
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import __version__
from .configs import design_config_from_dict, design_config_to_dict, sim_job_from_dict
from .designs import Recommendation, TrialState
from .errors import (
    ConfigError,
    ConflictError,
    IntegrityError,
    ProdoseError,
    StateError,
    ValidationError,
)
from .simulate import run_simulation
from .store import (
    TrialCreated,
    TrialDocument,
    TrialEvent,
    TrialStore,
    apply_event,
    new_trial_id,
    recommendation,
)

DEFAULT_PORT = 8173
ENV_PREFIX = "PRODOSE"

_STATUS_BY_ERROR = (
    (ConflictError, 409),
    (StateError, 422),  # includes trial-complete and not-ready
    (IntegrityError, 500),
    (ConfigError, 400),
    (ValidationError, 400),
)


def _http_status(exc: ProdoseError) -> int:
    for cls, status in _STATUS_BY_ERROR:
        if isinstance(exc, cls):
            return status
    return 500


def _error_response(exc: ProdoseError, detail=None) -> JSONResponse:
    payload = {"code": exc.code, "message": str(exc)}
    if detail is not None:
        payload["detail"] = detail
    diagnostics = getattr(exc, "diagnostics", None)
    if diagnostics:
        payload["detail"] = diagnostics
    return JSONResponse(status_code=_http_status(exc), content={"error": payload})


def _not_found(what: str) -> JSONResponse:
    return JSONResponse(
        status_code=404,
        content={"error": {"code": "not-found", "message": f"unknown {what}"}},
    )


def _state_view(state: TrialState | None, finalized_dose) -> dict:
    if state is None:
        return {"created": False}
    window = state.config.window
    patients = []
    for p in state.patients:
        elapsed = max(0.0, min(state.now - p.entry_time, window))
        patients.append(
            {
                "id": p.id,
                "entry_week": p.entry_time,
                "dose": p.dose_index,
                "follow_up_fraction": elapsed / window,
                "clin_event_week": p.clin_event_time,
                "pat_event_week": p.pat_event_time,
                "clin_dlt_in_window": bool(
                    p.clin_event_time is not None
                    and p.clin_event_time <= min(state.now - p.entry_time, window)
                ),
                "pat_dlt_in_window": bool(
                    p.pat_event_time is not None
                    and p.pat_event_time <= min(state.now - p.entry_time, window)
                ),
            }
        )
    return {
        "created": True,
        "now": state.now,
        "n_enrolled": state.n_enrolled,
        "n_max": state.config.n_max,
        "window_weeks": window,
        "highest_dose_given": state.highest_dose_given,
        "finalized_dose": finalized_dose,
        "patients": patients,
    }


def _recommendation_view(rec: Recommendation) -> dict:
    return {
        "dose": rec.dose,
        "mode": rec.mode,
        "model_choice": rec.model_choice,
        "constraint_applied": rec.constraint_applied,
        "highest_dose_given": rec.highest_dose_given,
        "clinician": asdict(rec.clinician),
        "patient": asdict(rec.patient),
    }


class _JobRegistry:
    """Bounded worker pool running simulation jobs; poll by id."""

    def __init__(self, workers: int):
        self._pool = ThreadPoolExecutor(max_workers=max(1, workers))
        self._jobs: dict[str, dict] = {}
        self._lock = threading.Lock()

    def submit(self, job) -> str:
        job_id = uuid.uuid4().hex[:12]
        with self._lock:
            self._jobs[job_id] = {"status": "queued", "result": None, "error": None}

        def work():
            with self._lock:
                self._jobs[job_id]["status"] = "running"
            try:
                oc = run_simulation(job)
            except Exception as exc:  # surfaced via polling
                with self._lock:
                    self._jobs[job_id].update(status="failed", error=str(exc))
                return
            with self._lock:
                self._jobs[job_id].update(status="done", result=asdict(oc))

        self._pool.submit(work)
        return job_id

    def get(self, job_id: str) -> dict | None:
        with self._lock:
            record = self._jobs.get(job_id)
            return dict(record) if record is not None else None


def create_app(data_dir, workers: int = 2, ui_dir=None, port: int = DEFAULT_PORT) -> FastAPI:
    app = FastAPI(title="prodose", version=__version__)
    store = TrialStore(data_dir)
    jobs = _JobRegistry(workers)
    write_lock = threading.Lock()  # single writer across all trial appends

    # the bundled dashboard is same-origin; CORS covers dev setups on the port
    app.add_middleware(
        CORSMiddleware,
        allow_origins=[
            f"http://localhost:{port}",
            f"http://127.0.0.1:{port}",
        ],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(ProdoseError)
    async def _handle_prodose_error(request: Request, exc: ProdoseError):
        return _error_response(exc)

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "version": __version__}

    @app.get("/trials")
    def list_trials():
        return {"trials": store.list_ids()}

    @app.post("/trials", status_code=201)
    async def create_trial(request: Request):
        body = await request.json()
        config = design_config_from_dict(body)
        doc = TrialDocument(trial_id=new_trial_id())
        event = TrialEvent(seq=1, at=0.0, kind=TrialCreated(config=config), recorded_at=_now_iso())
        doc = apply_event(doc, event)
        with write_lock:
            store.persist(doc)
        return {"trial_id": doc.trial_id, "last_seq": doc.last_seq}

    @app.get("/trials/{trial_id}")
    def get_trial(trial_id: str):
        try:
            doc = store.load(trial_id)
        except KeyError:
            return _not_found("trial id")
        return {
            "document": doc.to_dict(),
            "state": _state_view(doc.state, doc.finalized_dose),
            "config": design_config_to_dict(doc.state.config) if doc.state else None,
            "last_seq": doc.last_seq,
        }

    @app.post("/trials/{trial_id}/events", status_code=201)
    async def post_event(trial_id: str, request: Request):
        body = await request.json()
        if not isinstance(body, dict):
            raise ValidationError("request body must be a JSON object")
        expected_seq = body.pop("expected_seq", None)
        with write_lock:
            try:
                doc = store.load(trial_id)
            except KeyError:
                return _not_found("trial id")
            if expected_seq is not None and expected_seq != doc.last_seq:
                raise ConflictError(
                    f"document is at seq {doc.last_seq}, expected_seq was {expected_seq}"
                )
            body.setdefault("seq", doc.last_seq + 1)
            body.setdefault("recorded_at", _now_iso())
            event = TrialEvent.from_dict(body, "event")
            doc = apply_event(doc, event)
            store.persist(doc)
        return {
            "event": doc.events[-1].to_dict() | {"state_hash": doc.state_hash()},
            "last_seq": doc.last_seq,
            "state": _state_view(doc.state, doc.finalized_dose),
        }

    @app.get("/trials/{trial_id}/recommendation")
    def get_recommendation(trial_id: str, at: float | None = None):
        try:
            doc = store.load(trial_id)
        except KeyError:
            return _not_found("trial id")
        if at is not None:
            when = float(at)
        else:
            when = doc.state.now if doc.state else 0.0
        rec = recommendation(doc, when)
        return {"at": when, "trial_id": trial_id} | _recommendation_view(rec)

    @app.post("/simulations", status_code=202)
    async def post_simulation(request: Request):
        body = await request.json()
        job = sim_job_from_dict(body)
        return {"job_id": jobs.submit(job)}

    @app.get("/simulations/{job_id}")
    def get_simulation(job_id: str):
        record = jobs.get(job_id)
        if record is None:
            return _not_found("simulation job id")
        return record

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def _now_iso() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
