"""Versioned JSON document schemas for scenarios, designs and simulation jobs.

Every on-disk document carries ``version`` (currently "1") and ``type``. Unknown
fields are rejected so that typos fail loudly instead of being ignored. Error
messages name the offending JSON path and the violated invariant; syntax errors
keep the line/column the parser reports.

Bundled reference configurations live under ``prodose/reference``: the seven
benchmark scenarios and trial templates for 18, 30 and 40 patients with
calibrated skeletons and prior standard deviations.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .designs import DesignConfig, DesignKind
from .errors import ConfigError
from .model import PriorSpec, Skeleton, ToxicityTarget
from .simulate import Scenario, SimJob

SCHEMA_VERSION = "1"

DOC_SCENARIO_SET = "scenario-set"
DOC_TRIAL_TEMPLATE = "trial-template"
DOC_DESIGN_CONFIG = "design-config"
DOC_SIM_JOB = "sim-job"
DOC_TRIAL_DOCUMENT = "trial-document"


def _fail(path, message):
    raise ConfigError(f"{path}: {message}" if path else message)


def _require(mapping, key, path, expected=None):
    if key not in mapping:
        _fail(path, f"missing required field '{key}'")
    value = mapping[key]
    if expected is not None and not isinstance(value, expected):
        names = (
            expected.__name__
            if isinstance(expected, type)
            else "/".join(t.__name__ for t in expected)
        )
        _fail(f"{path}.{key}" if path else key, f"expected {names}")
    return value


def _reject_unknown(mapping, allowed, path):
    unknown = set(mapping) - set(allowed)
    if unknown:
        _fail(path, f"unknown field(s): {', '.join(sorted(unknown))}")


def _check_header(doc, doc_type, path):
    if not isinstance(doc, dict):
        _fail(path, "document must be a JSON object")
    version = _require(doc, "version", path, str)
    if version != SCHEMA_VERSION:
        _fail(f"{path}.version" if path else "version", f"unsupported version {version!r}")
    found = _require(doc, "type", path, str)
    if found != doc_type:
        _fail(f"{path}.type" if path else "type", f"expected {doc_type!r}, found {found!r}")


def _number_list(raw, path):
    if not isinstance(raw, list) or not all(isinstance(x, (int, float)) for x in raw):
        _fail(path, "expected a list of numbers")
    return [float(x) for x in raw]


_SCENARIO_FIELDS = (
    "name",
    "clin_probs",
    "pat_probs",
    "hazard_shape",
    "copula_tau",
    "accrual_per_window",
)


def scenario_from_dict(raw: dict, path: str = "scenario") -> Scenario:
    if not isinstance(raw, dict):
        _fail(path, "expected a JSON object")
    _reject_unknown(raw, _SCENARIO_FIELDS, path)
    kwargs = dict(
        clin_probs=_number_list(_require(raw, "clin_probs", path), f"{path}.clin_probs"),
        pat_probs=_number_list(_require(raw, "pat_probs", path), f"{path}.pat_probs"),
    )
    for key in ("hazard_shape", "copula_tau", "accrual_per_window"):
        if key in raw:
            kwargs[key] = float(_require(raw, key, path, (int, float)))
    if "name" in raw:
        kwargs["name"] = _require(raw, "name", path, str)
    try:
        return Scenario(**kwargs)
    except ConfigError as exc:
        _fail(path, str(exc))


def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "name": scenario.name,
        "clin_probs": list(scenario.clin_probs),
        "pat_probs": list(scenario.pat_probs),
        "hazard_shape": scenario.hazard_shape,
        "copula_tau": scenario.copula_tau,
        "accrual_per_window": scenario.accrual_per_window,
    }


def scenario_set_from_dict(doc: dict, path: str = "") -> list[Scenario]:
    _check_header(doc, DOC_SCENARIO_SET, path)
    _reject_unknown(doc, ("version", "type", "scenarios"), path)
    raw = _require(doc, "scenarios", path, list)
    if not raw:
        _fail(f"{path}.scenarios" if path else "scenarios", "must not be empty")
    prefix = f"{path}.scenarios" if path else "scenarios"
    scenarios = [scenario_from_dict(s, f"{prefix}[{i}]") for i, s in enumerate(raw)]
    names = [s.name for s in scenarios]
    if len(set(names)) != len(names):
        _fail(prefix, "scenario names must be unique")
    return scenarios


def scenario_set_to_dict(scenarios) -> dict:
    return {
        "version": SCHEMA_VERSION,
        "type": DOC_SCENARIO_SET,
        "scenarios": [scenario_to_dict(s) for s in scenarios],
    }


_TEMPLATE_FIELDS = (
    "n_max",
    "window_weeks",
    "clinician_target",
    "patient_target",
    "clinician_skeleton",
    "patient_skeleton",
    "clinician_prior_sd",
    "patient_prior_sd",
    "start_dose",
    "no_skip",
)


def _design_kwargs(raw: dict, path: str) -> dict:
    kwargs = dict(
        n_max=_require(raw, "n_max", path, int),
        window=float(_require(raw, "window_weeks", path, (int, float))),
        clinician_target=ToxicityTarget(float(_require(raw, "clinician_target", path, (int, float)))),
        patient_target=ToxicityTarget(float(_require(raw, "patient_target", path, (int, float)))),
        clinician_skeleton=Skeleton(tuple(_number_list(_require(raw, "clinician_skeleton", path), f"{path}.clinician_skeleton"))),
        patient_skeleton=Skeleton(tuple(_number_list(_require(raw, "patient_skeleton", path), f"{path}.patient_skeleton"))),
        clinician_prior=PriorSpec(sd=float(_require(raw, "clinician_prior_sd", path, (int, float)))),
        patient_prior=PriorSpec(sd=float(_require(raw, "patient_prior_sd", path, (int, float)))),
    )
    if "start_dose" in raw:
        kwargs["start_dose"] = _require(raw, "start_dose", path, int)
    if "no_skip" in raw:
        kwargs["no_skip"] = _require(raw, "no_skip", path, bool)
    return kwargs


def parse_design_kind(raw: str, path: str = "design") -> DesignKind:
    try:
        return DesignKind(raw)
    except ValueError:
        valid = ", ".join(k.value for k in DesignKind)
        _fail(path, f"unknown design {raw!r}; expected one of: {valid}")


def trial_template_from_dict(doc: dict, path: str = "") -> dict:
    """Validated DesignConfig keyword arguments, minus the design kind."""
    _check_header(doc, DOC_TRIAL_TEMPLATE, path)
    _reject_unknown(doc, ("version", "type") + _TEMPLATE_FIELDS, path)
    return _design_kwargs(doc, path or "trial-template")


def build_design(template_kwargs: dict, kind: DesignKind) -> DesignConfig:
    return DesignConfig(kind=kind, **template_kwargs)


def design_config_from_dict(doc: dict, path: str = "") -> DesignConfig:
    _check_header(doc, DOC_DESIGN_CONFIG, path)
    _reject_unknown(doc, ("version", "type", "design") + _TEMPLATE_FIELDS, path)
    kind = parse_design_kind(
        _require(doc, "design", path, str), f"{path}.design" if path else "design"
    )
    return build_design(_design_kwargs(doc, path or "design-config"), kind)


def design_config_to_dict(config: DesignConfig) -> dict:
    return {
        "version": SCHEMA_VERSION,
        "type": DOC_DESIGN_CONFIG,
        "design": config.kind.value,
        "n_max": config.n_max,
        "window_weeks": config.window,
        "clinician_target": config.clinician_target.value,
        "patient_target": config.patient_target.value,
        "clinician_skeleton": list(config.clinician_skeleton.values),
        "patient_skeleton": list(config.patient_skeleton.values),
        "clinician_prior_sd": config.clinician_prior.sd,
        "patient_prior_sd": config.patient_prior.sd,
        "start_dose": config.start_dose,
        "no_skip": config.no_skip,
    }


def sim_job_from_dict(doc: dict, path: str = "") -> SimJob:
    _check_header(doc, DOC_SIM_JOB, path)
    _reject_unknown(doc, ("version", "type", "scenario", "design", "n_replicates", "seed"), path)
    scenario = scenario_from_dict(
        _require(doc, "scenario", path, dict), f"{path}.scenario" if path else "scenario"
    )
    design = design_config_from_dict(
        _require(doc, "design", path, dict), f"{path}.design" if path else "design"
    )
    try:
        return SimJob(
            scenario=scenario,
            design=design,
            n_replicates=_require(doc, "n_replicates", path, int),
            seed=_require(doc, "seed", path, int),
        )
    except ConfigError as exc:
        _fail(path, str(exc))


def sim_job_to_dict(job: SimJob) -> dict:
    return {
        "version": SCHEMA_VERSION,
        "type": DOC_SIM_JOB,
        "scenario": scenario_to_dict(job.scenario),
        "design": design_config_to_dict(job.design),
        "n_replicates": job.n_replicates,
        "seed": job.seed,
    }


_PARSERS = {
    DOC_SCENARIO_SET: scenario_set_from_dict,
    DOC_TRIAL_TEMPLATE: trial_template_from_dict,
    DOC_DESIGN_CONFIG: design_config_from_dict,
    DOC_SIM_JOB: sim_job_from_dict,
}


def load_json(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def validate_document(doc: dict):
    """Parse any known document type; returns (type, parsed value)."""
    if not isinstance(doc, dict):
        raise ConfigError("document must be a JSON object")
    doc_type = doc.get("type")
    if doc_type == DOC_TRIAL_DOCUMENT:
        from .store import TrialDocument  # cycle: store depends on configs

        return doc_type, TrialDocument.from_dict(doc)
    if doc_type not in _PARSERS:
        known = ", ".join(sorted((*_PARSERS, DOC_TRIAL_DOCUMENT)))
        raise ConfigError(f"type: expected one of {known}; found {doc_type!r}")
    return doc_type, _PARSERS[doc_type](doc)


def load_scenarios(path) -> list[Scenario]:
    return scenario_set_from_dict(load_json(path))


def load_trial_template(path) -> dict:
    return trial_template_from_dict(load_json(path))


def bundled_path(name: str) -> Path:
    """Path to a bundled reference configuration file (e.g. 'scenarios')."""
    ref = resources.files("prodose") / "reference" / f"{name}.json"
    if not ref.is_file():
        available = sorted(
            p.name[:-5]
            for p in (resources.files("prodose") / "reference").iterdir()
            if p.name.endswith(".json")
        )
        raise ConfigError(f"no bundled config {name!r}; available: {', '.join(available)}")
    return Path(str(ref))
