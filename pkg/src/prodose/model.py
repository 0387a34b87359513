"""Working model, weighted likelihood and posterior estimation for one toxicity stream.

Everything here is a pure function of its arguments. The same machinery serves
both the clinician-reported and the patient-reported outcome stream; a stream is
just a (skeleton, prior, target) triple plus its observations.

The dose-toxicity working model is the one-parameter power curve

    P(DLT by end of window | dose j) = u_j ** exp(b),      b ~ Normal(0, sd^2)

where ``u`` is the skeleton of prior toxicity guesses. At ``b = 0`` the model
reproduces the skeleton exactly, which is what makes externally calibrated
skeletons and prior standard deviations behave as published. Partially followed
patients enter the likelihood with a linear follow-up weight.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np

from .errors import ConfigError, NumericalError

__all__ = [
    "Skeleton",
    "PriorSpec",
    "WeightedObservation",
    "ToxicityTarget",
    "follow_up_weight",
    "model_probability",
    "estimated_probabilities",
    "log_weighted_likelihood",
    "weighted_likelihood",
    "posterior_mean",
    "select_dose",
]


@dataclass(frozen=True)
class Skeleton:
    """Prior guesses of toxicity probability per dose level, strictly increasing in (0,1)."""

    values: tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", values)
        if len(values) < 2:
            raise ConfigError("skeleton: need at least 2 dose levels")
        for v in values:
            if not 0.0 < v < 1.0:
                raise ConfigError(f"skeleton: value {v} outside (0, 1)")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ConfigError("skeleton: values must be strictly increasing")

    def __len__(self):
        return len(self.values)

    @property
    def log_values(self) -> np.ndarray:
        return _log_skeleton(self.values)


@lru_cache(maxsize=64)
def _log_skeleton(values: tuple[float, ...]) -> np.ndarray:
    arr = np.log(np.asarray(values))
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PriorSpec:
    """Normal prior on the model parameter; mean is fixed at 0 by the designs."""

    sd: float
    mean: float = 0.0

    def __post_init__(self):
        if not self.sd > 0:
            raise ConfigError(f"prior: sd must be positive, got {self.sd}")


@dataclass(frozen=True)
class WeightedObservation:
    """One patient's contribution to a stream: dose given, follow-up weight, DLT flag."""

    dose_index: int
    weight: float
    dlt: int

    def __post_init__(self):
        if self.dlt not in (0, 1):
            raise ConfigError(f"observation: dlt must be 0 or 1, got {self.dlt}")
        if not 0.0 <= self.weight <= 1.0:
            raise ConfigError(f"observation: weight {self.weight} outside [0, 1]")
        if self.dlt == 1 and self.weight != 1.0:
            raise ConfigError("observation: a DLT observation must carry weight 1")
        if self.dose_index < 1:
            raise ConfigError(f"observation: dose_index must be >= 1, got {self.dose_index}")


@dataclass(frozen=True)
class ToxicityTarget:
    """Target probability of DLT by the end of the observation window."""

    value: float

    def __post_init__(self):
        if not 0.0 < self.value < 1.0:
            raise ConfigError(f"target: value {self.value} outside (0, 1)")


def follow_up_weight(follow_up_time: float, window: float, dlt_observed: bool) -> float:
    """Linear follow-up weight: elapsed fraction of the window, capped at 1.

    A patient with an observed DLT always carries full weight.
    """
    if not window > 0:
        raise ConfigError(f"window must be positive, got {window}")
    if follow_up_time < 0:
        raise ConfigError(f"follow-up time must be nonnegative, got {follow_up_time}")
    if dlt_observed:
        return 1.0
    return min(follow_up_time / window, 1.0)


def model_probability(skeleton_value: float, param: float) -> float:
    """Toxicity probability under the working model: skeleton_value ** exp(param)."""
    if not 0.0 < skeleton_value < 1.0:
        raise ConfigError(f"skeleton value {skeleton_value} outside (0, 1)")
    return float(skeleton_value ** math.exp(param))


def estimated_probabilities(skeleton: Skeleton, param: float) -> np.ndarray:
    """Whole estimated toxicity curve at a plug-in parameter value."""
    return np.exp(math.exp(param) * skeleton.log_values)


def _observation_arrays(obs, skeleton: Skeleton):
    m = len(skeleton)
    doses = np.empty(len(obs), dtype=np.intp)
    weights = np.empty(len(obs))
    dlts = np.empty(len(obs), dtype=bool)
    for k, o in enumerate(obs):
        if not 1 <= o.dose_index <= m:
            raise ConfigError(
                f"observation: dose_index {o.dose_index} outside [1, {m}]"
            )
        doses[k] = o.dose_index - 1
        weights[k] = o.weight
        dlts[k] = bool(o.dlt)
    return doses, weights, dlts


def _log_likelihood_grid(params: np.ndarray, doses, weights, dlts, skeleton: Skeleton) -> np.ndarray:
    """Log weighted likelihood evaluated at an array of parameter values.

    Shape: params (n,) -> (n,). DLT terms are linear in exp(b) and cheap;
    only the non-DLT terms need the full probability matrix.
    """
    if doses.size == 0:
        return np.zeros_like(params)
    e = np.exp(params)
    logu = skeleton.log_values[doses]
    out = np.zeros_like(params)
    if dlts.any():
        d = dlts
        # sum_k [ log w_k + e^b * log u_k ] over DLT observations
        out += np.sum(np.log(weights[d])) + e * np.sum(logu[d])
    if not dlts.all():
        nd = ~dlts
        p = np.exp(np.outer(e, logu[nd]))
        wp = weights[nd][None, :] * p
        # p < 1 and w <= 1 guarantee the survival factor stays positive
        assert wp.max(initial=0.0) < 1.0, "non-DLT term with weight*probability >= 1"
        out += np.log1p(-wp).sum(axis=1)
    return out


def log_weighted_likelihood(param: float, obs, skeleton: Skeleton) -> float:
    """Log of the follow-up-weighted likelihood at a single parameter value."""
    doses, weights, dlts = _observation_arrays(obs, skeleton)
    return float(_log_likelihood_grid(np.asarray([param], dtype=float), doses, weights, dlts, skeleton)[0])


def weighted_likelihood(param: float, obs, skeleton: Skeleton) -> float:
    """Follow-up-weighted likelihood: prod_k [w_k p_k]^y_k [1 - w_k p_k]^(1-y_k).

    Computed in log space internally; the empty product is 1.
    """
    return math.exp(log_weighted_likelihood(param, obs, skeleton))


# Quadrature grid: Gauss-Legendre on [-8, 8] standard deviations. 201 nodes is
# the production rule; the embedded 101-node rule exists only to detect loss of
# resolution (a posterior spike narrower than the node spacing).
_GL_NODES = 201
_GL_CHECK_NODES = 101


@lru_cache(maxsize=4)
def _gl_grid(n: int):
    z, w = np.polynomial.legendre.leggauss(n)
    z = z * 8.0
    logw = np.log(w * 8.0) - 0.5 * z * z
    z.setflags(write=False)
    logw.setflags(write=False)
    return z, logw


def _grid_mean(z, logw, loglik):
    g = loglik + logw
    shift = g.max()
    if not np.isfinite(shift):
        raise NumericalError(
            "posterior mass vanished: all integrand values underflowed",
            max_log_integrand=float(shift),
        )
    q = np.exp(g - shift)
    total = q.sum()
    return float(np.dot(z, q) / total)


def posterior_mean(prior: PriorSpec, obs, skeleton: Skeleton) -> float:
    """Posterior mean of the model parameter under the weighted likelihood.

    Evaluates E[b | data] for b ~ Normal(mean, sd^2) by Gauss-Legendre
    quadrature over mean +/- 8 sd, with the integrand handled in log space.
    Raises NumericalError when the embedded coarser rule disagrees, rather
    than silently returning a bad estimate.
    """
    doses, weights, dlts = _observation_arrays(obs, skeleton)
    z_main, logw_main = _gl_grid(_GL_NODES)
    z_chk, logw_chk = _gl_grid(_GL_CHECK_NODES)
    # one batched likelihood evaluation covers both rules
    z_all = np.concatenate([z_main, z_chk])
    loglik = _log_likelihood_grid(prior.mean + prior.sd * z_all, doses, weights, dlts, skeleton)
    est = _grid_mean(z_main, logw_main, loglik[: z_main.size])
    check = _grid_mean(z_chk, logw_chk, loglik[z_main.size:])
    if abs(est - check) > 1e-5 * max(1.0, abs(est)):
        raise NumericalError(
            "quadrature did not converge: refinement check disagrees",
            estimate=prior.mean + prior.sd * est,
            check_estimate=prior.mean + prior.sd * check,
            n_observations=len(obs),
            prior_sd=prior.sd,
        )
    return prior.mean + prior.sd * est


def select_dose(skeleton: Skeleton, param_estimate: float, target: ToxicityTarget) -> int:
    """Dose whose estimated toxicity probability is closest to the target.

    Ties break toward the lower dose. Returns a 1-based dose index.
    """
    probs = estimated_probabilities(skeleton, param_estimate)
    return int(np.argmin(np.abs(probs - target.value))) + 1
