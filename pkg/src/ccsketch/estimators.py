"""Scale estimators recovering F_(alpha) from projected samples.

Skewed samples are expected in factored form (law
``S(alpha, 1, cos(rho alpha) F)``), which is what :class:`ProjectionSketch`
stores.  The array functions work along the last axis so one call can score
many simulated sketches at once; the ``estimate_*`` wrappers take a sketch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import DegenerateSketchError, DomainError, ParameterError
from .stable import (
    ESTIMATORS,
    check_alpha,
    deferred_scale,
    quantile_constants,
    variance_factor,
)

SKEWED_ESTIMATORS = ("gm", "hm", "oq")


@dataclass(frozen=True)
class MomentEstimate:
    value: float
    estimator_kind: str
    alpha: float
    k: int
    predicted_relative_variance: float


@dataclass(frozen=True)
class GmNormalizer:
    alpha: float
    k: int
    kappa: float
    d_gm: float
    log_d_factored: float


def kappa(alpha: float) -> float:
    return alpha if alpha < 1 else 2 - alpha


def _log_moment_bracket(alpha: float, k: int) -> float:
    # log[(2/pi) sin(pi alpha / 2k) Gamma(1 - 1/k) Gamma(alpha / k)]
    return (
        math.log(2 / math.pi)
        + math.log(math.sin(math.pi * alpha / (2 * k)))
        + math.lgamma(1 - 1 / k)
        + math.lgamma(alpha / k)
    )


@lru_cache(maxsize=256)
def gm_normalizer(alpha: float, k: int) -> GmNormalizer:
    """Normalizer of the skewed geometric-mean estimator.

    ``d_gm`` is the constant for unfactored samples; ``log_d_factored`` is
    ``log(d_gm * cos(rho alpha))``, which is what the factored samples need
    and stays well conditioned as alpha approaches 1.
    """
    check_alpha(alpha, 1)
    if k < 2:
        raise ParameterError(f"geometric-mean estimator needs k >= 2, got {k}")
    kap = kappa(alpha)
    log_fact = k * math.log(math.cos(kap * math.pi / (2 * k))) + k * _log_moment_bracket(alpha, k)
    d_gm = math.exp(log_fact) / math.cos(kap * math.pi / 2)
    return GmNormalizer(alpha, k, kap, d_gm, log_fact)


@lru_cache(maxsize=256)
def gm_sym_log_normalizer(alpha: float, k: int) -> float:
    check_alpha(alpha, 0)
    if k < 2:
        raise ParameterError(f"geometric-mean estimator needs k >= 2, got {k}")
    return k * _log_moment_bracket(alpha, k)


def _abs_nonzero(x) -> np.ndarray:
    a = np.abs(np.asarray(x, dtype=np.float64))
    if np.any(a == 0):
        raise DegenerateSketchError("a projected sample is exactly zero (all-zero signal?)")
    return a


def _k_of(x) -> int:
    return np.shape(x)[-1]


def gm_from_samples(x, alpha: float):
    k = _k_of(x)
    norm = gm_normalizer(alpha, k)
    logs = np.log(_abs_nonzero(x))
    return np.exp(alpha * logs.mean(axis=-1) - norm.log_d_factored)


def hm_from_samples(x, alpha: float):
    check_alpha(alpha, 1)
    if alpha >= 1:
        raise DomainError(f"harmonic-mean estimator is defined only for alpha < 1, got {alpha}")
    k = _k_of(x)
    inv = np.sum(_abs_nonzero(x) ** -alpha, axis=-1)
    correction = 1 - variance_factor("hm", alpha) / k
    return k / (math.gamma(1 + alpha) * inv) * correction


def oq_index(q_star: float, k: int) -> int:
    """1-based order statistic ``ceil(q* k)`` clamped to ``[1, k]``."""
    m = math.ceil(Fraction(repr(q_star)) * k)
    return min(max(m, 1), k)


def oq_from_samples(x, alpha: float):
    row = quantile_constants(alpha)
    k = _k_of(x)
    if k < 2:
        raise ParameterError(f"optimal-quantile estimator needs k >= 2, got {k}")
    m = oq_index(row.q_star, k)
    a = np.abs(np.asarray(x, dtype=np.float64))
    q = np.partition(a, m - 1, axis=-1)[..., m - 1]
    return (q / row.w_alpha) ** alpha / deferred_scale(alpha, 1)


def gm_sym_from_samples(z, alpha: float):
    k = _k_of(z)
    log_norm = gm_sym_log_normalizer(alpha, k)
    logs = np.log(_abs_nonzero(z))
    return np.exp(alpha * logs.mean(axis=-1) - log_norm)


_ARRAY_FUNCS = {
    "gm": gm_from_samples,
    "hm": hm_from_samples,
    "oq": oq_from_samples,
    "sym-gm": gm_sym_from_samples,
}


def sketch_kind_for(estimator: str) -> str:
    if estimator not in ESTIMATORS:
        raise ParameterError(f"unknown estimator {estimator!r}; expected one of {ESTIMATORS}")
    return "symmetric" if estimator == "sym-gm" else "skewed"


def estimate_samples(x, alpha: float, estimator: str):
    """Vectorized estimate along the last axis of ``x``."""
    sketch_kind_for(estimator)
    return _ARRAY_FUNCS[estimator](x, alpha)


def check_estimator_alpha(estimator: str, alpha: float) -> None:
    """Raise if ``estimator`` cannot be used at ``alpha``."""
    kind = sketch_kind_for(estimator)
    check_alpha(alpha, 1 if kind == "skewed" else 0)
    variance_factor(estimator, alpha)


def _estimate(sketch, estimator: str) -> MomentEstimate:
    want = sketch_kind_for(estimator)
    if sketch.kind != want:
        raise ParameterError(f"{estimator} needs a {want} sketch, got {sketch.kind}")
    value = float(_ARRAY_FUNCS[estimator](sketch.x, sketch.alpha))
    v = variance_factor(estimator, sketch.alpha)
    return MomentEstimate(value, estimator, sketch.alpha, sketch.k, v / sketch.k)


def estimate_gm(sketch) -> MomentEstimate:
    return _estimate(sketch, "gm")


def estimate_hm(sketch) -> MomentEstimate:
    return _estimate(sketch, "hm")


def estimate_oq(sketch) -> MomentEstimate:
    return _estimate(sketch, "oq")


def estimate_gm_sym(sketch) -> MomentEstimate:
    return _estimate(sketch, "sym-gm")


def estimate(sketch, estimator: str) -> MomentEstimate:
    return _estimate(sketch, estimator)
