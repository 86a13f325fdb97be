"""Maximally-skewed and symmetric stable laws.

Conventions: ``S(alpha, beta, F)`` has characteristic function
``exp(-F |t|^alpha (1 - i beta sign(t) tan(pi alpha / 2)))``, so ``F`` is the
scale raised to the power alpha and ``c * S(alpha, beta, 1)`` is
``S(alpha, beta, c**alpha)`` for ``c >= 0``.  Only beta in {0, 1} is supported.

Samples come from the Chambers-Mallows-Stuck transform of one uniform and one
exponential variate read off a :class:`~ccsketch.tape.RandomTape`.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, ParameterError, UnsupportedAlphaError
from .tape import RandomTape, uniform_exponential

ESTIMATORS = ("gm", "hm", "oq", "sym-gm")


@dataclass(frozen=True)
class StableParams:
    alpha: float
    beta: int = 1
    scale: float = 1.0

    def __post_init__(self):
        check_alpha(self.alpha, self.beta)
        if not self.scale >= 0:
            raise ParameterError(f"scale must be nonnegative, got {self.scale}")


def check_alpha(alpha: float, beta: int) -> None:
    if beta not in (0, 1):
        raise ParameterError(f"beta must be 0 or 1, got {beta}")
    if not (isinstance(alpha, numbers.Real) and 0 < alpha <= 2):
        raise ParameterError(f"alpha must lie in (0, 2], got {alpha}")
    if beta == 1 and alpha == 1:
        raise ParameterError("alpha = 1 is not supported for beta = 1")


def skew_angle(alpha: float, beta: int = 1) -> float:
    """Shift ``rho`` used by the sampler (0 for the symmetric law)."""
    check_alpha(alpha, beta)
    if beta == 0:
        return 0.0
    if alpha < 1:
        return math.pi / 2
    return (math.pi / 2) * (2 - alpha) / alpha


def deferred_scale(alpha: float, beta: int = 1) -> float:
    """``cos(rho * alpha)``, the scale of the factored sampler's output law."""
    return math.cos(skew_angle(alpha, beta) * alpha)


def cms_transform(alpha, rho, u, w, factored=False):
    """Chambers-Mallows-Stuck map from ``(U, W)`` to a stable variate.

    With ``factored=True`` the constant ``cos(rho alpha)^(-1/alpha)`` is left
    out, giving ``S(alpha, beta, cos(rho alpha))`` instead of scale 1.
    Works elementwise on arrays.
    """
    u = np.asarray(u, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    a_u_rho = alpha * (u + rho)
    if factored:
        denom = np.cos(u) ** (1.0 / alpha)
    else:
        denom = (np.cos(u) * math.cos(rho * alpha)) ** (1.0 / alpha)
    tail = (np.cos(u - a_u_rho) / w) ** ((1.0 - alpha) / alpha)
    return np.sin(a_u_rho) / denom * tail


def sample_stable(params: StableParams, tape: RandomTape) -> float:
    """One draw from ``S(alpha, beta, 1)``; advances ``tape`` by one."""
    rho = skew_angle(params.alpha, params.beta)
    u, w = tape.next_pair()
    return float(cms_transform(params.alpha, rho, u, w))


def sample_stable_factored(params: StableParams, tape: RandomTape) -> float:
    """One draw of ``Z * cos(rho alpha)^(1/alpha)``, i.e. ``S(alpha, beta, cos(rho alpha))``.

    This is the numerically safe sampler near alpha = 1 where
    ``cos(rho alpha)`` tends to zero; estimators put the constant back.
    """
    rho = skew_angle(params.alpha, params.beta)
    u, w = tape.next_pair()
    return float(cms_transform(params.alpha, rho, u, w, factored=True))


def sample_array(alpha: float, beta: int, seed, counter, factored: bool = False) -> np.ndarray:
    """Vectorized draws at explicit tape positions (broadcasts seed and counter)."""
    rho = skew_angle(alpha, beta)
    u, w = uniform_exponential(seed, counter)
    return cms_transform(alpha, rho, u, w, factored=factored)


class QuantileConstants(NamedTuple):
    alpha: float
    q_star: float
    w_alpha: float
    v_oq: float


# alpha, q*, W_alpha, asymptotic variance factor (F = 1, without the 1/k)
_TABLE = (
    QuantileConstants(0.80, 0.108, 2.256365, 0.15465894),
    QuantileConstants(0.90, 0.101, 5.400842, 0.04116676),
    QuantileConstants(0.95, 0.098, 11.74773, 0.01059831),
    QuantileConstants(0.98, 0.0944, 30.82616, 0.001724739),
    QuantileConstants(0.989, 0.0941, 56.86694, 0.0005243589),
    QuantileConstants(1.011, 0.8904, 58.83961, 0.0005554749),
    QuantileConstants(1.02, 0.8799, 32.76892, 0.001901498),
    QuantileConstants(1.05, 0.855, 13.61799, 0.01298757),
    QuantileConstants(1.10, 0.827, 7.206345, 0.05717725),
    QuantileConstants(1.20, 0.799, 4.011459, 0.2516604),
)

OQ_ALPHAS = tuple(row.alpha for row in _TABLE)
_ALPHA_TOL = 1e-9


def quantile_constants(alpha: float) -> QuantileConstants:
    for row in _TABLE:
        if abs(alpha - row.alpha) <= _ALPHA_TOL:
            return row
    below = [a for a in OQ_ALPHAS if a < alpha]
    above = [a for a in OQ_ALPHAS if a > alpha]
    near = ", ".join(str(a) for a in (below[-1:] + above[:1]))
    raise UnsupportedAlphaError(
        f"no optimal-quantile constants for alpha={alpha}; nearest supported: {near}"
    )


def is_oq_alpha(alpha: float) -> bool:
    return any(abs(alpha - a) <= _ALPHA_TOL for a in OQ_ALPHAS)


def gamma(x: float) -> float:
    # CPython's math.gamma is a Lanczos approximation (g ~ 6.02, 13 terms),
    # accurate to a few ulps for the positive arguments used here.
    return math.gamma(x)


def hm_variance_factor(alpha: float) -> float:
    return 2.0 * gamma(1 + alpha) ** 2 / gamma(1 + 2 * alpha) - 1.0


def variance_factor(estimator: str, alpha: float) -> float:
    """Asymptotic variance factor ``V`` with ``Var(F_hat) ~ V F^2 / k``."""
    if estimator == "gm":
        check_alpha(alpha, 1)
        if alpha < 1:
            return (math.pi**2 / 6) * (1 - alpha**2)
        return (math.pi**2 / 6) * (alpha - 1) * (5 - alpha)
    if estimator == "hm":
        check_alpha(alpha, 1)
        if alpha >= 1:
            raise DomainError(f"harmonic-mean estimator needs alpha < 1, got {alpha}")
        return hm_variance_factor(alpha)
    if estimator == "oq":
        return quantile_constants(alpha).v_oq
    if estimator == "sym-gm":
        check_alpha(alpha, 0)
        return (math.pi**2 / 12) * (2 + alpha**2)
    raise ParameterError(f"unknown estimator {estimator!r}; expected one of {ESTIMATORS}")
