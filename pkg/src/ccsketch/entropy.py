"""Exact entropies of nonnegative vectors and plug-in estimates from moments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError, ParameterError, ValidationError
from .estimators import MomentEstimate, check_estimator_alpha, estimate_samples, sketch_kind_for
from .sketch import rep_seeds, simulate_projections
from .stable import variance_factor

# Every logarithm in this module goes through _log; change the base here only.
LOG_BASE = math.e
_LOG_SCALE = math.log(LOG_BASE)

ROUTES = ("renyi", "tsallis")


def _log(x):
    return np.log(x) / _LOG_SCALE


@dataclass(frozen=True, eq=False)
class SparseVector:
    """Nonnegative signal stored as sorted ``(index, value)`` pairs."""

    dimension: int
    indices: np.ndarray
    values: np.ndarray
    f1: float = field(init=False)

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        val = np.asarray(self.values, dtype=np.float64)
        if idx.shape != val.shape or idx.ndim != 1:
            raise ValidationError("indices and values must be 1-d arrays of equal length")
        if idx.size and (idx.min() < 0 or idx.max() >= self.dimension):
            raise ValidationError(f"index outside [0, {self.dimension})")
        if np.any(val < 0) or not np.all(np.isfinite(val)):
            raise ValidationError("vector entries must be finite and nonnegative")
        order = np.argsort(idx, kind="stable")
        idx, val = idx[order], val[order]
        if idx.size > 1 and np.any(np.diff(idx) == 0):
            raise ValidationError("duplicate index in sparse vector")
        keep = val > 0
        object.__setattr__(self, "indices", idx[keep])
        object.__setattr__(self, "values", val[keep])
        object.__setattr__(self, "f1", float(math.fsum(self.values)))

    @classmethod
    def from_mapping(cls, entries: Mapping[int, float], dimension: int | None = None) -> "SparseVector":
        idx = np.fromiter(entries.keys(), dtype=np.int64, count=len(entries))
        val = np.fromiter(entries.values(), dtype=np.float64, count=len(entries))
        if dimension is None:
            dimension = int(idx.max()) + 1 if idx.size else 1
        return cls(dimension, idx, val)

    @classmethod
    def from_dense(cls, values: Sequence[float]) -> "SparseVector":
        val = np.asarray(values, dtype=np.float64)
        return cls(max(1, val.size), np.arange(val.size), val)

    @property
    def nnz(self) -> int:
        return int(self.values.size)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dimension)
        out[self.indices] = self.values
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseVector):
            return NotImplemented
        return (
            self.dimension == other.dimension
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True)
class EntropyEstimate:
    value: float
    target: str
    alpha: float
    estimator_kind: str
    k: int
    predicted_variance: float
    predicted_intrinsic_bias: float | None = None


def exact_moment(v: SparseVector, alpha: float) -> float:
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    if alpha == 1:
        return v.f1
    return float(np.sum(v.values**alpha))


def _log_probs(v: SparseVector) -> np.ndarray:
    if v.f1 <= 0:
        raise DomainError("entropy of an all-zero vector is undefined")
    return np.log(v.values) - math.log(v.f1)


def exact_shannon(v: SparseVector) -> float:
    logp = _log_probs(v)
    return float(-np.sum(np.exp(logp) * logp)) / _LOG_SCALE


def _log_power_sum(v: SparseVector, alpha: float) -> float:
    # log(sum p_i^alpha) = log(F_alpha / F1^alpha), natural log
    return float(logsumexp(alpha * _log_probs(v)))


def _check_not_one(alpha: float) -> None:
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    if alpha == 1:
        raise DomainError("alpha = 1 is the Shannon limit; use exact_shannon")


def exact_renyi(v: SparseVector, alpha: float) -> float:
    _check_not_one(alpha)
    return _log_power_sum(v, alpha) / _LOG_SCALE / (1 - alpha)


def exact_tsallis(v: SparseVector, alpha: float) -> float:
    _check_not_one(alpha)
    return float(-np.expm1(_log_power_sum(v, alpha))) / (alpha - 1)


def renyi_values(f_hat, f1: float, alpha: float):
    """Renyi entropy estimates for an array of moment estimates."""
    return (_log(f_hat) - alpha * _log(f1)) / (1 - alpha)


def tsallis_values(f_hat, f1: float, alpha: float):
    return (1 - np.asarray(f_hat) / f1**alpha) / (alpha - 1)


def _check_plugin(f_hat: MomentEstimate, f1: float) -> None:
    if not f_hat.value > 0:
        raise DomainError(f"moment estimate must be positive, got {f_hat.value}")
    if not f1 > 0:
        raise DomainError(f"F1 must be positive, got {f1}")
    _check_not_one(f_hat.alpha)


def renyi_from_moment(f_hat: MomentEstimate, f1: float) -> EntropyEstimate:
    _check_plugin(f_hat, f1)
    a = f_hat.alpha
    value = float(renyi_values(f_hat.value, f1, a))
    var = f_hat.predicted_relative_variance / ((1 - a) ** 2 * _LOG_SCALE**2)
    return EntropyEstimate(value, "renyi", a, f_hat.estimator_kind, f_hat.k, var)


def tsallis_from_moment(f_hat: MomentEstimate, f1: float) -> EntropyEstimate:
    _check_plugin(f_hat, f1)
    a = f_hat.alpha
    value = float(tsallis_values(f_hat.value, f1, a))
    ratio = f_hat.value / f1**a
    var = ratio**2 * f_hat.predicted_relative_variance / (a - 1) ** 2
    return EntropyEstimate(value, "tsallis", a, f_hat.estimator_kind, f_hat.k, var)


def shannon_via(
    f_hat: MomentEstimate, f1: float, route: str, oracle: SparseVector | None = None
) -> EntropyEstimate:
    """Shannon entropy read off the Renyi or Tsallis plug-in estimate.

    With an ``oracle`` vector the intrinsic bias ``H_alpha - H`` (or
    ``T_alpha - H``) is attached; it does not shrink with k.
    """
    if route == "renyi":
        base = renyi_from_moment(f_hat, f1)
    elif route == "tsallis":
        base = tsallis_from_moment(f_hat, f1)
    else:
        raise ParameterError(f"route must be one of {ROUTES}, got {route!r}")
    bias = None
    if oracle is not None:
        bias = intrinsic_bias(oracle, f_hat.alpha, route)
    return EntropyEstimate(
        base.value, f"shannon_via_{route}", base.alpha, base.estimator_kind, base.k,
        base.predicted_variance, bias,
    )


def intrinsic_bias(v: SparseVector, alpha: float, route: str) -> float:
    h = exact_shannon(v)
    if route == "renyi":
        return exact_renyi(v, alpha) - h
    if route == "tsallis":
        return exact_tsallis(v, alpha) - h
    raise ParameterError(f"route must be one of {ROUTES}, got {route!r}")


def route_values(f_hat, f1: float, alpha: float, route: str):
    if route == "renyi":
        return renyi_values(f_hat, f1, alpha)
    if route == "tsallis":
        return tsallis_values(f_hat, f1, alpha)
    raise ParameterError(f"route must be one of {ROUTES}, got {route!r}")


def simulate_moment_estimates(
    v: SparseVector, alpha: float, estimator: str, k: int, seeds, backend: str = "stable"
) -> np.ndarray:
    """One moment estimate of ``v`` per seed."""
    kind = sketch_kind_for(estimator)
    f_alpha = exact_moment(v, alpha)
    x = simulate_projections(v.indices, v.values, alpha, kind, k, seeds, backend=backend, f_alpha=f_alpha)
    return estimate_samples(x, alpha, estimator)


def select_optimal_alpha(
    v: SparseVector,
    k: int,
    estimator: str,
    route: str,
    alpha_grid: Sequence[float],
    repetitions: int,
    seed: int,
    backend: str = "stable",
) -> tuple[float, list[tuple[float, float]]]:
    """Grid alpha minimizing the Monte-Carlo MSE of the Shannon estimate.

    The same repetition seeds are used at every grid point.  Returns the
    argmin and the curve of ``(alpha, MSE / H**2)`` pairs.
    """
    grid = [float(a) for a in alpha_grid]
    if not grid:
        raise ParameterError("alpha grid is empty")
    if repetitions < 100:
        raise ParameterError(f"need at least 100 repetitions, got {repetitions}")
    if route not in ROUTES:
        raise ParameterError(f"route must be one of {ROUTES}, got {route!r}")
    for a in grid:
        if a == 1:
            raise ParameterError("alpha = 1 cannot estimate Shannon entropy through a moment")
        try:
            check_estimator_alpha(estimator, a)
        except (ParameterError, DomainError) as exc:
            raise ParameterError(f"grid point alpha={a} invalid for {estimator}: {exc}") from exc
    h = exact_shannon(v)
    seeds = rep_seeds(seed, repetitions)
    curve = []
    for a in grid:
        f_hat = simulate_moment_estimates(v, a, estimator, k, seeds, backend)
        est = route_values(f_hat, v.f1, a, route)
        curve.append((a, float(np.mean((est - h) ** 2)) / h**2))
    best = min(curve, key=lambda item: item[1])
    return best[0], curve


def predicted_variance(estimator: str, alpha: float, k: int, target: str, v: SparseVector) -> float:
    """Delta-method variance of the ``target`` estimate for vector ``v``."""
    rel = variance_factor(estimator, alpha) / k
    if target == "moment":
        return rel * exact_moment(v, alpha) ** 2
    if target in ("renyi", "shannon_via_renyi"):
        return rel / ((1 - alpha) ** 2 * _LOG_SCALE**2)
    if target in ("tsallis", "shannon_via_tsallis"):
        ratio = exact_moment(v, alpha) / v.f1**alpha
        return ratio**2 * rel / (alpha - 1) ** 2
    raise ParameterError(f"unknown target {target!r}")
