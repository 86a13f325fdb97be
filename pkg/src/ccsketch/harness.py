"""Monte-Carlo accuracy experiments over (alpha, k, estimator) grids.

Every cell ``(vector, alpha, k)`` gets its own seed hashed from the master
seed, the vector name and the *values* of alpha and k, so results do not move
when a grid is reordered or extended.  Within a cell the skewed estimators
(gm, hm, oq) score the same simulated sketches and the symmetric sketch reuses
the same tape positions.
"""

from __future__ import annotations

import csv
import hashlib
import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .entropy import (
    ROUTES,
    SparseVector,
    exact_moment,
    exact_renyi,
    exact_shannon,
    exact_tsallis,
    predicted_variance,
    renyi_values,
    tsallis_values,
)
from .errors import DomainError, ParameterError, ParseError, ValidationError
from .estimators import check_estimator_alpha, estimate_samples, sketch_kind_for
from .sketch import rep_seeds, simulate_projections
from .stable import ESTIMATORS, OQ_ALPHAS
from .tape import derive_seed

log = logging.getLogger(__name__)

TARGETS = ("moment", "renyi", "tsallis", "shannon_via_renyi", "shannon_via_tsallis")
CSV_HEADER = ("vector", "target", "estimator", "alpha", "k", "reps", "mse_norm", "bias", "theory_var")

DEFAULT_ALPHAS = OQ_ALPHAS
DEFAULT_KS = (20, 50, 100, 1000, 10000)
DEFAULT_REPS = 1000


# ---------------------------------------------------------------------------
# vector files


def load_sparse_vectors(path, dimension: int | None = None) -> list[tuple[str, SparseVector]]:
    """Read ``name:`` blocks of ``index count`` lines.

    The first entry may share the header line (``w: 0 1``).  Repeated indices
    within a block are summed.  Without ``dimension`` each vector spans
    ``max index + 1``.
    """
    out: list[tuple[str, SparseVector]] = []
    name = None
    entries: dict[int, float] = {}

    def flush():
        if name is not None:
            out.append((name, _build(entries, dimension, name)))

    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            head, sep, rest = line.partition(":")
            if sep:
                flush()
                name = head.strip()
                if not name:
                    raise ParseError("empty vector name", lineno)
                entries = {}
                line = rest.strip()
                if not line:
                    continue
            if name is None:
                raise ParseError("entry before any 'name:' header", lineno)
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(f"expected 'index count', got {line!r}", lineno)
            try:
                index = int(parts[0])
                count = float(parts[1])
            except ValueError:
                raise ParseError(f"cannot parse {line!r}", lineno) from None
            if index < 0:
                raise ValidationError(f"negative index {index}", lineno)
            if not count >= 0 or not math.isfinite(count):
                raise ValidationError(f"count must be finite and nonnegative, got {parts[1]}", lineno)
            if dimension is not None and index >= dimension:
                raise ValidationError(f"index {index} outside [0, {dimension})", lineno)
            entries[index] = entries.get(index, 0.0) + count
    flush()
    return out


def _build(entries: dict[int, float], dimension: int | None, name: str) -> SparseVector:
    try:
        return SparseVector.from_mapping(entries, dimension)
    except ValidationError as exc:
        raise ValidationError(f"vector {name!r}: {exc}") from exc


def write_sparse_vectors(path, vectors: Sequence[tuple[str, SparseVector]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for name, v in vectors:
            fh.write(f"{name}:\n")
            for i, a in zip(v.indices.tolist(), v.values.tolist()):
                fh.write(f"{i} {a:.17g}\n" if a != int(a) else f"{i} {int(a)}\n")


def synthesize_zipf(
    dimension: int, exponent: float, mass: float, seed: int = 0, shuffle: bool = False
) -> SparseVector:
    """Integer Zipf-like counts with ``A[i]`` proportional to ``(i+1)**-exponent``.

    Counts are rounded by largest remainder so they sum to ``round(mass)``;
    equal remainders go to the lower index.  ``shuffle=True`` scatters the
    ranks over indices with a permutation drawn from ``seed``.
    """
    if dimension < 1 or not exponent >= 0 or not mass > 0:
        raise ParameterError("zipf needs dimension >= 1, exponent >= 0, mass > 0")
    total = int(round(mass))
    w = (np.arange(dimension) + 1.0) ** -float(exponent)
    ideal = w / math.fsum(w) * total
    counts = np.floor(ideal)
    short = total - int(counts.sum())
    if short > 0:
        rem = ideal - counts
        order = np.lexsort((np.arange(dimension), -rem))
        counts[order[:short]] += 1
    idx = np.arange(dimension)
    if shuffle:
        keys = derive_seed(np.uint64(seed), np.arange(dimension, dtype=np.uint64))
        idx = np.argsort(keys, kind="stable")
    return SparseVector(dimension, idx, counts)


def zipf_name(dimension: int, exponent: float, mass: float) -> str:
    return f"zipf-D{dimension}-s{exponent:g}-M{mass:g}"


# ---------------------------------------------------------------------------
# experiments


@dataclass
class ExperimentConfig:
    vectors: list[tuple[str, SparseVector]]
    alpha_grid: Sequence[float] = DEFAULT_ALPHAS
    k_grid: Sequence[int] = DEFAULT_KS
    estimators: Sequence[str] = ESTIMATORS
    targets: Sequence[str] = TARGETS
    repetitions: int = DEFAULT_REPS
    seed: int = 0
    backend: str = "stable"
    output: str | None = None

    def __post_init__(self):
        if not self.vectors:
            raise ParameterError("no input vectors")
        if not self.alpha_grid or not self.k_grid or not self.estimators or not self.targets:
            raise ParameterError("alpha, k, estimator and target grids must be nonempty")
        if self.repetitions < 1:
            raise ParameterError(f"repetitions must be >= 1, got {self.repetitions}")
        for e in self.estimators:
            sketch_kind_for(e)
        for t in self.targets:
            if t not in TARGETS:
                raise ParameterError(f"unknown target {t!r}; expected one of {TARGETS}")
        for k in self.k_grid:
            if int(k) != k or k < 2:
                raise ParameterError(f"k must be an integer >= 2, got {k}")
        names = [n for n, _ in self.vectors]
        if len(set(names)) != len(names):
            raise ParameterError("vector names must be unique")

    @staticmethod
    def targets_for_routes(routes: Sequence[str]) -> tuple[str, ...]:
        for r in routes:
            if r not in ROUTES:
                raise ParameterError(f"route must be one of {ROUTES}, got {r!r}")
        out = ["moment"]
        out += [r for r in ROUTES if r in routes]
        out += [f"shannon_via_{r}" for r in ROUTES if r in routes]
        return tuple(out)


class MseRow(NamedTuple):
    vector: str
    target: str
    estimator: str
    alpha: float
    k: int
    reps: int
    mse_norm: float
    bias: float
    theory_var: float


@dataclass
class MseReport:
    rows: list[MseRow] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def sort(self) -> "MseReport":
        self.rows.sort(key=lambda r: (r.vector, r.target, r.estimator, r.alpha, r.k))
        return self

    def select(self, **match) -> list[MseRow]:
        return [r for r in self.rows if all(getattr(r, key) == val for key, val in match.items())]

    def __len__(self) -> int:
        return len(self.rows)


def cell_seed(master: int, vector: str, alpha: float, k: int) -> int:
    key = f"{int(master)}|{vector}|{float(alpha)!r}|{int(k)}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def _truth(v: SparseVector, alpha: float, target: str) -> float:
    if target == "moment":
        return exact_moment(v, alpha)
    if target == "renyi":
        return exact_renyi(v, alpha)
    if target == "tsallis":
        return exact_tsallis(v, alpha)
    return exact_shannon(v)


def _target_values(f_hat: np.ndarray, v: SparseVector, alpha: float, target: str) -> np.ndarray:
    if target == "moment":
        return f_hat
    if target.endswith("renyi"):
        return renyi_values(f_hat, v.f1, alpha)
    return tsallis_values(f_hat, v.f1, alpha)


def _valid_pairs(cfg: ExperimentConfig, alpha: float, report: MseReport) -> list[str]:
    ok = []
    for est in cfg.estimators:
        try:
            check_estimator_alpha(est, alpha)
        except (ParameterError, DomainError) as exc:
            msg = f"skipping estimator {est} at alpha={alpha}: {exc}"
            log.warning(msg)
            report.warnings.append(msg)
            continue
        ok.append(est)
    return ok


def _valid_targets(cfg: ExperimentConfig, alpha: float, report: MseReport) -> list[str]:
    if alpha != 1:
        return list(cfg.targets)
    kept = [t for t in cfg.targets if t == "moment"]
    if len(kept) != len(cfg.targets):
        msg = "skipping entropy targets at alpha=1 (undefined plug-in)"
        log.warning(msg)
        report.warnings.append(msg)
    return kept


def run_mse_experiment(cfg: ExperimentConfig) -> MseReport:
    report = MseReport()
    R = cfg.repetitions
    for name, v in cfg.vectors:
        if v.f1 <= 0:
            raise ParameterError(f"vector {name!r} is all zero")
        for alpha in cfg.alpha_grid:
            alpha = float(alpha)
            estimators = _valid_pairs(cfg, alpha, report)
            targets = _valid_targets(cfg, alpha, report)
            if not estimators or not targets:
                continue
            f_alpha = exact_moment(v, alpha)
            truths = {t: _truth(v, alpha, t) for t in targets}
            for k in cfg.k_grid:
                k = int(k)
                seeds = rep_seeds(cell_seed(cfg.seed, name, alpha, k), R)
                samples = {}
                for est in estimators:
                    kind = sketch_kind_for(est)
                    if kind not in samples:
                        samples[kind] = simulate_projections(
                            v.indices, v.values, alpha, kind, k, seeds,
                            backend=cfg.backend, f_alpha=f_alpha,
                        )
                    f_hat = estimate_samples(samples[kind], alpha, est)
                    for target in targets:
                        truth = truths[target]
                        err = _target_values(f_hat, v, alpha, target) - truth
                        with np.errstate(divide="ignore", invalid="ignore"):
                            mse = float(np.mean(err**2)) / truth**2
                            bias = float(np.mean(err)) / truth
                            theory = predicted_variance(est, alpha, k, target, v) / truth**2
                        report.rows.append(
                            MseRow(name, target, est, alpha, k, R, mse, bias, theory)
                        )
    return report.sort()


def min_mse_curves(report: MseReport) -> MseReport:
    """Minimum MSE over alpha for each (vector, target, estimator, k)."""
    groups: dict[tuple, list[MseRow]] = {}
    for row in report.rows:
        groups.setdefault((row.vector, row.target, row.estimator, row.k), []).append(row)
    out = MseReport(warnings=list(report.warnings))
    for key, rows in groups.items():
        if len({r.alpha for r in rows}) < 2:
            raise ParameterError(f"need at least two alpha values for {key}, got {len(rows)}")
        out.rows.append(min(rows, key=lambda r: (r.mse_norm, abs(r.alpha - 1), r.alpha)))
    return out.sort()


def _fmt(x: float) -> str:
    return "%.17g" % x


def emit_csv(report: MseReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in report.rows:
            writer.writerow(
                [r.vector, r.target, r.estimator, _fmt(r.alpha), r.k, r.reps,
                 _fmt(r.mse_norm), _fmt(r.bias), _fmt(r.theory_var)]
            )


def read_csv(path) -> MseReport:
    report = MseReport()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != CSV_HEADER:
            raise ParseError(f"unexpected CSV header {header}", 1)
        for lineno, rec in enumerate(reader, 2):
            if len(rec) != len(CSV_HEADER):
                raise ParseError(f"expected {len(CSV_HEADER)} fields, got {len(rec)}", lineno)
            try:
                report.rows.append(
                    MseRow(rec[0], rec[1], rec[2], float(rec[3]), int(rec[4]), int(rec[5]),
                           float(rec[6]), float(rec[7]), float(rec[8]))
                )
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
    return report

