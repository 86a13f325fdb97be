"""Turnstile stream sketch built from stable random projections.

The projection matrix is never stored.  Entry ``r_ij`` is regenerated from
the tape of ``seed`` at counter ``i * k + j``.  Skewed sketches hold the
factored samples (law ``S(alpha, 1, cos(rho alpha) F)``); the constant is kept
as :attr:`ProjectionSketch.deferred_scale` and put back by the estimators.

Each coordinate is accumulated exactly as an integer multiple of 2**-1074
(the smallest subnormal), so addition of update terms is associative and a
merged sketch is bitwise equal to the sketch of the concatenated stream.
``x`` is the correctly rounded float view of those exact sums.

Estimates are only meaningful if the signal is nonnegative when queried;
intermediate negative values are allowed and never checked.
"""

from __future__ import annotations

import struct
from typing import Iterable, NamedTuple

import numpy as np

from .errors import (
    FormatError,
    IncompatibleSketchError,
    ParameterError,
    ParseError,
    SketchIndexError,
)
from .stable import check_alpha, deferred_scale, sample_array
from .tape import MAX_U64, derive_seed

KINDS = ("skewed", "symmetric")
_BETA = {"skewed": 1, "symmetric": 0}
_KIND_CODE = {"symmetric": 0, "skewed": 1}
_CODE_KIND = {v: k for k, v in _KIND_CODE.items()}

MAGIC = b"CCSK"
VERSION = 1
_HEADER = struct.Struct("<4sHBdIQQQd")
HEADER_SIZE = _HEADER.size

_UNIT_EXP = 1074
_UNIT_SCALE = 1 << _UNIT_EXP


class TurnstileUpdate(NamedTuple):
    index: int
    increment: float


def beta_of(kind: str) -> int:
    try:
        return _BETA[kind]
    except KeyError:
        raise ParameterError(f"kind must be one of {KINDS}, got {kind!r}") from None


def _check_params(alpha, kind, k, seed, dimension):
    check_alpha(alpha, beta_of(kind))
    if int(k) != k or k < 1 or k > 0xFFFFFFFF:
        raise ParameterError(f"k must be a positive 32-bit integer, got {k}")
    if int(dimension) != dimension or dimension < 1:
        raise ParameterError(f"dimension must be a positive integer, got {dimension}")
    if int(dimension) * int(k) - 1 > MAX_U64:
        raise ParameterError("dimension * k exceeds the 64-bit tape counter range")
    if int(seed) != seed or not 0 <= seed <= MAX_U64:
        raise ParameterError(f"seed must be an unsigned 64-bit integer, got {seed}")


def _to_units(values: np.ndarray) -> list[int]:
    """Exact integer multiples of 2**-1074 for finite float64 values."""
    values = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise ParameterError("non-finite value in sketch accumulation")
    mant, exp = np.frexp(values)
    m = (mant * 2.0**53).astype(np.int64).tolist()
    s = (exp.astype(np.int64) + (_UNIT_EXP - 53)).tolist()
    return [a << b if b >= 0 else a >> -b for a, b in zip(m, s)]


def _from_units(units: int) -> float:
    return units / _UNIT_SCALE


def projection_row(seed: int, i: int, k: int, alpha: float, kind: str) -> np.ndarray:
    """Entries ``r_i0 .. r_i(k-1)`` of the implicit projection matrix."""
    beta = beta_of(kind)
    counters = np.uint64(i) * np.uint64(k) + np.arange(k, dtype=np.uint64)
    return sample_array(alpha, beta, np.uint64(seed), counters, factored=beta == 1)


def projection_entry(seed: int, i: int, j: int, alpha: float, kind: str, k: int) -> float:
    """Single entry ``r_ij``; factored for skewed sketches."""
    if not 0 <= j < k:
        raise SketchIndexError(f"column {j} outside [0, {k})")
    if i < 0:
        raise SketchIndexError(f"row {i} is negative")
    beta = beta_of(kind)
    counter = np.uint64(i) * np.uint64(k) + np.uint64(j)
    return float(sample_array(alpha, beta, np.uint64(seed), counter, factored=beta == 1))


class ProjectionSketch:
    """k projected coordinates of a Turnstile signal plus an exact F1 counter."""

    def __init__(self, alpha: float, kind: str, k: int, seed: int, dimension: int):
        _check_params(alpha, kind, k, seed, dimension)
        self.alpha = float(alpha)
        self.kind = kind
        self.k = int(k)
        self.seed = int(seed)
        self.dimension = int(dimension)
        self.update_count = 0
        self._acc = [0] * self.k
        self._f1 = 0
        self._x_cache: np.ndarray | None = None

    @property
    def beta(self) -> int:
        return _BETA[self.kind]

    @property
    def deferred_scale(self) -> float:
        """Scale ``cos(rho alpha)`` left out of the skewed entries (1 if symmetric)."""
        return deferred_scale(self.alpha, self.beta)

    @property
    def x(self) -> np.ndarray:
        if self._x_cache is None:
            self._x_cache = np.array([_from_units(a) for a in self._acc], dtype=np.float64)
            self._x_cache.flags.writeable = False
        return self._x_cache

    @property
    def f1_counter(self) -> float:
        return _from_units(self._f1)

    def params(self) -> tuple:
        return (self.alpha, self.kind, self.k, self.seed, self.dimension)

    def update(self, index: int, increment: float) -> None:
        if not 0 <= index < self.dimension:
            raise SketchIndexError(f"index {index} outside [0, {self.dimension})")
        inc = float(increment)
        row = projection_row(self.seed, int(index), self.k, self.alpha, self.kind)
        acc = self._acc
        for j, u in enumerate(_to_units(row * inc)):
            acc[j] += u
        self._f1 += _to_units(np.array([inc]))[0]
        self.update_count += 1
        self._x_cache = None

    def extend(self, updates: Iterable) -> "ProjectionSketch":
        for index, increment in updates:
            self.update(index, increment)
        return self

    def merge(self, other: "ProjectionSketch") -> "ProjectionSketch":
        return merge(self, other)

    def copy(self) -> "ProjectionSketch":
        out = ProjectionSketch(*self.params())
        out._acc = list(self._acc)
        out._f1 = self._f1
        out.update_count = self.update_count
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, ProjectionSketch):
            return NotImplemented
        return (
            self.params() == other.params()
            and self.update_count == other.update_count
            and self.x.tobytes() == other.x.tobytes()
            and struct.pack("<d", self.f1_counter) == struct.pack("<d", other.f1_counter)
        )

    def __repr__(self) -> str:
        return (
            f"ProjectionSketch(alpha={self.alpha}, kind={self.kind!r}, k={self.k}, "
            f"seed={self.seed}, dimension={self.dimension}, updates={self.update_count})"
        )

    def to_bytes(self) -> bytes:
        return serialize(self)

    @classmethod
    def from_bytes(cls, data: bytes) -> "ProjectionSketch":
        return deserialize(data)


def new_sketch(alpha: float, kind: str, k: int, seed: int, dimension: int) -> ProjectionSketch:
    return ProjectionSketch(alpha, kind, k, seed, dimension)


def update(sketch: ProjectionSketch, u: TurnstileUpdate) -> None:
    sketch.update(u.index, u.increment)


def merge(a: ProjectionSketch, b: ProjectionSketch) -> ProjectionSketch:
    if a.params() != b.params():
        raise IncompatibleSketchError(f"cannot merge sketches with parameters {a.params()} and {b.params()}")
    out = a.copy()
    out._acc = [p + q for p, q in zip(a._acc, b._acc)]
    out._f1 = a._f1 + b._f1
    out.update_count = a.update_count + b.update_count
    return out


def serialize(sketch: ProjectionSketch) -> bytes:
    head = _HEADER.pack(
        MAGIC,
        VERSION,
        _KIND_CODE[sketch.kind],
        sketch.alpha,
        sketch.k,
        sketch.seed,
        sketch.dimension,
        sketch.update_count,
        sketch.f1_counter,
    )
    return head + sketch.x.astype("<f8").tobytes()


def deserialize(data: bytes) -> ProjectionSketch:
    data = bytes(data)
    if len(data) < HEADER_SIZE:
        raise FormatError(f"truncated header: {len(data)} < {HEADER_SIZE} bytes")
    magic, version, code, alpha, k, seed, dimension, count, f1 = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    if code not in _CODE_KIND:
        raise FormatError(f"unknown kind code {code}")
    expected = HEADER_SIZE + 8 * k
    if len(data) != expected:
        raise FormatError(f"payload is {len(data)} bytes, expected {expected}")
    try:
        sketch = ProjectionSketch(alpha, _CODE_KIND[code], k, seed, dimension)
    except ParameterError as exc:
        raise FormatError(f"invalid parameters in header: {exc}") from exc
    x = np.frombuffer(data, dtype="<f8", count=k, offset=HEADER_SIZE)
    try:
        sketch._acc = _to_units(x)
        sketch._f1 = _to_units(np.array([f1]))[0]
    except ParameterError as exc:
        raise FormatError(str(exc)) from exc
    sketch.update_count = count
    return sketch


def read_stream(lines: Iterable[str]):
    """Parse ``index<TAB>increment`` lines into :class:`TurnstileUpdate` tuples."""
    for lineno, line in enumerate(lines, 1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        parts = text.split("\t")
        if len(parts) != 2:
            raise ParseError(f"expected 'index<TAB>increment', got {text!r}", lineno)
        try:
            index = int(parts[0])
            increment = float(parts[1])
        except ValueError:
            raise ParseError(f"cannot parse {text!r}", lineno) from None
        if index < 0:
            raise ParseError(f"negative index {index}", lineno)
        yield TurnstileUpdate(index, increment)


def rep_seeds(seed: int, n: int) -> np.ndarray:
    """``n`` independent 64-bit seeds derived from ``seed`` (one per repetition)."""
    return derive_seed(np.uint64(seed), np.arange(n, dtype=np.uint64))


def simulate_projections(
    indices,
    values,
    alpha: float,
    kind: str,
    k: int,
    seeds,
    backend: str = "stable",
    f_alpha: float | None = None,
    chunk: int = 1 << 20,
) -> np.ndarray:
    """Projected coordinates for one nonnegative vector under many seeds.

    Returns an ``(len(seeds), k)`` array laid out like ``ProjectionSketch.x``
    (factored for skewed sketches).

    ``backend="project"`` forms ``sum_i r_ij A[i]`` from the tape exactly as
    a streamed sketch would (float accumulation, so not bitwise equal to the
    exact accumulator).  ``backend="stable"`` uses stability instead: each
    coordinate is drawn directly from ``S(alpha, beta, F_alpha)``, which is
    the same law at a cost independent of the number of nonzeros.
    """
    beta = beta_of(kind)
    check_alpha(alpha, beta)
    seeds = np.asarray(seeds, dtype=np.uint64).reshape(-1, 1)
    idx = np.asarray(indices, dtype=np.uint64)
    vals = np.asarray(values, dtype=np.float64)
    cols = np.arange(k, dtype=np.uint64)
    out = np.zeros((seeds.shape[0], k))
    if backend == "stable":
        if f_alpha is None:
            f_alpha = float(np.sum(vals**alpha))
        scale = f_alpha ** (1.0 / alpha)
        step = max(1, chunk // k)
        for start in range(0, seeds.shape[0], step):
            block = seeds[start : start + step]
            out[start : start + step] = scale * sample_array(alpha, beta, block, cols[None, :], factored=beta == 1)
        return out
    if backend != "project":
        raise ParameterError(f"unknown backend {backend!r}")
    step = max(1, chunk // max(1, seeds.shape[0] * k))
    for start in range(0, idx.size, step):
        i = idx[start : start + step]
        counters = i[:, None] * np.uint64(k) + cols[None, :]
        r = sample_array(alpha, beta, seeds[:, :, None], counters[None, :, :], factored=beta == 1)
        out += np.einsum("rik,i->rk", r, vals[start : start + step])
    return out
