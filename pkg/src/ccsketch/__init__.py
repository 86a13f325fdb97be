"""Compressed Counting: skewed stable projections for frequency moments and entropy."""

from .entropy import (
    EntropyEstimate,
    SparseVector,
    exact_moment,
    exact_renyi,
    exact_shannon,
    exact_tsallis,
    renyi_from_moment,
    select_optimal_alpha,
    shannon_via,
    tsallis_from_moment,
)
from .errors import (
    CCSketchError,
    DataError,
    DegenerateSketchError,
    DomainError,
    FormatError,
    IncompatibleSketchError,
    ParameterError,
    ParseError,
    SketchIndexError,
    UnsupportedAlphaError,
    ValidationError,
)
from .estimators import (
    MomentEstimate,
    estimate,
    estimate_gm,
    estimate_gm_sym,
    estimate_hm,
    estimate_oq,
)
from .sketch import ProjectionSketch, TurnstileUpdate, deserialize, merge, new_sketch, serialize
from .stable import (
    QuantileConstants,
    StableParams,
    quantile_constants,
    sample_stable,
    sample_stable_factored,
    variance_factor,
)
from .tape import RandomTape

__version__ = "0.1.0"
