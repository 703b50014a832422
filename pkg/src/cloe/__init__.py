"""Loewner interpolation of frequency-response data with adaptive (CLOE) point selection."""

from .constructive import (
    CloeConfig,
    CloeTrace,
    ModelOracle,
    NormCurve,
    Oracle,
    TabulatedOracle,
    detect_candidates,
    init_set,
    norm_curve,
    run_cloe,
    stopping_metric,
)
from .loewner import (
    Interpolant,
    LoewnerPencil,
    TangentialDataset,
    build_pencil,
    conjugate_augment,
    evaluate_interpolant,
    interpolate,
    numerical_rank,
    partition_tangential,
    realify,
    realize,
)
from .lti import (
    FrequencyGrid,
    FrequencySample,
    StateSpaceModel,
    evaluate_transfer,
    frequency_response,
    generate_modal_model,
    log_grid,
    read_model,
    read_samples,
    sample_response,
    spectral_norm,
    write_model,
    write_samples,
)

__version__ = "0.1.0"
