"""K-space grids, sampling operators and metrics."""

from src.service.kspace.grid import (
    ComplexGrid,
    Domain,
    MeasuredData,
    PatternLike,
    Polarity,
    SamplingPattern,
    patterns_per_shot,
    sampling_mask,
)
from src.service.kspace.operators import (
    apply_sampling,
    fft2_centered,
    fft2c,
    ifft2_centered,
    ifft2c,
    nrmse,
    sign_flip_unmeasured,
    zero_fill,
)

__all__ = [
    "ComplexGrid",
    "Domain",
    "MeasuredData",
    "PatternLike",
    "Polarity",
    "SamplingPattern",
    "apply_sampling",
    "fft2_centered",
    "fft2c",
    "ifft2_centered",
    "ifft2c",
    "nrmse",
    "patterns_per_shot",
    "sampling_mask",
    "sign_flip_unmeasured",
    "zero_fill",
]
