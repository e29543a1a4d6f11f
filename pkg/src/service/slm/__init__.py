"""Structured low-rank liftings and singular-value penalties."""

from src.service.slm.matrices import (
    LiftedMatrix,
    LiftingOperator,
    adjoint_lift_c,
    adjoint_lift_s,
    concat_polarities,
    lift,
    lift_c,
    lift_pair,
    lift_s,
    mirror_indices,
    singular_values,
)
from src.service.slm.regularizers import (
    RankEstimate,
    estimate_rank,
    evaluate,
    nuclear_norm,
    rank_r_approx,
    rank_residual,
    singular_value_threshold,
)

__all__ = [
    "LiftedMatrix",
    "LiftingOperator",
    "RankEstimate",
    "adjoint_lift_c",
    "adjoint_lift_s",
    "concat_polarities",
    "estimate_rank",
    "evaluate",
    "lift",
    "lift_c",
    "lift_pair",
    "lift_s",
    "mirror_indices",
    "nuclear_norm",
    "rank_r_approx",
    "rank_residual",
    "singular_value_threshold",
    "singular_values",
]
