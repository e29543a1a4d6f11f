"""Reconstruction formulations, the outer loop and its linear solver."""

from src.service.solvers.cg import NormalOperator, cg_least_squares, check_normal_operator, real_inner
from src.service.solvers.formulations import (
    NullspacePenalty,
    SenseEncoding,
    ac_loraks_objective,
    sense_combine,
    sense_objective,
    solve_ac_loraks,
    solve_sense_loraks,
    solve_unconstrained,
    unconstrained_objective,
)
from src.service.solvers.mm import OuterLoopOutcome, SurrogateProblem, mm_outer_loop
from src.service.solvers.models import NullspaceBasis, ReconResult, SenseMaps
from src.service.solvers.nullspace import estimate_nullspace
from src.service.solvers.reconstructor import Reconstructor

__all__ = [
    "NormalOperator",
    "NullspaceBasis",
    "NullspacePenalty",
    "OuterLoopOutcome",
    "ReconResult",
    "Reconstructor",
    "SenseEncoding",
    "SenseMaps",
    "SurrogateProblem",
    "ac_loraks_objective",
    "cg_least_squares",
    "check_normal_operator",
    "estimate_nullspace",
    "mm_outer_loop",
    "real_inner",
    "sense_combine",
    "sense_objective",
    "solve_ac_loraks",
    "solve_sense_loraks",
    "solve_unconstrained",
    "unconstrained_objective",
]
