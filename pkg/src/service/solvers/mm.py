"""Majorize-minimize outer loop shared by every formulation.

Each formulation is described as a :class:`SurrogateProblem`: a quadratic data part, a
linear encoding whose lifting is penalized, and an optional set of entries held fixed.
The loop replaces the penalty by a quadratic that touches it at the current iterate and
minimizes data part plus quadratic with conjugate gradients.
"""

from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from loguru import logger

from src.handlers.exceptions import NumericalFailureError
from src.service.slm import LiftingOperator, nuclear_norm, rank_r_approx, singular_value_threshold
from src.service.solvers.cg import cg_least_squares
from src.utils.schemas import ReconConfig, Regularizer

LinearMap = Callable[[np.ndarray], np.ndarray]


def identity(x: np.ndarray) -> np.ndarray:
    """Identity encoding."""
    return x


@dataclass
class SurrogateProblem:
    """``data(x) + weight * J(L(encode(x)))`` over the free entries of ``x``."""

    lifting: LiftingOperator
    weight: float
    x_fixed: np.ndarray
    free: np.ndarray | None = None
    encode: LinearMap = identity
    encode_adjoint: LinearMap = identity
    data_normal: LinearMap | None = None
    data_rhs: np.ndarray | None = None
    data_cost: Callable[[np.ndarray], float] | None = None

    def lifted(self, x: np.ndarray) -> np.ndarray:
        """Lifted matrix of the encoded variable."""
        return self.lifting.forward(self.encode(x))

    def lifted_adjoint(self, m: np.ndarray) -> np.ndarray:
        """Adjoint of :meth:`lifted`."""
        return self.encode_adjoint(self.lifting.adjoint(m))

    def project(self, x: np.ndarray) -> np.ndarray:
        """Zero the fixed entries."""
        return x if self.free is None else np.where(self.free, x, 0)

    @property
    def fixed_part(self) -> np.ndarray:
        """Fixed entries with zeros on the free ones."""
        if self.free is None:
            return np.zeros_like(self.x_fixed)
        return np.where(self.free, 0, self.x_fixed)

    def data_value(self, x: np.ndarray) -> float:
        """Data part of the objective (zero when there is none)."""
        return float(self.data_cost(x)) if self.data_cost is not None else 0.0

    def normal(self, x: np.ndarray, penalty: float) -> np.ndarray:
        """Unprojected normal operator of ``data + penalty * ||L(x) - G||^2``."""
        out = self.data_normal(x) if self.data_normal is not None else np.zeros_like(x)
        if penalty > 0:
            out = out + penalty * self.lifted_adjoint(self.lifted(x))
        return out


@dataclass
class OuterLoopOutcome:
    """Final iterate and history of one outer loop."""

    x: np.ndarray
    cost_trace: list[float] = field(default_factory=list)
    converged: bool = False
    iterations: int = 0


class _Penalty:
    """Anchor matrix ``G`` and penalty value for the configured regularizer."""

    def __init__(self, reg: Regularizer, weight: float, svt_penalty: float) -> None:
        self.reg = reg
        self.weight = weight
        self.active = weight > 0
        self.nuclear = reg.kind == "nuclear"
        # Rank residual majorizes with weight w; the splitting scheme uses its own penalty beta.
        self.quadratic = (svt_penalty if self.nuclear else weight) if self.active else 0.0
        self.tau = weight / (2 * svt_penalty)

    def anchor(self, lifted: np.ndarray) -> tuple[np.ndarray, float]:
        """Anchor ``G`` and the objective contribution of the current lifted matrix."""
        if self.nuclear:
            g = singular_value_threshold(lifted, self.tau)
            gap = float(np.sum(np.abs(lifted - g) ** 2))
            return g, self.quadratic * gap + self.weight * nuclear_norm(g)
        if self.reg.r >= min(lifted.shape):
            return lifted, 0.0
        g = rank_r_approx(lifted, self.reg.r)
        return g, self.weight * float(np.sum(np.abs(lifted - g) ** 2))


def mm_outer_loop(
    problem: SurrogateProblem,
    reg: Regularizer,
    cfg: ReconConfig,
    x0: np.ndarray,
) -> OuterLoopOutcome:
    """Minimize a surrogate problem by majorize-minimize outer steps.

    With the rank residual the anchor is the rank-``r`` truncation of the current lifted
    matrix and the recorded cost is the true objective, which never increases. With the
    nuclear norm the anchor is the singular-value-thresholded lifted matrix and the recorded
    cost is the splitting objective ``data + beta * ||L(x) - G||^2 + w * ||G||_*``.

    Args:
        problem (SurrogateProblem): Objective parts.
        reg (Regularizer): Penalty ``J``.
        cfg (ReconConfig): Iteration limits and tolerances.
        x0 (np.ndarray): Starting point (its fixed entries are overwritten).

    Returns:
        OuterLoopOutcome: Last iterate, cost per outer iteration (starting cost first), and status.

    Raises:
        NumericalFailureError: When a cost becomes nonfinite.
    """
    penalty = _Penalty(reg, problem.weight, cfg.svt_penalty)
    fixed = problem.fixed_part
    x = fixed + problem.project(np.asarray(x0, dtype=np.complex128))
    fixed_normal = problem.normal(fixed, penalty.quadratic) if problem.free is not None else None
    data_rhs = problem.data_rhs if problem.data_rhs is not None else np.zeros_like(x)

    def surrogate_normal(v: np.ndarray) -> np.ndarray:
        return problem.project(problem.normal(v, penalty.quadratic))

    def objective(v: np.ndarray) -> tuple[np.ndarray | None, float]:
        value = problem.data_value(v)
        if not penalty.active:
            return None, value
        anchor, contribution = penalty.anchor(problem.lifted(v))
        return anchor, value + contribution

    anchor, cost = objective(x)
    trace = [cost]
    converged = False
    iterations = 0
    for iterations in range(1, cfg.outer_iters + 1):
        rhs = data_rhs
        if anchor is not None:
            rhs = rhs + penalty.quadratic * problem.lifted_adjoint(anchor)
        if fixed_normal is not None:
            rhs = rhs - fixed_normal
        free_part = cg_least_squares(
            surrogate_normal,
            problem.project(rhs),
            x0=problem.project(x),
            iters=cfg.cg_iters,
            tol=cfg.cg_tol,
        )
        x = fixed + problem.project(free_part)
        anchor, next_cost = objective(x)
        trace.append(next_cost)
        if not np.isfinite(next_cost):
            msg = f"Outer loop produced a nonfinite cost at iteration {iterations}; trace: {trace}"
            raise NumericalFailureError(msg)
        logger.bind(iteration=iterations, cost=next_cost).debug("outer iteration")
        change = abs(cost - next_cost) / max(abs(cost), np.finfo(float).tiny)
        cost = next_cost
        if change <= cfg.stop_tol:
            converged = True
            break
    return OuterLoopOutcome(x=x, cost_trace=trace, converged=converged, iterations=iterations)
