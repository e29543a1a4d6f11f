"""Conjugate-gradient solver for the quadratic surrogate problems."""

from collections.abc import Callable

import numpy as np
from loguru import logger

from src.handlers.exceptions import NumericalFailureError, ValidationFailedError

NormalOperator = Callable[[np.ndarray], np.ndarray]


def real_inner(a: np.ndarray, b: np.ndarray) -> float:
    """``Re <a, b>``; the inner product under which real-linear liftings are self-adjoint."""
    return float(np.vdot(a, b).real)


def _apply(op: NormalOperator, x: np.ndarray) -> np.ndarray:
    out = op(x)
    if out.shape != x.shape:
        msg = f"Normal operator changed the shape {x.shape} -> {out.shape}"
        raise ValidationFailedError(msg)
    if not np.all(np.isfinite(out)):
        msg = "Normal operator returned nonfinite values"
        raise NumericalFailureError(msg)
    return out


def cg_least_squares(
    apply_normal_op: NormalOperator,
    rhs: np.ndarray,
    x0: np.ndarray | None = None,
    iters: int = 30,
    tol: float = 1e-8,
) -> np.ndarray:
    """Solve ``A x = rhs`` for a self-adjoint positive-semidefinite ``A``.

    Iterates until ``||A x - rhs|| <= tol * ||rhs||`` or ``iters`` steps. Starting from zero
    on a consistent singular system the iterates stay in the range of ``A``, which gives the
    minimum-norm solution.

    Args:
        apply_normal_op (NormalOperator): Applies ``A``.
        rhs (np.ndarray): Right-hand side.
        x0 (np.ndarray | None): Warm start (zeros if omitted).
        iters (int): Iteration cap.
        tol (float): Relative residual tolerance.

    Returns:
        np.ndarray: The approximate solution.

    Raises:
        NumericalFailureError: When the operator produces NaN or Inf.
    """
    rhs = np.asarray(rhs, dtype=np.complex128)
    x = np.zeros_like(rhs) if x0 is None else np.array(x0, dtype=np.complex128)
    rhs_norm = float(np.linalg.norm(rhs.ravel()))
    r = rhs - _apply(apply_normal_op, x) if x0 is not None else rhs.copy()
    p = r.copy()
    rs = real_inner(r, r)
    target = (tol * rhs_norm) ** 2
    steps = 0
    for _ in range(iters):
        if rs <= target:
            break
        ap = _apply(apply_normal_op, p)
        curvature = real_inner(p, ap)
        if curvature <= 0:
            logger.debug(f"CG stopped on a null direction after {steps} steps")
            break
        alpha = rs / curvature
        x += alpha * p
        r -= alpha * ap
        rs_next = real_inner(r, r)
        p = r + (rs_next / rs) * p
        rs = rs_next
        steps += 1
    if not np.all(np.isfinite(x)):
        msg = "Conjugate gradient produced nonfinite iterates"
        raise NumericalFailureError(msg)
    logger.debug(f"CG: {steps} steps, residual {np.sqrt(rs):.3e} (rhs norm {rhs_norm:.3e})")
    return x


def check_normal_operator(
    apply: NormalOperator,
    shape: tuple[int, ...],
    rng: np.random.Generator,
    trials: int = 3,
) -> float:
    """Largest relative asymmetry ``|<Ax, y> - <x, Ay>|`` over random complex probes."""
    worst = 0.0
    for _ in range(trials):
        x = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        y = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        ax, ay = apply(x), apply(y)
        scale = max(np.linalg.norm(ax.ravel()) * np.linalg.norm(y.ravel()), np.finfo(float).tiny)
        worst = max(worst, abs(real_inner(ax, y) - real_inner(x, ay)) / scale)
    return float(worst)
