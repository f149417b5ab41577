"""Damped-Newton kernel shared by the interior-point solvers.

Both convex solvers in this package (the slack subproblem and the semidefinite
relaxation) are driven by the same log-barrier scheme: minimize

    F_t(y) = f0(y) + phi(y) / t

for an increasing sequence t = 1, mu, mu^2, ..., where phi is the problem's
log barrier with nu terms, stopping once the duality-gap estimate nu / t drops
below gap_tol.  Dividing the barrier by t instead of multiplying the objective
by t keeps stage values at the objective's own scale, so line-search
comparisons stay well above float noise even at t ~ 1e10; the Newton direction
is identical either way.

Numerical care, learned the hard way at large t:

- Newton systems are Jacobi-equilibrated before Cholesky; the barrier Hessian
  mixes curvatures of order 1 and order t, which is pure diagonal scaling.
- The decrement alone is a bad stopping rule near the central path: curvature
  along nearly-active constraints is ~t, so a tiny decrement still allows a
  relatively large centering error (and hence large dual error).  The kernel
  therefore also stops on the proposed step being componentwise negligible,
  and detects value plateaus at the float noise floor.
- Callers needing accurate duals run one extra centering pass at the final t
  with extended-precision constraint evaluation (see subproblem/sdp modules);
  the kernel itself is dtype-agnostic and works on whatever the callbacks
  return.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg

__all__ = [
    "BarrierParams",
    "NewtonOutcome",
    "BarrierOutcome",
    "StageRecord",
    "newton_minimize",
    "barrier_stages",
]


@dataclass(frozen=True)
class BarrierParams:
    """Knobs for the barrier schedule and the inner Newton iterations."""

    t_init: float = 1.0  # cap on the first barrier weight; see barrier_stages
    mu: float = 10.0  # barrier weight multiplier per stage
    gap_tol: float = 1e-9  # stop once nu / t <= gap_tol
    max_newton_iter: int = 400  # per stage
    newton_tol: float = 1e-24  # stop when decrement^2/2 <= tol * max(1, |F|)
    stall_decrement_tol: float = 1e-8  # accept a line-search stall below this decrement
    plateau_iters: int = 3  # accept after this many zero-progress accepted steps
    line_search_slope: float = 0.25  # sufficient-decrease fraction (alpha)
    line_search_shrink: float = 0.5  # backtracking factor (beta)
    max_backtracks: int = 60
    regularization: float = 1e-12  # added to the equilibrated Hessian on failure
    reg_retries: int = 3  # retries with x10 escalation each time


@dataclass
class NewtonOutcome:
    y: np.ndarray
    iterations: int
    converged: bool
    stalled: bool
    failed: bool
    message: str = ""


def _solve_equilibrated(hess: np.ndarray, grad: np.ndarray, params: BarrierParams):
    """Jacobi-scaled Cholesky solve of H d = -g; None if hopeless."""
    diag = np.diag(hess)
    scale = 1.0 / np.sqrt(np.maximum(diag, 1e-300))
    hs = hess * scale[:, None] * scale[None, :]
    gs = grad * scale
    reg = 0.0
    bump = params.regularization
    for _ in range(params.reg_retries + 1):
        try:
            mat = hs if reg == 0.0 else hs + reg * np.eye(hs.shape[0])
            cho = scipy.linalg.cho_factor(mat, lower=True, check_finite=False)
            z = scipy.linalg.cho_solve(cho, -gs, check_finite=False)
            return z * scale
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, ValueError):
            reg = bump
            bump *= 10.0
    return None


def newton_minimize(
    value_fn: Callable[[np.ndarray], float],
    grad_hess_fn: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]],
    y0: np.ndarray,
    params: BarrierParams,
    stop_fn: Optional[Callable[[np.ndarray], bool]] = None,
    grad_target: float = 0.0,
) -> NewtonOutcome:
    """Backtracking-damped Newton descent of a smooth strictly convex function.

    value_fn must return +inf outside the barrier domain.  The iterate keeps
    the dtype of y0 (extended precision for polishing passes); linear algebra
    runs in float64 regardless, which only affects the convergence rate, not
    the fixed point.  stop_fn, when given, is checked after every accepted
    step and short-circuits the stage (used by the SDP phase-I solve to bail
    out as soon as strict feasibility is proven).  grad_target > 0 adds a
    gradient-norm stopping rule on top of the decrement rule.
    """
    y = np.array(y0)
    val = value_fn(y)
    if not np.isfinite(val):
        return NewtonOutcome(y, 0, False, False, True, "start outside barrier domain")

    plateau_count = 0
    for it in range(params.max_newton_iter):
        grad, hess = grad_hess_fn(y)
        grad64 = np.asarray(grad, dtype=float)
        hess64 = np.asarray(hess, dtype=float)
        if grad_target > 0.0 and float(np.linalg.norm(grad64)) <= grad_target:
            return NewtonOutcome(y, it, True, False, False, "gradient target met")
        step_dir = _solve_equilibrated(hess64, grad64, params)
        if step_dir is None:
            return NewtonOutcome(y, it, False, False, True, "hessian factorization failed")
        slope = float(grad64 @ step_dir)  # equals -decrement^2 for exact solves
        half_dec2 = -0.5 * slope
        ref = max(1.0, abs(float(val)))
        if half_dec2 <= params.newton_tol * ref:
            return NewtonOutcome(y, it, True, False, False)

        step = 1.0
        accepted = False
        for _ in range(params.max_backtracks):
            trial = y + step * step_dir
            trial_val = value_fn(trial)
            if np.isfinite(trial_val) and trial_val <= val + params.line_search_slope * step * slope:
                if trial_val >= val - 1e-14 * ref:
                    plateau_count += 1
                else:
                    plateau_count = 0
                y, val = trial, trial_val
                accepted = True
                break
            step *= params.line_search_shrink
        if not accepted:
            if half_dec2 <= params.stall_decrement_tol * ref:
                return NewtonOutcome(y, it, True, True, False, "stalled near center")
            return NewtonOutcome(y, it, False, True, True, "line search stalled")
        if plateau_count >= params.plateau_iters:
            return NewtonOutcome(y, it + 1, True, False, False, "value plateau at float floor")
        if stop_fn is not None and stop_fn(y):
            return NewtonOutcome(y, it + 1, True, False, False, "stop condition met")

    return NewtonOutcome(y, params.max_newton_iter, False, False, False, "newton iteration cap")


@dataclass
class StageRecord:
    t: float
    objective: float  # f0 at the stage center, barrier excluded
    newton_iterations: int


@dataclass
class BarrierOutcome:
    y: np.ndarray
    t_final: float
    gap_estimate: float
    stage_records: list[StageRecord]
    status: str  # optimal | max_iter | numerical_failure
    message: str = ""

    @property
    def newton_iterations(self) -> int:
        return sum(rec.newton_iterations for rec in self.stage_records)


def barrier_stages(
    objective_fn: Callable[[np.ndarray], float],
    stage_value_fn: Callable[[np.ndarray, float], float],
    stage_grad_hess_fn: Callable[[np.ndarray, float], tuple[np.ndarray, np.ndarray]],
    y0: np.ndarray,
    num_barrier_terms: int,
    params: BarrierParams,
    stop_fn: Optional[Callable[[np.ndarray], bool]] = None,
) -> BarrierOutcome:
    """Outer barrier loop: center at each t, escalate t by mu until the gap closes.

    The first weight is params.t_init divided by whole powers of mu until
    the initial gap estimate nu / t reaches the objective scale at y0, so
    the t grid is anchored (same final t as before, extra gentle stages
    below).  A barrier-dominated first stage centers in a few steps from
    any strictly feasible start; starting at t_init regardless of scale
    can leave the start so far from the central path that damped Newton
    crawls along a constraint boundary for thousands of iterations.
    """
    y = np.array(y0, dtype=float)
    t = params.t_init
    scale = max(1.0, abs(float(objective_fn(y))))
    while num_barrier_terms / t < scale and t > 1e-12 * params.t_init:
        t /= params.mu
    records: list[StageRecord] = []
    status = "optimal"
    message = ""
    while True:
        outcome = newton_minimize(
            lambda v: stage_value_fn(v, t),
            lambda v: stage_grad_hess_fn(v, t),
            y,
            params,
            stop_fn=stop_fn,
        )
        y = outcome.y
        records.append(
            StageRecord(t=t, objective=float(objective_fn(y)), newton_iterations=outcome.iterations)
        )
        if outcome.failed:
            return BarrierOutcome(y, t, num_barrier_terms / t, records, "numerical_failure", outcome.message)
        # status tracks the latest stage only: a capped interior stage just
        # dents the next warm start, and each stage's own decrement test
        # re-certifies centering, so a converged final stage outranks
        # earlier detours
        if outcome.converged:
            status, message = "optimal", ""
        else:
            status, message = "max_iter", outcome.message
        if stop_fn is not None and stop_fn(y):
            return BarrierOutcome(y, t, num_barrier_terms / t, records, status, "stop condition met")
        if num_barrier_terms / t <= params.gap_tol:
            break
        t *= params.mu
    return BarrierOutcome(y, t, num_barrier_terms / t, records, status, message)
