"""Interior-point solver for the per-iteration convex subproblem.

The restriction step of the main algorithm produces, in real embedded
coordinates, a problem of the form

    minimize    x^T P0 x + penalty * sum_m s_m
    subject to  x^T Q_m x + l_m^T x  <=  offset_m + s_m,     m = 1..M,
                s_m >= 0,

with P0 and every Q_m positive semidefinite.  Slacks make the subproblem
feasible by construction (x = 0, s_m = max(0, -offset_m) + 1 is strictly
interior), so the solver never needs a phase I.

Solved by the shared log-barrier Newton kernel over y = (x, s) with 2M barrier
terms.  At the final barrier weight t ~ 1e10 the constraint slacks are ~1e-10
while the terms forming them are O(1), so evaluating them in float64 leaves
only ~1e-6 relative accuracy; a final centering pass therefore re-evaluates
constraints in extended precision, and the constraint multipliers
1 / (t * slack) are extracted from those extended-precision slacks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .barrier import BarrierParams, barrier_stages, newton_minimize

__all__ = ["ConvexQcqpSubproblem", "SubproblemSolution", "solve_subproblem"]


@dataclass(frozen=True)
class ConvexQcqpSubproblem:
    """Convex QCQP with one slack per constraint, in real coordinates.

    cons_quads is stacked (M, d, d) with zero matrices where a constraint is
    purely affine in x.  Constraint m reads

        x^T cons_quads[m] x + cons_lins[m] . x <= cons_offsets[m] + s_m.
    """

    quad_obj: np.ndarray  # (d, d) PSD objective matrix
    slack_penalty: float
    cons_quads: np.ndarray  # (M, d, d), each PSD
    cons_lins: np.ndarray  # (M, d)
    cons_offsets: np.ndarray  # (M,) right-hand offsets

    def __post_init__(self):
        quad_obj = np.asarray(self.quad_obj, dtype=float)
        quads = np.asarray(self.cons_quads, dtype=float)
        lins = np.asarray(self.cons_lins, dtype=float)
        offsets = np.asarray(self.cons_offsets, dtype=float)
        d = quad_obj.shape[0]
        if quad_obj.shape != (d, d):
            raise ValueError("objective matrix must be square")
        m = offsets.shape[0]
        if quads.shape != (m, d, d) or lins.shape != (m, d):
            raise ValueError(
                f"inconsistent shapes: quads {quads.shape}, lins {lins.shape}, offsets {offsets.shape}"
            )
        if m < 1:
            raise ValueError("subproblem needs at least one constraint")
        if self.slack_penalty <= 0:
            raise ValueError("slack penalty must be positive")
        for arr in (quad_obj, quads, lins, offsets):
            if not np.all(np.isfinite(arr)):
                raise ValueError("subproblem data has non-finite entries")
            arr.setflags(write=False)
        object.__setattr__(self, "quad_obj", quad_obj)
        object.__setattr__(self, "cons_quads", quads)
        object.__setattr__(self, "cons_lins", lins)
        object.__setattr__(self, "cons_offsets", offsets)

    @property
    def dim(self) -> int:
        return self.quad_obj.shape[0]

    @property
    def num_constraints(self) -> int:
        return self.cons_offsets.shape[0]

    def constraint_values(self, x: np.ndarray) -> np.ndarray:
        """Left sides x^T Q_m x + l_m . x, vectorized over m."""
        qx = np.einsum("mij,j->mi", self.cons_quads, x)
        return qx @ x + self.cons_lins @ x

    def objective_value(self, x: np.ndarray, slacks: np.ndarray) -> float:
        return float(x @ self.quad_obj @ x + self.slack_penalty * np.sum(slacks))

    def strict_start(self) -> tuple[np.ndarray, np.ndarray]:
        """x = 0, s_m = max(0, -offset_m) + 1: strictly inside every constraint."""
        x = np.zeros(self.dim)
        s = np.maximum(0.0, -self.cons_offsets) + 1.0
        return x, s


@dataclass
class SubproblemSolution:
    x: np.ndarray  # (d,) real minimizer
    slacks: np.ndarray  # (M,)
    objective_value: float  # penalized objective at the minimizer
    cons_duals: np.ndarray  # multipliers of the quadratic constraints
    slack_duals: np.ndarray  # multipliers of s_m >= 0
    status: str  # optimal | max_iter | numerical_failure
    newton_iterations: int
    stage_objectives: list[float] = field(default_factory=list)
    gap_estimate: float = np.inf
    message: str = ""


class _SubproblemOracles:
    """Stage value / gradient / Hessian callbacks at a chosen evaluation dtype."""

    def __init__(self, sub: ConvexQcqpSubproblem, dtype):
        self.sub = sub
        self.d = sub.dim
        self.m = sub.num_constraints
        self.penalty = dtype(sub.slack_penalty)
        self.quad_obj = sub.quad_obj.astype(dtype)
        self.quads = sub.cons_quads.astype(dtype)
        self.lins = sub.cons_lins.astype(dtype)
        self.offsets = sub.cons_offsets.astype(dtype)
        self.dtype = dtype

    def split(self, y):
        yv = np.asarray(y, dtype=self.dtype)
        return yv[: self.d], yv[self.d :]

    def residuals(self, y):
        """(x, s, g) with g_m = quad_m + lin_m - offset_m - s_m (wants < 0)."""
        x, s = self.split(y)
        qx = np.einsum("mij,j->mi", self.quads, x)
        g = qx @ x + self.lins @ x - self.offsets - s
        return x, s, g, qx

    def objective(self, y):
        x, s = self.split(y)
        return float(x @ self.quad_obj @ x + self.penalty * np.sum(s))

    def stage_value(self, y, t):
        x, s, g, _ = self.residuals(y)
        if np.any(g >= 0.0) or np.any(s <= 0.0):
            return np.inf
        obj = x @ self.quad_obj @ x + self.penalty * np.sum(s)
        return obj - (np.sum(np.log(-g)) + np.sum(np.log(s))) / self.dtype(t)

    def stage_grad_hess(self, y, t):
        x, s, g, qx = self.residuals(y)
        t = self.dtype(t)
        inv = -1.0 / g  # positive inside the domain
        lin_x = 2.0 * qx + self.lins  # (M, d), rows of d g_m / d x
        inv_t = inv / t
        grad_x = 2.0 * (self.quad_obj @ x) + lin_x.T @ inv_t
        grad_s = self.penalty - inv_t - 1.0 / (t * s)
        grad = np.concatenate([grad_x, grad_s]).astype(float)

        # Hessian in float64: it only steers the direction, accuracy of the
        # fixed point comes from the gradient above.
        lin64 = np.asarray(lin_x, dtype=float)
        w = np.asarray(inv * inv / t, dtype=float)
        hxx = 2.0 * np.asarray(self.quad_obj, dtype=float) + (lin64 * w[:, None]).T @ lin64
        hxx += 2.0 * np.einsum("m,mij->ij", np.asarray(inv_t, dtype=float), np.asarray(self.quads, dtype=float))
        hxs = -(lin64 * w[:, None]).T  # (d, M)
        s64 = np.asarray(s, dtype=float)
        hss = np.diag(w + np.asarray(1.0 / (t * s * s), dtype=float))
        hess = np.block([[hxx, hxs], [hxs.T, hss]])
        return grad, hess


def solve_subproblem(
    sub: ConvexQcqpSubproblem, params: BarrierParams | None = None
) -> SubproblemSolution:
    """Barrier solve of the slack subproblem from its built-in strict start."""
    params = params or BarrierParams()
    m = sub.num_constraints

    fast = _SubproblemOracles(sub, np.float64)
    x0, s0 = sub.strict_start()
    outcome = barrier_stages(
        objective_fn=fast.objective,
        stage_value_fn=fast.stage_value,
        stage_grad_hess_fn=fast.stage_grad_hess,
        y0=np.concatenate([x0, s0]),
        num_barrier_terms=2 * m,
        params=params,
    )
    y = outcome.y
    t = outcome.t_final
    status = outcome.status
    message = outcome.message
    stage_objectives = [rec.objective for rec in outcome.stage_records]
    polish_iters = 0

    if status != "numerical_failure":
        # Final centering with the iterate and all evaluations in extended
        # precision.  Near-active constraints have curvature ~t, so the
        # centered point sits sub-ulp away from any float64 vector and the
        # float64 stages bottom out at a gradient of roughly eps64 * t; the
        # extended-precision iterate pushes that floor below every tolerance
        # used downstream (duals, KKT certificates).
        exact = _SubproblemOracles(sub, np.longdouble)
        # Rounding can leave the float64 stage end a hair outside the
        # longdouble domain; widen the offending slacks by a negligible pad
        # so the polish pass has a strictly interior start.
        _, s_pre, g_pre, _ = exact.residuals(y)
        pad = 1e-14 * (1.0 + np.abs(np.asarray(sub.cons_offsets, dtype=float)))
        widen = np.where(np.asarray(g_pre, dtype=float) >= -pad,
                         np.asarray(g_pre, dtype=float) + pad, 0.0)
        lift = np.maximum(pad - np.asarray(s_pre, dtype=float), 0.0)
        if np.any(widen > 0.0) or np.any(lift > 0.0):
            y = np.concatenate([y[: sub.dim], y[sub.dim :] + widen + lift])
        grad_target = 1e-8 * (1.0 + sub.slack_penalty * np.sqrt(m))
        polish = newton_minimize(
            lambda v: exact.stage_value(v, t),
            lambda v: exact.stage_grad_hess(v, t),
            y.astype(np.longdouble),
            params,
            grad_target=grad_target,
        )
        polish_iters = polish.iterations
        if not polish.failed:
            y = polish.y
            stage_objectives.append(exact.objective(y))
        else:
            message = (message + "; " if message else "") + f"polish skipped: {polish.message}"

    exact = _SubproblemOracles(sub, np.longdouble)
    x_l, s_l, g_l, _ = exact.residuals(y)
    # Barrier dual estimates.  Rounding can park the polished iterate exactly
    # on a boundary (residual 0 or a hair positive), where -1/(t*g) blows up
    # or flips sign; stationarity in s bounds both multipliers by the slack
    # penalty, so floor the residuals and cap at that weight.
    floor = np.longdouble(1e-30)
    cons_duals = 1.0 / (t * np.maximum(-g_l, floor))
    slack_duals = 1.0 / (t * np.maximum(s_l, floor))
    cons_duals = np.asarray(np.minimum(cons_duals, sub.slack_penalty), dtype=float)
    slack_duals = np.asarray(np.minimum(slack_duals, sub.slack_penalty), dtype=float)
    x = np.asarray(x_l, dtype=float)
    slacks = np.asarray(s_l, dtype=float)
    return SubproblemSolution(
        x=x,
        slacks=slacks,
        objective_value=fast.objective(y),
        cons_duals=cons_duals,
        slack_duals=slack_duals,
        status=status,
        newton_iterations=outcome.newton_iterations + polish_iters,
        stage_objectives=stage_objectives,
        gap_estimate=outcome.gap_estimate,
        message=message,
    )
