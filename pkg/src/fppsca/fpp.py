"""Feasible point pursuit by successive convex approximation.

Each outer iteration replaces the concave part of every constraint with its
tangent plane at the current center z, yielding a convex subproblem whose
slacks keep it feasible no matter where z sits:

    minimize    x^H A0 x + penalty * sum_m s_m
    subject to  x^H Am(+) x + 2 Re{z^H Am(-) x}  <=  cm + z^H Am(-) z + s_m,
                s_m >= 0.

The surrogate touches the true constraint at x = z and upper-bounds it
everywhere else, so any x with s = 0 is feasible for the original problem
(restriction soundness), and re-centering at the previous optimizer keeps the
penalized objective non-increasing (the previous point stays feasible for the
next subproblem with the same slacks).

Convergence is declared on the true objective: |obj_k - obj_{k-1}| <= conv_tol
with iterates indexed from zero, so the earliest possible stop is k = 1.
iterations_to_feasibility instead counts solves (1-based): the first solve
whose x is feasible and whose slacks are numerically zero.

At the final iterate the subproblem's constraint multipliers double as
multipliers for the original problem - the tangency of surrogate and true
constraint gradients at x = z makes the two stationarity conditions coincide
once the slacks vanish - and kkt_check turns them into a certificate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .barrier import BarrierParams
from .qcqp import (
    QcqpInstance,
    SplitConstraint,
    check_feasibility,
    embed_vector,
    lift_vector,
    quad_form,
    real_embedding,
)
from .subproblem import ConvexQcqpSubproblem, solve_subproblem

__all__ = [
    "FppParams",
    "IterateRecord",
    "IterateTrace",
    "KktCertificate",
    "FppResult",
    "EngineFailure",
    "FEASIBLE_STATUSES",
    "default_start",
    "build_subproblem",
    "run_fpp_sca",
    "kkt_check",
    "multi_start",
]

FEASIBLE_STATUSES = frozenset({"feasible_kkt", "feasible_converged"})


@dataclass(frozen=True)
class FppParams:
    """Outer-loop knobs; barrier holds the inner solver's settings."""

    slack_penalty: float = 10.0  # weight trading off objective against slack l1 norm
    max_iter: int = 30
    conv_tol: float = 1e-4  # on |obj_k - obj_{k-1}|, true objective
    feas_tol: float = 1e-6  # per-constraint violation allowance
    slack_zero_tol: float = 1e-7  # ||s||_inf at or below this counts as zero
    kkt_tol: float = 1e-5  # for the certificate residuals
    barrier: BarrierParams = field(default_factory=BarrierParams)

    def __post_init__(self):
        if self.slack_penalty <= 0:
            raise ValueError("slack penalty must be positive")
        if self.conv_tol <= 0:
            raise ValueError("convergence tolerance must be positive")
        if self.max_iter < 1:
            raise ValueError("need at least one iteration")
        if min(self.feas_tol, self.slack_zero_tol, self.kkt_tol) <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class IterateRecord:
    center: np.ndarray  # z_k, the linearization point
    x: np.ndarray  # complex optimizer of the k-th subproblem
    slacks: np.ndarray
    surrogate_objective: float  # x^H A0 x + penalty * sum s, as solved
    true_objective: float  # x^H A0 x
    violations: np.ndarray  # per-constraint max(0, value - bound)
    subproblem_status: str


@dataclass
class IterateTrace:
    records: list[IterateRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def surrogate_objectives(self) -> list[float]:
        return [rec.surrogate_objective for rec in self.records]

    @property
    def true_objectives(self) -> list[float]:
        return [rec.true_objective for rec in self.records]

    def slack_regressions(self, tol: float) -> list[int]:
        """Iterations where slacks reappeared after having reached zero.

        There is no guarantee this stays empty - it is monitored, not
        asserted; benchmark reports surface it as a warning count.
        """
        out = []
        seen_zero = False
        for k, rec in enumerate(self.records):
            level = float(np.max(rec.slacks)) if rec.slacks.size else 0.0
            if level <= tol:
                seen_zero = True
            elif seen_zero:
                out.append(k)
        return out


@dataclass
class KktCertificate:
    multipliers: np.ndarray  # one per original constraint, >= 0
    stationarity_residual: float  # ||(A0 + sum mu_m Am) x|| / (1 + ||A0 x||)
    complementarity_residual: float  # max_m |mu_m (x^H Am x - cm)|
    primal_violation: float  # max constraint violation at x


@dataclass
class FppResult:
    status: str  # feasible_kkt | feasible_converged | infeasible_converged | max_iter
    x_final: np.ndarray
    s_final: np.ndarray
    objective: float  # true objective at x_final
    iterations_to_feasibility: Optional[int]  # 1-based solve count, None if never
    iterations_to_convergence: Optional[int]  # k of the first passing test, None if capped
    kkt_residual: float
    kkt_passed: bool
    certificate: KktCertificate
    trace: IterateTrace


class EngineFailure(RuntimeError):
    """Inner solver broke down; carries the trace accumulated so far."""

    def __init__(self, message: str, trace: IterateTrace):
        super().__init__(message)
        self.trace = trace


def default_start(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Circular complex Gaussian start, variance 2 per component."""
    return rng.standard_normal(dim) + 1j * rng.standard_normal(dim)


def build_subproblem(
    inst: QcqpInstance,
    splits: Sequence[SplitConstraint],
    center,
    slack_penalty: float,
) -> ConvexQcqpSubproblem:
    """Convex restriction of the instance at the given linearization center.

    Works in real embedded coordinates (dimension 2n): the convex parts map to
    PSD quadratic terms, the linearized concave parts to linear terms
    2 T(Am(-)) z, and the anchors z^H Am(-) z move to the right-hand side.
    """
    z = np.asarray(center, dtype=complex)
    if z.shape != (inst.dim,):
        raise ValueError(f"center has shape {z.shape}, expected ({inst.dim},)")
    if not np.all(np.isfinite(z)):
        raise ValueError("center has non-finite entries")
    if len(splits) != inst.num_constraints:
        raise ValueError("splits inconsistent with instance")
    z_emb = embed_vector(z)
    quads = np.stack([real_embedding(sp.psd_part) for sp in splits])
    lins = np.stack([2.0 * (real_embedding(sp.nsd_part) @ z_emb) for sp in splits])
    offsets = np.array([sp.bound + quad_form(sp.nsd_part, z) for sp in splits])
    return ConvexQcqpSubproblem(
        quad_obj=real_embedding(inst.objective),
        slack_penalty=slack_penalty,
        cons_quads=quads,
        cons_lins=lins,
        cons_offsets=offsets,
    )


def kkt_check(
    inst: QcqpInstance,
    x,
    duals,
    tol: float,
    feas_tol: float = 1e-6,
) -> tuple[KktCertificate, bool]:
    """Certificate for the original problem from surrogate constraint duals."""
    xv = np.asarray(x, dtype=complex)
    mu = np.asarray(duals, dtype=float)
    if mu.shape != (inst.num_constraints,):
        raise ValueError(f"expected {inst.num_constraints} multipliers, got {mu.shape}")
    if np.any(mu < 0.0):
        raise ValueError("multipliers must be nonnegative")

    obj_grad = inst.objective @ xv
    combo = obj_grad + sum(
        m * (mat @ xv) for m, (mat, _) in zip(mu, inst.constraints)
    )
    stationarity = float(np.linalg.norm(combo)) / (1.0 + float(np.linalg.norm(obj_grad)))
    values = inst.constraint_values(xv)
    bounds = np.array([bound for _, bound in inst.constraints])
    complementarity = float(np.max(np.abs(mu * (values - bounds))))
    violations, _ = check_feasibility(inst, xv, feas_tol)
    primal = float(np.max(violations))
    cert = KktCertificate(
        multipliers=mu,
        stationarity_residual=stationarity,
        complementarity_residual=complementarity,
        primal_violation=primal,
    )
    passed = stationarity <= tol and complementarity <= tol and primal <= feas_tol
    return cert, passed


def run_fpp_sca(
    inst: QcqpInstance, z0, params: FppParams | None = None
) -> FppResult:
    """Iterate restriction and re-centering from z0 until the objective settles."""
    params = params or FppParams()
    z = np.asarray(z0, dtype=complex)
    if z.shape != (inst.dim,):
        raise ValueError(f"start has shape {z.shape}, expected ({inst.dim},)")
    if not np.all(np.isfinite(z)):
        raise ValueError("start has non-finite entries")

    splits = inst.split_constraints()
    trace = IterateTrace()
    first_feasible: Optional[int] = None
    converged_at: Optional[int] = None
    prev_obj: Optional[float] = None
    final_duals: Optional[np.ndarray] = None

    for k in range(params.max_iter):
        sub = build_subproblem(inst, splits, z, params.slack_penalty)
        sol = solve_subproblem(sub, params.barrier)
        if sol.status == "numerical_failure":
            raise EngineFailure(f"subproblem failed at iteration {k}: {sol.message}", trace)
        x = lift_vector(sol.x)
        true_obj = inst.objective_value(x)
        violations, feasible_x = check_feasibility(inst, x, params.feas_tol)
        trace.records.append(
            IterateRecord(
                center=z.copy(),
                x=x,
                slacks=sol.slacks,
                surrogate_objective=sol.objective_value,
                true_objective=true_obj,
                violations=violations,
                subproblem_status=sol.status,
            )
        )
        final_duals = sol.cons_duals
        slacks_zero = float(np.max(sol.slacks)) <= params.slack_zero_tol
        if first_feasible is None and feasible_x and slacks_zero:
            first_feasible = k + 1
        if prev_obj is not None and abs(true_obj - prev_obj) <= params.conv_tol:
            converged_at = k
            break
        prev_obj = true_obj
        z = x

    final = trace.records[-1]
    feasible = (
        check_feasibility(inst, final.x, params.feas_tol)[1]
        and float(np.max(final.slacks)) <= params.slack_zero_tol
    )
    cert, kkt_passed = kkt_check(
        inst, final.x, final_duals, params.kkt_tol, params.feas_tol
    )
    if converged_at is None:
        status = "max_iter"
    elif not feasible:
        status = "infeasible_converged"
    elif kkt_passed:
        status = "feasible_kkt"
    else:
        status = "feasible_converged"
    return FppResult(
        status=status,
        x_final=final.x,
        s_final=final.slacks,
        objective=final.true_objective,
        iterations_to_feasibility=first_feasible,
        iterations_to_convergence=converged_at,
        kkt_residual=cert.stationarity_residual,
        kkt_passed=kkt_passed,
        certificate=cert,
        trace=trace,
    )


def multi_start(
    inst: QcqpInstance, starts: Sequence, params: FppParams | None = None
) -> FppResult:
    """Run from every start and keep the best result.

    Feasible results win over infeasible ones and compare by objective;
    infeasible results compare by slack l1 norm, then objective.  Start index
    breaks remaining ties, so the outcome is deterministic.
    """
    if len(starts) < 1:
        raise ValueError("need at least one start")
    best: Optional[FppResult] = None
    best_key = None
    for idx, z0 in enumerate(starts):
        result = run_fpp_sca(inst, z0, params)
        if result.status in FEASIBLE_STATUSES:
            key = (0, result.objective, idx)
        else:
            key = (1, float(np.sum(result.s_final)), result.objective, idx)
        if best_key is None or key < best_key:
            best, best_key = result, key
    return best
