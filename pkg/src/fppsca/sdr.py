"""Semidefinite-relaxation baseline: lower bounds plus randomized rounding.

Dropping the rank-one condition from the lifted problem gives a convex
SDP whose optimum lower-bounds the true objective.  When the relaxation
matrix is (numerically) rank one its leading eigenvector solves the
original problem; otherwise candidate vectors are drawn as complex
Gaussians with the relaxation matrix as covariance and rescaled toward
feasibility.

Scaling a candidate xi by t > 0 scales every quadratic form by u = t^2,
so per constraint the feasible set in u is an interval determined by
the sign pattern of q_m = quad_form(Am, xi) and the bound c_m:

    q_m > 0:  u <= c_m / q_m   (empty if c_m < 0)
    q_m < 0:  u >= c_m / q_m   when c_m < 0, otherwise unrestricted
    q_m = 0:  unrestricted when c_m >= 0, otherwise empty

The intervals are intersected exactly and, when the intersection is
nonempty, the u minimizing the (nonnegative) objective coefficient is
the left endpoint.  This closed-form search replaces a grid search.

When no draw can be scaled to feasibility the search still reports a
best-effort candidate: the scaled draw minimizing the l1 sum of
constraint violations, found exactly since the violation is a convex
piecewise-linear function of u with breakpoints at the ratios c_m/q_m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .qcqp import QcqpInstance, check_feasibility, hermitianize, quad_form
from .sdp import SdpProblem, rank_one_extract, solve_sdp

__all__ = [
    "SdrResult",
    "RandomizationOutcome",
    "loss_db",
    "sdr_lower_bound",
    "randomize_and_scale",
    "randomization_search",
    "run_sdr",
]

RANK1_RATIO = 1e-6
FEAS_TOL = 1e-6


@dataclass(frozen=True)
class SdrResult:
    """Relaxation outcome: bound, rank diagnosis, best rounded point.

    status mirrors the relaxation solver: "optimal", "infeasible",
    "max_iter", or "numerical_failure".  An infeasible relaxation
    certifies the original problem infeasible.  best_point, when
    present, is verified feasible and best_objective is its true
    objective value.
    """

    matrix: Optional[np.ndarray]
    lower_bound: float
    rank1: bool
    best_point: Optional[np.ndarray]
    best_objective: Optional[float]
    randomizations_tried: int
    status: str
    message: str = ""


@dataclass(frozen=True)
class RandomizationOutcome:
    """Full record of a randomization search.

    best_point / best_objective cover verified-feasible candidates only.
    best_effort_point is the scaled draw with minimum l1 constraint
    violation (zero when a feasible candidate exists); it seeds other
    solvers when the randomization itself fails.
    """

    best_point: Optional[np.ndarray]
    best_objective: Optional[float]
    best_effort_point: Optional[np.ndarray]
    best_effort_violation: Optional[float]
    num_feasible: int
    draws: int


def loss_db(objective: float, lower_bound: float) -> Optional[float]:
    """Power loss 10*log10(objective / lower_bound), None if the bound is <= 0."""
    if not np.isfinite(lower_bound) or lower_bound <= 0.0:
        return None
    if not np.isfinite(objective) or objective <= 0.0:
        return None
    return 10.0 * math.log10(objective / lower_bound)


def _gaussian_draws(rng: np.random.Generator, num_draws: int, dim: int) -> np.ndarray:
    """num_draws standard complex Gaussian vectors, one stream position per draw.

    Draw i consumes positions [2*dim*i, 2*dim*(i+1)) of the stream, so it
    depends only on (seed, i) and not on num_draws.
    """
    flat = rng.standard_normal(2 * dim * num_draws).reshape(num_draws, 2, dim)
    return (flat[:, 0, :] + 1j * flat[:, 1, :]) / np.sqrt(2.0)


def _psd_factor(mat: np.ndarray) -> np.ndarray:
    """Factor L with L L^H = mat, clipping negative eigenvalues to zero."""
    herm = hermitianize(np.asarray(mat, dtype=complex))
    eigvals, eigvecs = np.linalg.eigh(herm)
    return eigvecs * np.sqrt(np.maximum(eigvals, 0.0))


def _scale_intervals(q: np.ndarray, bounds: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Intersected feasible interval in u = t^2 for each draw.

    q has shape (draws, M); returns (lo, hi, nonempty) arrays of shape
    (draws,).  hi may be +inf.
    """
    c = bounds[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(q != 0.0, c / q, 0.0)
    pos = q > 0.0
    neg = q < 0.0
    zero = q == 0.0
    empty = np.any((pos | zero) & (c < 0.0) & ~neg, axis=1)
    hi = np.min(np.where(pos & (c >= 0.0), ratio, np.inf), axis=1)
    lo = np.max(np.where(neg & (c < 0.0), ratio, 0.0), axis=1)
    nonempty = ~empty & (lo <= hi)
    return lo, hi, nonempty


def _min_violation_scale(q: np.ndarray, bounds: np.ndarray) -> tuple[float, float]:
    """u >= 0 minimizing sum_m max(0, u*q_m - c_m) for one draw.

    The objective is convex piecewise linear in u, so the minimum is
    attained at u = 0 or at a breakpoint c_m/q_m >= 0.  Ties pick the
    smallest u.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(q != 0.0, bounds / q, -1.0)
    candidates = np.concatenate([[0.0], ratio[np.isfinite(ratio) & (ratio >= 0.0)]])
    candidates = np.unique(candidates)
    totals = np.maximum(0.0, candidates[:, None] * q[None, :] - bounds[None, :]).sum(axis=1)
    best = int(np.argmin(totals))
    return float(candidates[best]), float(totals[best])


def randomization_search(
    inst: QcqpInstance, relaxation_matrix, num_draws: int, rng_seed
) -> RandomizationOutcome:
    """Draw Gaussian candidates from the relaxation covariance and scale them.

    Every scaled candidate is re-verified with check_feasibility before
    it can be reported; the minimum-objective feasible candidate wins,
    with ties broken by draw index.
    """
    if num_draws < 0:
        raise ValueError(f"num_draws must be nonnegative, got {num_draws}")
    mat = np.asarray(relaxation_matrix, dtype=complex)
    if mat.shape != (inst.dim, inst.dim):
        raise ValueError(
            f"relaxation matrix has shape {mat.shape}, expected {(inst.dim, inst.dim)}"
        )
    if num_draws == 0:
        return RandomizationOutcome(None, None, None, None, 0, 0)

    rng = np.random.default_rng(rng_seed)
    factor = _psd_factor(mat)
    draws = _gaussian_draws(rng, num_draws, inst.dim) @ factor.T

    cons_mats = np.stack([m for m, _ in inst.constraints])
    bounds = np.array([b for _, b in inst.constraints])
    # q[i, m] = xi_i^H Am xi_i, real by Hermitian symmetry
    q = np.einsum("in,mnj,ij->im", draws.conj(), cons_mats, draws).real
    q0 = np.maximum(np.einsum("in,nj,ij->i", draws.conj(), inst.objective, draws).real, 0.0)

    lo, hi, nonempty = _scale_intervals(q, bounds)

    best_idx = -1
    best_obj = np.inf
    best_point = None
    num_feasible = 0
    for i in np.flatnonzero(nonempty):
        # objective u*q0 is nondecreasing in u, so the left endpoint wins
        point = np.sqrt(lo[i]) * draws[i]
        _, ok = check_feasibility(inst, point, tol=FEAS_TOL)
        if not ok:
            continue
        num_feasible += 1
        obj = quad_form(inst.objective, point)
        if obj < best_obj:
            best_idx = i
            best_obj = obj
            best_point = point

    if best_point is not None:
        return RandomizationOutcome(
            best_point, best_obj, best_point, 0.0, num_feasible, num_draws
        )

    # no feasible candidate: report the min-violation scaled draw instead
    effort_point = None
    effort_viol = np.inf
    for i in range(num_draws):
        u, viol = _min_violation_scale(q[i], bounds)
        if viol < effort_viol - 1e-15:
            effort_viol = viol
            effort_point = np.sqrt(u) * draws[i]
    return RandomizationOutcome(None, None, effort_point, float(effort_viol), 0, num_draws)


def randomize_and_scale(
    inst: QcqpInstance, relaxation_matrix, num_draws: int, rng_seed
) -> Optional[tuple[np.ndarray, float]]:
    """Feasible (point, objective) from randomized rounding, or None."""
    outcome = randomization_search(inst, relaxation_matrix, num_draws, rng_seed)
    if outcome.best_point is None:
        return None
    return outcome.best_point, outcome.best_objective


def _rank1_ratio_ok(matrix: np.ndarray) -> bool:
    eigvals = np.linalg.eigvalsh(matrix)
    top = float(eigvals[-1])
    if top <= 0.0:
        return False
    if matrix.shape[0] == 1:
        return True
    return max(float(eigvals[-2]), 0.0) / top <= RANK1_RATIO


def sdr_lower_bound(inst: QcqpInstance) -> SdrResult:
    """Solve the relaxation and diagnose rank; no randomization.

    When the relaxation matrix is rank one, its extracted vector is
    verified feasible before being reported as best_point.
    """
    sol = solve_sdp(SdpProblem.from_instance(inst))
    if sol.status != "optimal":
        return SdrResult(
            matrix=None,
            lower_bound=float("nan"),
            rank1=False,
            best_point=None,
            best_objective=None,
            randomizations_tried=0,
            status=sol.status,
            message=sol.message,
        )
    rank1 = _rank1_ratio_ok(sol.matrix)
    best_point = None
    best_objective = None
    if rank1:
        extracted = rank_one_extract(sol.matrix, tol_ratio=RANK1_RATIO)
        if extracted is not None:
            _, ok = check_feasibility(inst, extracted, tol=FEAS_TOL)
            if ok:
                best_point = extracted
                best_objective = quad_form(inst.objective, extracted)
    return SdrResult(
        matrix=sol.matrix,
        lower_bound=sol.lower_bound,
        rank1=rank1,
        best_point=best_point,
        best_objective=best_objective,
        randomizations_tried=0,
        status="optimal",
        message=sol.message,
    )


def run_sdr(inst: QcqpInstance, num_draws: int = 0, rng_seed=None) -> SdrResult:
    """Relaxation bound plus randomized rounding in one call.

    A verified rank-one extraction short-circuits the randomization:
    the relaxation optimum is already attained, no draw can improve it.
    """
    base = sdr_lower_bound(inst)
    if base.status != "optimal" or base.best_point is not None or num_draws == 0:
        return base
    outcome = randomization_search(inst, base.matrix, num_draws, rng_seed)
    return SdrResult(
        matrix=base.matrix,
        lower_bound=base.lower_bound,
        rank1=base.rank1,
        best_point=outcome.best_point,
        best_objective=outcome.best_objective,
        randomizations_tried=outcome.draws,
        status=base.status,
        message=base.message,
    )
