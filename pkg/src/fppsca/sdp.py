"""Interior-point solver for the semidefinite relaxation.

Lifting x x^H -> X turns the quadratic problem into a linear SDP:

    minimize    Tr(A0 X)
    subject to  Tr(Am X) <= cm,   m = 1..M,
                X >= 0  (Hermitian PSD).

X is parametrized by n^2 real coordinates in an orthonormal (trace inner
product) Hermitian basis: the n diagonal entries, then sqrt(2) * Re and
sqrt(2) * Im of the strict upper triangle.  Orthonormality makes every trace
functional a plain dot product in coordinates and -log det X a smooth convex
barrier whose gradient is simply -coords(X^-1); its Hessian
Tr(X^-1 B_a X^-1 B_b) has closed-form blocks in the entries of X^-1, assembled
here without materializing basis matrices.

The solve runs two passes of the shared barrier kernel.  Phase I minimizes an
auxiliary violation bound u subject to Tr(Am X) <= cm + u and X >= eps * I,
bailing out as soon as an iterate proves strict feasibility (u <= -1e-6) and
declaring the problem infeasible when the optimal u stays above 1e-7.  Phase
II then minimizes the true objective from that interior point, with the PSD
cone handled by -log det X directly (no shift), so the returned X is positive
definite with eigenvalues ~1/t on the active face and every constraint holds
strictly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
import scipy.linalg

from .barrier import BarrierParams, barrier_stages
from .qcqp import QcqpInstance, hermitianize

__all__ = [
    "HermitianBasis",
    "SdpProblem",
    "SdpSolution",
    "solve_sdp",
    "rank_one_extract",
    "PHASE1_SHIFT",
    "PHASE1_EXIT",
    "PHASE1_INFEASIBLE",
]

PHASE1_SHIFT = 1e-8  # eps in the phase-I cone constraint X >= eps * I
PHASE1_EXIT = -1e-6  # stop phase I once u drops this low: strictly feasible
PHASE1_INFEASIBLE = 1e-7  # declare infeasible when optimal u exceeds this
PHASE1_TRACE_CAP = 1e8  # inert safeguard Tr(X) <= cap during phase I only

_SQRT2 = np.sqrt(2.0)


class HermitianBasis:
    """Orthonormal real coordinates for n x n Hermitian matrices.

    Coordinate layout: [diagonal (n); sqrt(2)*Re upper triangle (P);
    sqrt(2)*Im upper triangle (P)] with P = n(n-1)/2, upper triangle walked
    row by row.  For Hermitian A, B: Tr(A B) = coords(A) . coords(B).
    """

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("dimension must be positive")
        self.n = n
        rows, cols = np.triu_indices(n, k=1)
        self.rows = rows
        self.cols = cols
        self.num_pairs = rows.shape[0]
        self.dim = n * n

    def coords(self, mat: np.ndarray) -> np.ndarray:
        mat = np.asarray(mat)
        off = mat[self.rows, self.cols]
        return np.concatenate(
            [np.real(np.diagonal(mat)), _SQRT2 * np.real(off), _SQRT2 * np.imag(off)]
        ).astype(float)

    def matrix(self, theta: np.ndarray) -> np.ndarray:
        n, p = self.n, self.num_pairs
        theta = np.asarray(theta, dtype=float)
        out = np.zeros((n, n), dtype=complex)
        out[np.arange(n), np.arange(n)] = theta[:n]
        off = (theta[n : n + p] + 1j * theta[n + p :]) / _SQRT2
        out[self.rows, self.cols] = off
        out[self.cols, self.rows] = np.conj(off)
        return out

    def logdet_grad_hess(self, inv_mat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Gradient and Hessian of -log det X(theta), given S = X^-1.

        grad_a = -Tr(S B_a) = -coords(S).  hess_ab = Tr(S B_a S B_b), with
        closed forms per block; pair index p stands for (i_p, j_p), i < j:

            DD[i, k]  = |S_ik|^2
            DF[i, q]  =  sqrt(2) Re(S_{i,iq} conj(S_{i,jq}))
            DG[i, q]  = -sqrt(2) Im(S_{i,iq} conj(S_{i,jq}))
            FF[p, q]  =  Re z1 + Re z2
            FG[p, q]  =  Im z2 - Im z1
            GG[p, q]  =  Re z2 - Re z1

        with z1 = S_{jp,iq} conj(S_{ip,jq}) and z2 = S_{jp,jq} conj(S_{ip,iq}).
        """
        s = inv_mat
        n, p = self.n, self.num_pairs
        rows, cols = self.rows, self.cols
        grad = -self.coords(s)

        hess = np.empty((self.dim, self.dim))
        hess[:n, :n] = np.abs(s) ** 2
        if p:
            w = s[:, rows] * np.conj(s[:, cols])  # (n, P)
            hess[:n, n : n + p] = _SQRT2 * np.real(w)
            hess[:n, n + p :] = -_SQRT2 * np.imag(w)
            hess[n : n + p, :n] = hess[:n, n : n + p].T
            hess[n + p :, :n] = hess[:n, n + p :].T
            z1 = s[cols[:, None], rows[None, :]] * np.conj(s[rows[:, None], cols[None, :]])
            z2 = s[cols[:, None], cols[None, :]] * np.conj(s[rows[:, None], rows[None, :]])
            hess[n : n + p, n : n + p] = np.real(z1) + np.real(z2)
            fg = np.imag(z2) - np.imag(z1)
            hess[n : n + p, n + p :] = fg
            hess[n + p :, n : n + p] = fg.T
            hess[n + p :, n + p :] = np.real(z2) - np.real(z1)
        return grad, hess


@lru_cache(maxsize=64)
def _basis(n: int) -> HermitianBasis:
    return HermitianBasis(n)


@dataclass(frozen=True)
class SdpProblem:
    """Linear SDP data: Hermitian objective and trace inequality constraints."""

    objective: np.ndarray  # (n, n) Hermitian
    constraint_mats: np.ndarray  # (M, n, n), each Hermitian
    bounds: np.ndarray  # (M,)

    def __post_init__(self):
        obj = hermitianize(self.objective)
        mats = np.asarray(self.constraint_mats, dtype=complex)
        bounds = np.asarray(self.bounds, dtype=float)
        n = obj.shape[0]
        if mats.ndim != 3 or mats.shape[1:] != (n, n) or bounds.shape != (mats.shape[0],):
            raise ValueError(
                f"inconsistent shapes: mats {mats.shape}, bounds {bounds.shape}, dim {n}"
            )
        if mats.shape[0] < 1:
            raise ValueError("relaxation needs at least one constraint")
        if not np.all(np.isfinite(bounds)):
            raise ValueError("bounds have non-finite entries")
        mats = np.stack([hermitianize(m) for m in mats])
        mats.setflags(write=False)
        bounds.setflags(write=False)
        object.__setattr__(self, "objective", obj)
        object.__setattr__(self, "constraint_mats", mats)
        object.__setattr__(self, "bounds", bounds)

    @classmethod
    def from_instance(cls, inst: QcqpInstance) -> "SdpProblem":
        mats = np.stack([mat for mat, _ in inst.constraints])
        bounds = np.array([bound for _, bound in inst.constraints])
        return cls(objective=inst.objective, constraint_mats=mats, bounds=bounds)

    @property
    def dim(self) -> int:
        return self.objective.shape[0]

    @property
    def num_constraints(self) -> int:
        return self.bounds.shape[0]

    def constraint_traces(self, mat: np.ndarray) -> np.ndarray:
        """Tr(Am X) for each m, real by Hermitian symmetry."""
        return np.real(np.einsum("mij,ji->m", self.constraint_mats, mat))


@dataclass
class SdpSolution:
    matrix: np.ndarray  # (n, n) Hermitian PSD optimizer
    lower_bound: float  # Tr(A0 X); lower-bounds the quadratic problem when feasible
    cons_duals: np.ndarray  # (M,) multipliers of the trace constraints
    status: str  # optimal | infeasible | max_iter | numerical_failure
    newton_iterations: int
    gap_estimate: float = np.inf
    phase1_bound: float = np.nan  # final auxiliary violation bound u
    stage_objectives: list[float] = field(default_factory=list)
    message: str = ""


class _RelaxationOracles:
    """Barrier callbacks over theta (phase II) or (theta, u) (phase I).

    Phase I carries one extra linear row, the safeguard Tr(X) <= cap, which u
    does not relax.  Without it, any cone direction that loosens (or leaves
    alone) every trace constraint lets -log det inflate X without bound while
    u is still settling, and phase II would start from an absurd point.  The
    cap is far outside the scale of any sane instance; solve_sdp refuses to
    certify infeasibility when it ends up active.
    """

    def __init__(self, prob: SdpProblem, aux: bool):
        self.basis = _basis(prob.dim)
        self.aux = aux
        self.shift = PHASE1_SHIFT if aux else 0.0
        rows = np.stack([self.basis.coords(m) for m in prob.constraint_mats])
        bounds = prob.bounds.astype(float)
        if aux:
            trace_row = self.basis.coords(np.eye(prob.dim))
            self.a_rows = np.vstack([rows, trace_row])
            self.bounds = np.concatenate([bounds, [PHASE1_TRACE_CAP]])
            self.u_coeff = np.concatenate([np.ones(rows.shape[0]), [0.0]])
            self.obj_vec = np.zeros(self.basis.dim + 1)
            self.obj_vec[-1] = 1.0
        else:
            self.a_rows = rows
            self.bounds = bounds
            self.u_coeff = np.zeros(rows.shape[0])
            self.obj_vec = self.basis.coords(prob.objective)

    @property
    def num_barrier_terms(self) -> int:
        return self.basis.n + self.bounds.shape[0]

    def split(self, y: np.ndarray) -> tuple[np.ndarray, float]:
        y = np.asarray(y, dtype=float)
        if self.aux:
            return y[:-1], float(y[-1])
        return y, 0.0

    def cone_factor(self, theta: np.ndarray):
        """Cholesky of X(theta) - shift*I, or None outside the cone."""
        mat = self.basis.matrix(theta)
        if self.shift:
            mat[np.arange(mat.shape[0]), np.arange(mat.shape[0])] -= self.shift
        if not np.all(np.isfinite(mat)):
            return None
        try:
            return np.linalg.cholesky(mat)
        except np.linalg.LinAlgError:
            return None

    def slack_values(self, y: np.ndarray) -> np.ndarray:
        theta, u = self.split(y)
        return self.bounds + self.u_coeff * u - self.a_rows @ theta

    def objective(self, y: np.ndarray) -> float:
        return float(self.obj_vec @ np.asarray(y, dtype=float))

    def stage_value(self, y: np.ndarray, t: float) -> float:
        theta, _ = self.split(y)
        chol = self.cone_factor(theta)
        slack = self.slack_values(y)
        if chol is None or np.any(slack <= 0.0):
            return np.inf
        logdet = 2.0 * float(np.sum(np.log(np.real(np.diagonal(chol)))))
        return self.objective(y) + (-logdet - float(np.sum(np.log(slack)))) / t

    def stage_grad_hess(self, y: np.ndarray, t: float):
        theta, _ = self.split(y)
        chol = self.cone_factor(theta)
        slack = self.slack_values(y)
        n = self.basis.n
        inv_mat = scipy.linalg.cho_solve((chol, True), np.eye(n, dtype=complex), check_finite=False)
        inv_mat = 0.5 * (inv_mat + inv_mat.conj().T)
        ld_grad, ld_hess = self.basis.logdet_grad_hess(inv_mat)

        inv_s = 1.0 / slack
        w = inv_s * inv_s
        grad_theta = ld_grad + self.a_rows.T @ inv_s
        hess_tt = ld_hess + (self.a_rows * w[:, None]).T @ self.a_rows
        if not self.aux:
            return self.obj_vec + grad_theta / t, hess_tt / t

        k = self.basis.dim
        grad = np.empty(k + 1)
        grad[:k] = grad_theta
        grad[k] = -float(self.u_coeff @ inv_s)
        hess = np.empty((k + 1, k + 1))
        hess[:k, :k] = hess_tt
        cross = -(self.a_rows.T @ (w * self.u_coeff))
        hess[:k, k] = cross
        hess[k, :k] = cross
        hess[k, k] = float(self.u_coeff @ (w * self.u_coeff))
        return self.obj_vec + grad / t, hess / t


def solve_sdp(prob: SdpProblem, params: BarrierParams | None = None) -> SdpSolution:
    """Two-phase barrier solve; see the module docstring for the formulation."""
    params = params or BarrierParams()
    n, m = prob.dim, prob.num_constraints
    basis = _basis(n)

    phase1 = _RelaxationOracles(prob, aux=True)
    theta0 = basis.coords(np.eye(n))
    viols = phase1.a_rows[:m] @ theta0 - phase1.bounds[:m]
    start = np.concatenate([theta0, [float(np.max(viols)) + 1.0]])
    outcome1 = barrier_stages(
        objective_fn=phase1.objective,
        stage_value_fn=phase1.stage_value,
        stage_grad_hess_fn=phase1.stage_grad_hess,
        y0=start,
        num_barrier_terms=phase1.num_barrier_terms,
        params=params,
        stop_fn=lambda y: y[-1] <= PHASE1_EXIT,
    )
    u_final = float(outcome1.y[-1])
    theta1 = np.asarray(outcome1.y[:-1], dtype=float)
    iters = outcome1.newton_iterations

    def _abort(status: str, message: str) -> SdpSolution:
        return SdpSolution(
            matrix=basis.matrix(theta1),
            lower_bound=np.nan,
            cons_duals=np.full(m, np.nan),
            status=status,
            newton_iterations=iters,
            phase1_bound=u_final,
            message=message,
        )

    if outcome1.status == "numerical_failure":
        return _abort("numerical_failure", f"phase I failed: {outcome1.message}")
    if u_final > PHASE1_INFEASIBLE:
        trace1 = float(np.real(np.trace(basis.matrix(theta1))))
        if trace1 > 0.99 * PHASE1_TRACE_CAP:
            return _abort(
                "numerical_failure",
                f"phase I trace safeguard active at u = {u_final:.3e}; cannot certify",
            )
        if outcome1.status == "optimal":
            return _abort("infeasible", f"phase I violation bound {u_final:.3e}")
        return _abort("numerical_failure", f"phase I unconverged at u = {u_final:.3e}")
    # strictness guard for the phase II start; u <= 0 makes this hold
    if np.any(phase1.bounds[:m] - phase1.a_rows[:m] @ theta1 <= 0.0):
        return _abort("numerical_failure", "phase I endpoint not strictly feasible")

    # phase I only tracks u, so -log det inflates its endpoint toward the
    # trace safeguard; pull it back along the ray toward the origin, which
    # keeps the cone, and above alpha_min keeps every linear row strictly
    # slack (only rows with negative bounds resist shrinking)
    trace1 = float(np.real(np.trace(basis.matrix(theta1))))
    row_vals = phase1.a_rows[:m] @ theta1
    lower_rows = prob.bounds < 0.0
    alpha_min = (
        float(np.max(prob.bounds[lower_rows] / row_vals[lower_rows])) if np.any(lower_rows) else 0.0
    )
    alpha = min(1.0, max(n / max(trace1, float(n)), min(2.0 * alpha_min, 0.5 * (1.0 + alpha_min))))
    if alpha < 1.0:
        shrunk = alpha * theta1
        if np.all(prob.bounds - phase1.a_rows[:m] @ shrunk > 0.0):
            theta1 = shrunk

    phase2 = _RelaxationOracles(prob, aux=False)
    outcome2 = barrier_stages(
        objective_fn=phase2.objective,
        stage_value_fn=phase2.stage_value,
        stage_grad_hess_fn=phase2.stage_grad_hess,
        y0=theta1,
        num_barrier_terms=phase2.num_barrier_terms,
        params=params,
    )
    theta = np.asarray(outcome2.y, dtype=float)
    iters += outcome2.newton_iterations

    # slacks cm - am.theta suffer cancellation at t ~ 1e10; evaluate them in
    # extended precision for the multipliers, same trick as the subproblem
    slack_l = phase2.bounds.astype(np.longdouble) - phase2.a_rows.astype(np.longdouble) @ theta.astype(
        np.longdouble
    )
    duals = np.asarray(1.0 / (outcome2.t_final * slack_l), dtype=float)

    return SdpSolution(
        matrix=basis.matrix(theta),
        lower_bound=phase2.objective(theta),
        cons_duals=duals,
        status=outcome2.status,
        newton_iterations=iters,
        gap_estimate=outcome2.gap_estimate,
        phase1_bound=u_final,
        stage_objectives=[rec.objective for rec in outcome2.stage_records],
        message=outcome2.message,
    )


def rank_one_extract(mat: np.ndarray, tol_ratio: float = 1e-6) -> Optional[np.ndarray]:
    """sqrt(lambda_1) * v_1 when the second eigenvalue ratio is below tol.

    Returns None when the matrix is not numerically rank one (or is zero).
    The global phase of the returned vector is arbitrary.
    """
    mat = np.asarray(mat, dtype=complex)
    mat = 0.5 * (mat + mat.conj().T)
    vals, vecs = np.linalg.eigh(mat)
    top = float(vals[-1])
    if top <= 0.0:
        return None
    if mat.shape[0] > 1:
        second = max(float(vals[-2]), 0.0)
        if second / top > tol_ratio:
            return None
    return np.sqrt(top) * vecs[:, -1]
