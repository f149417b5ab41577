"""Core types and Hermitian algebra for complex quadratically constrained programs.

A problem instance is

    minimize    x^H P0 x
    subject to  x^H Pm x <= c_m,   m = 1..M,

with x in C^n, P0 Hermitian positive semidefinite and each Pm Hermitian but
otherwise arbitrary (indefinite constraints are the interesting case).  All
quadratic forms of Hermitian matrices are real, so feasibility and objective
values live in R even though the data is complex.

The convexification used by the solver splits each constraint matrix into its
positive and negative semidefinite parts, Pm = Pm_plus + Pm_minus, and replaces
the concave piece at a center point z by its tangent plane:

    x^H Pm_plus x + 2 Re{z^H Pm_minus x} - z^H Pm_minus z  <=  c_m.

The left side majorizes nothing and restricts everything: it is >= x^H Pm x for
every x, with equality at x = z.  `surrogate_value` evaluates it and the
property is exercised heavily in the tests.

Real embedding: T(A) = [[Re A, -Im A], [Im A, Re A]] is symmetric for Hermitian
A and satisfies xt^T T(A) xt = x^H A x with xt = (Re x; Im x), which lets the
convex subproblems run in real arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "QcqpInstance",
    "SplitConstraint",
    "hermitianize",
    "quad_form",
    "split_hermitian",
    "surrogate_value",
    "check_feasibility",
    "real_embedding",
    "embed_vector",
    "lift_vector",
]

# Relative Frobenius deviation beyond which input is not "Hermitian plus
# rounding" and gets rejected instead of silently symmetrized.
HERMITIAN_TOL = 1e-9

# PSD check for objective matrices: min eigenvalue >= -PSD_TOL * ||A||_F.
PSD_TOL = 1e-9


def _as_complex_matrix(mat) -> np.ndarray:
    arr = np.asarray(mat, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr.view(float))):
        raise ValueError("matrix has non-finite entries")
    return arr


def hermitianize(mat, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate near-Hermitian input and return the exactly Hermitian average.

    The deviation ||A - A^H||_F must not exceed tol * max(1, ||A||_F); within
    that budget the skew part is treated as rounding noise and averaged away.
    The result is a fresh read-only array.
    """
    arr = _as_complex_matrix(mat)
    scale = max(1.0, float(np.linalg.norm(arr)))
    dev = float(np.linalg.norm(arr - arr.conj().T))
    if dev > tol * scale:
        raise ValueError(
            f"matrix is not Hermitian: ||A - A^H||_F = {dev:.3e} "
            f"exceeds {tol:g} * max(1, ||A||_F)"
        )
    sym = 0.5 * (arr + arr.conj().T)
    sym.setflags(write=False)
    return sym


def _as_complex_vector(x, n: int | None = None) -> np.ndarray:
    vec = np.asarray(x, dtype=complex)
    if vec.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got shape {vec.shape}")
    if n is not None and vec.shape[0] != n:
        raise ValueError(f"dimension mismatch: vector has {vec.shape[0]} entries, expected {n}")
    if not np.all(np.isfinite(vec.view(float))):
        raise ValueError("vector has non-finite entries")
    return vec


def quad_form(mat: np.ndarray, x) -> float:
    """Real quadratic form x^H A x of a Hermitian matrix.

    The raw product is complex in floating point; its imaginary part must be
    negligible (<= 1e-10 * |result| + 1e-12) or the matrix was not Hermitian
    and a ValueError is raised.
    """
    arr = _as_complex_matrix(mat)
    vec = _as_complex_vector(x, arr.shape[0])
    raw = complex(np.vdot(vec, arr @ vec))
    if abs(raw.imag) > 1e-10 * abs(raw.real) + 1e-12:
        raise ValueError(
            f"quadratic form has imaginary residue {raw.imag:.3e}; matrix is not Hermitian"
        )
    return float(raw.real)


def split_hermitian(mat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalue split A = psd_part + nsd_part.

    Eigenvalues > 0 go to the PSD part, eigenvalues <= 0 to the NSD part, with
    the shared eigenvectors.  Either part may be the zero matrix.
    """
    arr = hermitianize(mat)
    try:
        vals, vecs = np.linalg.eigh(arr)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - isfinite guards first
        raise ValueError(f"eigendecomposition failed: {exc}") from exc
    pos = np.where(vals > 0.0, vals, 0.0)
    neg = vals - pos
    psd_part = (vecs * pos) @ vecs.conj().T
    nsd_part = (vecs * neg) @ vecs.conj().T
    psd_part = 0.5 * (psd_part + psd_part.conj().T)
    nsd_part = 0.5 * (nsd_part + nsd_part.conj().T)
    psd_part.setflags(write=False)
    nsd_part.setflags(write=False)
    return psd_part, nsd_part


@dataclass(frozen=True)
class SplitConstraint:
    """One constraint x^H P x <= bound with P pre-split into curvature parts."""

    psd_part: np.ndarray  # positive semidefinite piece of the constraint matrix
    nsd_part: np.ndarray  # negative semidefinite piece
    bound: float

    @classmethod
    def from_constraint(cls, mat: np.ndarray, bound: float) -> "SplitConstraint":
        psd_part, nsd_part = split_hermitian(mat)
        return cls(psd_part=psd_part, nsd_part=nsd_part, bound=float(bound))

    @property
    def matrix(self) -> np.ndarray:
        """Recombined constraint matrix (psd_part + nsd_part)."""
        total = self.psd_part + self.nsd_part
        total.setflags(write=False)
        return total


def surrogate_value(split: SplitConstraint, center, x) -> float:
    """Convex upper surrogate of the constraint quadratic, linearized at center.

    Value of  x^H P+ x + 2 Re{z^H P- x} - z^H P- z  for z = center.  Equals the
    true quadratic form at x = z and dominates it everywhere else.
    """
    n = split.psd_part.shape[0]
    z = _as_complex_vector(center, n)
    xv = _as_complex_vector(x, n)
    convex = quad_form(split.psd_part, xv)
    cross = 2.0 * float(np.real(np.vdot(z, split.nsd_part @ xv)))
    anchor = quad_form(split.nsd_part, z)
    return convex + cross - anchor


@dataclass(frozen=True)
class QcqpInstance:
    """Immutable problem data: PSD objective matrix and M quadratic constraints.

    constraints is a tuple of (matrix, bound) pairs.  All matrices are stored
    exactly Hermitian and read-only; the objective matrix must be PSD within
    tolerance.  metadata carries optional provenance (generator name, seed,
    a known-feasible point) and is never interpreted by the solver.
    """

    objective: np.ndarray
    constraints: tuple[tuple[np.ndarray, float], ...]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        obj = hermitianize(self.objective)
        min_eig = float(np.linalg.eigvalsh(obj)[0])
        if min_eig < -PSD_TOL * max(1.0, float(np.linalg.norm(obj))):
            raise ValueError(f"objective matrix is not PSD: min eigenvalue {min_eig:.3e}")
        n = obj.shape[0]
        if len(self.constraints) < 1:
            raise ValueError("instance needs at least one constraint")
        cons = []
        for idx, (mat, bound) in enumerate(self.constraints):
            herm = hermitianize(mat)
            if herm.shape[0] != n:
                raise ValueError(
                    f"constraint {idx} has dimension {herm.shape[0]}, expected {n}"
                )
            b = float(bound)
            if not np.isfinite(b):
                raise ValueError(f"constraint {idx} has non-finite bound")
            cons.append((herm, b))
        object.__setattr__(self, "objective", obj)
        object.__setattr__(self, "constraints", tuple(cons))

    @property
    def dim(self) -> int:
        return self.objective.shape[0]

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def split_constraints(self) -> tuple[SplitConstraint, ...]:
        """Eigen-split every constraint once; reused across solver iterations."""
        return tuple(
            SplitConstraint.from_constraint(mat, bound) for mat, bound in self.constraints
        )

    def constraint_values(self, x) -> np.ndarray:
        xv = _as_complex_vector(x, self.dim)
        return np.array([quad_form(mat, xv) for mat, _ in self.constraints])

    def objective_value(self, x) -> float:
        return quad_form(self.objective, x)


def check_feasibility(
    inst: QcqpInstance, x, tol: float = 1e-6
) -> tuple[np.ndarray, bool]:
    """Per-constraint violations max(0, x^H Pm x - c_m) and an all-within-tol flag."""
    values = inst.constraint_values(x)
    bounds = np.array([bound for _, bound in inst.constraints])
    violations = np.maximum(0.0, values - bounds)
    return violations, bool(np.all(violations <= tol))


def real_embedding(mat: np.ndarray) -> np.ndarray:
    """Symmetric 2n x 2n real image [[Re A, -Im A], [Im A, Re A]] of Hermitian A."""
    arr = hermitianize(mat)
    re, im = arr.real, arr.imag
    top = np.hstack([re, -im])
    bot = np.hstack([im, re])
    out = np.vstack([top, bot])
    out = 0.5 * (out + out.T)
    out.setflags(write=False)
    return out


def embed_vector(x) -> np.ndarray:
    """Stack (Re x; Im x) into R^{2n}."""
    vec = _as_complex_vector(x)
    return np.concatenate([vec.real, vec.imag])


def lift_vector(y) -> np.ndarray:
    """Inverse of embed_vector: first half + 1j * second half."""
    arr = np.asarray(y, dtype=float)
    if arr.ndim != 1 or arr.shape[0] % 2 != 0:
        raise ValueError(f"expected an even-length real vector, got shape {arr.shape}")
    n = arr.shape[0] // 2
    return arr[:n] + 1j * arr[n:]
