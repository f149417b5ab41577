"""Small real 2-d demonstration instance with two solver basins.

The instance minimizes ||x||^2 subject to three quadratic constraints:
two exterior (concave) constraints that force the point outside a pair
of ellipses, and one interior (convex) constraint that keeps it inside
a third ellipse.  The feasible set is a pair of disjoint lens-shaped
regions, so the problem is non-convex and the outcome of the pursuit
solver depends on where it starts.

Two starting points are frozen here as regression fixtures.  Both were
located by a coarse search over initial points that satisfy the two
exterior constraints (large-scale starts do, since the exterior
quadratics are negative definite):

* ``START_SUCCESS`` enters a feasible lens within a few iterations and
  converges to a feasible local optimum with all slacks at zero.
* ``START_STUCK`` converges to an infeasible point where the interior
  constraint keeps a strictly positive slack at every iterate.

The fixtures are package-chosen; any nearby start in the same basin
behaves the same way.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .fpp import FppParams, FppResult, run_fpp_sca
from .qcqp import QcqpInstance, SplitConstraint

__all__ = [
    "DEMO_OBJECTIVE",
    "DEMO_CONSTRAINTS",
    "START_SUCCESS",
    "START_STUCK",
    "demo_instance",
    "run_demo",
    "halfplane_coefficients",
    "ellipse_points",
]


DEMO_OBJECTIVE = np.eye(2)

# constraint m: x^T mat x <= bound
DEMO_CONSTRAINTS = (
    (np.array([[-1.48, 0.68], [0.68, -0.52]]), -1.0),
    (np.array([[-0.93, -0.07], [-0.07, -1.07]]), -1.0),
    (np.array([[1.59, -0.17], [-0.17, 0.41]]), 1.0),
)

# Frozen regression fixtures, see module docstring.
START_SUCCESS = np.array([0.0, 3.0])
START_STUCK = np.array([2.0, 1.0])


def demo_instance() -> QcqpInstance:
    """Build the canonical 2-d demonstration instance."""
    return QcqpInstance(DEMO_OBJECTIVE, DEMO_CONSTRAINTS)


def run_demo(start, params: Optional[FppParams] = None) -> FppResult:
    """Run the pursuit solver on the demo instance from a real 2-d start."""
    z0 = np.asarray(start, dtype=complex).reshape(-1)
    if z0.shape != (2,):
        raise ValueError(f"demo start must be a 2-vector, got shape {np.asarray(start).shape}")
    return run_fpp_sca(demo_instance(), z0, params=params)


def halfplane_coefficients(mat, bound: float, center) -> tuple[np.ndarray, float]:
    """Half-plane form of a linearized concave constraint at a real center.

    For a constraint x^T mat x <= bound whose matrix has no positive
    eigenvalues, the convex surrogate at center z is the half-plane
    normal . x <= offset (at zero slack).  Returns (normal, offset) in
    real 2-d coordinates for plotting.  Raises if the constraint has a
    convex part, since the surrogate is then not a half-plane.
    """
    split = SplitConstraint.from_constraint(np.asarray(mat, dtype=float), float(bound))
    if np.linalg.norm(split.psd_part) > 1e-12:
        raise ValueError("constraint has a convex part; surrogate is not a half-plane")
    z = np.asarray(center, dtype=float).reshape(-1)
    if z.shape != (2,):
        raise ValueError("center must be a real 2-vector")
    nsd = split.nsd_part.real
    normal = 2.0 * nsd @ z
    offset = split.bound + z @ nsd @ z
    return normal, float(offset)


def ellipse_points(mat, level: float, num: int = 200) -> np.ndarray:
    """Points on the level set x^T mat x = level of a 2x2 PD matrix.

    Returns an array of shape (num, 2) tracing the ellipse once.  Used
    to draw the slack-extended interior constraint x^T mat x = c + s.
    """
    a = np.asarray(mat, dtype=float)
    if a.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {a.shape}")
    if level <= 0:
        raise ValueError(f"level must be positive, got {level}")
    try:
        chol = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise ValueError("matrix must be positive definite") from exc
    theta = np.linspace(0.0, 2.0 * np.pi, num, endpoint=True)
    circle = np.stack([np.cos(theta), np.sin(theta)])
    pts = np.sqrt(level) * np.linalg.solve(chol.T, circle)
    return pts.T
