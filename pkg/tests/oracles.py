"""Independent oracles for cross-checking the interior-point engine.

The main check is a projected-gradient solver for the slack subproblem: FISTA
with adaptive restart, feasibility maintained by Dykstra's alternating
projections onto the individual constraint sets.  Nothing here shares code
with the barrier engine; projections onto a single quadratic set are computed
from the KKT system in the eigenbasis of the set's quadratic term, with the
multiplier found by scalar root-finding.

Deliberately favors accuracy over speed; only ever run on tiny instances.
"""

import numpy as np
from scipy.optimize import brentq

from fppsca.subproblem import ConvexQcqpSubproblem


def make_subproblem(quad_obj, penalty, quads, lins, offsets):
    quads = np.asarray(quads, dtype=float)
    return ConvexQcqpSubproblem(
        quad_obj=np.asarray(quad_obj, dtype=float),
        slack_penalty=penalty,
        cons_quads=quads,
        cons_lins=np.asarray(lins, dtype=float),
        cons_offsets=np.asarray(offsets, dtype=float),
    )


def random_subproblem(rng, dim=None, m=None, linear_fraction=0.5):
    """Small random instance: PSD objective, mix of quadratic and affine constraints."""
    dim = int(rng.integers(2, 7)) if dim is None else dim
    m = int(rng.integers(1, 5)) if m is None else m
    basis = rng.standard_normal((dim, dim))
    quad_obj = basis @ basis.T / dim + 0.3 * np.eye(dim)
    quads = np.zeros((m, dim, dim))
    for j in range(m):
        if rng.random() > linear_fraction:
            low_rank = rng.standard_normal((dim, int(rng.integers(1, dim + 1))))
            quads[j] = low_rank @ low_rank.T / dim
    lins = rng.standard_normal((m, dim))
    offsets = rng.standard_normal(m) * 2.0
    return make_subproblem(quad_obj, 10.0, quads, lins, offsets)


class _QuadraticSet:
    """{y : y^T P y + b . y + r <= 0} with P PSD; supports Euclidean projection."""

    def __init__(self, quad, lin, offset):
        dim = lin.shape[0]
        self.quad = quad
        self.lin = lin
        self.offset = offset
        vals, vecs = np.linalg.eigh(quad)
        self.eigvals = np.maximum(vals, 0.0)
        self.eigvecs = vecs

    def value(self, y):
        return float(y @ self.quad @ y + self.lin @ y + self.offset)

    def project(self, y):
        if self.value(y) <= 0.0:
            return y
        # KKT of min ||u - y||^2 s.t. q(u) = 0:  (I + nu P) u = y - nu b / 2.
        yh = self.eigvecs.T @ y
        bh = self.eigvecs.T @ self.lin

        def constraint_at(nu):
            uh = (yh - 0.5 * nu * bh) / (1.0 + nu * self.eigvals)
            return float(self.eigvals @ (uh * uh) + bh @ uh + self.offset)

        hi = 1.0
        for _ in range(400):
            if constraint_at(hi) < 0.0:
                break
            hi *= 2.0
        else:
            raise RuntimeError("projection bracket search failed")
        nu = brentq(constraint_at, 0.0, hi, xtol=1e-15, rtol=8.9e-16, maxiter=300)
        uh = (yh - 0.5 * nu * bh) / (1.0 + nu * self.eigvals)
        return self.eigvecs @ uh


class _Orthant:
    """s >= 0 on the slack block of y = (x, s)."""

    def __init__(self, dim_x):
        self.dim_x = dim_x

    def project(self, y):
        out = y.copy()
        out[self.dim_x:] = np.maximum(out[self.dim_x:], 0.0)
        return out


def _dykstra(sets, y, tol=1e-12, max_cycles=80):
    corrections = [np.zeros_like(y) for _ in sets]
    for _ in range(max_cycles):
        y_before = y
        for idx, cset in enumerate(sets):
            shifted = y + corrections[idx]
            y = cset.project(shifted)
            corrections[idx] = shifted - y
        if np.linalg.norm(y - y_before) <= tol * (1.0 + np.linalg.norm(y)):
            break
    return y


def pg_solve(sub, max_iter=20_000, plateau=150, plateau_tol=5e-10):
    """Projected-gradient (FISTA + restart + Dykstra) solve of a slack subproblem.

    Returns (y, objective) with y = (x, s) feasible up to projection accuracy.
    """
    d, m = sub.dim, sub.num_constraints
    sets = []
    for j in range(m):
        quad = np.zeros((d + m, d + m))
        quad[:d, :d] = sub.cons_quads[j]
        lin = np.zeros(d + m)
        lin[:d] = sub.cons_lins[j]
        lin[d + j] = -1.0
        sets.append(_QuadraticSet(quad, lin, -sub.cons_offsets[j]))
    sets.append(_Orthant(d))

    def objective(y):
        return sub.objective_value(y[:d], y[d:])

    def gradient(y):
        g = np.empty(d + m)
        g[:d] = 2.0 * sub.quad_obj @ y[:d]
        g[d:] = sub.slack_penalty
        return g

    lip = max(2.0 * float(np.linalg.eigvalsh(sub.quad_obj)[-1]), 1.0)
    step = 1.0 / lip

    x0, s0 = sub.strict_start()
    y = np.concatenate([x0, s0])
    momentum_pt = y.copy()
    theta = 1.0
    best_y, best_val = y.copy(), objective(y)
    since_improved = 0

    for _ in range(max_iter):
        y_new = _dykstra(sets, momentum_pt - step * gradient(momentum_pt))
        if objective(y_new) > objective(y):
            # adaptive restart: drop momentum, retake the step from y
            theta = 1.0
            momentum_pt = y.copy()
            y_new = _dykstra(sets, momentum_pt - step * gradient(momentum_pt))
        theta_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * theta * theta))
        momentum_pt = y_new + ((theta - 1.0) / theta_new) * (y_new - y)
        y, theta = y_new, theta_new

        val = objective(y)
        if val < best_val - plateau_tol * (1.0 + abs(best_val)):
            best_val, best_y = val, y.copy()
            since_improved = 0
        else:
            since_improved += 1
            if since_improved >= plateau:
                break

    # the loop runs Dykstra with a modest cycle cap for speed, so the best
    # iterate can be microscopically infeasible; re-project it hard before
    # reporting, otherwise the "feasible upper bound" guarantee is off
    best_y = _dykstra(sets, best_y, tol=1e-15, max_cycles=4000)
    return best_y, objective(best_y)
