"""Convex subproblem solver tests, including the projected-gradient cross-check."""

import numpy as np
import pytest

from fppsca.barrier import BarrierParams
from fppsca.subproblem import ConvexQcqpSubproblem, solve_subproblem

from oracles import pg_solve


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


class TestExamples:
    def test_unconstrained_minimum_already_feasible(self):
        # minimize x^2 + 10 s  s.t.  x^2 <= 1 + s, s >= 0  ->  (0, 0), objective 0
        sub = make_subproblem([[1.0]], 10.0, [[[1.0]]], [[0.0]], [1.0])
        sol = solve_subproblem(sub)
        assert sol.status == "optimal"
        assert abs(sol.x[0]) <= 1e-5
        assert sol.slacks[0] <= 1e-8
        assert sol.objective_value == pytest.approx(0.0, abs=1e-8)

    def test_active_linearized_constraint(self):
        # minimize x^2 + 10 s  s.t.  -2x <= -2 + s, s >= 0  (a tangent-plane
        # constraint): slack costs 10 versus at most 1 of objective relief, so
        # s = 0 and x = 1 with objective 1.  Hand KKT: multiplier of the
        # constraint is 1, of s >= 0 is 9.
        sub = make_subproblem([[1.0]], 10.0, [[[0.0]]], [[-2.0]], [-2.0])
        sol = solve_subproblem(sub)
        assert sol.status == "optimal"
        assert sol.x[0] == pytest.approx(1.0, abs=1e-6)
        assert sol.slacks[0] <= 1e-7
        assert sol.objective_value == pytest.approx(1.0, abs=1e-6)
        assert sol.cons_duals[0] == pytest.approx(1.0, abs=1e-4)
        assert sol.slack_duals[0] == pytest.approx(9.0, abs=1e-4)

    def test_gap_estimate_reported(self):
        sub = make_subproblem([[1.0]], 10.0, [[[1.0]]], [[0.0]], [1.0])
        sol = solve_subproblem(sub)
        assert sol.gap_estimate <= 1e-9


class TestStrictStart:
    def test_start_strictly_feasible_on_100_random_instances(self):
        # slacks absorb any offsets, so the constructive start always works
        rng = np.random.default_rng(404)
        for _ in range(100):
            sub = random_subproblem(rng)
            x0, s0 = sub.strict_start()
            margins = sub.constraint_values(x0) - sub.cons_offsets - s0
            assert np.all(margins <= -1.0 + 1e-12)
            assert np.all(s0 >= 1.0)


class TestSolverProperties:
    def test_random_instances_solve_clean(self):
        rng = np.random.default_rng(505)
        for _ in range(25):
            sub = random_subproblem(rng)
            sol = solve_subproblem(sub)
            assert sol.status == "optimal"
            assert sol.gap_estimate <= 1e-9
            # primal feasibility at the reported point
            resid = sub.constraint_values(sol.x) - sub.cons_offsets - sol.slacks
            assert np.all(resid <= 1e-8)
            assert np.all(sol.slacks >= 0.0)
            assert np.all(sol.cons_duals >= 0.0)
            assert np.all(sol.slack_duals >= 0.0)

    def test_barrier_stage_objectives_monotone(self):
        rng = np.random.default_rng(606)
        for _ in range(10):
            sub = random_subproblem(rng)
            sol = solve_subproblem(sub)
            objs = np.asarray(sol.stage_objectives)
            diffs = np.diff(objs)
            assert np.all(diffs <= 1e-10 * np.maximum(1.0, np.abs(objs[:-1])))

    def test_kkt_stationarity_residual(self):
        rng = np.random.default_rng(707)
        for _ in range(15):
            sub = random_subproblem(rng)
            sol = solve_subproblem(sub)
            x, mu, nu = sol.x, sol.cons_duals, sol.slack_duals
            qx = np.einsum("mij,j->mi", sub.cons_quads, x)
            grad_rows = 2.0 * qx + sub.cons_lins  # (M, d)
            res_x = 2.0 * sub.quad_obj @ x + grad_rows.T @ mu
            res_s = sub.slack_penalty - mu - nu
            residual = np.linalg.norm(np.concatenate([res_x, res_s]))
            scale = (
                1.0
                + np.linalg.norm(2.0 * sub.quad_obj @ x)
                + sub.slack_penalty * np.sqrt(sub.num_constraints)
                + float(mu @ np.linalg.norm(grad_rows, axis=1))
                + np.linalg.norm(nu)
            )
            assert residual <= 1e-6 * scale

    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            make_subproblem(np.eye(2), 10.0, np.zeros((1, 3, 3)), np.zeros((1, 2)), [0.0])
        with pytest.raises(ValueError):
            make_subproblem(np.eye(2), -1.0, np.zeros((1, 2, 2)), np.zeros((1, 2)), [0.0])
        with pytest.raises(ValueError):
            make_subproblem(np.eye(2), 10.0, np.zeros((0, 2, 2)), np.zeros((0, 2)), [])


class TestProjectedGradientOracle:
    def test_matches_oracle_on_20_tiny_instances(self):
        # independent solver: FISTA + Dykstra projections, no shared code
        rng = np.random.default_rng(808)
        rel_errs = []
        for _ in range(20):
            sub = random_subproblem(rng)
            sol = solve_subproblem(sub)
            assert sol.status == "optimal"
            _, pg_val = pg_solve(sub)
            rel = abs(pg_val - sol.objective_value) / (1.0 + abs(sol.objective_value))
            rel_errs.append(rel)
            # PG iterates are feasible, so they can't beat the true optimum
            assert pg_val >= sol.objective_value - 1e-7 * (1.0 + abs(sol.objective_value))
        assert max(rel_errs) <= 1e-5
