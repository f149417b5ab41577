"""Tests for the successive convex approximation driver and KKT certificates."""

import numpy as np
import pytest

from fppsca.fpp import (
    FEASIBLE_STATUSES,
    FppParams,
    build_subproblem,
    default_start,
    kkt_check,
    multi_start,
    run_fpp_sca,
)
from fppsca.qcqp import (
    QcqpInstance,
    SplitConstraint,
    check_feasibility,
    embed_vector,
    quad_form,
    surrogate_value,
)

# 1-d toy with one concave constraint: min |x|^2 s.t. |x|^2 >= 1.  Starts away
# from the origin converge to the unit circle; the origin itself is the
# symmetry point where the linearization degenerates and slack stays pinned.
UNIT_SHELL = QcqpInstance(np.array([[1.0]]), ((np.array([[-1.0]]), -1.0),))


def random_hermitian(rng, n):
    raw = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (raw + raw.conj().T) / 2


def random_nonconvex_instance(rng, dim=None, m=None):
    """Indefinite constraints, strictly feasible at a hidden witness point."""
    dim = dim or int(rng.integers(2, 5))
    m = m or int(rng.integers(2, 4))
    witness = (rng.normal(size=dim) + 1j * rng.normal(size=dim)) / np.sqrt(2)
    constraints = []
    for _ in range(m):
        mat = random_hermitian(rng, dim)
        constraints.append((mat, quad_form(mat, witness) + 0.4))
    raw = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    objective = raw @ raw.conj().T / dim + 0.1 * np.eye(dim)
    return QcqpInstance(objective, tuple(constraints))


class TestParams:
    def test_defaults(self):
        params = FppParams()
        assert params.slack_penalty == 10.0
        assert params.max_iter == 30
        assert params.conv_tol == 1e-4
        assert params.feas_tol == 1e-6
        assert params.slack_zero_tol == 1e-7

    def test_validation(self):
        with pytest.raises(ValueError):
            FppParams(slack_penalty=0.0)
        with pytest.raises(ValueError):
            FppParams(conv_tol=-1e-4)
        with pytest.raises(ValueError):
            FppParams(max_iter=0)


class TestBuildSubproblem:
    def test_concave_constraint_hand_values(self):
        # all-concave 2x2 at center (1, 0): pure linear surrogate
        mat = np.array([[-1.48, 0.68], [0.68, -0.52]])
        inst = QcqpInstance(np.eye(2), ((mat, -1.0),))
        sub = build_subproblem(inst, inst.split_constraints(), np.array([1.0, 0.0]), 10.0)
        assert np.allclose(sub.cons_quads[0], 0.0, atol=1e-12)
        assert np.allclose(sub.cons_lins[0], [-2.96, 1.36, 0.0, 0.0], atol=1e-12)
        assert abs(sub.cons_offsets[0] - (-2.48)) < 1e-12

    def test_convex_constraint_independent_of_center(self):
        rng = np.random.default_rng(1)
        raw = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        psd = raw @ raw.conj().T / 3
        inst = QcqpInstance(np.eye(3), ((psd, 2.0),))
        splits = inst.split_constraints()
        z1 = default_start(rng, 3)
        z2 = default_start(rng, 3)
        sub1 = build_subproblem(inst, splits, z1, 10.0)
        sub2 = build_subproblem(inst, splits, z2, 10.0)
        assert np.allclose(sub1.cons_lins[0], 0.0, atol=1e-10)
        assert np.array_equal(sub1.cons_quads, sub2.cons_quads)
        assert np.allclose(sub1.cons_offsets, [2.0], atol=1e-12)
        assert np.allclose(sub2.cons_offsets, [2.0], atol=1e-12)

    def test_zero_center_drops_linear_terms(self):
        rng = np.random.default_rng(2)
        inst = random_nonconvex_instance(rng, dim=3, m=2)
        splits = inst.split_constraints()
        sub = build_subproblem(inst, splits, np.zeros(3, dtype=complex), 10.0)
        assert np.allclose(sub.cons_lins, 0.0, atol=1e-12)
        bounds = [bound for _, bound in inst.constraints]
        assert np.allclose(sub.cons_offsets, bounds, atol=1e-12)

    def test_matches_surrogate_helper(self):
        rng = np.random.default_rng(3)
        inst = random_nonconvex_instance(rng, dim=3, m=3)
        splits = inst.split_constraints()
        z = default_start(rng, 3)
        x = default_start(rng, 3)
        sub = build_subproblem(inst, splits, z, 10.0)
        lhs = sub.constraint_values(embed_vector(x))
        for m, split in enumerate(splits):
            anchored = lhs[m] - quad_form(split.nsd_part, z)
            assert abs(anchored - surrogate_value(split, z, x)) < 1e-10

    def test_dimension_mismatch(self):
        rng = np.random.default_rng(4)
        inst = random_nonconvex_instance(rng, dim=3, m=2)
        with pytest.raises(ValueError):
            build_subproblem(inst, inst.split_constraints(), np.zeros(4, complex), 10.0)


class TestGradientTangency:
    def test_surrogate_gradient_matches_truth_at_center(self):
        # finite differences of surrogate vs true constraint at x = z
        rng = np.random.default_rng(5)
        for _ in range(10):
            n = int(rng.integers(2, 5))
            mat = random_hermitian(rng, n)
            split = SplitConstraint.from_constraint(mat, 0.0)
            z = default_start(rng, n)
            z_emb = embed_vector(z)

            def true_fn(vec):
                return quad_form(mat, vec[:n] + 1j * vec[n:])

            def surr_fn(vec):
                return surrogate_value(split, z, vec[:n] + 1j * vec[n:])

            step = 1e-6
            grads = np.zeros((2, 2 * n))
            for a in range(2 * n):
                plus, minus = z_emb.copy(), z_emb.copy()
                plus[a] += step
                minus[a] -= step
                grads[0, a] = (true_fn(plus) - true_fn(minus)) / (2 * step)
                grads[1, a] = (surr_fn(plus) - surr_fn(minus)) / (2 * step)
            rel = np.linalg.norm(grads[0] - grads[1]) / (1.0 + np.linalg.norm(grads[0]))
            assert rel <= 1e-5


class TestRunFpp:
    def test_convex_instance_converges_immediately(self):
        rng = np.random.default_rng(6)
        raw = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        inst = QcqpInstance(np.eye(3), ((raw @ raw.conj().T / 3, 1.0), (np.eye(3), 2.0)))
        res = run_fpp_sca(inst, default_start(rng, 3))
        assert res.status == "feasible_kkt"
        assert res.iterations_to_convergence == 1
        assert res.iterations_to_feasibility == 1
        assert abs(res.objective) < 1e-8
        assert np.linalg.norm(res.x_final) < 1e-4
        assert float(np.max(res.s_final)) <= 1e-7
        assert len(res.trace) == 2
        assert res.trace.slack_regressions(1e-7) == []

    def test_unit_shell_from_basin(self):
        res = run_fpp_sca(UNIT_SHELL, np.array([0.5 + 0j]))
        assert res.status == "feasible_kkt"
        assert abs(res.objective - 1.0) < 1e-6
        assert abs(abs(res.x_final[0]) - 1.0) < 1e-6
        assert res.iterations_to_feasibility == 1
        assert abs(res.certificate.multipliers[0] - 1.0) < 1e-4
        assert res.certificate.complementarity_residual < 1e-5

    def test_unit_shell_stuck_at_symmetry_point(self):
        res = run_fpp_sca(UNIT_SHELL, np.array([0.0 + 0j]))
        assert res.status == "infeasible_converged"
        assert abs(res.s_final[0] - 1.0) < 1e-6
        assert res.iterations_to_feasibility is None
        assert not res.kkt_passed

    def test_feasible_statuses_imply_feasibility(self):
        rng = np.random.default_rng(7)
        seen_feasible = 0
        for _ in range(6):
            inst = random_nonconvex_instance(rng)
            res = run_fpp_sca(inst, default_start(rng, inst.dim))
            if res.status in FEASIBLE_STATUSES:
                seen_feasible += 1
                assert check_feasibility(inst, res.x_final, 1e-6)[1]
                assert float(np.max(res.s_final)) <= 1e-7
        assert seen_feasible >= 1

    def test_monotone_surrogate_objectives(self):
        rng = np.random.default_rng(8)
        for _ in range(8):
            inst = random_nonconvex_instance(rng)
            res = run_fpp_sca(inst, default_start(rng, inst.dim))
            seq = res.trace.surrogate_objectives
            diffs = np.diff(seq)
            assert np.all(diffs <= 1e-7 * np.maximum(1.0, np.abs(seq[:-1])))

    def test_max_iter_status(self):
        # a single allowed iteration can never satisfy the two-point test
        res = run_fpp_sca(UNIT_SHELL, np.array([0.5 + 0j]), FppParams(max_iter=1))
        assert res.status == "max_iter"
        assert res.iterations_to_convergence is None
        assert len(res.trace) == 1
        assert res.iterations_to_feasibility == 1

    def test_deterministic(self):
        rng = np.random.default_rng(9)
        inst = random_nonconvex_instance(rng, dim=3, m=2)
        z0 = default_start(rng, 3)
        first = run_fpp_sca(inst, z0)
        second = run_fpp_sca(inst, z0)
        assert first.status == second.status
        assert np.array_equal(first.x_final, second.x_final)
        assert first.objective == second.objective
        assert first.trace.true_objectives == second.trace.true_objectives

    def test_rejects_bad_start(self):
        with pytest.raises(ValueError):
            run_fpp_sca(UNIT_SHELL, np.array([1.0, 2.0], dtype=complex))
        with pytest.raises(ValueError):
            run_fpp_sca(UNIT_SHELL, np.array([np.nan + 0j]))


class TestKktCheck:
    def test_hand_example_passes(self):
        cert, passed = kkt_check(UNIT_SHELL, np.array([1.0 + 0j]), np.array([1.0]), 1e-5)
        assert passed
        assert cert.stationarity_residual < 1e-12
        assert cert.complementarity_residual < 1e-12
        assert cert.primal_violation == 0.0

    def test_unconstrained_interior_optimum(self):
        inst = QcqpInstance(np.eye(2), ((np.eye(2), 4.0),))
        cert, passed = kkt_check(inst, np.zeros(2, complex), np.zeros(1), 1e-5)
        assert passed
        assert cert.stationarity_residual == 0.0

    def test_nonstationary_point_fails(self):
        inst = QcqpInstance(np.eye(2), ((np.eye(2), 4.0),))
        x = np.array([1.0 + 0j, 0.0])
        cert, passed = kkt_check(inst, x, np.zeros(1), 1e-5)
        assert not passed
        assert cert.stationarity_residual == pytest.approx(0.5)

    def test_rejects_negative_multipliers(self):
        with pytest.raises(ValueError):
            kkt_check(UNIT_SHELL, np.array([1.0 + 0j]), np.array([-0.5]), 1e-5)


class TestMultiStart:
    def test_single_start_matches_plain_run(self):
        z0 = np.array([0.7 + 0j])
        alone = run_fpp_sca(UNIT_SHELL, z0)
        merged = multi_start(UNIT_SHELL, [z0])
        assert merged.status == alone.status
        assert np.array_equal(merged.x_final, alone.x_final)
        assert merged.objective == alone.objective

    def test_prefers_feasible_result(self):
        best = multi_start(UNIT_SHELL, [np.array([0.0 + 0j]), np.array([0.5 + 0j])])
        assert best.status in FEASIBLE_STATUSES
        assert abs(best.objective - 1.0) < 1e-6

    def test_duplicates_match_deduplicated(self):
        starts = [np.array([0.6 + 0j]), np.array([0.6 + 0j]), np.array([0.3 + 0j])]
        with_dup = multi_start(UNIT_SHELL, starts)
        without = multi_start(UNIT_SHELL, [starts[0], starts[2]])
        assert with_dup.status == without.status
        assert with_dup.objective == without.objective
        assert np.array_equal(with_dup.x_final, without.x_final)

    def test_all_stuck_returns_least_slack(self):
        res = multi_start(UNIT_SHELL, [np.array([0.0 + 0j])])
        assert res.status == "infeasible_converged"
        assert abs(res.s_final[0] - 1.0) < 1e-6

    def test_empty_starts_rejected(self):
        with pytest.raises(ValueError):
            multi_start(UNIT_SHELL, [])
