"""Solver checks against closed forms and an exhaustive active-set oracle."""

import numpy as np
import pytest
import scipy.sparse as sp

from delam.qp import (
    QpError,
    QpInfeasibleError,
    QpProblem,
    WarmStart,
    solve_qp,
    split_l1,
)


def enumerate_minimizer(h, g, a, b, c=None, d=None):
    """Brute-force oracle: try every candidate active set, keep the valid one.

    Independent of the solver path: each candidate is a dense KKT solve and a
    direct check of primal feasibility and dual sign.
    """
    n = h.shape[0]
    m = a.shape[0] if a is not None else 0
    p = c.shape[0] if c is not None else 0
    best = None
    best_obj = np.inf
    for mask in range(2 ** m):
        act = [i for i in range(m) if mask >> i & 1]
        rows = []
        rhs = []
        if p:
            rows.append(c)
            rhs.append(d)
        if act:
            rows.append(a[act])
            rhs.append(b[act])
        if rows:
            w = np.vstack(rows)
            r = np.concatenate(rhs)
            kkt = np.block([[h, w.T], [w, np.zeros((w.shape[0], w.shape[0]))]])
            full_rhs = np.concatenate([-g, r])
        else:
            kkt = h
            full_rhs = -g
        try:
            sol = np.linalg.solve(kkt, full_rhs)
        except np.linalg.LinAlgError:
            continue
        x = sol[:n]
        if rows:
            # an over- or under-determined candidate may "solve" numerically;
            # reject anything that does not actually sit on its constraints
            w_all = np.vstack(rows)
            r_all = np.concatenate(rhs)
            gap = np.abs(w_all @ x - r_all).max()
            if gap > 1e-8 * (1.0 + np.abs(r_all).max() + np.abs(x).max()):
                continue
        lam_act = -sol[n + p:]  # symmetric KKT block returns negated multipliers
        slack = a @ x - b if m else np.zeros(0)
        scale = 1.0 + np.abs(x).max(initial=0.0)
        if m and slack.min(initial=0.0) < -1e-9 * scale:
            continue
        if act and lam_act.min(initial=0.0) < -1e-9 * (1 + np.abs(lam_act).max()):
            continue
        obj = 0.5 * x @ h @ x + g @ x
        if obj < best_obj - 1e-12:
            best_obj = obj
            best = x
    return best


def random_problem(rng, with_eq=False):
    n = rng.integers(1, 9)
    m = rng.integers(0, 7)
    r = rng.normal(size=(n, n))
    h = r @ r.T + (0.1 + rng.random()) * np.eye(n)
    g = rng.normal(size=n)
    x_witness = rng.normal(size=n)
    a = rng.normal(size=(m, n)) if m else np.zeros((0, n))
    slack = np.where(rng.random(m) < 0.3, 0.0, np.abs(rng.normal(size=m)))
    b = a @ x_witness - slack if m else np.zeros(0)
    c = d = None
    if with_eq and n >= 2:
        c = rng.normal(size=(1, n))
        d = c @ x_witness
    return h, g, a, b, c, d


class TestSolve:
    def test_unconstrained_bound_inactive(self):
        # min 1/2 x^2 - x with x >= 0
        sol = solve_qp(QpProblem(sp.eye(1), np.array([-1.0]),
                                 np.array([[1.0]]), np.array([0.0])))
        assert sol.x == pytest.approx([1.0], abs=1e-12)
        assert sol.active_set == ()
        assert sol.ineq_multipliers == pytest.approx([0.0], abs=1e-12)

    def test_active_bound_multiplier(self):
        # min 1/2 x^2 + x with x >= 0
        sol = solve_qp(QpProblem(sp.eye(1), np.array([1.0]),
                                 np.array([[1.0]]), np.array([0.0])))
        assert sol.x == pytest.approx([0.0], abs=1e-12)
        assert sol.active_set == (0,)
        assert sol.ineq_multipliers == pytest.approx([1.0], abs=1e-12)

    def test_six_by_six_with_bounds_matches_oracle(self):
        rng = np.random.default_rng(7)
        r = rng.normal(size=(6, 6))
        h = r @ r.T + np.eye(6)
        g = rng.normal(size=6)
        a = np.zeros((4, 6))
        a[np.arange(4), np.arange(4)] = 1.0
        b = np.array([0.0, 0.1, -0.1, 0.5])
        expected = enumerate_minimizer(h, g, a, b)
        sol = solve_qp(QpProblem(h, g, a, b))
        assert np.abs(sol.x - expected).max() < 1e-9

    def test_random_battery_against_oracle(self):
        rng = np.random.default_rng(42)
        for trial in range(120):
            h, g, a, b, c, d = random_problem(rng, with_eq=trial % 4 == 0)
            expected = enumerate_minimizer(h, g, a, b, c, d)
            assert expected is not None
            sol = solve_qp(QpProblem(h, g, a if a.size else None,
                                     b if a.size else None, c, d))
            scale = 1.0 + np.abs(expected).max()
            assert np.abs(sol.x - expected).max() < 1e-9 * scale, f"trial {trial}"
            assert sol.kkt_residual <= 1e-8

    def test_objective_not_worse_than_random_feasible_points(self):
        rng = np.random.default_rng(3)
        h, g, a, b, _, _ = random_problem(rng)
        while a.shape[0] == 0:
            h, g, a, b, _, _ = random_problem(rng)
        problem = QpProblem(h, g, a, b)
        sol = solve_qp(problem)
        found = 0
        while found < 100:
            x = rng.normal(size=problem.n) * 3.0
            if (problem.ineq_matrix @ x - problem.ineq_rhs).min() >= 0.0:
                found += 1
                assert problem.objective(sol.x) <= problem.objective(x) + 1e-9
        assert found == 100

    def test_warm_start_changes_iterations_not_solution(self):
        rng = np.random.default_rng(11)
        h, g, a, b, _, _ = random_problem(rng)
        while a.shape[0] < 3:
            h, g, a, b, _, _ = random_problem(rng)
        cold = solve_qp(QpProblem(h, g, a, b))
        warm = solve_qp(QpProblem(h, g, a, b,
                                  warm_start=WarmStart(cold.x, cold.active_set)))
        assert np.abs(warm.x - cold.x).max() < 1e-10 * (1 + np.abs(cold.x).max())
        assert warm.iterations <= cold.iterations

    def test_deterministic_repeat(self):
        rng = np.random.default_rng(5)
        h, g, a, b, _, _ = random_problem(rng)
        s1 = solve_qp(QpProblem(h, g, a if a.size else None, b if a.size else None))
        s2 = solve_qp(QpProblem(h, g, a if a.size else None, b if a.size else None))
        assert np.array_equal(s1.x, s2.x)
        assert s1.active_set == s2.active_set

    def test_equality_constraint(self):
        # min 1/2 |x|^2 s.t. x0 + x1 = 2 -> x = (1, 1)
        sol = solve_qp(QpProblem(np.eye(2), np.zeros(2),
                                 eq_matrix=np.array([[1.0, 1.0]]),
                                 eq_rhs=np.array([2.0])))
        assert sol.x == pytest.approx([1.0, 1.0], abs=1e-12)

    def test_infeasible_inequalities_raise(self):
        # x >= 1 and -x >= 1 cannot both hold
        problem = QpProblem(np.eye(1), np.zeros(1),
                            np.array([[1.0], [-1.0]]), np.array([1.0, 1.0]))
        with pytest.raises(QpInfeasibleError):
            solve_qp(problem)

    def test_inconsistent_equalities_raise(self):
        problem = QpProblem(np.eye(2), np.zeros(2),
                            eq_matrix=np.array([[1.0, 0.0], [1.0, 0.0]]),
                            eq_rhs=np.array([0.0, 1.0]))
        with pytest.raises(QpInfeasibleError):
            solve_qp(problem)

    def test_phase_one_start(self):
        # x = 0 is infeasible; the solver must find its own starting point
        sol = solve_qp(QpProblem(np.eye(2), np.zeros(2),
                                 np.array([[1.0, 0.0], [0.0, 1.0]]),
                                 np.array([2.0, 3.0])))
        assert sol.x == pytest.approx([2.0, 3.0], abs=1e-9)

    def test_row_normalization(self):
        problem = QpProblem(np.eye(1), np.array([1.0]),
                            np.array([[100.0]]), np.array([0.0]))
        assert problem.ineq_matrix.toarray().ravel() == pytest.approx([1.0])

    def test_zero_inequality_row_rejected(self):
        with pytest.raises(ValueError):
            QpProblem(np.eye(2), np.zeros(2),
                      np.array([[0.0, 0.0]]), np.array([0.0]))


class TestSplitL1:
    def test_zero_weights_is_identity(self):
        rng = np.random.default_rng(2)
        h, g, a, b, _, _ = random_problem(rng)
        problem = QpProblem(h, g, a if a.size else None, b if a.size else None)
        split = split_l1(problem, np.zeros(problem.n), np.zeros(problem.n))
        assert split.problem is problem
        direct = solve_qp(problem)
        via = solve_qp(split.problem)
        assert np.array_equal(split.recover(via.x), direct.x)

    @pytest.mark.parametrize(
        "target, weight, expected",
        [
            (2.0, 1.0, 1.0),   # soft threshold shrinks toward zero by w
            (0.5, 1.0, 0.0),   # threshold dominates and pins at zero
            (-2.0, 0.5, -1.5),
        ],
    )
    def test_scalar_soft_threshold(self, target, weight, expected):
        # min 1/2 (x - target)^2 + weight * |x|
        problem = QpProblem(np.eye(1), np.array([-target]))
        split = split_l1(problem, np.array([weight]), np.zeros(1))
        sol = solve_qp(split.problem)
        x = split.recover(sol.x)
        assert x == pytest.approx([expected], abs=1e-10)
        pos, neg = split.slip_parts(sol.x)
        assert min(pos[0], neg[0]) == pytest.approx(0.0, abs=1e-10)

    def test_dead_zone_keeps_base_point(self):
        # base point x0 = 1, pull toward 1.3: inside the |x - x0| dead zone
        problem = QpProblem(np.eye(1), np.array([-1.3]))
        split = split_l1(problem, np.array([1.0]), np.ones(1))
        sol = solve_qp(split.problem)
        assert split.recover(sol.x) == pytest.approx([1.0], abs=1e-10)

    def test_negative_weight_rejected(self):
        problem = QpProblem(np.eye(1), np.zeros(1))
        with pytest.raises(ValueError):
            split_l1(problem, np.array([-1.0]), np.zeros(1))

    def test_split_respects_linear_constraints(self):
        # min 1/2 |x|^2 + |x1 - 0| with x0 + x1 >= 1
        problem = QpProblem(np.eye(2), np.zeros(2),
                            np.array([[1.0, 1.0]]), np.array([1.0]))
        split = split_l1(problem, np.array([0.0, 0.4]), np.zeros(2))
        sol = solve_qp(split.problem)
        x = split.recover(sol.x)
        # stationarity: x0 = lam, x1 + 0.4 sign(x1) ni lam; with both positive
        # x0 - x1 = 0.4 and x0 + x1 = 1
        assert x == pytest.approx([0.7, 0.3], abs=1e-9)
