"""Deterministic convex quadratic programming with inequality constraints.

Primal active-set method.  Each working-set change refactorizes the sparse
KKT system (problem sizes here are a few thousand unknowns at most, so
factor updates are not worth their complexity), and every tie is broken by
lowest constraint index, which makes the solver bit-reproducible: identical
inputs give identical outputs, and a warm start can only change the
iteration count, never the minimizer.

The Hessian must be positive definite on the null space of every working
set encountered.  This admits the positive-semidefinite problems produced
by :func:`split_l1`, whose flat directions are always pinned by an active
bound pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class QpError(Exception):
    """Base class for solver failures."""


class QpInfeasibleError(QpError):
    pass


class QpIndefiniteError(QpError):
    pass


class QpIterationLimitError(QpError):
    pass


@dataclass(frozen=True)
class WarmStart:
    """Suggested starting point and active inequality rows from a related solve."""

    x: np.ndarray
    active: tuple[int, ...] = ()


@dataclass(eq=False)
class QpProblem:
    """min 1/2 x'Hx + g'x  s.t.  A x >= b,  C x = d.

    Inequality rows are normalized to unit Euclidean norm on construction so
    feasibility tolerances are lengths, not arbitrary scales.
    """

    hessian: sp.spmatrix
    linear: np.ndarray
    ineq_matrix: Optional[sp.spmatrix] = None
    ineq_rhs: Optional[np.ndarray] = None
    eq_matrix: Optional[sp.spmatrix] = None
    eq_rhs: Optional[np.ndarray] = None
    warm_start: Optional[WarmStart] = None
    #: optional working-set -> factorization memo for callers that re-solve
    #: the same matrices with fresh right-hand sides (time stepping)
    factor_cache: Optional[dict] = None

    def __post_init__(self):
        h = sp.csr_matrix(self.hessian)
        self.hessian = 0.5 * (h + h.T).tocsr()
        self.linear = np.asarray(self.linear, dtype=float).ravel()
        n = self.linear.size
        if self.hessian.shape != (n, n):
            raise ValueError("hessian and linear term sizes disagree")
        if self.ineq_matrix is None:
            self.ineq_matrix = sp.csr_matrix((0, n))
            self.ineq_rhs = np.zeros(0)
        else:
            a = sp.csr_matrix(self.ineq_matrix, copy=True).astype(float)
            b = np.asarray(self.ineq_rhs, dtype=float).ravel().copy()
            norms = np.sqrt(np.asarray(a.multiply(a).sum(axis=1)).ravel())
            if np.any(norms <= 0.0):
                raise ValueError("inequality rows must be nonzero")
            scale = sp.diags(1.0 / norms)
            self.ineq_matrix = (scale @ a).tocsr()
            self.ineq_rhs = b / norms
        if self.eq_matrix is None:
            self.eq_matrix = sp.csr_matrix((0, n))
            self.eq_rhs = np.zeros(0)
        else:
            self.eq_matrix = sp.csr_matrix(self.eq_matrix).astype(float)
            self.eq_rhs = np.asarray(self.eq_rhs, dtype=float).ravel()

    @property
    def n(self) -> int:
        return self.linear.size

    @property
    def n_ineq(self) -> int:
        return self.ineq_matrix.shape[0]

    def objective(self, x: np.ndarray) -> float:
        return 0.5 * float(x @ (self.hessian @ x)) + float(self.linear @ x)


@dataclass(frozen=True, eq=False)
class QpSolution:
    x: np.ndarray
    ineq_multipliers: np.ndarray
    eq_multipliers: np.ndarray
    active_set: tuple[int, ...]
    kkt_residual: float
    iterations: int


#: Multipliers more negative than this (relative to the largest one) mark a
#: working constraint as wrongly active and eligible for removal.
_REMOVAL_THRESHOLD = 1e-12


def _kkt_solve(problem: QpProblem, working: list[int]):
    """Solve the equality-constrained subproblem for a working set.

    Returns (x, nu, lam_w) or None when the KKT matrix is singular, i.e. the
    working rows are dependent or the Hessian has a flat feasible direction.
    """
    h, g = problem.hessian, problem.linear
    c, d = problem.eq_matrix, problem.eq_rhs
    n, p = problem.n, c.shape[0]
    cache = problem.factor_cache
    key = tuple(working)
    hit = None if cache is None else cache.get(key)
    if hit is None:
        w = problem.ineq_matrix[working] if working else sp.csr_matrix((0, n))
        if p + w.shape[0] == 0:
            kkt = h.tocsc()
        else:
            cw = sp.vstack([c, w]).tocsr()
            kkt = sp.bmat([[h, cw.T], [cw, None]], format="csc")
        try:
            lu = spla.splu(kkt)
        except RuntimeError:
            return None
        if cache is not None:
            cache[key] = (lu, kkt)
    else:
        lu, kkt = hit
    rhs = (-g if kkt.shape[0] == n
           else np.concatenate([-g, d, problem.ineq_rhs[working]]))
    try:
        sol = lu.solve(rhs)
        sol = sol + lu.solve(rhs - kkt @ sol)  # one refinement pass
    except RuntimeError:
        return None
    if not np.all(np.isfinite(sol)):
        return None
    resid = np.abs(kkt @ sol - rhs).max() if sol.size else 0.0
    scale = 1.0 + np.abs(rhs).max() if rhs.size else 1.0
    if resid > 1e-6 * scale:
        return None
    x = sol[:n]
    # the symmetric KKT block solves H x + W' y = -g, so y = -multiplier
    nu = -sol[n:n + p]
    lam_w = -sol[n + p:]
    return x, nu, lam_w


def _feasible(problem: QpProblem, x: np.ndarray, tol: float) -> bool:
    if x is None or x.size != problem.n or not np.all(np.isfinite(x)):
        return False
    if problem.eq_matrix.shape[0]:
        if np.abs(problem.eq_matrix @ x - problem.eq_rhs).max() > tol:
            return False
    if problem.n_ineq:
        if (problem.ineq_matrix @ x - problem.ineq_rhs).min() < -tol:
            return False
    return True


def _independent_working_set(problem: QpProblem, candidates: list[int]):
    """Largest factorizable working set built from candidate rows in order."""
    sol = _kkt_solve(problem, candidates)
    if sol is not None:
        return candidates, sol
    working: list[int] = []
    sol = _kkt_solve(problem, working)
    for i in candidates:
        trial = sorted(working + [i])
        s = _kkt_solve(problem, trial)
        if s is not None:
            working, sol = trial, s
    if sol is None:
        raise QpIndefiniteError(
            "KKT system is singular: dependent equality rows or an "
            "indefinite Hessian on the feasible subspace")
    return working, sol


def _check_equalities(problem: QpProblem) -> None:
    c, d = problem.eq_matrix, problem.eq_rhs
    if c.shape[0] == 0:
        return
    dense = c.toarray()
    x, res, rank, _ = np.linalg.lstsq(dense, d, rcond=None)
    gap = np.abs(dense @ x - d).max() if d.size else 0.0
    if gap > 1e-8 * (1.0 + np.abs(d).max()):
        raise QpInfeasibleError("equality system is infeasible")


def _phase_one(problem: QpProblem, tol: float) -> np.ndarray:
    """Minimal-violation start via an LP; only used when no trivial start works."""
    from scipy.optimize import linprog

    n, m = problem.n, problem.n_ineq
    cost = np.concatenate([np.zeros(n), np.ones(m)])
    a_ub = sp.hstack([-problem.ineq_matrix, -sp.identity(m)]) if m else None
    b_ub = -problem.ineq_rhs if m else None
    a_eq = (sp.hstack([problem.eq_matrix, sp.csr_matrix((problem.eq_matrix.shape[0], m))])
            if problem.eq_matrix.shape[0] else None)
    b_eq = problem.eq_rhs if problem.eq_matrix.shape[0] else None
    bounds = [(None, None)] * n + [(0, None)] * m
    res = linprog(cost, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                  bounds=bounds, method="highs")
    if not res.success or res.fun > max(10 * tol, 1e-7 * (1.0 + np.abs(problem.ineq_rhs).max(initial=0.0))):
        raise QpInfeasibleError("no feasible point exists")
    return res.x[:n]


def _starting_point(problem: QpProblem):
    """Feasible start plus an initial factorizable working set."""
    n = problem.n
    ftol = 1e-9
    candidates: list[tuple[np.ndarray, tuple[int, ...]]] = []
    if problem.warm_start is not None:
        candidates.append((np.asarray(problem.warm_start.x, dtype=float).ravel(),
                           tuple(problem.warm_start.active)))
    candidates.append((np.zeros(n), ()))
    for x0, hint in candidates:
        scale = 1.0 + np.abs(x0).max(initial=0.0)
        if _feasible(problem, x0, ftol * scale):
            return x0, list(hint)
    _check_equalities(problem)
    x0 = _phase_one(problem, ftol)
    # clip marginal violations left by the LP vertex
    return x0, ()


def _active_rows_at(problem: QpProblem, x: np.ndarray) -> list[int]:
    """Rows active at x, in ascending index order."""
    if problem.n_ineq == 0:
        return []
    slack = problem.ineq_matrix @ x - problem.ineq_rhs
    tol = 1e-9 * (1.0 + np.abs(x).max(initial=0.0))
    return [i for i in range(problem.n_ineq) if slack[i] <= tol]


def solve_qp(problem: QpProblem, tol_kkt: float = 1e-8,
             max_iterations: Optional[int] = None) -> QpSolution:
    """Solve the QP to the requested KKT tolerance.

    Raises QpInfeasibleError, QpIndefiniteError, or QpIterationLimitError on
    the corresponding failure; a successful return always satisfies the
    (scale-normalized) KKT conditions to ``tol_kkt``.
    """
    n = problem.n
    if n == 0:
        return QpSolution(np.zeros(0), np.zeros(problem.n_ineq), np.zeros(0),
                          (), 0.0, 0)
    if max_iterations is None:
        max_iterations = max(50 * n, 50)

    x, _hint = _starting_point(problem)
    working, sol = _independent_working_set(problem, _active_rows_at(problem, x))
    a, b = problem.ineq_matrix, problem.ineq_rhs

    iterations = 0
    while True:
        if sol is None:
            sol = _kkt_solve(problem, working)
            if sol is None:
                raise QpIndefiniteError(
                    "KKT system became singular during the active-set sweep")
        x_star, nu, lam_w = sol
        iterations += 1
        if iterations > max_iterations:
            raise QpIterationLimitError(
                f"active-set iteration cap {max_iterations} exceeded")
        p = x_star - x
        pnorm = np.abs(p).max(initial=0.0)
        xscale = 1.0 + np.abs(x_star).max(initial=0.0)

        alpha = 1.0
        blocking = -1
        if pnorm > 1e-14 * xscale and problem.n_ineq:
            mask = np.ones(problem.n_ineq, dtype=bool)
            mask[working] = False
            ap = a @ p
            slack = np.maximum(a @ x - b, 0.0)
            decreasing = mask & (ap < -1e-13 * max(pnorm, 1e-300))
            if np.any(decreasing):
                idx = np.nonzero(decreasing)[0]
                steps = slack[idx] / -ap[idx]
                amin = steps.min()
                if amin < 1.0:
                    alpha = amin
                    ties = idx[steps <= amin + 1e-12 * (1.0 + amin)]
                    blocking = int(ties.min())  # lowest index wins

        if pnorm <= 1e-14 * xscale or (alpha >= 1.0 and blocking < 0):
            # reached the subproblem minimizer; drop a wrongly active row or stop
            x = x_star
            removable = -1
            if len(working):
                # working is kept ascending, so on exact multiplier ties the
                # lowest row index is removed
                thresh = -_REMOVAL_THRESHOLD * (1.0 + np.abs(lam_w).max(initial=0.0))
                worst = np.inf
                for pos, row in enumerate(working):
                    if lam_w[pos] < thresh and lam_w[pos] < worst:
                        worst = lam_w[pos]
                        removable = row
            if removable < 0:
                lam = np.zeros(problem.n_ineq)
                if len(working):
                    lam[working] = lam_w
                residual = _kkt_residual(problem, x, lam, nu)
                if residual > tol_kkt:
                    raise QpError(
                        f"KKT residual {residual:.3e} exceeds tolerance {tol_kkt:.3e}")
                return QpSolution(x, lam, nu, tuple(sorted(working)),
                                  residual, iterations)
            working = [i for i in working if i != removable]
            sol = None
        else:
            x = x + alpha * p
            working = sorted(working + [blocking])
            sol = None


def _kkt_residual(problem: QpProblem, x, lam, nu) -> float:
    """Largest of the scale-normalized KKT defects."""
    h, g = problem.hessian, problem.linear
    a, b = problem.ineq_matrix, problem.ineq_rhs
    c, d = problem.eq_matrix, problem.eq_rhs
    hx = h @ x
    grad = hx + g
    if a.shape[0]:
        grad = grad - a.T @ lam
    if c.shape[0]:
        grad = grad - c.T @ nu
    stat_scale = 1.0 + max(np.abs(hx).max(initial=0.0), np.abs(g).max(initial=0.0))
    stationarity = np.abs(grad).max(initial=0.0) / stat_scale
    xscale = 1.0 + np.abs(x).max(initial=0.0)
    primal = 0.0
    compl = 0.0
    dual = 0.0
    if a.shape[0]:
        slack = a @ x - b
        primal = max(primal, -slack.min(initial=0.0) / xscale)
        lscale = 1.0 + np.abs(lam).max(initial=0.0)
        dual = max(0.0, -lam.min(initial=0.0)) / lscale
        compl = np.abs(lam * slack).max(initial=0.0) / (lscale * xscale)
    if c.shape[0]:
        primal = max(primal, np.abs(c @ x - d).max(initial=0.0) / xscale)
    return max(stationarity, primal, dual, compl)


# ---------------------------------------------------------------------------
# L1 splitting


@dataclass(eq=False)
class L1SplitQp:
    """Augmented smooth problem equivalent to adding sum_i w_i |x_i - x0_i|.

    Each weighted variable gets a nonnegative slack pair (p+, p-) tied to it
    by the equality x_i - p+_i + p-_i = x0_i, and the weights enter linearly
    as w_i (p+_i + p-_i).  At the minimizer at most one slack of a pair is
    nonzero, so the recovered x solves the original nonsmooth problem.
    """

    problem: QpProblem
    split_indices: np.ndarray
    base_point: np.ndarray
    n_original: int

    def recover(self, x_aug: np.ndarray) -> np.ndarray:
        return np.asarray(x_aug, dtype=float)[: self.n_original]

    def slip_parts(self, x_aug: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        s = self.split_indices.size
        n = self.n_original
        return x_aug[n:n + s], x_aug[n + s:n + 2 * s]


def split_l1(problem: QpProblem, l1_weights: np.ndarray,
             base_point: np.ndarray) -> L1SplitQp:
    """Reformulate a QP plus weighted L1 distance from ``base_point``.

    Weights must be non-negative; zero-weight variables are left untouched so
    that ``l1_weights == 0`` reproduces the original problem exactly.
    """
    w = np.asarray(l1_weights, dtype=float).ravel()
    x0 = np.asarray(base_point, dtype=float).ravel()
    n = problem.n
    if w.size != n or x0.size != n:
        raise ValueError("weights and base point must match the problem size")
    if np.any(w < 0.0):
        raise ValueError("L1 weights must be non-negative")
    split = np.nonzero(w > 0.0)[0]
    s = split.size
    if s == 0:
        return L1SplitQp(problem, split, x0, n)

    h_aug = sp.bmat(
        [[problem.hessian, None], [None, sp.csr_matrix((2 * s, 2 * s))]],
        format="csr",
    )
    g_aug = np.concatenate([problem.linear, w[split], w[split]])

    pick = sp.csr_matrix(
        (np.ones(s), (np.arange(s), split)), shape=(s, n)
    )
    link = sp.hstack([pick, -sp.identity(s), sp.identity(s)]).tocsr()
    eq_matrix = sp.vstack([
        sp.hstack([problem.eq_matrix, sp.csr_matrix((problem.eq_matrix.shape[0], 2 * s))]),
        link,
    ]).tocsr()
    eq_rhs = np.concatenate([problem.eq_rhs, x0[split]])

    m = problem.n_ineq
    bound_block = sp.hstack([sp.csr_matrix((2 * s, n)), sp.identity(2 * s)])
    ineq_matrix = sp.vstack([
        sp.hstack([problem.ineq_matrix, sp.csr_matrix((m, 2 * s))]),
        bound_block,
    ]).tocsr()
    ineq_rhs = np.concatenate([problem.ineq_rhs, np.zeros(2 * s)])

    if problem.warm_start is not None:
        xw = np.asarray(problem.warm_start.x, dtype=float).ravel()
        base_active = problem.warm_start.active
    else:
        xw = x0.copy()
        base_active = ()
    diff = xw[split] - x0[split]
    p_pos = np.maximum(diff, 0.0)
    p_neg = np.maximum(-diff, 0.0)
    x_aug = np.concatenate([xw, p_pos, p_neg])
    active = list(base_active)
    active += [m + k for k in range(s) if p_pos[k] == 0.0]
    active += [m + s + k for k in range(s) if p_neg[k] == 0.0]
    warm = WarmStart(x_aug, tuple(active))

    aug = QpProblem(h_aug, g_aug, ineq_matrix, ineq_rhs, eq_matrix, eq_rhs, warm)
    return L1SplitQp(aug, split, x0, n)
