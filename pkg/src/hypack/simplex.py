"""Dense two-phase primal simplex.

The engine works on standard-form programs ``min c.z  s.t.  A z = b, z >= 0``
with an explicit tableau.  Pricing uses the most negative reduced cost and
falls back to the lexicographic ratio rule as soon as a run of degenerate
pivots is observed, which rules out cycling while keeping the pivot count
low on the well-behaved stretches.  Everything is deterministic: identical
inputs give identical pivot sequences.

:func:`solve_lp` accepts the free-variable inequality form used by the
certificate search (:class:`LpProblem`).  Since those programs have many
more constraints than variables, it hands the *dual* program to the engine
(one tableau row per primal variable) and recovers the primal point from
the optimal basis by solving the active constraint system.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

__all__ = ["LpStatus", "LpProblem", "LpSolution", "solve_lp", "simplex_standard"]


class LpStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    ITERATION_LIMIT = "IterationLimit"


@dataclass
class LpProblem:
    """``min c.x  s.t.  a_eq x = b_eq,  a_ub x <= b_ub`` with ``x`` free."""

    c: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray
    a_ub: np.ndarray
    b_ub: np.ndarray
    row_labels: list = field(default_factory=list)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        k = self.c.size
        self.a_eq = np.asarray(self.a_eq, dtype=float).reshape(-1, k)
        self.b_eq = np.asarray(self.b_eq, dtype=float).ravel()
        self.a_ub = np.asarray(self.a_ub, dtype=float).reshape(-1, k)
        self.b_ub = np.asarray(self.b_ub, dtype=float).ravel()
        if self.a_eq.shape[0] != self.b_eq.size or self.a_ub.shape[0] != self.b_ub.size:
            raise InvalidInputError("constraint matrix and right-hand side sizes differ")
        for arr in (self.c, self.a_eq, self.b_eq, self.a_ub, self.b_ub):
            if not np.all(np.isfinite(arr)):
                raise InvalidInputError("LP data must be finite")

    @property
    def shape(self):
        return (self.a_eq.shape[0] + self.a_ub.shape[0], self.c.size)

    def residual(self, x):
        """Largest constraint violation, each row scaled by its max-norm."""
        x = np.asarray(x, dtype=float)
        worst = 0.0
        for a, b, eq in ((self.a_eq, self.b_eq, True), (self.a_ub, self.b_ub, False)):
            if a.shape[0] == 0:
                continue
            scale = np.maximum(np.abs(a).max(axis=1) * max(1.0, np.abs(x).max()), 1e-300)
            viol = (a @ x - b) / scale
            viol = np.abs(viol) if eq else np.maximum(viol, 0.0)
            worst = max(worst, float(viol.max()))
        return worst


@dataclass
class LpSolution:
    status: LpStatus
    coefficients: np.ndarray | None
    objective_value: float
    iterations: int
    residual: float = float("nan")


# ---------------------------------------------------------------------------
# standard-form engine

_PIV_TOL = 1e-9
_DJ_TOL = 1e-11
_REINVERT = 50
_STALL = 10
_HARRIS = 1e-9


class _Tableau:
    def __init__(self, A, b, basis):
        self.A = A
        self.b = b
        self.basis = np.array(basis, dtype=int)
        self.reinvert()

    def reinvert(self):
        B = self.A[:, self.basis]
        rhs = np.column_stack([self.A, self.b])
        try:
            T = np.linalg.solve(B, rhs)
        except np.linalg.LinAlgError:
            # numerically singular basis: keep the updated tableau
            if not hasattr(self, "T"):
                raise
            return
        T[:, -1] = np.maximum(T[:, -1], 0.0)
        self.T = T

    def pivot(self, row, col):
        T = self.T
        T[row] /= T[row, col]
        colv = T[:, col].copy()
        colv[row] = 0.0
        T -= np.outer(colv, T[row])
        self.basis[row] = col


def _lex_row(T, rows, a, lex):
    """Lexicographic ratio rule: ties broken on rows of B^-1 scaled by the pivot."""
    ratios = T[rows, -1] / a[rows]
    best = ratios.min()
    cand = rows[ratios <= best + 1e-12 * (1.0 + abs(best))]
    for j in lex:
        if cand.size == 1:
            break
        v = T[cand, j] / a[cand]
        cand = cand[v <= v.min() + 1e-12]
    return cand[0]


def _run_phase(tab, cost, allowed, max_iter, it0, lex):
    """Iterate until optimal. Returns (status, iterations).

    ``lex`` lists the tableau columns holding B^-1; after a run of
    degenerate pivots the ratio test switches to the lexicographic rule on
    those columns, which cannot cycle.
    """
    it = it0
    stalled = 0
    since_inv = 0
    obj = None
    while True:
        if since_inv >= _REINVERT:
            tab.reinvert()
            since_inv = 0
        T = tab.T
        cb = cost[tab.basis]
        dj = cost - cb @ T[:, :-1]
        dj[~allowed] = np.inf
        dj[tab.basis] = np.inf
        cand = np.flatnonzero(dj < -_DJ_TOL * max(1.0, np.abs(cost).max()))
        if cand.size == 0:
            if since_inv:
                # confirm on a freshly factorized tableau
                since_inv = _REINVERT
                continue
            return LpStatus.OPTIMAL, it
        if it >= max_iter:
            return LpStatus.ITERATION_LIMIT, it
        col = cand[np.argmin(dj[cand])]
        a = T[:, col]
        rows = np.flatnonzero(a > _PIV_TOL)
        if rows.size == 0:
            if since_inv:
                since_inv = _REINVERT
                continue
            return LpStatus.UNBOUNDED, it
        rhs = T[rows, -1]
        if stalled >= _STALL:
            row = _lex_row(T, rows, a, lex)
        else:
            # Harris two-pass test: among near-minimal ratios take the largest pivot
            bound = ((rhs + _HARRIS) / a[rows]).min()
            ok = rows[rhs / a[rows] <= bound]
            row = ok[np.argmax(a[ok])]
        tab.pivot(row, col)
        it += 1
        since_inv += 1
        new_obj = float(cost[tab.basis] @ tab.T[:, -1])
        if obj is not None and new_obj >= obj - 1e-13 * max(1.0, abs(obj)):
            stalled += 1
        else:
            stalled = 0
        obj = new_obj


def simplex_standard(c, A, b, max_iter=50_000):
    """Solve ``min c.z, A z = b, z >= 0``.

    Returns ``(status, z, basis, iterations)``; ``z`` and ``basis`` are
    ``None`` unless the status is optimal.  Redundant equality rows are
    detected in phase 1 and dropped.
    """
    c = np.asarray(c, dtype=float)
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    m, n = A.shape
    flip = b < 0
    A[flip] *= -1
    b[flip] *= -1

    # phase 1: artificial identity block
    A1 = np.column_stack([A, np.eye(m)])
    cost1 = np.r_[np.zeros(n), np.ones(m)]
    tab = _Tableau(A1, b, np.arange(n, n + m))
    allowed = np.ones(n + m, dtype=bool)
    lex = np.arange(n, n + m)
    status, it = _run_phase(tab, cost1, allowed, max_iter, 0, lex)
    if status is LpStatus.ITERATION_LIMIT:
        return status, None, None, it
    tab.reinvert()
    infeas = float(cost1[tab.basis] @ tab.T[:, -1])
    if infeas > 1e-9 * max(1.0, np.abs(b).max()):
        return LpStatus.INFEASIBLE, None, None, it

    # drive zero-level artificials out of the basis; drop redundant rows
    keep = np.ones(m, dtype=bool)
    for row in range(m):
        if tab.basis[row] < n:
            continue
        entries = np.abs(tab.T[row, :n])
        entries[tab.basis[tab.basis < n]] = 0.0
        j = int(np.argmax(entries))
        if entries[j] > _PIV_TOL:
            tab.pivot(row, j)
        else:
            keep[row] = False
    A = A[keep]
    b = b[keep]
    basis = tab.basis[keep]
    mk = int(keep.sum())
    # artificial columns stay in the tableau (never entering) to carry B^-1
    tab = _Tableau(np.column_stack([A, np.eye(mk)]), b, basis)
    cost2 = np.r_[c, np.zeros(mk)]
    allowed = np.r_[np.ones(n, dtype=bool), np.zeros(mk, dtype=bool)]
    status, it = _run_phase(tab, cost2, allowed, max_iter, it, np.arange(n, n + mk))
    if status is not LpStatus.OPTIMAL:
        return status, None, None, it
    tab.reinvert()
    z = np.zeros(n)
    z[tab.basis] = tab.T[:, -1]
    return status, z, (tab.basis.copy(), keep, A, flip), it


# ---------------------------------------------------------------------------
# free-variable inequality form


def _equilibrate(problem):
    """Row and column max-norm scaling. Returns scaled blocks and column scale."""
    a_eq, a_ub = problem.a_eq, problem.a_ub
    full = np.vstack([a_eq, a_ub])
    colmax = np.abs(full).max(axis=0) if full.size else np.ones(problem.c.size)
    colmax[colmax == 0] = 1.0
    d = 1.0 / colmax
    a_eq = a_eq * d
    a_ub = a_ub * d

    def rows(a, b):
        s = np.abs(a).max(axis=1) if a.size else np.ones(a.shape[0])
        s[s == 0] = 1.0
        return a / s[:, None], b / s

    a_eq, b_eq = rows(a_eq, problem.b_eq)
    a_ub, b_ub = rows(a_ub, problem.b_ub)
    return problem.c * d, a_eq, b_eq, a_ub, b_ub, d


def _primal_feasible(a_eq, b_eq, a_ub, b_ub, max_iter):
    k = a_eq.shape[1] if a_eq.size else a_ub.shape[1]
    p, m = a_eq.shape[0], a_ub.shape[0]
    A = np.block([
        [a_eq, -a_eq, np.zeros((p, m))],
        [a_ub, -a_ub, np.eye(m)],
    ])
    b = np.r_[b_eq, b_ub]
    status, *_ = simplex_standard(np.zeros(2 * k + m), A, b, max_iter)
    return status is LpStatus.OPTIMAL


def solve_lp(problem: LpProblem, max_iter: int = 50_000) -> LpSolution:
    """Minimize ``problem.c . x`` over the free-variable polyhedron."""
    c, a_eq, b_eq, a_ub, b_ub, d = _equilibrate(problem)
    k = c.size
    p, m = a_eq.shape[0], a_ub.shape[0]

    # dual: min -b_eq.y + b_ub.u  s.t.  a_eq^T y - a_ub^T u = c,  u >= 0
    A_d = np.column_stack([a_eq.T, -a_eq.T, -a_ub.T])
    cost_d = np.r_[-b_eq, b_eq, b_ub]
    status, z, info, iters = simplex_standard(cost_d, A_d, c, max_iter)

    if status is LpStatus.ITERATION_LIMIT:
        return LpSolution(status, None, float("nan"), iters)
    if status is LpStatus.UNBOUNDED:
        return LpSolution(LpStatus.INFEASIBLE, None, float("nan"), iters)
    if status is LpStatus.INFEASIBLE:
        feasible = _primal_feasible(a_eq, b_eq, a_ub, b_ub, max_iter)
        st = LpStatus.UNBOUNDED if feasible else LpStatus.INFEASIBLE
        return LpSolution(st, None, float("nan"), iters)

    basis, keep, A_kept, flip = info
    # simplex multipliers w of the dual; primal point is -w
    B = A_kept[:, basis]
    w_kept = np.linalg.solve(B.T, cost_d[basis])
    sign = np.where(flip, -1.0, 1.0)
    w = np.zeros(k)
    w[keep] = w_kept
    x_mult = -(w * sign)

    # polish on the active set picked out by the optimal basis
    eq_rows = sorted({int(j) % p for j in basis if j < 2 * p}) if p else []
    ub_rows = [int(j) - 2 * p for j in basis if j >= 2 * p]
    M = np.vstack([a_eq[eq_rows], a_ub[ub_rows], a_eq])
    rhs = np.r_[b_eq[eq_rows], b_ub[ub_rows], b_eq]
    x_pol, *_ = np.linalg.lstsq(M, rhs, rcond=None)

    scaled = LpProblem(c, a_eq, b_eq, a_ub, b_ub)
    x_best = min((x_pol, x_mult), key=scaled.residual)
    x = x_best * d
    return LpSolution(
        LpStatus.OPTIMAL,
        x,
        float(problem.c @ x),
        iters,
        residual=scaled.residual(x_best),
    )
