"""Brute-force reference for small linear programs."""

import itertools

import numpy as np

from hypack.simplex import LpProblem


def vertex_optimum(prob, tol=1e-9):
    """Brute force: best feasible intersection of k active constraints, or None."""
    k = prob.c.size
    A = np.vstack([prob.a_eq, prob.a_ub])
    b = np.r_[prob.b_eq, prob.b_ub]
    p = prob.a_eq.shape[0]
    best = None
    for rows in itertools.combinations(range(p, A.shape[0]), k - p):
        idx = list(range(p)) + list(rows)
        M = A[idx]
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        x = np.linalg.solve(M, b[idx])
        if prob.residual(x) > tol:
            continue
        val = prob.c @ x
        if best is None or val < best:
            best = val
    return best


def random_lp(rng, k=3, m=7, n_eq=0, box=4.0):
    """Random bounded program: a box around the origin plus random cuts."""
    a = rng.normal(size=(m, k))
    b = rng.normal(size=m) * 1.5
    a_ub = np.vstack([a, np.eye(k), -np.eye(k)])
    b_ub = np.r_[b, np.full(2 * k, box)]
    a_eq = rng.normal(size=(n_eq, k))
    b_eq = rng.normal(size=n_eq) * 0.5
    return LpProblem(rng.normal(size=k), a_eq, b_eq, a_ub, b_ub)
