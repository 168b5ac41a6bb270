"""Frank-Wolfe applications: minimum enclosing ball and l1 signal approximation."""

import math

import numpy as np

from ..core import FirstOrderOracle, InputError, Report, Status, Trace, finalize
from ..frank_wolfe import frank_wolfe, lmo_simplex


def min_enclosing_ball(points, eps=1e-9, max_iter=100000):
    """Smallest ball containing the given points (rows), via the simplex dual.

    maximize <lam, diag(G)> - lam^T G lam over the simplex (G the Gram
    matrix); the center is the lam-weighted combination of the points.  The
    dual iterate after k steps has at most k+1 nonzeros.  The returned
    radius is the exact covering radius of the recovered center, so the
    ball always contains all points.
    """
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    m = X.shape[0]
    if m < 1:
        raise InputError("need at least one point")
    if m == 1:
        return X[0].copy(), 0.0
    G = X @ X.T
    q = np.diag(G).copy()

    def func(lam):
        Gl = G @ lam
        return float(lam @ Gl) - float(q @ lam), 2.0 * Gl - q

    oracle = FirstOrderOracle(func)
    lmo = lmo_simplex()
    x0 = np.zeros(m)
    x0[0] = 1.0
    rep = frank_wolfe(oracle, lmo, x0, N=max_iter, eps=eps)
    lam = rep.x
    center = lam @ X
    radius = float(np.max(np.linalg.norm(X - center, axis=1)))
    return center, radius


def l1_signal_approx(S, Y, r=1.0, N=None, eps=None):
    """Sparse approximation min_{||x||_1 <= 1} ||Y/r - S x||^2 / 2 by Frank-Wolfe.

    Keeps the residual z = S x - Y/r as a running linear combination of z,
    Y and one dictionary column per step, so an iteration costs one
    LMO matvec plus O(n).  Dictionary columns are the columns of S; the
    smoothness constant in the (1, inf) pairing is max |S^T S| <= m_hat^2
    with m_hat the largest column norm.
    """
    S = np.asarray(S, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if S.ndim != 2 or Y.size != S.shape[0]:
        raise InputError("S must be n x N with Y of length n")
    if N is None and eps is None:
        raise InputError("provide N or eps")
    n, N_cols = S.shape
    target = Y / r
    x = np.zeros(N_cols)
    z = -target.copy()          # S x - Y/r at x = 0
    trace = Trace()
    budget = N if N is not None else 10 ** 9
    support = set()
    gap = math.inf
    for k in range(budget):
        fval = 0.5 * float(z @ z)
        g_full = S.T @ z        # the structured LMO hook would replace this
        i = int(np.argmax(np.abs(g_full)))
        sign = -1.0 if g_full[i] > 0 else 1.0
        vertex_col = sign * S[:, i]
        # gap = <g, x - v> over the l1 ball
        gap = float(g_full @ x) - float(g_full[i] * sign)
        trace.record(k, fval, gap=gap, oracle_calls=k + 1)
        if eps is not None and gap <= eps:
            break
        gamma = 2.0 / (k + 2.0)
        x *= 1.0 - gamma
        x[i] += gamma * sign
        support.add(i)
        z = (1.0 - gamma) * z + gamma * (vertex_col - target)
    fval = 0.5 * float(z @ z)
    return finalize(trace, x, fval, eps=eps, gap=gap, support=sorted(support))
