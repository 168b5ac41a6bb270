"""Conditional-gradient method with pluggable linear-minimization oracles."""

import math

import numpy as np

from .core import InputError, ProtocolError, Trace, finalize


class LinearMinOracle:
    """Exact minimizer of <g, y> over a compact set, returning a vertex.

    ``solve(g)`` returns (point, vertex_id); vertex ids make sparsity and
    affine-invariance bookkeeping possible.  ``contains`` spot-checks
    feasibility of returned points.
    """

    def __init__(self, solve, contains=None, name=""):
        self._solve = solve
        self._contains = contains
        self.name = name

    def solve(self, g):
        return self._solve(np.asarray(g, dtype=float))

    def contains(self, x, tol=1e-9):
        if self._contains is None:
            return True
        return self._contains(x, tol)


def lmo_l1(radius=1.0):
    """l1-ball oracle: +/- radius e_i at the largest |g_i| (lowest index wins)."""
    if radius <= 0:
        raise InputError("radius must be positive")

    def solve(g):
        i = int(np.argmax(np.abs(g)))
        y = np.zeros_like(g)
        y[i] = -radius if g[i] > 0 else radius
        return y, (i, 1 if y[i] > 0 else -1)

    def contains(x, tol=1e-9):
        return float(np.sum(np.abs(x))) <= radius + tol

    return LinearMinOracle(solve, contains, name="l1:%g" % radius)


def lmo_simplex():
    """Probability-simplex oracle: the vertex e_i at the smallest g_i."""

    def solve(g):
        i = int(np.argmin(g))
        y = np.zeros_like(g)
        y[i] = 1.0
        return y, i

    def contains(x, tol=1e-9):
        return abs(float(np.sum(x)) - 1.0) <= tol and float(np.min(x)) >= -tol

    return LinearMinOracle(solve, contains, name="simplex")


def lmo_box(lo, hi):
    """Box oracle: coordinatewise lo/hi chosen by the sign of g."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(lo > hi):
        raise InputError("box needs lo <= hi")

    def solve(g):
        y = np.where(g > 0, lo, hi)
        vid = tuple(int(v) for v in (g > 0))
        return y, vid

    def contains(x, tol=1e-9):
        return bool(np.all(x >= lo - tol) and np.all(x <= hi + tol))

    return LinearMinOracle(solve, contains, name="box")


def lmo_zonotope(generators):
    """Zonotope sum(sigma_i u_i), sigma in [-1,1]^m; min of <g,.> is -sum|<g,u_i>|."""
    U = np.asarray(generators, dtype=float)

    def solve(g):
        signs = np.where(U @ g > 0, -1.0, 1.0)
        y = signs @ U
        return y, tuple(int(s) for s in signs)

    return LinearMinOracle(solve, name="zonotope")


def fw_gap(x, g, lmo):
    """Duality-gap certificate <g, x - y>, y = lmo(g); upper-bounds f(x) - f*."""
    y, _ = lmo.solve(g)
    return float(np.dot(g, np.asarray(x, dtype=float) - y))


def frank_wolfe(oracle, lmo, x0, N=None, eps=None, track_weights=True,
                feas_tol=1e-9):
    """Conditional gradient with gamma_k = 2/(k+2) (so the first step is full).

    Keeps the iterate as an explicit convex combination of visited vertices
    when ``track_weights`` is on (requires a vertex start); stops on the gap
    certificate when ``eps`` is given.
    """
    if N is None and eps is None:
        raise InputError("provide an iteration budget N or a target gap eps")
    x = np.asarray(x0, dtype=float).copy()
    if not lmo.contains(x, feas_tol):
        raise InputError("x0 is not feasible")
    N = N if N is not None else 10 ** 9
    weights = {}
    vertex_order = []
    trace = Trace()
    gap = math.inf
    fval = math.nan
    for k in range(N):
        fval, g = oracle.eval(x)
        y, vid = lmo.solve(g)
        if not lmo.contains(y, feas_tol):
            raise ProtocolError("LMO returned an infeasible point")
        gap = float(np.dot(g, x - y))
        trace.record(k, fval, gap=gap, oracle_calls=oracle.calls)
        if eps is not None and gap <= eps:
            break
        gamma = 2.0 / (k + 2.0)
        x = (1.0 - gamma) * x + gamma * y
        if track_weights:
            for key in weights:
                weights[key] *= 1.0 - gamma
            if vid not in weights:
                vertex_order.append(vid)
            weights[vid] = weights.get(vid, 0.0) + gamma
    f_out = oracle.value(x)
    gap_known = math.nan if oracle.f_star is None else f_out - oracle.f_star
    return finalize(trace, x, f_out, eps=eps, gap=gap,
                    weights=weights if track_weights else None,
                    vertex_order=vertex_order, true_gap=gap_known)
