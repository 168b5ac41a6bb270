"""Entropy-regularized optimal transport through the smooth dual, and
regularized barycenters of several measures on a shared support."""

import math

import numpy as np

from ..core import FirstOrderOracle, InputError, Report, Status, smooth_model
from ..geometry import EuclideanGeometry, Geometry, is_simplex_point
from ..gradient import adaptive_accelerated


class TransportInstance:
    """Cost matrix (squared distances), two simplex marginals, regularizer r."""

    def __init__(self, C, mu, nu, r):
        self.C = np.asarray(C, dtype=float)
        self.mu = np.asarray(mu, dtype=float)
        self.nu = np.asarray(nu, dtype=float)
        if r <= 0:
            raise InputError("regularizer r must be positive")
        self.r = float(r)
        n = self.mu.size
        if self.C.shape != (n, self.nu.size):
            raise InputError("cost matrix must be n x n for the marginals")
        if not np.all(np.isfinite(self.C)):
            raise InputError("cost matrix must be finite")
        for p in (self.mu, self.nu):
            if not is_simplex_point(p, tol=1e-9):
                raise InputError("marginals must lie on the simplex")
        if np.any(self.mu <= 0) or np.any(self.nu <= 0):
            raise InputError("marginals must be strictly positive")

    @property
    def n(self):
        return self.mu.size


class _ZeroSumSpace:
    """The gauge subspace sum(lambda) = 0 for the reduced dual."""

    name = "zerosum"

    def project(self, y):
        y = np.asarray(y, dtype=float)
        return y - np.mean(y)

    def contains(self, x, tol=1e-9):
        return abs(float(np.sum(x))) <= tol


def _dual_pieces(instance, lam):
    """Value of the reduced dual, its gradient, and the recovered plan.

    plan[:, j] = nu_j * softmax_i((lam_i - c_ij) / r); columns match nu
    exactly, rows approach mu at the optimum.
    """
    C, mu, nu, r = instance.C, instance.mu, instance.nu, instance.r
    Z = (lam[:, None] - C) / r
    Z -= Z.max(axis=0, keepdims=True)
    E = np.exp(Z)
    colsum = E.sum(axis=0)
    plan = E / colsum * nu
    # r * nu_j * log((1/nu_j) sum_i exp((lam_i - c_ij)/r)) with the shift undone
    logterm = np.log(colsum) + (lam[:, None] - C).max(axis=0) / r - np.log(nu)
    value = float(lam @ mu) - r * float(nu @ logterm)
    grad = mu - plan.sum(axis=1)
    return value, grad, plan


def plan_value(instance, plan):
    """Primal objective sum c x + r sum x log x of a transport plan."""
    x = np.asarray(plan, dtype=float)
    pos = x > 0
    ent = float(np.sum(x[pos] * np.log(x[pos])))
    return float(np.sum(instance.C * x)) + instance.r * ent


def entropic_ot_dual(instance, tol=1e-10, max_iter=20000):
    """Solve the reduced entropic-OT dual; returns (value, lam, plan).

    The dual is 1/r-smooth and invariant along the all-ones direction, so it
    is maximized on the zero-sum subspace by the accelerated method; the
    plan is recovered from the dual softmax and satisfies the nu-marginals
    exactly.  Stops when the primal-dual agreement reaches ``tol``.
    """
    n = instance.n
    if n == 1:
        plan = np.array([[1.0]])
        return float(instance.C[0, 0]), np.zeros(1), plan

    def func(lam):
        value, grad, _ = _dual_pieces(instance, lam)
        return -value, -grad

    oracle = FirstOrderOracle(func, L=1.0 / instance.r)
    model = smooth_model(oracle)
    geom = EuclideanGeometry()
    geom.set = _ZeroSumSpace()

    state = {}

    def stop(lam, fval, k):
        value, _, plan = _dual_pieces(instance, lam)
        gap = plan_value(instance, plan) - value
        state["gap"] = gap
        return gap <= tol

    rep = adaptive_accelerated(model, geom, np.zeros(n), max_iter,
                               L0=1.0 / instance.r, stop_fn=stop)
    lam = geom.set.project(rep.x)
    value, _, plan = _dual_pieces(instance, lam)
    return value, lam, plan


def _conjugate_grad(C, nu, r, lam):
    """grad of H*_nu at lam: the mu-marginal of the softmax plan."""
    Z = (lam[:, None] - C) / r
    Z -= Z.max(axis=0, keepdims=True)
    E = np.exp(Z)
    plan = E / E.sum(axis=0) * nu
    return plan.sum(axis=1)


def _conjugate_value(C, nu, r, lam):
    M = (lam[:, None] - C) / r
    mx = M.max(axis=0)
    logterm = np.log(np.exp(M - mx).sum(axis=0)) + mx - np.log(nu)
    return r * float(nu @ logterm)


def barycenter(nus, C, r, eps, max_iter=20000):
    """Entropy-regularized barycenter with equal weights.

    Minimizes sum_{i<s} H*_{nu_i}(lam_i) + H*_{nu_s}(-sum lam_i) over the
    stacked duals (smooth, L <= s/r) and recovers the barycenter as the
    shared conjugate gradient.  Returns (barycenter, report) where the
    report's gap is the largest pairwise l1 disagreement between the s
    recovered candidates.
    """
    nus = [np.asarray(v, dtype=float) for v in nus]
    s = len(nus)
    if s == 0:
        raise InputError("need at least one measure")
    C = np.asarray(C, dtype=float)
    if r <= 0:
        raise InputError("regularizer r must be positive")
    n = nus[0].size
    for v in nus:
        if v.size != n or not is_simplex_point(v, tol=1e-9) or np.any(v <= 0):
            raise InputError("measures must be positive simplex points of "
                             "equal size")
    if s == 1:
        mu = _conjugate_grad(C, nus[0], r, np.zeros(n))
        return mu / mu.sum(), Report(Status.CONVERGED, mu, 0.0, gap=0.0)

    def unpack(z):
        return z.reshape(s - 1, n)

    def func(z):
        lams = unpack(z)
        last = -lams.sum(axis=0)
        value = _conjugate_value(C, nus[s - 1], r, last)
        grads = np.empty_like(lams)
        g_last = _conjugate_grad(C, nus[s - 1], r, last)
        for i in range(s - 1):
            value += _conjugate_value(C, nus[i], r, lams[i])
            grads[i] = _conjugate_grad(C, nus[i], r, lams[i]) - g_last
        return value, grads.reshape(-1)

    oracle = FirstOrderOracle(func, L=s / r)
    model = smooth_model(oracle)

    def mus_of(z):
        lams = unpack(z)
        out = [_conjugate_grad(C, nus[i], r, lams[i]) for i in range(s - 1)]
        out.append(_conjugate_grad(C, nus[s - 1], r, -lams.sum(axis=0)))
        return out

    state = {}

    def stop(z, fval, k):
        mus = mus_of(z)
        gap = max(float(np.sum(np.abs(a - b)))
                  for a in mus for b in mus)
        state["gap"] = gap
        return gap <= eps

    rep = adaptive_accelerated(model, EuclideanGeometry(),
                               np.zeros((s - 1) * n), max_iter, L0=s / r,
                               stop_fn=stop)
    mus = mus_of(rep.x)
    mu = np.mean(mus, axis=0)
    mu = np.maximum(mu, 0.0)
    mu = mu / mu.sum()
    gap = state.get("gap", math.nan)
    status = Status.CONVERGED if gap <= eps else Status.ITER_BUDGET
    return mu, Report(status, mu, rep.fval, gap=gap, trace=rep.trace,
                      candidates=mus)
