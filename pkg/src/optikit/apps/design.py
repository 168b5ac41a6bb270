"""D-optimal experiment design by a relatively-smooth gradient method.

minimize -log det(H diag(x) H^T) over the probability simplex.  The
objective is 1-smooth relative to the Burg entropy d(x) = -sum log x_j, so
the non-accelerated model method converges linearly in 1/eps; every mirror
step reduces to one scalar root-find.
"""

import math

import numpy as np

from ..core import InputError, NumericalRankError, Report, Status, Trace, finalize
from ..core import FirstOrderOracle, smooth_model
from ..geometry import Geometry, Simplex
from ..gradient import adaptive_model_gd
from ..univariate import newton_scalar


class DesignInstance:
    """Measurement matrix H (m x n, rank m, n >= m + 1)."""

    def __init__(self, H):
        self.H = np.asarray(H, dtype=float)
        if self.H.ndim != 2:
            raise InputError("H must be a matrix")
        m, n = self.H.shape
        if n < m:
            raise InputError("need at least m columns")
        if np.linalg.matrix_rank(self.H) < m:
            raise InputError("H must have full row rank")

    @property
    def m(self):
        return self.H.shape[0]

    @property
    def n(self):
        return self.H.shape[1]

    def information_matrix(self, x):
        return (self.H * np.asarray(x, dtype=float)) @ self.H.T

    def leverage(self, x):
        """g_j = h_j^T (H X H^T)^{-1} h_j for every column j."""
        K = self.information_matrix(x)
        try:
            cho = np.linalg.cholesky(K)
        except np.linalg.LinAlgError as exc:
            raise NumericalRankError(
                "H X H^T lost rank during the run (min x = %g)"
                % float(np.min(x))) from exc
        W = np.linalg.solve(cho, self.H)
        return np.sum(W * W, axis=0)

    def objective(self, x):
        sign, logdet = np.linalg.slogdet(self.information_matrix(x))
        if sign <= 0:
            raise NumericalRankError("H X H^T not positive definite")
        return -logdet

    def oracle(self):
        def func(x):
            g = self.leverage(x)
            return self.objective(x), -g

        return FirstOrderOracle(func, L=1.0)


class BurgSimplexGeometry(Geometry):
    """Burg entropy d(x) = -sum log x_j on the simplex.

    Not strongly convex in any norm; used with the non-accelerated model
    method through the relative-smoothness inequality.  The mirror step
    min <c, x> + d(x) on the simplex has coordinates x_j = 1/(c_j + theta)
    with theta the root of sum_j 1/(c_j + theta) = 1.
    """

    name = "burg"
    strong_convexity = 0.0

    def __init__(self):
        super().__init__(Simplex())

    def d(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise InputError("Burg entropy needs positive coordinates")
        return -float(np.sum(np.log(x)))

    def grad_d(self, x):
        x = np.asarray(x, dtype=float)
        return -1.0 / x

    def norm(self, x):
        return float(np.linalg.norm(x))

    def mirror_step(self, x, g, h):
        if h <= 0:
            raise InputError("step size must be positive")
        c = h * np.asarray(g, dtype=float) - self.grad_d(x)
        return burg_simplex_argmin(c)

    def model_step(self, resp, alpha, u, entropy_coef=0.0):
        if entropy_coef:
            raise InputError("entropy composite not supported here")
        if resp.grad_at_y is None:
            raise InputError("model without a linear part")
        c = alpha * resp.grad_at_y - self.grad_d(u)
        return burg_simplex_argmin(c), 0.0

    def start_point(self, n):
        return np.full(n, 1.0 / n)


def burg_simplex_argmin(c, tol=1e-13):
    """argmin_{x in simplex} <c, x> - sum log x_j = (1/(c_j + theta))_j."""
    c = np.asarray(c, dtype=float)
    n = c.size
    lo_edge = -float(np.min(c))

    def phi(theta):
        return float(np.sum(1.0 / (c + theta))) - 1.0

    def dphi(theta):
        return -float(np.sum(1.0 / (c + theta) ** 2))

    # bracket: phi -> +inf at the left edge, -> -1 at +inf
    hi = lo_edge + n
    while phi(hi) > 0:
        hi = lo_edge + 2.0 * (hi - lo_edge)
    lo = lo_edge + (hi - lo_edge) * 0.5
    while phi(lo) < 0:
        lo = lo_edge + (lo - lo_edge) * 0.5
    theta = newton_scalar(phi, dphi, 0.5 * (lo + hi), tol=tol, bracket=(lo, hi))
    x = 1.0 / (c + theta)
    return x / float(np.sum(x))


def dopt_design(instance, eps, N=None, L0=1.0):
    """Solve the design problem to F(x) - F* <= eps, certified.

    Starts at the barycenter; the iteration count defaults to
    ceil(2 n log(2 (F(x0) - F*) / eps) / eps) with the initial gap replaced
    by its certificate max_j g_j(x0) - m.  Stops early when the duality-gap
    certificate max_j g_j - m drops below eps (valid because
    F(y) >= F(x) - (max_j g_j(x) - m) for all feasible y).
    """
    if eps <= 0:
        raise InputError("eps must be positive")
    n, m = instance.n, instance.m
    x0 = np.full(n, 1.0 / n)
    gap0 = float(np.max(instance.leverage(x0))) - m
    if N is None:
        N = int(math.ceil(2.0 * n * math.log(max(2.0 * gap0 / eps, 2.0)) / eps))
    oracle = instance.oracle()
    model = smooth_model(oracle)
    geom = BurgSimplexGeometry()

    def certified(x, fval, k):
        return float(np.max(instance.leverage(x))) - m <= eps

    rep = adaptive_model_gd(model, geom, x0, N, L0=L0, delta=0.0,
                            stop_fn=certified)
    x = rep.extras["x_last"]  # monotone when delta = 0, so last beats average
    gap_cert = float(np.max(instance.leverage(x))) - m
    status = Status.CONVERGED if gap_cert <= eps else Status.ITER_BUDGET
    report = Report(status, x, instance.objective(x), gap=gap_cert,
                    trace=rep.trace, audit=float(np.max(instance.leverage(x))),
                    budget=N, accept_evals=rep.extras["accept_evals"],
                    L_history=rep.extras["L_history"])
    return x, report
