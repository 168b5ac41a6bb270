"""Entropy-regularized least squares on the simplex:
    min_x ||Ax - b||^2 / 2 + mu sum x_i log x_i,  x in the simplex.

Two regimes: for mu well below eps / (2 log n) the entropy term is treated
as a plain composite under the KL prox (explicit steps); for larger mu its
strong convexity in the 1-norm is exploited through restarts of the
accelerated method under the a-norm prox, whose steps are solved by the
2-D dual ellipsoid subsolver.
"""

import math

import numpy as np

from ..core import FirstOrderOracle, InputError, Report, Status, composite_entropy_model
from ..geometry import ANormGeometry, EntropyGeometry
from ..gradient import adaptive_accelerated, restart_strongly_convex


def _smooth_part(A, b):
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)

    def func(x):
        r = A @ x - b
        return 0.5 * float(r @ r), A.T @ r

    # Lipschitz constant of the gradient in the 1-norm pairing
    L1 = float(np.max(np.sum(A * A, axis=0))) if A.size else 0.0
    return FirstOrderOracle(func, L=L1), L1


def lasso_entropy_value(A, b, mu, x):
    x = np.asarray(x, dtype=float)
    r = np.asarray(A, dtype=float) @ x - np.asarray(b, dtype=float)
    pos = x > 0
    return 0.5 * float(r @ r) + mu * float(np.sum(x[pos] * np.log(x[pos])))


def lasso_entropy_simplex(A, b, mu, eps, regime=None, max_iter=None):
    """Solve the composite problem to accuracy eps; returns (x, report).

    ``regime`` forces "kl" or "anorm"; by default mu is compared against
    eps / (2 log n).  The report's extras record the regime, the stage
    structure in the restarted case, and the certified inner-step
    inexactness.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if mu <= 0:
        raise InputError("mu must be positive")
    if eps <= 0:
        raise InputError("eps must be positive")
    n = A.shape[1] if A.size else b.size
    if n < 2:
        raise InputError("need dimension n >= 2")
    threshold = eps / (2.0 * math.log(n))
    if regime is None:
        regime = "kl" if mu <= threshold else "anorm"
    if regime not in ("kl", "anorm"):
        raise InputError("regime must be 'kl' or 'anorm'")

    oracle, L1 = _smooth_part(A, b)
    if L1 == 0.0:
        # pure entropy minimization: the barycenter is optimal
        x = np.full(n, 1.0 / n)
        return x, Report(Status.CONVERGED, x, lasso_entropy_value(A, b, mu, x),
                         gap=0.0, regime="closed-form")
    model = composite_entropy_model(oracle, mu)
    x0 = np.full(n, 1.0 / n)

    if regime == "kl":
        # 8 L R^2 / (N+1)^2 <= eps with R^2 = V(x*, x0) <= log n
        R2 = math.log(n)
        N = int(math.ceil(math.sqrt(8.0 * L1 * R2 / eps))) + 1
        if max_iter is not None:
            N = min(N, max_iter)
        rep = adaptive_accelerated(model, EntropyGeometry(), x0, N, L0=L1)
        x = rep.x
        return x, Report(rep.status, x, lasso_entropy_value(A, b, mu, x),
                         gap=rep.gap, trace=rep.trace, regime="kl", budget=N,
                         accept_evals=rep.extras["accept_evals"])

    geometry = ANormGeometry(n)
    R1 = 2.0  # l1 diameter of the simplex bounds ||x0 - x*||_1
    init = mu * R1 * R1 / 2.0
    stages = max(1, int(math.ceil(math.log2(max(init / eps, 2.0)))))
    rep = restart_strongly_convex(model, mu, x0, eps, geometry, L1,
                                  stages=stages)
    x = np.maximum(rep.x, 0.0)
    x = x / float(np.sum(x))
    return x, Report(rep.status, x, lasso_entropy_value(A, b, mu, x),
                     gap=rep.gap, trace=rep.trace, regime="anorm",
                     stages=stages, stage_length=rep.extras["stage_length"])
