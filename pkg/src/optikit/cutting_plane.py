"""Ellipsoid method for convex minimization and the polynomial LP pipeline."""

import math
from fractions import Fraction

import numpy as np

from .core import (InputError, NumericalRankError, Report, Status, Trace,
                   finalize)
from .univariate import bisect as scalar_bisect


class EllipsoidState:
    """Center and shape matrix of a localization ellipsoid; H must be PD."""

    def __init__(self, c, H):
        self.c = np.asarray(c, dtype=float)
        self.H = np.asarray(H, dtype=float)
        np.linalg.cholesky(self.H)  # raises LinAlgError when not PD

    @property
    def n(self):
        return self.c.size


def volume_ratio(n):
    """Closed-form per-step determinant ratio det H'/det H of the update."""
    return (n * n / (n * n - 1.0)) ** n * (n - 1.0) / (n + 1.0)


def ellipsoid_update(c, H, g):
    """One minimal-volume cut: smallest ellipsoid containing the half-ellipsoid
    {x in E : (x - c)^T g <= 0}.  Scale-invariant in g."""
    c = np.asarray(c, dtype=float)
    H = np.asarray(H, dtype=float)
    g = np.asarray(g, dtype=float)
    n = c.size
    if n < 2:
        raise InputError("ellipsoid update needs n >= 2 (n = 1 is interval halving)")
    if not np.any(g):
        raise InputError("cut direction must be nonzero")
    Hg = H @ g
    gHg = float(g @ Hg)
    if gHg <= 0:
        raise NumericalRankError("shape matrix lost positive definiteness")
    scale = math.sqrt(gHg)
    c_new = c - Hg / ((n + 1.0) * scale)
    H_new = (n * n / (n * n - 1.0)) * (H - (2.0 / (n + 1.0)) * np.outer(Hg, Hg) / gHg)
    H_new = 0.5 * (H_new + H_new.T)  # control symmetry drift
    return c_new, H_new


def ellipsoid_minimize(oracle, x0, R, eps=None, N=None, feasibility_oracle=None,
                       M=None, record_det=False):
    """Minimize a convex M-Lipschitz function over B(x0, R) intersected with Q.

    ``feasibility_oracle(x)`` returns None when x is feasible, otherwise a
    separating direction g with Q inside {y : (y - x)^T g <= 0}.  Works with
    delta-subgradient oracles unchanged.  The certified gap is
    f_best - max_k [f(c_k) - sqrt(g_k^T H_k g_k)] over objective cuts.
    """
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    if N is None:
        if eps is None or M is None:
            raise InputError("provide either N or both eps and M")
        N = int(math.ceil(2.0 * n * n * math.log(M * R / eps)))
    if n == 1:
        return _minimize_1d(oracle, x0, R, eps, N, feasibility_oracle)

    c = x0.copy()
    H = (R * R) * np.eye(n)
    trace = Trace()
    best_x, best_f = None, math.inf
    lower = -math.inf
    det_ratios = []
    shapes = [H.copy()] if record_det else []
    prev_logdet = None
    if record_det:
        prev_logdet = np.linalg.slogdet(H)[1]
    for k in range(N):
        sep = None if feasibility_oracle is None else feasibility_oracle(c)
        if sep is None:
            fval, g = oracle.eval(c)
            if fval < best_f:
                best_f, best_x = fval, c.copy()
            gHg = float(g @ (H @ g))
            if gHg > 0:
                lower = max(lower, fval - math.sqrt(gHg))
            if not np.any(g):  # zero subgradient: the center is optimal
                lower = max(lower, fval)
                trace.record(k, best_f, gap=best_f - lower, feas=0.0,
                             oracle_calls=oracle.calls)
                return finalize(trace, best_x, best_f, eps=eps,
                                gap=best_f - lower, det_ratios=det_ratios,
                                lower=lower, shapes=shapes)
        else:
            g = np.asarray(sep, dtype=float)
        gap = best_f - lower
        trace.record(k, best_f if best_x is not None else math.nan, gap=gap,
                     feas=0.0 if sep is None else 1.0,
                     oracle_calls=oracle.calls)
        if eps is not None and gap <= eps:
            return finalize(trace, best_x, best_f, eps=eps, gap=gap,
                            det_ratios=det_ratios, lower=lower, shapes=shapes)
        c, H = ellipsoid_update(c, H, g)
        if record_det:
            shapes.append(H.copy())
            logdet = np.linalg.slogdet(H)[1]
            det_ratios.append(math.exp(logdet - prev_logdet))
            prev_logdet = logdet
    if best_x is None:
        return Report(Status.INFEASIBLE, None, math.nan, trace=trace,
                      message="no feasible center seen", det_ratios=det_ratios,
                      shapes=shapes)
    gap = best_f - lower
    return finalize(trace, best_x, best_f, eps=eps, gap=gap,
                    det_ratios=det_ratios, lower=lower, shapes=shapes)


def _minimize_1d(oracle, x0, R, eps, N, feasibility_oracle):
    lo, hi = x0[0] - R, x0[0] + R
    if feasibility_oracle is not None:
        raise InputError("1-D feasibility cuts not supported; pass bounds via R")

    def sign(x):
        _, g = oracle.eval(np.array([x]))
        gv = float(g[0])
        return 0 if gv == 0 else (1 if gv > 0 else -1)

    tol = eps if eps is not None else (hi - lo) * 2.0 ** (-max(N, 4))
    for _ in range(N):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        s = sign(mid)
        if s == 0:
            lo = hi = mid
            break
        if s < 0:
            lo = mid
        else:
            hi = mid
    x = np.array([0.5 * (lo + hi)])
    fval, _ = oracle.eval(x)
    trace = Trace().record(0, fval, gap=hi - lo, oracle_calls=oracle.calls)
    return finalize(trace, x, fval, eps=eps, gap=hi - lo)


# -- linear programming -------------------------------------------------------

class LPInstance:
    """max c^T x s.t. A x <= b, with an a-priori radius R for the solution."""

    def __init__(self, A, b, c=None, R=None, known_value=None, known_x=None):
        self.A = np.asarray(A, dtype=float)
        self.b = np.asarray(b, dtype=float)
        if self.A.ndim != 2 or self.A.shape[0] != self.b.size:
            raise InputError("A must be m x n with b of length m")
        if not (np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.b))):
            raise InputError("LP data must be finite")
        self.c = None if c is None else np.asarray(c, dtype=float)
        self.R = R
        self.known_value = known_value
        self.known_x = known_x

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]

    @property
    def h(self):
        entries = [np.abs(self.A).max(), np.abs(self.b).max() if self.b.size else 0.0]
        if self.c is not None:
            entries.append(np.abs(self.c).max())
        return max(max(entries), 1.0)


def hadamard_delta_bound(A):
    """Upper bound on max |det B| over square submatrices B of A (Hadamard)."""
    A = np.asarray(A, dtype=float)
    norms = np.sort(np.linalg.norm(A, axis=1))[::-1]
    k = min(A.shape)
    out = 1.0
    for r in norms[:k]:
        out *= max(1.0, r)
    return out


def lp_feasibility(instance, eps, R=None):
    """Find x with a_i^T x <= b_i + eps for all i, or report Infeasible-by-volume.

    Runs the ellipsoid method with the three cut cases (violated constraint /
    norm ball / never an objective) for at most 2 n (n+1) ln(R sqrt(n) h / eps)
    steps; exceeding that budget certifies the exact system has no solution
    inside B(0, R).
    """
    A, b = instance.A, instance.b
    n = instance.n
    R = R if R is not None else instance.R
    if R is None:
        raise InputError("a localization radius R is required")
    if n == 1:
        return _lp_feasibility_1d(A, b, eps, R)
    h = instance.h
    N = int(math.ceil(2.0 * n * (n + 1) * math.log(max(R * math.sqrt(n) * h / eps,
                                                       math.e))))
    c = np.zeros(n)
    H = (R * R) * np.eye(n)
    trace = Trace()
    for k in range(N):
        resid = A @ c - b
        worst = int(np.argmax(resid))
        if resid[worst] <= eps:
            trace.record(k, float(resid[worst]), feas=max(resid[worst], 0.0))
            return finalize(trace, c, float(resid[worst]), gap=0.0,
                            message="eps-feasible")
        nrm = np.linalg.norm(c)
        g = A[worst] if nrm <= R else c
        trace.record(k, float(resid[worst]), feas=float(resid[worst]))
        try:
            c, H = ellipsoid_update(c, H, g)
        except NumericalRankError:
            # the localization ellipsoid collapsed below double precision:
            # nothing representable is left, report by volume exhaustion
            return Report(Status.INFEASIBLE, None, math.nan, trace=trace,
                          message="numerical volume exhaustion")
    return Report(Status.INFEASIBLE, None, math.nan, trace=trace,
                  message="volume exhausted: system infeasible in B(0,R)")


def _lp_feasibility_1d(A, b, eps, R):
    origin = np.zeros(1)
    r0 = float(np.max(A @ origin - b)) if len(b) else 0.0
    if r0 <= eps:  # ball center first, as in the n >= 2 sweep
        return Report(Status.CONVERGED, origin, r0, gap=0.0, trace=Trace())
    lo, hi = -R, R
    for a, bb in zip(A[:, 0], b):
        if a > 0:
            hi = min(hi, (bb + eps) / a)
        elif a < 0:
            lo = max(lo, (bb + eps) / a)
        elif bb + eps < 0:
            return Report(Status.INFEASIBLE, None, math.nan,
                          message="trivially infeasible row")
    if lo > hi:
        return Report(Status.INFEASIBLE, None, math.nan,
                      message="empty interval")
    x = np.array([0.5 * (lo + hi)])
    resid = float(np.max(A @ x - b)) if len(b) else 0.0
    return Report(Status.CONVERGED, x, resid, gap=0.0, trace=Trace())


def _rational_rows(A, b):
    Af = [[Fraction(float(v)) for v in row] for row in np.asarray(A, dtype=float)]
    bf = [Fraction(float(v)) for v in np.asarray(b, dtype=float)]
    return Af, bf


def _solve_rational(rows, rhs, n, anchor):
    """Exact solution of rows . z = rhs; free variables pinned to anchor.

    Raises NumericalRankError when the system is inconsistent.
    """
    m = len(rows)
    aug = [list(rows[i]) + [rhs[i]] for i in range(m)]
    pivots = []
    r = 0
    for col in range(n):
        pivot = None
        for i in range(r, m):
            if aug[i][col] != 0:
                pivot = i
                break
        if pivot is None:
            continue
        aug[r], aug[pivot] = aug[pivot], aug[r]
        pv = aug[r][col]
        aug[r] = [v / pv for v in aug[r]]
        for i in range(m):
            if i != r and aug[i][col] != 0:
                factor = aug[i][col]
                aug[i] = [a - factor * c for a, c in zip(aug[i], aug[r])]
        pivots.append(col)
        r += 1
        if r == m:
            break
    for i in range(r, m):
        if all(v == 0 for v in aug[i][:n]) and aug[i][n] != 0:
            raise NumericalRankError("active-set system inconsistent")
    z = list(anchor)
    for i, col in enumerate(pivots):
        z[col] = aug[i][n] - sum(aug[i][j] * z[j] for j in range(n)
                                 if j != col and aug[i][j] != 0)
    return z


def lp_exact_recovery(instance, x_tilde, eps0=None):
    """Snap an eps0-feasible point to an exactly feasible one in <= n rounds.

    Exact rational arithmetic throughout (floats are converted exactly), so
    the returned point satisfies A x <= b with no rounding slack whenever the
    data is integral.  Returns (float vector, list of Fractions).
    """
    A, b = instance.A, instance.b
    n = instance.n
    if eps0 is None:
        eps0 = Fraction(1, (n + 2) * int(math.ceil(hadamard_delta_bound(A))))
    else:
        eps0 = Fraction(float(eps0))
    Af, bf = _rational_rows(A, b)
    x = [Fraction(float(v)) for v in np.asarray(x_tilde, dtype=float)]

    for _round in range(instance.m + 1):
        resid = [sum(ai * xi for ai, xi in zip(row, x)) - bi
                 for row, bi in zip(Af, bf)]
        if all(r <= 0 for r in resid):
            return np.array([float(v) for v in x]), x
        active = [i for i, r in enumerate(resid) if abs(r) <= eps0]
        if not active:
            raise NumericalRankError("point is not eps0-feasible: recovery "
                                     "preconditions violated")
        xhat = _solve_rational([Af[i] for i in active],
                               [bf[i] for i in active], n, x)
        resid_hat = [sum(ai * zi for ai, zi in zip(row, xhat)) - bi
                     for row, bi in zip(Af, bf)]
        if all(r <= 0 for r in resid_hat):
            return np.array([float(v) for v in xhat]), xhat
        t_best = None
        for j in range(instance.m):
            if j in active:
                continue
            if resid_hat[j] > 0:
                denom = resid_hat[j] - resid[j]
                t = -resid[j] / denom
                if t_best is None or t < t_best:
                    t_best = t
        if t_best is None:
            return np.array([float(v) for v in xhat]), xhat
        x = [(1 - t_best) * xi + t_best * zi for xi, zi in zip(x, xhat)]
    raise NumericalRankError("recovery did not terminate in m rounds")


def _vertex_polish(instance, x_frac, near_tol):
    """Exact local vertex search: enumerate near-active row subsets of size n,
    solve them in rational arithmetic and keep the best exactly feasible one."""
    import itertools

    A, b, c = instance.A, instance.b, instance.c
    n = instance.n
    Af, bf = _rational_rows(A, b)
    cf = [Fraction(float(v)) for v in c]
    xf = float(np.dot(c, [float(v) for v in x_frac]))
    resid = [sum(ai * xi for ai, xi in zip(row, x_frac)) - bi
             for row, bi in zip(Af, bf)]
    near = [i for i, r in enumerate(resid) if float(r) >= -near_tol]
    if len(near) < n or math.comb(len(near), n) > 200:
        return x_frac
    best, best_val = x_frac, sum(ci * xi for ci, xi in zip(cf, x_frac))
    for subset in itertools.combinations(near, n):
        try:
            z = _solve_rational([Af[i] for i in subset],
                                [bf[i] for i in subset], n,
                                [Fraction(0)] * n)
        except NumericalRankError:
            continue
        ok = all(sum(ai * zi for ai, zi in zip(row, z)) <= bi
                 for row, bi in zip(Af, bf))
        if ok:
            val = sum(ci * zi for ci, zi in zip(cf, z))
            if val > best_val:
                best, best_val = z, val
    return best


def lp_solve(instance, eps, feas_eps=None):
    """Optimize c^T x over {Ax <= b} by bisection on the objective level.

    Each level test is one ellipsoid feasibility run on the augmented system
    {Ax <= b, -c^T x <= -t}.  The last feasible point is snapped to exact
    feasibility with rational recovery and polished to the best nearby
    vertex (exact arithmetic), which removes the O(feas_eps) level error.
    """
    if instance.c is None:
        raise InputError("instance has no objective vector")
    A, b, c = instance.A, instance.b, instance.c
    n = instance.n
    R = instance.R
    if R is None:
        raise InputError("a localization radius R is required")
    delta_bound = hadamard_delta_bound(A)
    eps0 = 1.0 / ((n + 2) * math.ceil(delta_bound))
    if feas_eps is None:
        # keep the ellipsoid within double-precision conditioning: never ask
        # for localization finer than ~1e-7 of the initial radius
        feas_eps = max(min(eps0 / 2, eps), 1e-7 * R)

    base = lp_feasibility(instance, feas_eps)
    if base.status is Status.INFEASIBLE:
        return Report(Status.INFEASIBLE, None, math.nan, trace=base.trace,
                      message="base system infeasible")
    best_point = base.x
    lo = float(c @ base.x)
    hi = float(np.linalg.norm(c) * R + 1.0)
    level_tol = max(eps, feas_eps / 4.0)
    trace = Trace()
    k = 0
    while hi - lo > level_tol:
        t = 0.5 * (lo + hi)
        aug = LPInstance(np.vstack([A, -c]), np.append(b, -t), R=R)
        sub = lp_feasibility(aug, feas_eps)
        if sub.status is Status.CONVERGED:
            best_point, lo = sub.x, t
        else:
            hi = t
        trace.record(k, lo, gap=hi - lo)
        k += 1
    _, fractions = lp_exact_recovery(instance, best_point,
                                     eps0=max(eps0, 4.0 * feas_eps))
    fractions = _vertex_polish(instance, fractions,
                               near_tol=100.0 * feas_eps + eps0)
    x_exact = np.array([float(v) for v in fractions])
    value = float(c @ x_exact)
    return Report(Status.CONVERGED, x_exact, value, gap=hi - lo, trace=trace,
                  fractions=fractions, level_interval=(lo, hi))


def klee_minty(n):
    """The deformed-cube LP instance with optimal value 5^n at (0, ..., 0, 5^n)."""
    if not 1 <= n <= 10:
        raise InputError("n must lie in 1..10 to keep coefficients exact")
    A = np.zeros((n, n))
    b = np.zeros(n)
    for i in range(n):
        for j in range(i):
            A[i, j] = 2.0 ** (i - j + 1)
        A[i, i] = 1.0
        b[i] = 5.0 ** (i + 1)
    A = np.vstack([A, -np.eye(n)])
    b = np.append(b, np.zeros(n))
    c = np.array([2.0 ** (n - 1 - j) for j in range(n)])
    known_x = np.zeros(n)
    known_x[-1] = 5.0 ** n
    return LPInstance(A, b, c=c, R=2.0 * 5.0 ** n,
                      known_value=5.0 ** n, known_x=known_x)


__all__ = [
    "EllipsoidState", "LPInstance", "ellipsoid_update", "ellipsoid_minimize",
    "volume_ratio", "lp_feasibility", "lp_exact_recovery", "lp_solve",
    "klee_minty", "hadamard_delta_bound", "scalar_bisect",
]
