"""Norms, prox-functions, Bregman divergences and mirror steps.

Shipped geometries: Euclidean (with simplex/box/ball feasible sets),
entropy-on-simplex (KL divergence), and the a-norm prox on the simplex
that is 1-strongly convex w.r.t. the 1-norm.  User-defined geometries can
subclass Geometry; see the Burg-entropy design geometry in the apps layer.
"""

import math

import numpy as np

from .core import (DomainError, FirstOrderOracle, InputError, ProtocolError,
                   UnsupportedSetError)
from . import cutting_plane

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


# -- feasible sets -------------------------------------------------------------

class WholeSpace:
    name = "rn"

    def project(self, y):
        return np.asarray(y, dtype=float)

    def contains(self, x, tol=1e-9):
        return True


class Simplex:
    name = "simplex"

    def project(self, y):
        y = np.asarray(y, dtype=float)
        u = np.sort(y)[::-1]
        css = np.cumsum(u) - 1.0
        ks = np.arange(1, y.size + 1)
        k = ks[u - css / ks > 0][-1]
        tau = css[k - 1] / k
        return np.maximum(y - tau, 0.0)

    def contains(self, x, tol=1e-9):
        x = np.asarray(x, dtype=float)
        return abs(float(np.sum(x)) - 1.0) <= tol and float(np.min(x)) >= -tol


class Box:
    name = "box"

    def __init__(self, lo, hi):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        if np.any(self.lo > self.hi):
            raise InputError("box needs lo <= hi")

    def project(self, y):
        return np.clip(np.asarray(y, dtype=float), self.lo, self.hi)

    def contains(self, x, tol=1e-9):
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))


class L2Ball:
    name = "l2ball"

    def __init__(self, radius, center=None):
        if radius <= 0:
            raise InputError("radius must be positive")
        self.radius = float(radius)
        self.center = center

    def _c(self, y):
        return np.zeros_like(y) if self.center is None else \
            np.asarray(self.center, dtype=float)

    def project(self, y):
        y = np.asarray(y, dtype=float)
        c = self._c(y)
        d = y - c
        nrm = np.linalg.norm(d)
        if nrm <= self.radius:
            return y
        return c + d * (self.radius / nrm)

    def contains(self, x, tol=1e-9):
        x = np.asarray(x, dtype=float)
        return np.linalg.norm(x - self._c(x)) <= self.radius + tol


class L1Ball:
    name = "l1ball"

    def __init__(self, radius=1.0):
        if radius <= 0:
            raise InputError("radius must be positive")
        self.radius = float(radius)

    def project(self, y):
        y = np.asarray(y, dtype=float)
        if np.sum(np.abs(y)) <= self.radius:
            return y
        w = Simplex().project(np.abs(y) / self.radius)
        return np.sign(y) * w * self.radius

    def contains(self, x, tol=1e-9):
        return float(np.sum(np.abs(x))) <= self.radius + tol


_SET_ALIASES = {"simplex": Simplex, "rn": WholeSpace, "whole": WholeSpace}


def project_euclidean(feasible_set, y):
    """Exact Euclidean projection onto simplex / box / l2-ball / l1-ball."""
    if isinstance(feasible_set, str):
        cls = _SET_ALIASES.get(feasible_set)
        if cls is None:
            raise UnsupportedSetError("unknown set %r" % feasible_set)
        feasible_set = cls()
    if not hasattr(feasible_set, "project"):
        raise UnsupportedSetError("set lacks a projection")
    return feasible_set.project(y)


def is_simplex_point(x, tol=1e-12):
    x = np.asarray(x, dtype=float)
    return abs(float(np.sum(x)) - 1.0) <= tol and float(np.min(x)) >= 0.0


# -- geometries ----------------------------------------------------------------

class Geometry:
    """A norm paired with a prox-function d, its gradient and a mirror step.

    Subclasses provide d/grad_d/norm and an exact ``mirror_step``; the
    Bregman divergence and the generic model step are derived here.
    ``strong_convexity`` is the claimed modulus of d w.r.t. ``norm``.
    """

    name = "abstract"
    strong_convexity = 1.0

    def __init__(self, feasible_set=None):
        self.set = feasible_set if feasible_set is not None else WholeSpace()

    def d(self, x):
        raise NotImplementedError

    def grad_d(self, x):
        raise NotImplementedError

    def norm(self, x):
        raise NotImplementedError

    def bregman(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return float(self.d(x) - self.d(y) - np.dot(self.grad_d(y), x - y))

    def mirror_step(self, x, g, h):
        """argmin_{z in Q} h <g, z - x> + V(z, x), exact."""
        raise NotImplementedError

    def model_step(self, resp, alpha, u, entropy_coef=0.0):
        """Solve argmin_{z in Q} alpha psi(z) + V(z, u) for a structured model.

        Returns (point, delta_tilde) with delta_tilde the certified
        inner-product inexactness of the inner solve (0 for closed forms).
        """
        if resp.grad_at_y is None:
            raise UnsupportedSetError(
                "model without a linear part: supply a custom geometry/step")
        if entropy_coef:
            raise UnsupportedSetError(
                "entropy composite not supported by %s" % type(self).__name__)
        return self.mirror_step(u, resp.grad_at_y, alpha), 0.0

    def recenter(self, center):
        """Shift the prox-center (restart support); default: no dependence."""
        return self

    def omega(self):
        """Bound on sup_x 2 V(x, y0) / ||x - y0||^2 for the restart schedule."""
        raise NotImplementedError

    def start_point(self, n):
        raise NotImplementedError


class EuclideanGeometry(Geometry):
    """d(x) = ||x||_2^2 / 2, V(x, y) = ||x - y||_2^2 / 2."""

    name = "euclid"

    def d(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * float(np.dot(x, x))

    def grad_d(self, x):
        return np.asarray(x, dtype=float)

    def norm(self, x):
        return float(np.linalg.norm(x))

    def bregman(self, x, y):
        d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        return 0.5 * float(np.dot(d, d))

    def mirror_step(self, x, g, h):
        if h <= 0:
            raise InputError("step size must be positive")
        x = np.asarray(x, dtype=float)
        return self.set.project(x - h * np.asarray(g, dtype=float))

    def omega(self):
        return 1.0

    def start_point(self, n):
        return np.zeros(n)


class EntropyGeometry(Geometry):
    """Entropy prox on the probability simplex; V is the KL divergence."""

    name = "entropy"

    def __init__(self):
        super().__init__(Simplex())

    def d(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise DomainError("entropy prox needs nonnegative coordinates")
        xp = x[x > 0]
        return float(np.sum(xp * np.log(xp))) + math.log(len(x))

    def grad_d(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise DomainError("entropy gradient undefined with zero coordinates")
        return 1.0 + np.log(x)

    def norm(self, x):
        return float(np.sum(np.abs(x)))

    def bregman(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if np.any(y <= 0):
            raise DomainError("KL divergence needs an interior second argument")
        if np.any(x < 0):
            raise DomainError("KL divergence needs nonnegative first argument")
        mask = x > 0
        return float(np.sum(x[mask] * np.log(x[mask] / y[mask]))
                     + np.sum(y) - np.sum(x))

    def mirror_step(self, x, g, h):
        if h <= 0:
            raise InputError("step size must be positive")
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise DomainError("entropy mirror step needs an interior point")
        logits = np.log(x) - h * np.asarray(g, dtype=float)
        logits -= logits.max()
        w = np.exp(logits)
        return w / np.sum(w)

    def model_step(self, resp, alpha, u, entropy_coef=0.0):
        if resp.grad_at_y is None:
            raise UnsupportedSetError("model without a linear part")
        u = np.asarray(u, dtype=float)
        if np.any(u <= 0):
            raise DomainError("entropy model step needs an interior point")
        g = resp.grad_at_y
        scale = 1.0 + alpha * entropy_coef
        logits = (np.log(u) - alpha * g) / scale
        logits -= logits.max()
        w = np.exp(logits)
        return w / np.sum(w), 0.0

    def omega(self):
        raise InputError("omega is infinite for KL on the simplex; "
                         "restart with the a-norm geometry instead")

    def start_point(self, n):
        return np.full(n, 1.0 / n)


class ANormGeometry(Geometry):
    """d(x) = e/(2(a-1)) ||x - center||_a^2 with a = 2 log n / (2 log n - 1).

    1-strongly convex w.r.t. the 1-norm (the scaling constant matters: the
    bare 1/(2(a-1)) variant is only (1/e)-strongly convex).  The simplex
    mirror step is solved through a low-dimensional dual; the unconstrained
    step has a closed form via the dual norm.
    """

    name = "anorm"

    def __init__(self, n, feasible_set=None, center=None):
        if n < 2:
            raise InputError("a-norm prox needs dimension n >= 2")
        super().__init__(feasible_set if feasible_set is not None else Simplex())
        self.n = int(n)
        # the formula needs log n > 1; at n = 2 it exits (1, 2], so cap at the
        # Euclidean exponent where e/2 ||.||_2^2 is still 1-strongly convex
        # w.r.t. ||.||_1 in two dimensions
        self.a = min(2.0, 2.0 * math.log(n) / (2.0 * math.log(n) - 1.0))
        self.beta = math.e / (2.0 * (self.a - 1.0))
        self.dual_eps = 1e-8       # inner 2-D dual target
        self.sigma_iters = 48      # per-coordinate golden-section iterations
        self.center = np.zeros(n) if center is None else \
            np.asarray(center, dtype=float)

    def d(self, x):
        z = np.asarray(x, dtype=float) - self.center
        return self.beta * _norm_a(z, self.a) ** 2

    def grad_d(self, x):
        z = np.asarray(x, dtype=float) - self.center
        return self.beta * _grad_norm_a_sq(z, self.a)

    def norm(self, x):
        return float(np.sum(np.abs(x)))

    def omega(self):
        # with the prox recentered at the stage start, V(x, c) = d(x - c) and
        # 2 V / ||x - c||_1^2 <= 2 beta because ||.||_a <= ||.||_1
        return 2.0 * self.beta

    def recenter(self, center):
        out = ANormGeometry(self.n, feasible_set=self.set, center=center)
        out.dual_eps = self.dual_eps
        out.sigma_iters = self.sigma_iters
        return out

    def start_point(self, n):
        if isinstance(self.set, Simplex):
            return np.full(n, 1.0 / n)
        return self.center.copy()

    def mirror_step(self, x, g, h):
        if h <= 0:
            raise InputError("step size must be positive")
        x = np.asarray(x, dtype=float)
        g = np.asarray(g, dtype=float)
        if not np.any(g):
            return x.copy()  # argmin of V(., x) alone
        c_lin = h * g - self.grad_d(x)
        if isinstance(self.set, WholeSpace):
            return self.center + _inverse_grad(-c_lin, self.a, self.beta)
        if isinstance(self.set, Simplex):
            if not np.any(self.center):
                return _anorm_simplex_linear_step(c_lin, self.beta, self.a)
            return anorm_simplex_composite_step(
                c_lin, self.beta, self.a, 0.0, shift=self.center)
        raise UnsupportedSetError("a-norm mirror step supports simplex or R^n")

    def model_step(self, resp, alpha, u, entropy_coef=0.0):
        if resp.grad_at_y is None:
            raise UnsupportedSetError("model without a linear part")
        u = np.asarray(u, dtype=float)
        g = resp.grad_at_y
        c_lin = alpha * g - self.grad_d(u)
        if isinstance(self.set, WholeSpace) and entropy_coef == 0.0:
            return self.center + _inverse_grad(-c_lin, self.a, self.beta), 0.0
        if not isinstance(self.set, Simplex):
            raise UnsupportedSetError("a-norm model step supports simplex or R^n")
        if entropy_coef == 0.0 and not np.any(self.center):
            x_new = _anorm_simplex_linear_step(c_lin, self.beta, self.a)
            gt = c_lin + self.grad_d(x_new)
            return x_new, max(0.0, float(np.dot(gt, x_new) - np.min(gt)))
        x_new = anorm_simplex_composite_step(
            c_lin, self.beta, self.a, alpha * entropy_coef, shift=self.center,
            dual_eps=self.dual_eps, sigma_iters=self.sigma_iters)
        # certify the Def-2.10 inexactness over the simplex: the subproblem
        # objective is linear + d + entropy, its subgradient at x_new is
        gt = c_lin + self.grad_d(x_new)
        if entropy_coef:
            xe = np.maximum(x_new, 1e-300)
            gt = gt + alpha * entropy_coef * (1.0 + np.log(xe))
        dtilde = max(0.0, float(np.dot(gt, x_new) - np.min(gt)))
        return x_new, dtilde


def _norm_a(z, a):
    return float(np.sum(np.abs(z) ** a) ** (1.0 / a))


def _grad_norm_a_sq(z, a):
    """Gradient of ||z||_a^2 (zero at the origin)."""
    z = np.asarray(z, dtype=float)
    nrm = _norm_a(z, a)
    if nrm == 0.0:
        return np.zeros_like(z)
    return 2.0 * nrm ** (2.0 - a) * np.sign(z) * np.abs(z) ** (a - 1.0)


def _inverse_grad(zeta, a, beta):
    """Solve grad of beta ||w||_a^2 = zeta for w (closed form via dual norm)."""
    zeta = np.asarray(zeta, dtype=float)
    b = a / (a - 1.0)
    nrm_b = float(np.sum(np.abs(zeta) ** b) ** (1.0 / b))
    if nrm_b == 0.0:
        return np.zeros_like(zeta)
    rho = nrm_b / (2.0 * beta)
    scale = (2.0 * beta * rho ** (2.0 - a)) ** (-1.0 / (a - 1.0))
    return np.sign(zeta) * (np.abs(zeta) ** (1.0 / (a - 1.0))) * scale


def anorm_prox(n, feasible_set=None):
    """Factory for the 1-norm-compatible a-norm geometry (simplex default)."""
    return ANormGeometry(n, feasible_set=feasible_set)


def _anorm_simplex_linear_step(c, beta, a, tol=1e-12):
    """argmin_{x in simplex} <c, x> + beta ||x||_a^2, by a scalar dual solve.

    KKT gives x_i proportional to (-(c_i + lam))_+^{1/(a-1)} with the scalar
    lam solving 2 beta ||y(lam)||_a^(2-a) = sum y(lam); the equation is
    solved by safeguarded Newton to ``tol``.
    """
    from .univariate import newton_scalar

    c = np.asarray(c, dtype=float)
    p = 1.0 / (a - 1.0)
    lam_max = float(np.max(-c))

    def parts(lam):
        m = np.maximum(-c - lam, 0.0)
        y = m ** p
        return m, y

    def psi(lam):
        m, y = parts(lam)
        s1 = float(np.sum(y))
        if s1 == 0.0:
            return 2.0 * beta if a >= 2.0 else 0.0
        nrm = float(np.sum(y ** a)) ** (1.0 / a)
        return 2.0 * beta * nrm ** (2.0 - a) - s1

    def dpsi(lam):
        m, y = parts(lam)
        s1 = float(np.sum(y))
        if s1 == 0.0:
            return 0.0
        sa = float(np.sum(y ** a))
        term2 = float(np.sum(m ** ((2.0 - a) * p))) / (a - 1.0)
        term1 = -2.0 * beta * (2.0 - a) / (a - 1.0) * sa ** ((2.0 - 2.0 * a) / a) * s1
        return term1 + term2

    scale = 1.0 + abs(lam_max)
    hi = lam_max - 1e-14 * scale
    while psi(hi) <= 0:  # should not trigger for a in (1, 2]; be safe
        hi = lam_max - (lam_max - hi) * 0.5
    lo = lam_max - scale
    while psi(lo) > 0:
        lo = lam_max - 2.0 * (lam_max - lo)
    lam = newton_scalar(psi, dpsi, 0.5 * (lo + hi), tol=tol, bracket=(lo, hi))
    _, y = parts(lam)
    total = float(np.sum(y))
    if total <= 0:
        i = int(np.argmin(c))
        out = np.zeros_like(c)
        out[i] = 1.0
        return out
    return y / total


# -- the low-dimensional dual prox subsolver -----------------------------------

def _golden_vec(objective, lo, hi, iters=52):
    """Per-coordinate golden-section minimization, vectorized over coordinates."""
    lo = lo.astype(float).copy()
    hi = hi.astype(float).copy()
    x1 = lo + (1.0 - _GOLDEN) * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1 = objective(x1)
    f2 = objective(x2)
    for _ in range(iters):
        left = f1 <= f2
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
        x1 = lo + (1.0 - _GOLDEN) * (hi - lo)
        x2 = lo + _GOLDEN * (hi - lo)
        f1 = objective(x1)
        f2 = objective(x2)
    return 0.5 * (lo + hi)


def anorm_simplex_composite_step(c, beta, a, gamma, shift=None,
                                 dual_eps=1e-8, sigma_iters=48,
                                 return_multipliers=False):
    """Minimize <c, x> + beta ||x - shift||_a^2 + gamma sum x log x on the simplex.

    Dualizes the simplex equality and the epigraph constraint on the a-norm
    into a 2-D concave problem solved by the ellipsoid method with
    delta-gradients; each gradient query costs n per-coordinate
    golden-section solves (vectorized).  The primal point is recovered from
    the per-coordinate minimizers and renormalized onto the simplex.
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    if gamma < 0 or beta <= 0:
        raise InputError("beta must be positive and gamma nonnegative")
    s = np.zeros(n) if shift is None else np.asarray(shift, dtype=float)
    # rescale so the a-norm term has unit coefficient, as in the dual analysis
    c_r = c / beta
    gamma_r = gamma / beta
    t_max = (n ** (1.0 / a) + _norm_a(s, a)) ** 2
    half_a = a / 2.0

    def coordinate_min(lam1, lam2):
        lin = c_r + lam1

        def phi(x):
            ent = np.where(x > 0, x * np.log(np.maximum(x, 1e-300)), 0.0)
            return lin * x + lam2 * np.abs(x - s) ** a + gamma_r * ent

        return _golden_vec(phi, np.zeros(n), np.ones(n), iters=sigma_iters)

    def t_of(lam2):
        if lam2 <= 0:
            return 0.0
        if a >= 2.0:  # the t-penalty is linear: minimizer sits at an endpoint
            return 0.0 if lam2 <= 1.0 else t_max
        return min((lam2 * half_a) ** (2.0 / (2.0 - a)), t_max)

    def neg_G(lam):
        lam1, lam2 = float(lam[0]), float(lam[1])
        x = coordinate_min(lam1, lam2)
        t = t_of(lam2)
        # delta-gradient of G via Demyanov-Danskin
        g1 = float(np.sum(x)) - 1.0
        g2 = float(np.sum(np.abs(x - s) ** a)) - t ** half_a
        ent = np.where(x > 0, x * np.log(np.maximum(x, 1e-300)), 0.0)
        val = (float(np.dot(c_r, x)) + t + lam1 * g1 + lam2 * g2
               + gamma_r * float(np.sum(ent)))
        return -val, -np.array([g1, g2])

    C_bound = 6.0 * np.max(np.abs(c_r)) + 4.0 * gamma_r * math.log(2 * n) + 16.0
    oracle = FirstOrderOracle(lambda lam: neg_G(lam))

    def nonneg_lam2(lam):
        if lam[1] < 0:
            return np.array([0.0, -1.0])
        return None

    report = cutting_plane.ellipsoid_minimize(
        oracle, np.array([0.0, max(C_bound / 4.0, 1.0)]), R=2.0 * C_bound,
        eps=dual_eps, M=2.0 * n + 4.0 + C_bound,
        feasibility_oracle=nonneg_lam2)
    lam = report.x if report.x is not None else np.array([0.0, 0.0])
    x = coordinate_min(float(lam[0]), max(float(lam[1]), 0.0))
    x = np.maximum(x, 0.0)
    total = float(np.sum(x))
    if total <= 0:
        x = np.full(n, 1.0 / n)
    else:
        x = x / total
    if shift is None or not np.any(s):
        # Slater bound on the dual multipliers of the unshifted problem
        if float(np.sum(np.abs(lam))) > C_bound:
            raise ProtocolError(
                "inner dual multipliers violate the Slater bound %g" % C_bound)
    if return_multipliers:
        return x, lam, C_bound
    return x


__all__ = [
    "WholeSpace", "Simplex", "Box", "L2Ball", "L1Ball", "project_euclidean",
    "is_simplex_point", "Geometry", "EuclideanGeometry", "EntropyGeometry",
    "ANormGeometry", "anorm_prox", "anorm_simplex_composite_step",
]
