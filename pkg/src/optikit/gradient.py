"""Smooth first-order solvers: fixed-step gradient descent, Chebyshev /
heavy-ball / conjugate-gradient quadratic specialists, adaptive gradient
methods driven by inexact models, the universal accelerated method,
strongly-convex restarts, and the order-1 accelerated proximal envelope."""

import math

import numpy as np

from .core import (FirstOrderOracle, InputError, ModelMismatchError, Report,
                   Status, Trace, finalize, smooth_model)
from .geometry import EuclideanGeometry

_ACCEPT_SLACK = 1e-13


class QuadraticProblem:
    """f(x) = <x, Ax>/2 - <b, x> with spectrum of A inside [mu, L]."""

    def __init__(self, A, b, mu=None, L=None):
        self.A = np.asarray(A, dtype=float)
        self.b = np.asarray(b, dtype=float)
        if self.A.shape[0] != self.A.shape[1] or self.A.shape[0] != self.b.size:
            raise InputError("A must be square and match b")
        if not np.allclose(self.A, self.A.T, atol=1e-12):
            raise InputError("A must be symmetric")
        if mu is None or L is None:
            w = np.linalg.eigvalsh(self.A)
            mu = float(w[0]) if mu is None else mu
            L = float(w[-1]) if L is None else L
        self.mu = float(mu)
        self.L = float(L)

    @property
    def n(self):
        return self.b.size

    def solution(self):
        return np.linalg.solve(self.A, self.b)

    def value(self, x):
        return 0.5 * float(x @ (self.A @ x)) - float(self.b @ x)

    def oracle(self):
        optimum = None
        if self.mu > 0:
            xs = self.solution()
            optimum = (xs, self.value(xs))

        def func(x):
            g = self.A @ x - self.b
            return 0.5 * float(x @ (self.A @ x)) - float(self.b @ x), g

        return FirstOrderOracle(func, L=self.L, mu=self.mu, optimum=optimum)


def gd_fixed(oracle, L, x0, N, geometry=None, check_descent=False, eps=None):
    """Fixed-step gradient descent x_{k+1} = x_k - grad f(x_k)/L.

    With a geometry the step is the mirror step (projection in the Euclidean
    case).  ``check_descent`` audits the smoothness inequality
    f(x+) <= f(x) + <g, x+ - x> + L ||x+ - x||^2 / 2 at every step and raises
    ModelMismatchError when the declared L is violated.
    """
    if L <= 0:
        raise InputError("L must be positive")
    geom = geometry if geometry is not None else EuclideanGeometry()
    x = np.asarray(x0, dtype=float).copy()
    trace = Trace()
    fval = math.nan
    for k in range(N):
        fval, g = oracle.eval(x)
        x_new = geom.mirror_step(x, g, 1.0 / L)
        if check_descent:
            f_new = oracle.value(x_new)
            quad = fval + float(np.dot(g, x_new - x)) \
                + 0.5 * L * geom.norm(x_new - x) ** 2
            if f_new > quad + _ACCEPT_SLACK * (1.0 + abs(f_new)):
                raise ModelMismatchError(
                    "descent lemma violated at iteration %d: declared L=%g "
                    "is too small" % (k, L))
        gap = math.nan if oracle.f_star is None else fval - oracle.f_star
        trace.record(k, fval, gap=gap, Lk=L, oracle_calls=oracle.calls)
        x = x_new
    f_out = oracle.value(x)
    gap = math.nan if oracle.f_star is None else f_out - oracle.f_star
    return finalize(trace, x, f_out, eps=eps, gap=gap)


def chebyshev(problem, x0, N):
    """Chebyshev iteration for strongly convex quadratics.

    Error after N steps is at most 2 / (xi^N + xi^-N) of the initial one,
    xi = (sqrt(L) + sqrt(mu)) / (sqrt(L) - sqrt(mu)).  Requires 0 < mu < L.
    """
    L, mu = problem.L, problem.mu
    if mu <= 0:
        raise InputError("Chebyshev needs mu > 0 (use conjugate gradients)")
    if mu >= L:
        raise InputError("Chebyshev needs mu < L")
    kappa = (L + mu) / (L - mu)
    x_prev = np.asarray(x0, dtype=float).copy()
    g = problem.A @ x_prev - problem.b
    x = x_prev - (2.0 / (L + mu)) * g
    # delta_k = T_k(kappa) / T_{k+1}(kappa); the recursion seeded at
    # delta_0 = 1/kappa reproduces the Chebyshev polynomial ratios exactly
    delta = 1.0 / (2.0 * kappa - 1.0 / kappa)
    for _ in range(1, N):
        g = problem.A @ x - problem.b
        x_next = (x - (4.0 * delta / (L - mu)) * g
                  + (2.0 * delta * kappa - 1.0) * (x - x_prev))
        x_prev, x = x, x_next
        delta = 1.0 / (2.0 * kappa - delta)
    return x


def heavy_ball(problem, x0, N):
    """Polyak's heavy-ball iteration with the asymptotic Chebyshev coefficients."""
    L, mu = problem.L, problem.mu
    if mu < 0:
        raise InputError("mu must be nonnegative")
    sq = (math.sqrt(L) + math.sqrt(mu)) ** 2
    step = 4.0 / sq
    momentum = (math.sqrt(L) - math.sqrt(mu)) ** 2 / sq
    x_prev = np.asarray(x0, dtype=float).copy()
    x = x_prev.copy()
    for _ in range(N):
        g = problem.A @ x - problem.b
        x_next = x - step * g + momentum * (x - x_prev)
        x_prev, x = x, x_next
    return x


def conjugate_gradient(problem, x0, N, tol=1e-14):
    """Conjugate gradients in the two-term momentum form.

    (alpha_k, beta_k) minimize f over the plane spanned by the gradient and
    the previous displacement; terminates exactly within n iterations.
    """
    A, b = problem.A, problem.b
    x = np.asarray(x0, dtype=float).copy()
    x_prev = None
    for _ in range(N):
        r = A @ x - b
        rr = float(r @ r)
        if rr <= tol ** 2:
            break
        Ar = A @ r
        if x_prev is None:
            denom = float(r @ Ar)
            if denom <= 0:
                break
            x, x_prev = x - (rr / denom) * r, x
            continue
        p = x - x_prev
        Ap = A @ p
        rAr, pAp, pAr = float(r @ Ar), float(p @ Ap), float(p @ Ar)
        rp = float(r @ p)
        denom = rAr * pAp - pAr * pAr
        if denom == 0.0:
            break  # gradient vanished or directions collapsed: converged
        alpha = (rr * pAp - rp * pAr) / denom
        beta = (rr * pAr - rp * rAr) / denom
        x, x_prev = x - alpha * r + beta * p, x
    return x


# -- adaptive methods on inexact models ----------------------------------------

def adaptive_model_gd(model, geometry, x0, N, L0, delta=0.0, eps=None,
                      max_growth=1e6, stop_fn=None):
    """Non-accelerated gradient method driven by a (delta, L, V)-model.

    The local constant doubles until the acceptance inequality
    F_d(x+) <= F_d(x) + psi(x+, x) + L_{k+1} V(x+, x) + delta
    holds and is halved after every accepted step.  Output is the average of
    x_1..x_N; the last iterate is reported in extras (it is monotone when
    delta = 0 and steps are exact).
    """
    if L0 <= 0:
        raise InputError("L0 must be positive")
    x = np.asarray(x0, dtype=float).copy()
    L_next = L0 / 2.0
    trace = Trace()
    accept_evals = 0
    L_history = []
    dtilde_max = 0.0
    acc = np.zeros_like(x)
    for k in range(N):
        resp = model.at(x)
        Lk = L_next
        while True:
            alpha = 1.0 / Lk
            x_new, dtilde = geometry.model_step(
                resp, alpha, x, entropy_coef=model.composite_entropy)
            accept_evals += 1
            resp_new = model.at(x_new)
            rhs = (resp.value + resp.psi(x_new)
                   + Lk * geometry.bregman(x_new, x) + delta)
            if resp_new.value <= rhs + _ACCEPT_SLACK * (1.0 + abs(rhs)):
                break
            Lk *= 2.0
            if Lk > max_growth * L0:
                raise ModelMismatchError(
                    "no (delta,L,V)-model found below %g * L0" % max_growth)
        dtilde_max = max(dtilde_max, dtilde)
        x = x_new
        acc += x
        L_history.append(Lk)
        L_next = Lk / 2.0
        gap = math.nan if model.f_star is None else resp_new.value - model.f_star
        trace.record(k, resp_new.value, gap=gap, Lk=Lk, oracle_calls=model.calls)
        if stop_fn is not None and stop_fn(x, resp_new.value, k):
            break
    x_avg = acc / max(len(trace), 1)
    f_avg = model.at(x_avg).value
    gap = math.nan if model.f_star is None else f_avg - model.f_star
    return finalize(trace, x_avg, f_avg, eps=eps, gap=gap, x_last=x,
                    accept_evals=accept_evals, L_history=L_history,
                    dtilde_max=dtilde_max)


def adaptive_accelerated(model, geometry, x0, N, L0=None, delta=0.0,
                         fixed_L=None, eps=None, max_growth=1e6,
                         universal_eps=None, stop_fn=None):
    """Accelerated gradient method (similar-triangles family) on a (delta, L)-model.

    With ``fixed_L`` the adaptive search is disabled and the method is the
    plain similar-triangles iteration.  ``universal_eps`` switches on the
    universal mode: the model error is taken as eps * alpha_{k+1} / (4
    A_{k+1}) (running minimum over attempts), which lets the same code
    minimize Hoelder-smooth objectives without knowing nu or L_nu.

    Requires a geometry that is 1-strongly convex w.r.t. its norm.
    """
    if fixed_L is None and L0 is None:
        raise InputError("provide L0 (adaptive) or fixed_L")
    x = np.asarray(x0, dtype=float).copy()
    u = x.copy()
    A_big = 0.0
    L_next = fixed_L if fixed_L is not None else L0 / 2.0
    trace = Trace()
    accept_evals = 0
    alphas, A_seq, L_seq = [], [], []
    delta_run_min = math.inf
    dtilde_max = 0.0
    f_best, x_best = math.inf, x.copy()
    for k in range(N):
        Lk = fixed_L if fixed_L is not None else L_next
        while True:
            alpha = (1.0 + math.sqrt(1.0 + 4.0 * A_big * Lk)) / (2.0 * Lk)
            A_new = A_big + alpha
            y_new = (alpha * u + A_big * x) / A_new
            resp_y = model.at(y_new)
            u_new, dtilde = geometry.model_step(
                resp_y, alpha, u, entropy_coef=model.composite_entropy)
            x_new = (alpha * u_new + A_big * x) / A_new
            accept_evals += 1
            f_new = model.at(x_new).value
            if universal_eps is not None:
                delta_eff = min(delta_run_min,
                                universal_eps * alpha / (4.0 * A_new))
            else:
                delta_eff = delta
            nrm = geometry.norm(x_new - y_new)
            rhs = (resp_y.value + resp_y.psi(x_new) + 0.5 * Lk * nrm ** 2
                   + delta_eff)
            if f_new <= rhs + _ACCEPT_SLACK * (1.0 + abs(rhs)):
                break
            if fixed_L is not None:
                break
            Lk *= 2.0
            if L0 is not None and Lk > max_growth * L0:
                raise ModelMismatchError(
                    "no (delta,L)-model found below %g * L0" % max_growth)
        if universal_eps is not None:
            delta_run_min = min(delta_run_min,
                                universal_eps * alpha / (4.0 * A_new))
        dtilde_max = max(dtilde_max, dtilde)
        x, u, A_big = x_new, u_new, A_new
        alphas.append(alpha)
        A_seq.append(A_new)
        L_seq.append(Lk)
        if fixed_L is None:
            L_next = Lk / 2.0
        if f_new < f_best:
            f_best, x_best = f_new, x.copy()
        gap = math.nan if model.f_star is None else f_new - model.f_star
        trace.record(k, f_new, gap=gap, Lk=Lk, oracle_calls=model.calls)
        if eps is not None and model.f_star is not None and gap <= eps:
            break
        if stop_fn is not None and stop_fn(x, f_new, k):
            break
    f_out = trace.rows[-1][1] if len(trace) else math.nan
    gap = math.nan if model.f_star is None else f_out - model.f_star
    return finalize(trace, x, f_out, eps=eps, gap=gap, alphas=alphas,
                    A_seq=A_seq, L_seq=L_seq, accept_evals=accept_evals,
                    dtilde_max=dtilde_max, x_best=x_best, f_best=f_best)


def similar_triangles(model, geometry, x0, N, L, eps=None):
    """Alg with exact L and exact steps: the fixed-L configuration above."""
    return adaptive_accelerated(model, geometry, x0, N, fixed_L=L, eps=eps)


def universal_solve(oracle, eps, x0, geometry=None, L0=1.0, N_max=100000):
    """Universal accelerated method: no nu or L_nu consumed at run time.

    Wraps the adaptive accelerated method around the exact-value linear
    model with the artificial model error eps * alpha / (4 A); the doubling
    search settles on L(delta) by itself.  Works for any Hoelder exponent
    nu in [0, 1]; stops early when a known optimum certifies the gap.
    """
    if eps <= 0:
        raise InputError("eps must be positive")
    geom = geometry if geometry is not None else EuclideanGeometry()
    model = smooth_model(oracle, delta=0.0)
    return adaptive_accelerated(model, geom, x0, N_max, L0=L0,
                                universal_eps=eps, eps=eps)


def restart_strongly_convex(model, mu, x0, eps, geometry, L, R=None,
                            stages=None):
    """Restarted accelerated method for mu-strongly-convex objectives.

    Runs the fixed-L similar-triangles method for ceil(sqrt(16 L omega_n /
    mu)) steps per stage, recentering the prox-function at each stage start;
    the squared distance to the optimum halves per stage, so the stage-k gap
    is at most mu ||y0 - x*||^2 / 2^(k+1).
    """
    if mu <= 0:
        raise InputError("mu must be positive")
    omega = geometry.omega()
    N_stage = int(math.ceil(math.sqrt(16.0 * L * omega / mu)))
    y = np.asarray(x0, dtype=float).copy()
    if stages is None:
        if R is None:
            raise InputError("provide R = ||x0 - x*|| or an explicit stage count")
        init = mu * R * R / 2.0
        if init <= eps:
            stages = 0
        else:
            stages = int(math.ceil(math.log2(init / eps)))
    trace = Trace()
    stage_outputs = []
    total_calls = 0
    for k in range(stages):
        geom_k = geometry.recenter(y)
        rep = adaptive_accelerated(model, geom_k, y, N_stage, fixed_L=L)
        y = rep.x
        stage_outputs.append(y.copy())
        total_calls += len(rep.trace)
        fval = rep.fval
        gap = math.nan if model.f_star is None else fval - model.f_star
        trace.record(k, fval, gap=gap, Lk=L, oracle_calls=model.calls)
        if model.f_star is not None and fval - model.f_star <= eps:
            break
    fval = trace.rows[-1][1] if len(trace) else model.at(y).value
    gap = math.nan if model.f_star is None else fval - model.f_star
    return finalize(trace, y, fval, eps=eps, gap=gap, stage_length=N_stage,
                    stage_outputs=stage_outputs, total_inner_iters=total_calls)


def accelerated_meta_p1(g_oracle, H, x0, K, f_oracle=None, prox_g=None,
                        L1g=None, inner_max=10000, eps=None):
    """Accelerated meta-algorithm restricted to first order (p = 1).

    Minimizes F = f + g where f is L1f-smooth (or absent) and g enters
    through the proximal subproblem min_y <grad f(x~), y> + g(y) +
    H ||y - x~||^2 / 2.  The subproblem parameter is tied to the step by
    H = 1/(2 lambda), so lambda is constant across iterations.  ``prox_g``
    solves the subproblem exactly; otherwise an inner gradient loop runs
    until the contraction test
        ||y~ - y*|| <= H/(3H + 2 L1g) ||x~ - y*||
    is certified through strong convexity of the subproblem.  With f = 0
    this is the accelerated proximal envelope usable as a Catalyst.
    """
    if H <= 0:
        raise InputError("H must be positive")
    lam = 1.0 / (2.0 * H)
    x = np.asarray(x0, dtype=float).copy()
    y = x.copy()
    A_big = 0.0
    trace = Trace()
    inner_iters_total = 0
    for k in range(K):
        a = (lam + math.sqrt(lam * lam + 4.0 * lam * A_big)) / 2.0
        A_new = A_big + a
        x_tilde = (A_big * y + a * x) / A_new if A_new > 0 else x
        gf = np.zeros_like(x) if f_oracle is None else f_oracle.grad(x_tilde)
        v = x_tilde - gf / H
        if prox_g is not None:
            y_new = prox_g(v, H)
        else:
            if L1g is None:
                raise InputError("inner solve needs L1g (or provide prox_g)")
            y_new, used = _inexact_prox(g_oracle, gf, x_tilde, H, L1g, inner_max)
            inner_iters_total += used
        # the model-consistent subgradient of g at y_new
        gg = -gf - H * (y_new - x_tilde)
        x = x - a * (gf + gg)
        y, A_big = y_new, A_new
        fval = g_oracle.value(y)
        if f_oracle is not None:
            fval += f_oracle.value(y)
        gap = math.nan
        if g_oracle.f_star is not None and f_oracle is None:
            gap = fval - g_oracle.f_star
        trace.record(k, fval, gap=gap, Lk=H, oracle_calls=g_oracle.calls)
    fval = trace.rows[-1][1] if len(trace) else math.nan
    gap = trace.rows[-1][2] if len(trace) else math.nan
    return finalize(trace, y, fval, eps=eps, gap=gap,
                    inner_iters=inner_iters_total, lam=lam)


def _inexact_prox(g_oracle, gf, x_tilde, H, L1g, inner_max):
    """Gradient loop on the prox subproblem until the p=1 contraction test holds."""
    rho = H / (3.0 * H + 2.0 * L1g)
    step = 1.0 / (L1g + H)
    y = x_tilde.copy()
    for it in range(inner_max):
        grad_phi = g_oracle.grad(y) + gf + H * (y - x_tilde)
        resid = float(np.linalg.norm(grad_phi)) / H  # >= ||y - y*||
        move = float(np.linalg.norm(y - x_tilde))
        if resid * (1.0 + rho) <= rho * move or resid <= 1e-14 * (1.0 + move):
            return y, it
        y = y - step * grad_phi
    raise ModelMismatchError("inner prox solve failed the contraction test "
                             "within its budget")
