"""Subgradient descent with the classical step policies, and the switching
method for functional constraints with a primal-dual certificate."""

import math

import numpy as np

from .core import InputError, Report, Status, Trace, finalize


class StepPolicy:
    """Step-size rule for subgradient descent.

    variants: "fixed_R"     h = R / (M sqrt(N)), averaged output
              "fixed_eps"   h = eps / M^2, averaged output
              "adaptive_eps"  h_k = eps / ||g_k||^2, weighted average output
              "adaptive_R"    h_k = R / (||g_k|| sqrt(N)), min-iterate output
    """

    VARIANTS = ("fixed_R", "fixed_eps", "adaptive_eps", "adaptive_R")

    def __init__(self, variant, R=None, M=None, eps=None, N=None):
        if variant not in self.VARIANTS:
            raise InputError("unknown policy %r" % variant)
        self.variant = variant
        self.R, self.M, self.eps, self.N = R, M, eps, N

    def step(self, k, gnorm):
        if self.variant == "fixed_R":
            h = self.R / (self.M * math.sqrt(self.N))
        elif self.variant == "fixed_eps":
            h = self.eps / self.M ** 2
        elif self.variant == "adaptive_eps":
            h = self.eps / gnorm ** 2 if gnorm > 0 else 0.0
        else:
            h = self.R / (gnorm * math.sqrt(self.N)) if gnorm > 0 else 0.0
        if h < 0:
            raise InputError("policy produced a nonpositive step")
        return h

    @property
    def averaged(self):
        return self.variant != "adaptive_R"


def subgradient_descent(oracle, x0, policy, N=None, eps=None, projection=None):
    """Projected subgradient method x_{k+1} = Pr_Q(x_k - h_k g_k).

    Output is the (weighted) average of iterates for averaging policies and
    the best-seen iterate for "adaptive_R".  The certified bound M R /
    sqrt(N) is reported when the policy carries R and M.  A zero
    subgradient stops the run (the point is optimal).
    """
    x = np.asarray(x0, dtype=float).copy()
    if N is None:
        if policy.variant == "fixed_eps" or policy.variant == "adaptive_eps":
            if eps is None or policy.M is None or policy.R is None:
                raise InputError("need N, or eps with M and R, to size the run")
            N = int(math.ceil(policy.M ** 2 * policy.R ** 2 / eps ** 2))
        else:
            raise InputError("N is required for this policy")
    if policy.N is None:
        policy.N = N
    trace = Trace()
    acc = np.zeros_like(x)
    weight = 0.0
    best_x, best_f = x.copy(), math.inf
    iterates = [x.copy()]
    for k in range(N):
        fval, g = oracle.eval(x)
        gnorm = float(np.linalg.norm(g))
        if fval < best_f:
            best_f, best_x = fval, x.copy()
        trace.record(k, fval, oracle_calls=oracle.calls)
        if gnorm == 0.0:
            # zero subgradient certifies optimality: stop at x
            gap = 0.0 if oracle.f_star is None else fval - oracle.f_star
            return finalize(trace, x, fval, eps=eps, gap=gap,
                            bound=math.nan, iterates=iterates)
        h = policy.step(k, gnorm)
        w = h if policy.variant == "adaptive_eps" else 1.0
        acc += w * x
        weight += w
        x = x - h * g
        if projection is not None:
            x = projection(x)
        iterates.append(x.copy())
    if policy.averaged and weight > 0:
        out = acc / weight
    else:
        out = best_x
    f_out = oracle.value(out)
    bound = math.nan
    if policy.R is not None and policy.M is not None:
        bound = policy.M * policy.R / math.sqrt(N)
    gap = math.nan
    if oracle.f_star is not None:
        gap = f_out - oracle.f_star
    return finalize(trace, out, f_out, eps=eps, gap=gap, bound=bound,
                    iterates=iterates)


class ConstraintOracle:
    """g(x) = max_l g_l(x) with the attaining index recorded (lowest on ties)."""

    def __init__(self, constraints):
        self.constraints = list(constraints)
        self.calls = 0

    def eval(self, x):
        self.calls += 1
        best_val, best_g, best_l = -math.inf, None, -1
        for l, fn in enumerate(self.constraints):
            val, g = fn(x)
            if val > best_val:
                best_val, best_g, best_l = float(val), np.asarray(g, dtype=float), l
        return best_val, best_g, best_l

    @property
    def m(self):
        return len(self.constraints)


class DualCertificate:
    """Multipliers built from non-productive steps plus the attained gap."""

    def __init__(self, lam, gap, phi_value=None):
        self.lam = np.asarray(lam, dtype=float)
        if np.any(self.lam < 0):
            raise InputError("multipliers must be nonnegative")
        self.gap = float(gap)
        self.phi_value = phi_value


def switching_subgradient(f_oracle, g_oracle, M_f, M_g, eps, x0, projection,
                          N=None, R=None, Rbar=None, dual_function=None,
                          slater_point=None):
    """Switching subgradient method for min f(x) s.t. max_l g_l(x) <= 0 on Q.

    Steps descend on f when g(x_k) <= eps ("productive") and on the worst
    constraint otherwise, with h_f = eps/M_f^2 and h_g = eps/M_g^2.  Returns
    the average over productive iterates, the dual certificate assembled
    from non-productive steps, and the run report.

    N defaults to the distance-based count (with R = ||x0 - x*||) or, when
    ``Rbar`` bounds the half-diameter of Q, to the primal-dual count
    ceil(2 max(M_f, M_g)^2 Rbar^2 / eps^2).  ``dual_function`` (optional)
    evaluates phi(lam) = min_x {f + <lam, g>} exactly for the gap; without
    it the certificate reports the algebraic eps bound.
    """
    if eps <= 0:
        raise InputError("eps must be positive")
    h_f = eps / M_f ** 2
    h_g = eps / M_g ** 2
    if N is None:
        M2 = max(M_f, M_g) ** 2
        if Rbar is not None:
            N = int(math.ceil(2.0 * M2 * Rbar ** 2 / eps ** 2))
        elif R is not None:
            N = int(math.ceil(M2 * R ** 2 / eps ** 2))
        else:
            raise InputError("need N, R, or Rbar to size the run")
    x = np.asarray(x0, dtype=float).copy()
    m = g_oracle.m
    lam_counts = np.zeros(m)
    prod_sum = np.zeros_like(x)
    n_prod = 0
    trace = Trace()
    for k in range(N):
        gval, gsub, l_idx = g_oracle.eval(x)
        if gval <= eps:
            fval, fsub = f_oracle.eval(x)
            prod_sum += x
            n_prod += 1
            step = h_f * fsub
            trace.record(k, fval, feas=max(gval, 0.0),
                         oracle_calls=f_oracle.calls)
        else:
            lam_counts[l_idx] += 1
            step = h_g * gsub
            trace.record(k, math.nan, feas=gval, oracle_calls=f_oracle.calls)
        x = projection(x - step)
    if n_prod == 0:
        return None, None, Report(
            Status.ERROR, x, math.nan, trace=trace,
            message="InvalidPremise: no productive steps within the "
                    "theorem budget; check M_f, M_g, eps, or feasibility")
    x_hat = prod_sum / n_prod
    lam = (h_g / (h_f * n_prod)) * lam_counts
    g_at_hat = g_oracle.eval(x_hat)[0]
    if slater_point is not None and g_at_hat > 0:
        # pull the average onto the feasible set along the Slater segment so
        # the emitted certificate satisfies weak duality
        xs = np.asarray(slater_point, dtype=float)
        g_s = g_oracle.eval(xs)[0]
        if g_s < 0:
            t = g_at_hat / (g_at_hat - g_s)
            x_hat = (1.0 - t) * x_hat + t * xs
            g_at_hat = g_oracle.eval(x_hat)[0]
    f_at_hat = f_oracle.value(x_hat)
    if dual_function is not None:
        phi = float(dual_function(lam))
        gap = f_at_hat - phi
    else:
        phi = None
        gap = eps  # algebraic bound of the certificate
    cert = DualCertificate(lam, gap, phi_value=phi)
    status = Status.CONVERGED if g_at_hat <= eps else Status.ITER_BUDGET
    report = Report(status, x_hat, f_at_hat, gap=gap, trace=trace,
                    feasibility=g_at_hat, productive=n_prod)
    return x_hat, cert, report
