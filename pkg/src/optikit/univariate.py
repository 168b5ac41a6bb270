"""One-dimensional searches: sign bisection, golden section, safeguarded Newton."""

import math

from .core import InputError, ProtocolError

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0  # contraction ratio per shrink
EXPAND = 1.0 + GOLDEN                  # phase-1 geometric expansion factor


class Bracket:
    """Certified interval [lo, hi] containing the target point."""

    def __init__(self, lo, hi, oracle_calls=0, best=None):
        if not lo < hi:
            raise InputError("bracket needs lo < hi")
        self.lo = float(lo)
        self.hi = float(hi)
        self.oracle_calls = int(oracle_calls)
        self.best = best if best is not None else 0.5 * (lo + hi)

    @property
    def length(self):
        return self.hi - self.lo

    def __contains__(self, x):
        return self.lo <= x <= self.hi

    def __repr__(self):
        return "Bracket(%.12g, %.12g, calls=%d)" % (self.lo, self.hi,
                                                    self.oracle_calls)


def bisect(sign_oracle, x0, d0=1.0, eps=1e-8, max_iter=200):
    """Locate a minimizer of a convex function from a sign oracle.

    ``sign_oracle(x)`` answers -1 when x < x*, +1 when x > x*, and 0 when
    both inequalities hold (x is already a minimizer).  Phase 1 expands with
    doubling steps x_{k+1} = x_k +/- 2^k d0 until the sign flips, phase 2
    halves the interval until its length drops below ``eps``.
    """
    if d0 <= 0:
        raise InputError("initial step must be positive")
    calls = 0

    def ask(x):
        nonlocal calls
        calls += 1
        s = sign_oracle(x)
        if s not in (-1, 0, 1):
            raise ProtocolError("sign oracle must return -1, 0 or +1")
        return s

    s0 = ask(x0)
    if s0 == 0:
        return Bracket(x0 - eps / 2, x0 + eps / 2, calls, best=x0)
    direction = -s0  # move against the sign of the derivative
    prev, prev_sign = x0, s0
    step = d0
    for _ in range(max_iter):
        cur = prev + direction * step
        s = ask(cur)
        if s == 0:
            return Bracket(cur - eps / 2, cur + eps / 2, calls, best=cur)
        if s != prev_sign:
            lo, hi = (prev, cur) if prev < cur else (cur, prev)
            break
        prev, prev_sign = cur, s
        step *= 2.0
    else:
        raise ProtocolError("phase-1 expansion failed to bracket the minimizer")

    for _ in range(max_iter):
        if hi - lo <= eps:
            break
        mid = 0.5 * (lo + hi)
        s = ask(mid)
        if s == 0:
            return Bracket(mid - eps / 2, mid + eps / 2, calls, best=mid)
        if s < 0:
            lo = mid
        else:
            hi = mid
    return Bracket(lo, hi, calls)


def golden_section(value_oracle, x0, d=1.0, eps=1e-8, max_iter=500):
    """Minimize a unimodal function from value queries only.

    Phase 1 walks geometrically (factor 1+alpha) from ``x0`` until the value
    stops decreasing, phase 2 shrinks the bracket by exactly alpha per probe.
    Raises ProtocolError when the cached interior value exceeds both
    endpoint values (the objective cannot be unimodal).
    """
    if d <= 0:
        raise InputError("initial step must be positive")
    calls = 0
    cache = {}

    def f(x):
        nonlocal calls
        if x not in cache:
            calls += 1
            cache[x] = float(value_oracle(x))
        return cache[x]

    x1 = x0 + d
    if f(x1) > f(x0):  # walk the other way
        d = -d
        x1 = x0 + d
    # phase 1: points x_{k+1} = x_k + d * EXPAND^k until f stops improving
    pts = [x0, x1]
    step = d
    for _ in range(max_iter):
        if f(pts[-1]) >= f(pts[-2]):
            break
        step *= EXPAND
        pts.append(pts[-1] + step)
    else:
        raise ProtocolError("phase-1 expansion failed (function keeps decreasing)")

    if len(pts) == 2:
        # immediate non-decrease: minimum between x0 - |d| and x1; place a
        # fresh interior probe at the golden position so phase 2 contracts
        # by exactly alpha from the first step on
        a, b = sorted((x0 - (x1 - x0), x1))
        inner = a + (1.0 - GOLDEN) * (b - a)
    else:
        a, b = sorted((pts[-3], pts[-1]))
        inner = pts[-2]

    fa, fb, fi = f(a), f(b), f(inner)
    if fi > fa and fi > fb:
        raise ProtocolError("objective not unimodal on the bracket")

    lo, hi, xm = a, b, inner
    for _ in range(max_iter):
        if hi - lo <= eps:
            break
        probe = lo + hi - xm
        if abs(probe - xm) < 1e-32 * max(1.0, abs(xm)):
            break
        xl, xr = (xm, probe) if xm < probe else (probe, xm)
        if f(xl) <= f(xr):
            hi = xr
            xm = xl
        else:
            lo = xl
            xm = xr
    return Bracket(lo, hi, calls, best=xm)


def newton_scalar(f, fprime, theta0, tol=1e-12, bracket=None, max_iter=200):
    """Root of a strictly monotone scalar function, Newton with bisection fallback.

    When a ``bracket`` (lo, hi) with a sign change is supplied, any Newton step
    leaving it triggers a bisection step instead.  Returns theta with
    |f(theta)| <= tol.
    """
    theta = float(theta0)
    lo = hi = None
    if bracket is not None:
        lo, hi = map(float, bracket)
        flo, fhi = f(lo), f(hi)
        if flo == 0:
            return lo
        if fhi == 0:
            return hi
        if flo * fhi > 0:
            raise InputError("no sign change on the supplied interval")
        theta = min(max(theta, lo), hi)
    for _ in range(max_iter):
        val = f(theta)
        if abs(val) <= tol:
            return theta
        if lo is not None:
            if f(lo) * val < 0:
                hi = theta
            else:
                lo = theta
        der = fprime(theta)
        if der != 0:
            candidate = theta - val / der
        else:
            candidate = math.nan
        inside = (lo is None or (lo < candidate < hi)) and math.isfinite(candidate)
        if inside:
            theta = candidate
        elif lo is not None:
            theta = 0.5 * (lo + hi)
        else:
            raise InputError("Newton step diverged and no interval was supplied")
    return theta
