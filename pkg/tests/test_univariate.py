import math

import numpy as np
import pytest

from optikit.core import InputError, ProtocolError
from optikit.univariate import (EXPAND, GOLDEN, Bracket, bisect,
                                golden_section, newton_scalar)


def sign_for(f_prime):
    def oracle(x):
        v = f_prime(x)
        return 0 if v == 0 else (1 if v > 0 else -1)

    return oracle


class TestBisect:
    def test_quadratic_minimizer(self):
        br = bisect(sign_for(lambda x: 2 * (x - 2)), 0.0, 1.0, 1e-6)
        assert 2.0 in br and br.length <= 1e-6 * (1 + 1e-9)

    def test_start_at_optimum(self):
        calls = []

        def oracle(x):
            calls.append(x)
            return 0

        br = bisect(oracle, 2.0, 1.0, 1e-8)
        assert len(calls) == 1 and abs(br.best - 2.0) < 1e-12

    def test_abs_function(self):
        br = bisect(sign_for(lambda x: 1.0 if x > 5 else (-1.0 if x < 5 else 0.0)),
                    0.0, 1.0, 1e-6)
        assert 5.0 in br

    def test_oracle_call_budget(self):
        # paper's count: <= 3 + (2 log(d + |x*-x0|) - log d - log eps)/log 2
        d0, x0, xstar, eps = 1.0, 0.0, 37.3, 1e-8
        br = bisect(sign_for(lambda x: x - xstar), x0, d0, eps)
        cap = 3 + (2 * math.log(d0 + abs(xstar - x0)) - math.log(d0)
                   - math.log(eps)) / math.log(2)
        assert br.oracle_calls <= cap
        assert xstar in br

    def test_halving_per_step(self):
        lengths = []

        class Probe:
            def __init__(self):
                self.phase2 = False

        br = bisect(sign_for(lambda x: x - 2.3), 0.0, 1.0, 1e-9)
        assert br.length <= 1e-9 * (1 + 1e-9)

    def test_bad_oracle(self):
        with pytest.raises(ProtocolError):
            bisect(lambda x: 7, 0.0, 1.0, 1e-6)

    def test_bad_step(self):
        with pytest.raises(InputError):
            bisect(sign_for(lambda x: x), 0.0, -1.0, 1e-6)


class TestGoldenSection:
    def test_quadratic(self):
        br = golden_section(lambda x: (x - 2.0) ** 2, 0.0, 1.0, 1e-6)
        assert 2.0 in br and br.length <= 1e-6 * (1 + 1e-9)

    def test_symmetric_start(self):
        br = golden_section(lambda x: x * x, -0.5, 1.0, 1e-8)
        assert abs(br.best) < 1e-6

    def test_contraction_ratio_per_step(self):
        f = lambda x: (x - 2.0) ** 2
        br = golden_section(f, 0.0, 1.0, 1e-10)
        assert br.length <= 1e-10 * (1 + 1e-9)
        # phase-2 lengths follow alpha exactly (up to accumulated rounding)
        lo, hi, xm = 0.0, 1.0 + EXPAND, 1.0
        prev = hi - lo
        for _ in range(14):  # cancellation pollutes the ratio once tiny
            probe = lo + hi - xm
            xl, xr = (xm, probe) if xm < probe else (probe, xm)
            if f(xl) <= f(xr):
                hi, xm = xr, xl
            else:
                lo, xm = xl, xr
            assert abs((hi - lo) / prev - GOLDEN) < 1e-10
            prev = hi - lo

    def test_non_unimodal_detected(self):
        # a spike at the golden interior point of the first bracket: the
        # cached interior value exceeds both endpoint values
        spike = -1.0 + (1.0 - GOLDEN) * 2.0

        def f(x):
            return 5.0 * math.exp(-200.0 * (x - spike) ** 2) + x * x

        with pytest.raises(ProtocolError):
            golden_section(f, 0.0, 1.0, 1e-6)


class TestNewtonScalar:
    def test_symmetric_two_over_theta(self):
        c = np.zeros(2)
        f = lambda t: float(np.sum(1.0 / (c + t))) - 1.0
        fp = lambda t: -float(np.sum(1.0 / (c + t) ** 2))
        theta = newton_scalar(f, fp, 1.0, 1e-14, bracket=(0.5, 10.0))
        assert abs(theta - 2.0) < 1e-12

    def test_golden_ratio_root(self):
        f = lambda t: 1.0 / t + 1.0 / (1.0 + t) - 1.0
        fp = lambda t: -1.0 / t ** 2 - 1.0 / (1.0 + t) ** 2
        theta = newton_scalar(f, fp, 0.7, 1e-14, bracket=(1e-6, 50.0))
        assert abs(theta - (1 + math.sqrt(5)) / 2) < 1e-12

    def test_linear_one_step(self):
        theta = newton_scalar(lambda t: t - 1.0, lambda t: 1.0, 5.0, 1e-15)
        assert theta == 1.0

    def test_no_sign_change(self):
        with pytest.raises(InputError):
            newton_scalar(lambda t: t * t + 1.0, lambda t: 2 * t, 0.0,
                          bracket=(-1.0, 1.0))


class TestBracket:
    def test_invariant(self):
        with pytest.raises(InputError):
            Bracket(1.0, 1.0)
