import math
from fractions import Fraction

import numpy as np
import pytest

from optikit.core import FirstOrderOracle, InputError, Status
from optikit.cutting_plane import (LPInstance, ellipsoid_minimize,
                                   ellipsoid_update, hadamard_delta_bound,
                                   klee_minty, lp_exact_recovery,
                                   lp_feasibility, lp_solve, volume_ratio)


def exact_det(M):
    """Exact determinant of a float matrix via Fraction Gaussian elimination."""
    A = [[Fraction(float(v)) for v in row] for row in M]
    n = len(A)
    det = Fraction(1)
    for col in range(n):
        piv = None
        for r in range(col, n):
            if A[r][col] != 0:
                piv = r
                break
        if piv is None:
            return Fraction(0)
        if piv != col:
            A[col], A[piv] = A[piv], A[col]
            det = -det
        det *= A[col][col]
        inv = 1 / A[col][col]
        for r in range(col + 1, n):
            factor = A[r][col] * inv
            if factor:
                A[r] = [a - factor * c for a, c in zip(A[r], A[col])]
    return det


class TestEllipsoidUpdate:
    def test_direct_substitution_n2(self):
        c, H = ellipsoid_update(np.zeros(2), np.eye(2), np.array([1.0, 0.0]))
        assert np.allclose(c, [-1.0 / 3.0, 0.0], atol=1e-15)
        assert np.allclose(H, np.diag([4.0 / 9.0, 4.0 / 3.0]), atol=1e-15)

    def test_volume_ratio_closed_form(self):
        # sqrt(det ratio) for n=2 is sqrt(16/27) < e^{-1/4}
        assert abs(volume_ratio(2) - 16.0 / 27.0) < 1e-15
        assert math.sqrt(volume_ratio(2)) < math.exp(-0.25)

    def test_scale_invariance(self):
        rng = np.random.default_rng(0)
        Q = rng.standard_normal((3, 3))
        H = Q @ Q.T + np.eye(3)
        c = rng.standard_normal(3)
        g = rng.standard_normal(3)
        c1, H1 = ellipsoid_update(c, H, g)
        c2, H2 = ellipsoid_update(c, H, 2.0 * g)
        assert np.allclose(c1, c2) and np.allclose(H1, H2)

    def test_guards(self):
        with pytest.raises(InputError):
            ellipsoid_update(np.zeros(2), np.eye(2), np.zeros(2))
        with pytest.raises(InputError):
            ellipsoid_update(np.zeros(1), np.eye(1), np.ones(1))


class TestEllipsoidMinimize:
    def test_quadratic_within_theorem_cap(self):
        n = 5

        def func(x):
            return float(x @ x), 2.0 * x

        oracle = FirstOrderOracle(func, M=2.0, optimum=(np.zeros(n), 0.0))
        x0 = np.zeros(n)
        x0[0] = 0.3
        cap = math.ceil(2 * n * n * math.log(2.0 * 1.0 / 1e-6))
        rep = ellipsoid_minimize(oracle, x0, R=1.0, eps=1e-6, M=2.0,
                                 record_det=True)
        assert rep.fval <= 1e-6
        assert oracle.calls <= cap

    def test_det_ratio_exact_rational(self):
        n = 5

        def func(x):
            return float(x @ x), 2.0 * x

        oracle = FirstOrderOracle(func, M=2.0)
        x0 = np.zeros(n)
        x0[0] = 0.3
        rep = ellipsoid_minimize(oracle, x0, R=1.0, eps=1e-6, M=2.0,
                                 record_det=True)
        shapes = rep.extras["shapes"]
        assert len(shapes) > 10
        closed = volume_ratio(n)
        for A, B in zip(shapes, shapes[1:]):
            ratio = exact_det(B) / exact_det(A)
            assert abs(float(ratio) - closed) < 1e-12

    def test_start_at_optimum(self):
        def func(x):
            return float(x @ x), 2.0 * x

        oracle = FirstOrderOracle(func, optimum=(np.zeros(3), 0.0))
        rep = ellipsoid_minimize(oracle, np.zeros(3), R=1.0, N=5)
        assert rep.fval == 0.0

    def test_localization_of_interior_optimum(self):
        # (x* - c_k)^T H_k^{-1} (x* - c_k) <= 1 throughout
        n = 3
        xstar = np.array([0.2, -0.1, 0.3])

        def func(x):
            d = x - xstar
            return float(d @ d), 2.0 * d

        oracle = FirstOrderOracle(func, M=4.0)
        c = np.zeros(n)
        H = 4.0 * np.eye(n)
        from optikit.cutting_plane import ellipsoid_update as upd
        for _ in range(50):
            _, g = oracle.eval(c)
            d = xstar - c
            assert d @ np.linalg.solve(H, d) <= 1.0 + 1e-9
            c, H = upd(c, H, g)

    def test_best_seen_monotone(self):
        def func(x):
            return float(x @ x), 2.0 * x

        oracle = FirstOrderOracle(func, M=2.0)
        rep = ellipsoid_minimize(oracle, np.full(2, 0.5), R=1.0, N=40)
        best = [r[1] for r in rep.trace.rows]
        assert all(b2 <= b1 + 1e-15 for b1, b2 in zip(best, best[1:]))


class TestLPFeasibility:
    def test_halfline(self):
        inst = LPInstance(np.array([[-1.0]]), np.array([0.0]), R=1.0)
        rep = lp_feasibility(inst, 1e-6)
        assert rep.status is Status.CONVERGED
        assert abs(rep.x[0]) <= 1e-6

    def test_empty_system(self):
        inst = LPInstance(np.array([[1.0], [-1.0]]), np.array([-1.0, -2.0]),
                          R=10.0)
        rep = lp_feasibility(inst, 1e-6)
        assert rep.status is Status.INFEASIBLE

    def test_klee_minty_polytope(self):
        km = klee_minty(3)
        rep = lp_feasibility(km, 1e-6)
        assert rep.status is Status.CONVERGED
        assert np.all(km.A @ rep.x <= km.b + 1e-6)


class TestExactRecovery:
    def test_already_feasible_unchanged(self):
        inst = LPInstance(np.array([[1.0, 0.0]]), np.array([1.0]))
        x, frac = lp_exact_recovery(inst, np.array([0.25, 0.5]))
        assert np.allclose(x, [0.25, 0.5])

    def test_1d_snap_to_zero(self):
        inst = LPInstance(np.array([[-1.0]]), np.array([0.0]))
        eps0 = 1.0 / ((1 + 2) * math.ceil(hadamard_delta_bound(inst.A)))
        x, frac = lp_exact_recovery(inst, np.array([-eps0 / 2]))
        assert x[0] == 0.0 and frac[0] == 0

    def test_random_integer_system_rational_check(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            A = rng.integers(-4, 5, size=(3, 2)).astype(float)
            if np.linalg.matrix_rank(A) < 2:
                continue
            z = rng.integers(-2, 3, size=2).astype(float)
            b = A @ z + rng.integers(0, 3, size=3).astype(float)  # feasible
            inst = LPInstance(A, b)
            eps0 = 1.0 / ((2 + 2) * math.ceil(hadamard_delta_bound(A)))
            x_tilde = z + rng.uniform(-eps0 / 4, eps0 / 4, size=2)
            x, frac = lp_exact_recovery(inst, x_tilde)
            # exact rational verification of A x <= b
            Af = [[Fraction(float(v)) for v in row] for row in A]
            bf = [Fraction(float(v)) for v in b]
            for row, bi in zip(Af, bf):
                assert sum(ai * xi for ai, xi in zip(row, frac)) <= bi


class TestKleeMinty:
    def test_n1(self):
        km = klee_minty(1)
        assert km.known_value == 5.0
        assert np.allclose(km.A, [[1.0], [-1.0]])
        assert np.allclose(km.b, [5.0, 0.0])

    def test_n2_n3_values(self):
        assert klee_minty(2).known_value == 25.0
        km3 = klee_minty(3)
        assert km3.known_value == 125.0
        assert np.allclose(km3.known_x, [0.0, 0.0, 125.0])

    def test_range_guard(self):
        with pytest.raises(InputError):
            klee_minty(11)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_pipeline_value(self, n):
        km = klee_minty(n)
        rep = lp_solve(km, eps=1e-6)
        assert rep.status is Status.CONVERGED
        assert abs(rep.fval - km.known_value) <= 1e-6 * km.known_value
        assert np.all(km.A @ rep.x <= km.b + 1e-12)
