import math

import numpy as np
import pytest

from optikit.core import (FirstOrderOracle, InputError, ModelMismatchError,
                          ModelOracle, ModelResponse, smooth_model)
from optikit.geometry import EuclideanGeometry
from optikit.gradient import (QuadraticProblem, accelerated_meta_p1,
                              adaptive_accelerated, adaptive_model_gd,
                              chebyshev, conjugate_gradient, gd_fixed,
                              heavy_ball, restart_strongly_convex,
                              similar_triangles, universal_solve)


def random_quadratic(rng, n, mu_floor=0.05):
    Q = rng.standard_normal((n, n))
    A = Q.T @ Q / n + mu_floor * np.eye(n)
    return QuadraticProblem(A, rng.standard_normal(n))


class TestGDFixed:
    def test_one_exact_step(self):
        qp = QuadraticProblem(np.array([[4.0]]), np.array([0.0]))
        rep = gd_fixed(qp.oracle(), 4.0, np.array([1.0]), 1)
        assert rep.fval == 0.0 and rep.x[0] == 0.0

    def test_linear_rate_strongly_convex(self):
        rng = np.random.default_rng(0)
        qp = random_quadratic(rng, 6, mu_floor=0.3)
        x0 = rng.standard_normal(6)
        xs = qp.solution()
        oracle = qp.oracle()
        N = 40
        rep = gd_fixed(oracle, qp.L, x0, N)
        assert (np.linalg.norm(rep.x - xs)
                <= (1 - qp.mu / qp.L) ** N * np.linalg.norm(x0 - xs) + 1e-12)

    def test_declared_L_violation_detected(self):
        def func(x):
            return 0.25 * float(x[0] ** 4), np.array([x[0] ** 3])

        oracle = FirstOrderOracle(func)
        with pytest.raises(ModelMismatchError):
            gd_fixed(oracle, 0.1, np.array([4.0]), 50, check_descent=True)

    def test_smooth_rate_bound(self):
        rng = np.random.default_rng(1)
        qp = random_quadratic(rng, 8, mu_floor=0.0)
        x0 = rng.standard_normal(8)
        oracle = qp.oracle()
        xs = np.linalg.lstsq(qp.A, qp.b, rcond=None)[0]
        fs = qp.value(xs)
        R2 = float(np.linalg.norm(x0 - xs) ** 2)
        rep = gd_fixed(oracle, qp.L, x0, 100)
        assert rep.fval - fs <= qp.L * R2 / (4 * 100) + 1e-10


class TestChebyshev:
    def test_guards(self):
        qp = QuadraticProblem(np.eye(3), np.zeros(3))  # mu == L
        with pytest.raises(InputError):
            chebyshev(qp, np.ones(3), 5)
        qp0 = QuadraticProblem(np.diag([0.0, 1.0]), np.zeros(2), mu=0.0, L=1.0)
        with pytest.raises(InputError):
            chebyshev(qp0, np.ones(2), 5)

    def test_first_step(self):
        rng = np.random.default_rng(2)
        qp = random_quadratic(rng, 5, mu_floor=0.2)
        x0 = rng.standard_normal(5)
        x1 = chebyshev(qp, x0, 1)
        expect = x0 - 2.0 / (qp.L + qp.mu) * (qp.A @ x0 - qp.b)
        assert np.allclose(x1, expect, atol=1e-14)

    def test_rate_diag_1_10(self):
        qp = QuadraticProblem(np.diag([1.0, 10.0]), np.zeros(2))
        x0 = np.array([1.0, 1.0])
        N = 20
        xN = chebyshev(qp, x0, N)
        rho = (math.sqrt(10) - 1) / (math.sqrt(10) + 1)
        assert np.linalg.norm(xN) <= 2 * rho ** N * np.linalg.norm(x0) + 1e-15

    def test_exact_chebyshev_envelope(self):
        # || x_N - x* || <= 2/(xi^N + xi^-N) R on a spread spectrum
        w = np.array([0.5, 1.0, 2.0, 5.0, 8.0])
        qp = QuadraticProblem(np.diag(w), np.zeros(5))
        x0 = np.ones(5)
        xi = (math.sqrt(qp.L) + math.sqrt(qp.mu)) / (math.sqrt(qp.L) - math.sqrt(qp.mu))
        for N in (3, 7, 15):
            xN = chebyshev(qp, x0, N)
            bound = 2.0 / (xi ** N + xi ** -N) * np.linalg.norm(x0)
            assert np.linalg.norm(xN) <= bound * (1 + 1e-10)


class TestHeavyBallCG:
    def test_heavy_ball_degenerate_is_gd(self):
        qp = QuadraticProblem(4.0 * np.eye(3), np.ones(3))
        x1 = heavy_ball(qp, np.zeros(3), 1)
        assert np.allclose(x1, 0.25 * np.ones(3))

    def test_cg_finite_termination(self):
        rng = np.random.default_rng(3)
        qp = random_quadratic(rng, 5, mu_floor=0.1)
        x = conjugate_gradient(qp, rng.standard_normal(5), 5)
        assert np.linalg.norm(qp.A @ x - qp.b) <= 1e-8

    def test_cg_first_step_is_exact_line_search(self):
        rng = np.random.default_rng(4)
        qp = random_quadratic(rng, 4, mu_floor=0.2)
        x0 = rng.standard_normal(4)
        r = qp.A @ x0 - qp.b
        alpha = float(r @ r) / float(r @ (qp.A @ r))
        x1 = conjugate_gradient(qp, x0, 1)
        assert np.allclose(x1, x0 - alpha * r, atol=1e-13)

    def test_cg_zero_gradient_declares_converged(self):
        qp = QuadraticProblem(np.eye(2), np.zeros(2))
        x = conjugate_gradient(qp, np.zeros(2), 3)
        assert np.allclose(x, 0.0)


class TestAdaptiveModelGD:
    def test_monotone_when_exact(self):
        rng = np.random.default_rng(5)
        qp = random_quadratic(rng, 6)
        model = smooth_model(qp.oracle())
        rep = adaptive_model_gd(model, EuclideanGeometry(),
                                rng.standard_normal(6), 60, L0=qp.L)
        fvals = [r[1] for r in rep.trace.rows]
        assert all(b <= a + 1e-12 for a, b in zip(fvals, fvals[1:]))

    def test_L_halving_floor(self):
        # exact L0 = 2L: first tries pass, L halves until instability floor
        qp = QuadraticProblem(np.diag([1.0, 1.0]), np.zeros(2))
        model = smooth_model(qp.oracle())
        rep = adaptive_model_gd(model, EuclideanGeometry(),
                                np.array([1.0, -1.0]), 25, L0=2.0)
        L_hist = rep.extras["L_history"]
        assert max(L_hist) <= 2.0 * qp.L + 1e-12

    def test_rate_bound(self):
        rng = np.random.default_rng(6)
        qp = random_quadratic(rng, 8)
        x0 = rng.standard_normal(8)
        xs = qp.solution()
        fs = qp.value(xs)
        model = smooth_model(qp.oracle())
        for N in (10, 40):
            rep = adaptive_model_gd(model, EuclideanGeometry(), x0, N, L0=qp.L)
            R2 = 0.5 * float(np.linalg.norm(x0 - xs) ** 2)
            assert qp.value(rep.x) - fs <= 2 * qp.L * R2 / N + 1e-10

    def test_model_mismatch_error(self):
        # a lying model that always fails the acceptance test
        def model_fn(y):
            return ModelResponse(0.0, lambda x: -1e9, lambda x: np.zeros_like(y),
                                 y, grad_at_y=np.ones_like(y))

        model = ModelOracle(model_fn, delta=0.0)
        with pytest.raises(ModelMismatchError):
            adaptive_model_gd(model, EuclideanGeometry(), np.ones(2), 3,
                              L0=1.0, max_growth=10.0)


class TestAdaptiveAccelerated:
    def test_one_step_optimum(self):
        qp = QuadraticProblem(np.array([[10.0]]), np.array([0.0]))
        model = smooth_model(qp.oracle())
        rep = similar_triangles(model, EuclideanGeometry(), np.array([1.0]),
                                2, L=10.0)
        assert abs(rep.extras["alphas"][0] - 1.0 / 10.0) < 1e-15
        assert rep.trace.rows[0][1] == 0.0  # optimum after one iteration

    def test_A_sequence_invariants(self):
        rng = np.random.default_rng(7)
        qp = random_quadratic(rng, 10)
        model = smooth_model(qp.oracle())
        rep = adaptive_accelerated(model, EuclideanGeometry(),
                                   rng.standard_normal(10), 80, L0=qp.L)
        alphas, A_seq, L_seq = (rep.extras[k] for k in
                                ("alphas", "A_seq", "L_seq"))
        A_prev = 0.0
        for a, A, L in zip(alphas, A_seq, L_seq):
            assert abs(L * a * a - a - A_prev) <= 1e-10 * max(1.0, A)
            A_prev = A
        N = len(A_seq)
        assert A_seq[-1] >= (N + 1) ** 2 / (8.0 * max(L_seq)) - 1e-12
        assert max(L_seq) <= 2.0 * qp.L + 1e-12

    def test_similar_triangles_identity(self):
        # x_{k+1} - y_{k+1} = alpha/A (u_{k+1} - u_k): re-run and check
        qp = QuadraticProblem(np.diag([1.0, 3.0]), np.array([1.0, -1.0]))
        model = smooth_model(qp.oracle())
        geom = EuclideanGeometry()
        x = u = np.array([2.0, 2.0])
        A_big = 0.0
        L = qp.L
        for _ in range(10):
            alpha = (1.0 + math.sqrt(1.0 + 4.0 * A_big * L)) / (2.0 * L)
            A_new = A_big + alpha
            y = (alpha * u + A_big * x) / A_new
            resp = model.at(y)
            u_new, _ = geom.model_step(resp, alpha, u)
            x_new = (alpha * u_new + A_big * x) / A_new
            lhs = x_new - y
            rhs = alpha / A_new * (u_new - u)
            assert np.allclose(lhs, rhs, atol=1e-14)
            x, u, A_big = x_new, u_new, A_new

    def test_rate_bound_every_iteration(self):
        rng = np.random.default_rng(8)
        qp = random_quadratic(rng, 20)
        x0 = rng.standard_normal(20)
        xs = qp.solution()
        fs = qp.value(xs)
        R2 = 0.5 * float(np.linalg.norm(x0 - xs) ** 2)
        model = smooth_model(qp.oracle())
        rep = similar_triangles(model, EuclideanGeometry(), x0, 300, L=qp.L)
        for row in rep.trace.rows:
            k, fval = row[0], row[1]
            assert fval - fs <= 8 * qp.L * R2 / (k + 2) ** 2 + 1e-11

    def test_injected_model_error_accumulates(self):
        # accelerated error grows with the 2 N delta term while the
        # non-accelerated method stays at the 2 delta level
        qp = QuadraticProblem(np.diag([1.0, 2.0]), np.zeros(2))
        delta = 1e-3
        oracle = qp.oracle()

        def noisy_model_fn(y):
            fy, gy = oracle.eval(y)

            def psi(x):
                return float(gy @ (np.asarray(x) - y))

            return ModelResponse(fy - delta, psi, lambda x: gy, y,
                                 grad_at_y=gy)

        model = ModelOracle(noisy_model_fn, delta=2 * delta, L=qp.L,
                            optimum=(qp.solution(), 0.0))
        x0 = np.array([1.0, 1.0])
        N = 400
        rep_acc = adaptive_accelerated(model, EuclideanGeometry(), x0, N,
                                       fixed_L=qp.L, delta=2 * delta)
        rep_gd = adaptive_model_gd(model, EuclideanGeometry(), x0, N,
                                   L0=2 * qp.L, delta=2 * delta)
        f_acc = qp.value(rep_acc.x)
        f_gd = qp.value(rep_gd.extras["x_last"])
        assert f_acc > f_gd  # noise accumulation in the accelerated run

    def test_acceptance_evals_under_4N(self):
        rng = np.random.default_rng(9)
        for trial in range(3):
            qp = random_quadratic(rng, 7)
            model = smooth_model(qp.oracle())
            N = 50
            rep = adaptive_accelerated(model, EuclideanGeometry(),
                                       rng.standard_normal(7), N, L0=qp.L)
            assert rep.extras["accept_evals"] <= 4 * N


class TestUniversal:
    def test_smooth_quadratic_behaves_accelerated(self):
        rng = np.random.default_rng(10)
        qp = random_quadratic(rng, 10)
        x0 = rng.standard_normal(10)
        xs = qp.solution()
        fs = qp.value(xs)
        eps = 1e-6
        rep = universal_solve(qp.oracle(), eps, x0, L0=qp.L / 2)
        R2 = 0.5 * float(np.linalg.norm(x0 - xs) ** 2)
        for row in rep.trace.rows:
            k, fval = row[0], row[1]
            assert fval - fs <= 8 * qp.L * R2 / (k + 2) ** 2 + eps / 2 + 1e-12
        assert rep.gap <= eps
        # iteration count within the nu=1 budget
        assert len(rep.trace) <= math.ceil(math.sqrt(8 * qp.L * R2 / eps)) + 1

    def test_nonsmooth_abs_within_calibrated_bound(self):
        def func(x):
            return float(np.sum(np.abs(x))), np.sign(x)

        oracle = FirstOrderOracle(func, optimum=(np.zeros(2), 0.0))
        x0 = np.array([0.9, -0.63])
        eps = 1e-3
        rep = universal_solve(oracle, eps, x0, N_max=300000)
        assert rep.gap <= eps
        L0 = 2.0  # Hoelder nu=0 constant of the subgradient
        R = math.sqrt(0.5 * float(x0 @ x0))
        calibrated = 64.0 * 2.0 * (L0 * R / eps) ** 2
        assert len(rep.trace) <= calibrated

    def test_scaling_equivariance(self):
        # f -> c f scales the reported gaps by c at matched iterations
        rng = np.random.default_rng(11)
        qp = random_quadratic(rng, 6)
        c = 7.0
        qp_scaled = QuadraticProblem(c * qp.A, c * qp.b)
        x0 = rng.standard_normal(6)
        rep1 = universal_solve(qp.oracle(), 1e-8, x0, L0=qp.L, N_max=60)
        rep2 = universal_solve(qp_scaled.oracle(), c * 1e-8, x0, L0=c * qp.L,
                               N_max=60)
        f1 = np.array([r[1] for r in rep1.trace.rows])
        f2 = np.array([r[1] for r in rep2.trace.rows])
        assert len(f1) == len(f2)
        # the discrete adaptive decisions follow the same scaled path, and
        # the values match until rounding noise amplifies (k ~ 30)
        assert np.allclose(np.array(rep1.extras["L_seq"]) * c,
                           rep2.extras["L_seq"], rtol=1e-12)
        assert np.allclose(c * f1[:30], f2[:30], rtol=1e-9)


class TestRestarts:
    def test_distance_halving_per_stage(self):
        n = 10
        w = np.linspace(0.01, 1.0, n)
        qp = QuadraticProblem(np.diag(w), np.zeros(n), mu=0.01, L=1.0)
        rng = np.random.default_rng(12)
        x0 = rng.standard_normal(n)
        x0 *= 3.0 / np.linalg.norm(x0)
        model = smooth_model(qp.oracle())
        rep = restart_strongly_convex(model, 0.01, x0, 0.0,
                                      EuclideanGeometry(), 1.0, stages=13)
        assert rep.extras["stage_length"] == math.ceil(math.sqrt(16 * 1.0 / 0.01))
        R2 = float(x0 @ x0)
        for k, row in enumerate(rep.trace.rows):
            assert row[1] - 0.0 <= 0.01 * R2 / 2.0 ** (k + 2) + 1e-30

    def test_zero_stages_when_target_met(self):
        qp = QuadraticProblem(np.eye(2), np.zeros(2), mu=1.0, L=1.0)
        model = smooth_model(qp.oracle())
        rep = restart_strongly_convex(model, 1.0, np.array([0.1, 0.0]), 1.0,
                                      EuclideanGeometry(), 1.0, R=0.1)
        assert len(rep.trace) == 0

    def test_total_calls_match_budget(self):
        n = 10
        qp = QuadraticProblem(np.diag(np.linspace(0.01, 1.0, n)), np.zeros(n),
                              mu=0.01, L=1.0)
        rng = np.random.default_rng(13)
        x0 = rng.standard_normal(n)
        x0 *= 3.0 / np.linalg.norm(x0)
        model = smooth_model(qp.oracle())
        eps = 0.01 * 9.0 / 2.0 ** 13
        rep = restart_strongly_convex(model, 0.01, x0, eps,
                                      EuclideanGeometry(), 1.0, R=3.0)
        stages_ref = math.ceil(math.log2(0.01 * 9.0 / (2.0 * eps))) + 1
        ref = math.ceil(math.sqrt(16 * 1.0 / 0.01)) * stages_ref
        assert rep.extras["total_inner_iters"] <= 2 * ref


class TestMetaP1:
    def test_lambda_constant(self):
        qp = QuadraticProblem(np.diag([1.0, 4.0]), np.array([1.0, 0.0]))
        rep = accelerated_meta_p1(qp.oracle(), H=qp.L, x0=np.zeros(2), K=10,
                                  L1g=qp.L)
        assert rep.extras["lam"] == 1.0 / (2.0 * qp.L)

    def test_rate_with_exact_prox(self):
        rng = np.random.default_rng(14)
        qp = random_quadratic(rng, 6)
        xs = qp.solution()
        fs = qp.value(xs)
        H = qp.L

        def prox(v, Hc):
            # argmin g(y) + Hc/2 ||y - v||^2 solved in closed form
            return np.linalg.solve(qp.A + Hc * np.eye(6), qp.b + Hc * v)

        x0 = rng.standard_normal(6)
        R2 = float(np.linalg.norm(x0 - xs) ** 2)
        rep = accelerated_meta_p1(qp.oracle(), H=H, x0=x0, K=60, prox_g=prox)
        for row in rep.trace.rows:
            k, fval = row[0], row[1]
            if k >= 1:
                assert fval - fs <= 4.0 * H * R2 / k ** 2 + 1e-10

    def test_inexact_prox_rate_with_slack(self):
        rng = np.random.default_rng(15)
        qp = random_quadratic(rng, 5)
        xs = qp.solution()
        fs = qp.value(xs)
        H = qp.L
        x0 = rng.standard_normal(5)
        R2 = float(np.linalg.norm(x0 - xs) ** 2)
        rep = accelerated_meta_p1(qp.oracle(), H=H, x0=x0, K=40, L1g=qp.L)
        for row in rep.trace.rows:
            k, fval = row[0], row[1]
            if k >= 1:
                assert fval - fs <= (12.0 / 5.0) * 4.0 * H * R2 / k ** 2 + 1e-10

    def test_catalyst_beats_plain_gd(self):
        # wrapping fixed-step descent as the inner solver produces an
        # accelerated envelope that beats plain descent on the same budget
        rng = np.random.default_rng(16)
        n = 30
        w = np.linspace(0.001, 1.0, n)
        qp = QuadraticProblem(np.diag(w), rng.standard_normal(n))
        xs = qp.solution()
        fs = qp.value(xs)
        x0 = np.zeros(n)
        H = 0.05
        oracle_meta = qp.oracle()
        rep_meta = accelerated_meta_p1(oracle_meta, H=H, x0=x0, K=40, L1g=qp.L)
        budget = oracle_meta.calls
        oracle_gd = qp.oracle()
        rep_gd = gd_fixed(oracle_gd, qp.L, x0, budget)
        assert rep_meta.fval - fs < rep_gd.fval - fs
