"""Oracle abstractions, inexact models, noisy-oracle wrappers and run traces."""

import enum
import json
import time

import numpy as np


class OptikitError(Exception):
    pass


class InputError(OptikitError, ValueError):
    """Caller violated an argument contract."""


class DomainError(OptikitError, ValueError):
    """Point outside the domain of an operation (e.g. entropy gradient at 0)."""


class UnsupportedSetError(OptikitError, ValueError):
    """Feasible set not handled by the requested operation."""


class ProtocolError(OptikitError, RuntimeError):
    """An oracle answered inconsistently with its declared contract."""


class ModelMismatchError(OptikitError, RuntimeError):
    """Adaptive smoothness search diverged: declared model does not hold."""


class NumericalRankError(OptikitError, RuntimeError):
    """A linear system that theory promises solvable turned out inconsistent."""


class EvaluationError(OptikitError, ArithmeticError):
    """Elementary-operation failure during graph evaluation."""

    def __init__(self, message, node_id=None):
        super().__init__(message)
        self.node_id = node_id


def as_vector(x):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        x = x.reshape(-1)
    if not np.all(np.isfinite(x)):
        raise InputError("vector has non-finite entries")
    return x


class FirstOrderOracle:
    """Evaluation of f and a (sub)gradient at a point, with smoothness metadata.

    Parameters
    ----------
    func : callable
        x -> (value, subgradient).
    L, M, mu : float, optional
        Lipschitz constant of the gradient, Lipschitz constant of the value,
        strong convexity constant.
    holder : (nu, L_nu), optional
        Hoelder continuity of the (sub)gradient.
    optimum : (x_star, f_star), optional
        Known minimizer, used by tests and certified-gap reporting.
    """

    def __init__(self, func, L=None, M=None, mu=None, holder=None, optimum=None,
                 name=""):
        self._func = func
        self.L = L
        self.M = M
        self.mu = mu
        self.holder = holder
        self.name = name
        self.calls = 0
        if optimum is not None:
            x_star, f_star = optimum
            optimum = (as_vector(x_star), float(f_star))
        self.optimum = optimum

    def eval(self, x):
        self.calls += 1
        value, grad = self._func(np.asarray(x, dtype=float))
        return float(value), np.asarray(grad, dtype=float)

    def value(self, x):
        return self.eval(x)[0]

    def grad(self, x):
        return self.eval(x)[1]

    @property
    def f_star(self):
        return None if self.optimum is None else self.optimum[1]

    @property
    def x_star(self):
        return None if self.optimum is None else self.optimum[0]


class ModelResponse:
    """One model query: value estimate plus a convex model with subgradients.

    ``psi(x)`` must vanish at the query point; ``psi_grad(x)`` returns a
    subgradient of the model at ``x``.  When the model is linear (plus an
    optional entropy composite tracked on the oracle), ``grad_at_y`` exposes
    the linear part so geometries can take exact prox steps.
    """

    def __init__(self, value, psi, psi_grad, y, grad_at_y=None):
        self.value = float(value)
        self.psi = psi
        self.psi_grad = psi_grad
        self.y = np.asarray(y, dtype=float)
        self.grad_at_y = None if grad_at_y is None else np.asarray(grad_at_y,
                                                                   dtype=float)


class ModelOracle:
    """Inexact-model oracle: maps y to (value estimate, convex model around y).

    ``delta`` is the model error, distinct from any gradient-norm error
    (the two are never converted into each other implicitly).
    """

    def __init__(self, model_fn, delta=0.0, L=None, composite_entropy=0.0,
                 true_oracle=None, optimum=None):
        if delta < 0:
            raise InputError("delta must be nonnegative")
        self._model_fn = model_fn
        self.delta = float(delta)
        self.L = L
        # coefficient of the sum(x log x) composite carried inside psi, if any;
        # geometries with closed-form entropy steps exploit it
        self.composite_entropy = float(composite_entropy)
        self.true_oracle = true_oracle
        self.calls = 0
        if optimum is not None:
            x_star, f_star = optimum
            optimum = (as_vector(x_star), float(f_star))
        self.optimum = optimum

    def at(self, y):
        self.calls += 1
        return self._model_fn(np.asarray(y, dtype=float))

    @property
    def f_star(self):
        return None if self.optimum is None else self.optimum[1]


def smooth_model(oracle, delta=0.0):
    """Standard (delta, L)-model of a smooth oracle: psi(x) = <grad f(y), x-y>."""

    def model_fn(y):
        fy, gy = oracle.eval(y)

        def psi(x):
            return float(np.dot(gy, np.asarray(x, dtype=float) - y))

        def psi_grad(x):
            return gy

        return ModelResponse(fy, psi, psi_grad, y, grad_at_y=gy)

    return ModelOracle(model_fn, delta=delta, L=oracle.L, true_oracle=oracle,
                       optimum=oracle.optimum)


def composite_entropy_model(oracle, mu, delta=0.0):
    """Model of F(x) = f(x) + mu*sum(x log x) keeping the entropy as composite.

    psi(x, y) = <grad f(y), x - y> + mu*(H(x) - H(y)), H(x) = sum x_i log x_i.
    Valid on the positive part of the simplex.
    """

    def entropy(x):
        x = np.asarray(x, dtype=float)
        xp = x[x > 0]
        return float(np.sum(xp * np.log(xp)))

    def model_fn(y):
        fy, gy = oracle.eval(y)
        hy = entropy(y)

        def psi(x):
            x = np.asarray(x, dtype=float)
            return float(np.dot(gy, x - y)) + mu * (entropy(x) - hy)

        def psi_grad(x):
            x = np.asarray(x, dtype=float)
            if np.any(x <= 0):
                raise DomainError("entropy subgradient needs positive coordinates")
            return gy + mu * (1.0 + np.log(x))

        return ModelResponse(fy + mu * hy, psi, psi_grad, y, grad_at_y=gy)

    L = oracle.L
    return ModelOracle(model_fn, delta=delta, L=L, composite_entropy=mu,
                       true_oracle=oracle)


def check_model(model, true_value, x, y, geometry, delta, L, tol=1e-9):
    """Check the two-sided model inequality 0 <= F(x) - F_d(y) - psi(x,y) <= L V(x,y) + delta.

    ``true_value`` is a callable giving the exact F(x) (test context).
    Tolerance is absolute, scaled by 1 + |F(x)|.
    """
    x = as_vector(x)
    y = as_vector(y)
    resp = model.at(y)
    fx = float(true_value(x))
    slack = tol * (1.0 + abs(fx))
    lhs = fx - resp.value - resp.psi(x)
    rhs_cap = L * geometry.bregman(x, y) + delta
    return (lhs >= -slack) and (lhs <= rhs_cap + slack)


def perturb_oracle(oracle, delta1=0.0, delta2=0.0, noise="constant",
                   direction=None, seed=0):
    """Wrap an oracle with bounded deterministic gradient/value noise.

    The returned oracle's gradient deviates from the true one by at most
    ``delta1`` in 2-norm, the value by at most ``delta2``.  ``noise`` is
    either "constant" (fixed offset ``delta1 * direction``, default
    direction -e_1) or "seeded" (pseudo-random unit direction per call,
    reproducible from ``seed``).
    """
    if delta1 < 0 or delta2 < 0:
        raise InputError("noise magnitudes must be nonnegative")
    if noise not in ("constant", "seeded"):
        raise InputError("noise rule must be 'constant' or 'seeded'")
    rng = np.random.default_rng(seed)

    def func(x):
        value, grad = oracle.eval(x)
        grad = np.array(grad, dtype=float)
        if delta1 > 0:
            if noise == "constant":
                d = np.zeros_like(grad)
                if direction is None:
                    d[0] = -1.0
                else:
                    d[:] = as_vector(direction)
                    nrm = np.linalg.norm(d)
                    if nrm == 0:
                        raise InputError("noise direction must be nonzero")
                    d /= nrm
            else:
                d = rng.standard_normal(grad.shape)
                d /= np.linalg.norm(d)
            grad = grad + delta1 * d
        if delta2 > 0:
            value = value + (delta2 if noise == "constant" else
                             delta2 * (2.0 * rng.random() - 1.0))
        return value, grad

    wrapped = FirstOrderOracle(func, L=oracle.L, M=oracle.M, mu=oracle.mu,
                               holder=oracle.holder, optimum=oracle.optimum,
                               name=oracle.name + "+noise")
    return wrapped


class Status(enum.Enum):
    CONVERGED = "Converged"
    ITER_BUDGET = "IterBudget"
    INFEASIBLE = "Infeasible"
    ERROR = "Error"


CSV_HEADER = "iter,fval,gap,feas,Lk,oracle_calls,wall_ns"


class Trace:
    """Append-only per-iteration records with nondecreasing oracle counters."""

    def __init__(self):
        self.rows = []
        self._t0 = time.monotonic_ns()

    def record(self, k, fval, gap=float("nan"), feas=float("nan"),
               Lk=float("nan"), oracle_calls=0, wall_ns=None):
        if wall_ns is None:
            wall_ns = time.monotonic_ns() - self._t0
        if self.rows and oracle_calls < self.rows[-1][5]:
            raise InputError("oracle-call counter must be nondecreasing")
        self.rows.append((int(k), float(fval), float(gap), float(feas),
                          float(Lk), int(oracle_calls), int(wall_ns)))
        return self

    def __len__(self):
        return len(self.rows)

    def fvals(self):
        return np.array([r[1] for r in self.rows])

    def gaps(self):
        return np.array([r[2] for r in self.rows])

    def to_csv(self, path=None):
        lines = [CSV_HEADER]
        for k, fval, gap, feas, Lk, calls, wall in self.rows:
            lines.append("%d,%.17g,%.17g,%.17g,%.17g,%d,%d"
                         % (k, fval, gap, feas, Lk, calls, wall))
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @staticmethod
    def from_csv(path):
        trace = Trace()
        with open(path) as fh:
            header = fh.readline().strip()
            if header != CSV_HEADER:
                raise InputError("unexpected trace header: %r" % header)
            for line in fh:
                k, fval, gap, feas, Lk, calls, wall = line.strip().split(",")
                trace.rows.append((int(k), float(fval), float(gap), float(feas),
                                   float(Lk), int(calls), int(wall)))
        return trace


class Report:
    """Terminal solver state: output point, status and the full trace."""

    def __init__(self, status, x, fval, gap=float("nan"), trace=None,
                 message="", **extras):
        self.status = status
        self.x = None if x is None else np.asarray(x, dtype=float)
        self.fval = float(fval) if fval is not None else float("nan")
        self.gap = float(gap)
        self.trace = trace if trace is not None else Trace()
        self.message = message
        self.extras = extras

    def __repr__(self):
        return ("Report(status=%s, fval=%.6g, gap=%.3g, iters=%d%s)"
                % (self.status.value, self.fval, self.gap, len(self.trace),
                   ", " + self.message if self.message else ""))


def finalize(trace, x, fval, eps=None, gap=float("nan"), message="", **extras):
    """Close a trace into a Report, deciding Converged vs IterBudget from the gap."""
    if eps is not None and np.isfinite(gap) and gap <= eps:
        status = Status.CONVERGED
    elif eps is None:
        status = Status.CONVERGED
    else:
        status = Status.ITER_BUDGET
    return Report(status, x, fval, gap=gap, trace=trace, message=message, **extras)


# -- problem instance files ---------------------------------------------------

def save_problem(path, kind, **fields):
    payload = {"kind": kind}
    for key, value in fields.items():
        if isinstance(value, np.ndarray):
            payload[key] = value.tolist()
        else:
            payload[key] = value
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)


def load_problem(path):
    """Load a JSON problem record (dimension, dense matrices/vectors, metadata)."""
    with open(path) as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError("malformed problem file: %s" % exc) from exc
    if not isinstance(payload, dict) or "kind" not in payload:
        raise InputError("problem file must be a JSON object with a 'kind' field")
    out = {}
    for key, value in payload.items():
        if isinstance(value, list):
            out[key] = np.asarray(value, dtype=float)
        else:
            out[key] = value
    return out
