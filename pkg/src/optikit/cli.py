"""Benchmark and verification harness.

  optikit run    --method agd --problem quad.json --N 200 --out trace.csv
  optikit lp     --instance lp.json --eps 1e-6
  optikit app    dopt --instance design.json --eps 1e-2
  optikit verify --trace trace.csv --theorem thm2.14 --L 1 --R 1 --fstar 0

Exit codes: 0 converged / pass, 1 verification fail, 2 iteration budget
exhausted, 3 invalid input.  Identical configuration and seed produce a
byte-identical trace CSV up to the wall-clock column.
"""

import argparse
import json
import math
import sys

import numpy as np

from . import autodiff, cutting_plane, frank_wolfe, gradient, subgradient
from .core import (FirstOrderOracle, InputError, OptikitError, Status, Trace,
                   load_problem, smooth_model)
from .geometry import (ANormGeometry, Box, EntropyGeometry, EuclideanGeometry,
                       L1Ball, L2Ball, Simplex)

METHODS = ("gd", "cheb", "hb", "cg", "agd", "agd-adaptive", "universal",
           "restart", "meta", "subgrad", "switching", "fw")


def _geometry(name, n):
    if name == "euclid":
        return EuclideanGeometry()
    if name == "entropy":
        return EntropyGeometry()
    if name == "anorm":
        return ANormGeometry(n)
    raise InputError("unknown geometry %r" % name)


def _feasible_set(spec):
    if spec is None or spec == "rn":
        return None
    if spec == "simplex":
        return Simplex()
    if spec.startswith("l1:"):
        return L1Ball(float(spec[3:]))
    if spec.startswith("l2:"):
        return L2Ball(float(spec[3:]))
    if spec.startswith("box:"):
        lo, hi = (float(v) for v in spec[4:].split(","))
        return None, lo, hi  # handled by callers needing bounds
    raise InputError("unknown set %r" % spec)


def _oracle_from_problem(prob):
    kind = prob.get("kind")
    if kind == "quadratic":
        A = np.atleast_2d(prob["A"])
        qp = gradient.QuadraticProblem(A, prob["b"],
                                       mu=prob.get("mu"), L=prob.get("L"))
        x0 = prob.get("x0")
        x0 = np.zeros(qp.n) if x0 is None else np.asarray(x0, dtype=float)
        return qp.oracle(), x0, qp
    if kind == "abs":
        n = int(prob.get("n", 1))
        x0 = prob.get("x0")
        x0 = np.ones(n) if x0 is None else np.asarray(x0, dtype=float)

        def func(x):
            return float(np.sum(np.abs(x))), np.sign(x)

        return FirstOrderOracle(func, M=math.sqrt(n),
                                optimum=(np.zeros(n), 0.0)), x0, None
    if kind == "expression":
        graph = autodiff.parse_prefix(prob["expr"])
        x0 = prob.get("x0")
        x0 = np.zeros(graph.n) if x0 is None else np.asarray(x0, dtype=float)

        def func(x):
            return graph.reverse_mode(x)

        return FirstOrderOracle(func), x0, None
    if kind == "l1ls":
        S = np.atleast_2d(prob["S"])
        Y = np.asarray(prob["Y"], dtype=float)
        r = float(prob.get("r", 1.0))
        target = Y / r

        def func(x):
            resid = S @ x - target
            return 0.5 * float(resid @ resid), S.T @ resid

        x0 = np.zeros(S.shape[1])
        x0[0] = 1.0
        return FirstOrderOracle(func), x0, None
    raise InputError("unsupported problem kind %r" % kind)


def run(config):
    """Execute one method x problem cell; returns (exit_code, report|None)."""
    try:
        prob = load_problem(config.problem)
        oracle, x0, qp = _oracle_from_problem(prob)
        method = config.method
        geom = _geometry(config.geometry, x0.size)
        N = config.N
        eps = config.eps
        if method == "gd":
            L = config.L0 or (oracle.L or 1.0)
            rep = gradient.gd_fixed(oracle, L, x0, N or 100, geometry=geom,
                                    eps=eps)
        elif method in ("cheb", "hb", "cg"):
            if qp is None:
                raise InputError("%s needs a quadratic problem" % method)
            fn = {"cheb": gradient.chebyshev, "hb": gradient.heavy_ball,
                  "cg": gradient.conjugate_gradient}[method]
            x = fn(qp, x0, N or qp.n)
            trace = Trace().record(0, qp.value(x), oracle_calls=N or qp.n)
            from .core import Report
            rep = Report(Status.CONVERGED, x, qp.value(x), trace=trace)
        elif method == "agd":
            L = config.L0 or (oracle.L or 1.0)
            rep = gradient.adaptive_accelerated(smooth_model(oracle), geom, x0,
                                                N or 100, fixed_L=L, eps=eps)
        elif method == "agd-adaptive":
            rep = gradient.adaptive_accelerated(smooth_model(oracle), geom, x0,
                                                N or 100, L0=config.L0 or 1.0,
                                                eps=eps)
        elif method == "universal":
            rep = gradient.universal_solve(oracle, eps or 1e-6, x0,
                                           geometry=geom,
                                           L0=config.L0 or 1.0,
                                           N_max=N or 100000)
        elif method == "restart":
            if config.mu is None:
                raise InputError("restart needs --mu")
            L = config.L0 or (oracle.L or 1.0)
            R = prob.get("R", 1.0)
            rep = gradient.restart_strongly_convex(
                smooth_model(oracle), config.mu, x0, eps or 1e-6, geom, L,
                R=float(R))
        elif method == "meta":
            H = config.L0 or (oracle.L or 1.0)
            rep = gradient.accelerated_meta_p1(oracle, H, x0, N or 50,
                                               L1g=oracle.L or H, eps=eps)
        elif method == "subgrad":
            M = oracle.M or 1.0
            R = float(prob.get("R", 1.0))
            policy = subgradient.StepPolicy(config.policy or "fixed_R",
                                            R=R, M=M, eps=eps, N=N or 100)
            rep = subgradient.subgradient_descent(oracle, x0, policy,
                                                  N=N or 100, eps=eps)
        elif method == "fw":
            spec = config.set or "l1:1"
            if spec == "simplex":
                lmo = frank_wolfe.lmo_simplex()
                x0 = np.zeros(x0.size)
                x0[0] = 1.0
            elif spec.startswith("l1:"):
                lmo = frank_wolfe.lmo_l1(float(spec[3:]))
                y0, _ = lmo.solve(np.ones(x0.size))
                x0 = y0
            elif spec.startswith("box:"):
                lo, hi = (float(v) for v in spec[4:].split(","))
                lmo = frank_wolfe.lmo_box(np.full(x0.size, lo),
                                          np.full(x0.size, hi))
                x0, _ = lmo.solve(np.ones(x0.size))
            else:
                raise InputError("unknown FW set %r" % spec)
            rep = frank_wolfe.frank_wolfe(oracle, lmo, x0, N=N, eps=eps)
        elif method == "switching":
            raise InputError("switching runs through the truss app or the "
                             "library API (needs a constraint oracle)")
        else:
            raise InputError("unknown method %r" % config.method)
    except (OptikitError, OSError, KeyError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 3, None
    if config.out:
        rep.trace.to_csv(config.out)
    else:
        sys.stdout.write(rep.trace.to_csv())
    code = {Status.CONVERGED: 0, Status.ITER_BUDGET: 2,
            Status.INFEASIBLE: 2, Status.ERROR: 3}[rep.status]
    return code, rep


# -- theorem bound registry -----------------------------------------------------

def _need(params, *names):
    missing = [n for n in names if params.get(n) is None]
    if missing:
        raise InputError("missing parameters: %s" % ", ".join(missing))
    return [params[n] for n in names]


def verify_bounds(trace, theorem, params):
    """Check a recorded trace against a quoted convergence bound.

    Returns (ok, first_violation_index, description).  Per-iteration
    theorems check every row; budget-style theorems check the terminal row.
    """
    rows = trace.rows
    if not rows:
        raise InputError("empty trace")
    fstar = params.get("fstar")

    def per_row(bound_fn, label):
        if fstar is None:
            raise InputError("this theorem needs --fstar")
        for i, row in enumerate(rows):
            k, fval = row[0], row[1]
            if not math.isfinite(fval):
                continue
            if fval - fstar > bound_fn(k) * (1.0 + 1e-12) + 1e-15:
                return False, i, label
        return True, None, label

    if theorem == "thm2.8":
        L, R = _need(params, "L", "R")
        return per_row(lambda k: 2.0 * L * R * R / (k + 2.0), "f-gap <= 2LR^2/(k+2)")
    if theorem == "thm2.14":
        L, R = _need(params, "L", "R")
        return per_row(lambda k: 8.0 * L * R * R / (k + 2.0) ** 2,
                       "f-gap <= 8LR^2/(N+1)^2")
    if theorem == "thm2.13":
        L, R = _need(params, "L", "R")
        return per_row(lambda k: 2.0 * L * R * R / (k + 1.0),
                       "f-gap <= 2LR^2/N")
    if theorem == "eq2.18":
        M, R = _need(params, "M", "R")
        if fstar is None:
            raise InputError("this theorem needs --fstar")
        k, fval = rows[-1][0], rows[-1][1]
        ok = fval - fstar <= M * R / math.sqrt(k + 1.0) + 1e-12
        return ok, (None if ok else len(rows) - 1), "final f-gap <= MR/sqrt(N)"
    if theorem == "thm2.2":
        M, R, eps, n = _need(params, "M", "R", "eps", "n")
        cap = math.ceil(2.0 * n * n * math.log(M * R / eps))
        calls = rows[-1][5]
        ok = calls <= cap
        if fstar is not None:
            ok = ok and rows[-1][1] - fstar <= eps * (1.0 + 1e-9)
        return ok, (None if ok else len(rows) - 1), \
            "oracle calls <= 2n^2 ln(MR/eps)"
    if theorem == "thm2.16":
        mu, R = _need(params, "mu", "R")
        return per_row(lambda k: mu * R * R / 2.0 ** (k + 2.0),
                       "stage gap <= mu R^2 / 2^(k+1)")
    raise InputError("unknown theorem id %r" % theorem)


# -- applications ----------------------------------------------------------------

def _run_app(args):
    from . import apps
    prob = load_problem(args.instance)
    eps = args.eps or 1e-6
    out = {}
    if args.app == "dopt":
        inst = apps.DesignInstance(np.atleast_2d(prob["H"]))
        x, rep = apps.dopt_design(inst, eps)
        out = {"x": x.tolist(), "objective": rep.fval, "gap": rep.gap}
    elif args.app == "ot":
        inst = apps.TransportInstance(np.atleast_2d(prob["C"]), prob["mu"],
                                      prob["nu"], float(prob["r"]))
        value, lam, plan = apps.entropic_ot_dual(inst, tol=eps)
        out = {"value": value, "lam": lam.tolist(), "plan": plan.tolist()}
        rep = None
    elif args.app == "barycenter":
        nus = [np.asarray(v, dtype=float) for v in prob["nus"]]
        mu, rep = apps.barycenter(nus, np.atleast_2d(prob["C"]),
                                  float(prob["r"]), eps)
        out = {"barycenter": mu.tolist(), "gap": rep.gap}
    elif args.app == "truss":
        bars = [(np.asarray(i, dtype=int), np.asarray(v, dtype=float))
                for i, v in prob["bars"]]
        inst = apps.TrussInstance(bars, prob["f"], float(prob["M"]))
        masses, x, rep = apps.truss_solve(inst, eps,
                                          R_y=float(prob.get("R_y", 10.0)))
        out = {"masses": masses.tolist(), "x": x.tolist(),
               "compliance": rep.fval, "gap": rep.gap}
    elif args.app == "meb":
        center, radius = apps.min_enclosing_ball(np.atleast_2d(prob["points"]),
                                                 eps=eps)
        out = {"center": center.tolist(), "radius": radius}
        rep = None
    elif args.app == "signal":
        rep = apps.l1_signal_approx(np.atleast_2d(prob["S"]), prob["Y"],
                                    r=float(prob.get("r", 1.0)), eps=eps,
                                    N=args.N)
        out = {"x": rep.x.tolist(), "objective": rep.fval, "gap": rep.gap}
    elif args.app == "lasso":
        x, rep = apps.lasso_entropy_simplex(np.atleast_2d(prob["A"]),
                                            prob["b"], float(prob["mu"]), eps)
        out = {"x": x.tolist(), "objective": rep.fval,
               "regime": rep.extras["regime"]}
    else:
        raise InputError("unknown app %r" % args.app)
    if args.out and rep is not None:
        rep.trace.to_csv(args.out)
    json.dump(out, sys.stdout, indent=1)
    sys.stdout.write("\n")
    if rep is not None and rep.status is Status.ITER_BUDGET:
        return 2
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="optikit",
                                     description="first-order toolkit harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a method on a problem file")
    p_run.add_argument("--method", required=True, choices=METHODS)
    p_run.add_argument("--problem", required=True)
    p_run.add_argument("--eps", type=float)
    p_run.add_argument("--N", type=int)
    p_run.add_argument("--geometry", default="euclid",
                       choices=("euclid", "entropy", "anorm"))
    p_run.add_argument("--L0", type=float)
    p_run.add_argument("--mu", type=float)
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--policy", choices=subgradient.StepPolicy.VARIANTS)
    p_run.add_argument("--set", dest="set")
    p_run.add_argument("--out")

    p_lp = sub.add_parser("lp", help="solve an LP instance by the ellipsoid "
                                     "pipeline")
    p_lp.add_argument("--instance", required=True)
    p_lp.add_argument("--eps", type=float, default=1e-6)
    p_lp.add_argument("--feasibility-only", action="store_true")

    p_app = sub.add_parser("app", help="run an application reproduction")
    p_app.add_argument("app", choices=("dopt", "ot", "barycenter", "truss",
                                       "meb", "signal", "lasso"))
    p_app.add_argument("--instance", required=True)
    p_app.add_argument("--eps", type=float)
    p_app.add_argument("--N", type=int)
    p_app.add_argument("--out")

    p_ver = sub.add_parser("verify", help="check a trace against a theorem "
                                          "bound")
    p_ver.add_argument("--trace", required=True)
    p_ver.add_argument("--theorem", required=True)
    for name in ("L", "R", "M", "mu", "eps", "fstar"):
        p_ver.add_argument("--%s" % name, type=float)
    p_ver.add_argument("--n", type=int)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            code, _ = run(args)
            return code
        if args.command == "lp":
            inst = load_problem(args.instance)
            lp = cutting_plane.LPInstance(
                np.atleast_2d(inst["A"]), inst["b"],
                c=inst.get("c"), R=float(inst["R"]))
            if args.feasibility_only or lp.c is None:
                rep = cutting_plane.lp_feasibility(lp, args.eps)
                payload = {"status": rep.status.value}
                if rep.x is not None:
                    payload["x"] = rep.x.tolist()
            else:
                rep = cutting_plane.lp_solve(lp, args.eps)
                payload = {"status": rep.status.value, "value": rep.fval,
                           "x": rep.x.tolist()}
            json.dump(payload, sys.stdout, indent=1)
            sys.stdout.write("\n")
            return {Status.CONVERGED: 0, Status.ITER_BUDGET: 2,
                    Status.INFEASIBLE: 2, Status.ERROR: 3}[rep.status]
        if args.command == "app":
            return _run_app(args)
        if args.command == "verify":
            trace = Trace.from_csv(args.trace)
            params = {k: getattr(args, k) for k in
                      ("L", "R", "M", "mu", "eps", "fstar", "n")}
            ok, idx, label = verify_bounds(trace, args.theorem, params)
            for i, row in enumerate(trace.rows):
                if idx is not None and i == idx:
                    print("row %d: FAIL (%s)" % (i, label))
                    break
            print("%s: %s" % (args.theorem, "pass" if ok else
                              "fail at row %s" % idx))
            return 0 if ok else 1
    except (OptikitError, OSError, KeyError, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 3
    return 3


if __name__ == "__main__":
    sys.exit(main())
