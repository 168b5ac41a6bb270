"""Truss topology optimization by the primal-dual switching method.

The stiffest-structure problem min <f, x> s.t. A(m) x = f, m >= 0,
<e, m> = M collapses to maximizing <f, y> under max_i |<a_i, y>| <= 1; the
switching subgradient method solves it while a lazy tournament tree keeps
the constraint maximum updatable in O(log d) per sparse step.
"""

import math

import numpy as np

from ..core import InputError, ModelMismatchError, Report, Status, Trace


class MaxTree:
    """Lazy binary tournament tree over a fixed number of leaves.

    Untouched leaves behave as zeros; the root is the exact maximum.  One
    leaf update rewrites at most ceil(log2(n_leaves)) internal nodes; the
    counter ``writes_last`` records the internal writes of the last update.
    """

    def __init__(self, n_leaves):
        if n_leaves < 1:
            raise InputError("need at least one leaf")
        self.n_leaves = int(n_leaves)
        self.depth = max(1, math.ceil(math.log2(self.n_leaves)))
        self.size = 2 ** self.depth
        self.nodes = {}
        self.writes_last = 0

    def update(self, leaf, value):
        if not 0 <= leaf < self.n_leaves:
            raise InputError("leaf index out of range")
        idx = self.size + leaf
        self.nodes[idx] = float(value)
        writes = 0
        idx //= 2
        while idx >= 1:
            left = self.nodes.get(2 * idx, 0.0)
            right = self.nodes.get(2 * idx + 1, 0.0)
            self.nodes[idx] = left if left >= right else right
            writes += 1
            idx //= 2
        self.writes_last = writes
        return self

    def max(self):
        return self.nodes.get(1, 0.0)

    def argmax(self):
        """A leaf attaining the maximum (untouched leaves count as zeros)."""
        idx = 1
        while idx < self.size:
            left = self.nodes.get(2 * idx, 0.0)
            right = self.nodes.get(2 * idx + 1, 0.0)
            idx = 2 * idx if left >= right else 2 * idx + 1
        return idx - self.size


def maxtree_update(tree, leaf, value):
    return tree.update(leaf, value)


def maxtree_max(tree):
    return tree.max()


class TrussInstance:
    """Sparse interaction vectors a_i, load f, total mass M, degree bound s."""

    def __init__(self, bars, f, M, n_dof=None, degree_bound=None):
        # bars: list of (indices, values) sparse vectors with <= 6 nonzeros
        self.bars = []
        max_idx = -1
        for idx, val in bars:
            idx = np.asarray(idx, dtype=int)
            val = np.asarray(val, dtype=float)
            if idx.size != val.size or idx.size == 0 or idx.size > 6:
                raise InputError("each bar vector needs 1..6 nonzeros")
            self.bars.append((idx, val))
            max_idx = max(max_idx, int(idx.max()))
        self.n_dof = int(n_dof) if n_dof is not None else max_idx + 1
        self.f = np.asarray(f, dtype=float)
        if self.f.size != self.n_dof:
            raise InputError("load vector must have n_dof entries")
        if M <= 0:
            raise InputError("total mass must be positive")
        self.M = float(M)
        touch = {}
        for idx, _ in self.bars:
            for i in idx:
                touch[i] = touch.get(i, 0) + 1
        self.degree = max(touch.values()) if touch else 0
        if degree_bound is not None and self.degree > degree_bound:
            raise InputError("node degree exceeds the declared bound")

    @property
    def d(self):
        return len(self.bars)

    def bar_dense(self, i):
        a = np.zeros(self.n_dof)
        idx, val = self.bars[i]
        a[idx] = val
        return a

    def stiffness(self, masses):
        A = np.zeros((self.n_dof, self.n_dof))
        for mi, (idx, val) in zip(masses, self.bars):
            A[np.ix_(idx, idx)] += mi * np.outer(val, val)
        return A


def truss_solve(instance, eps, R_y, N=None, refine=True):
    """Primal-dual switching solve; returns (masses, displacements, report).

    The certificate pair (y_hat, multipliers) comes with the closed-form
    dual value of the ball-constrained problem, so the reported gap bounds
    the suboptimality of <f, x> by twice the certificate gap.  With
    ``refine`` the multiplier support identifies the active bars and the
    optimum of the underlying LP is re-solved exactly on that active set
    (subgradient iterates locate the face, linear algebra finishes the job).
    Displacements always come from solving A(m*) x = f; a singular solve
    signals a structural mechanism.
    """
    if eps <= 0 or R_y <= 0:
        raise InputError("eps and R_y must be positive")
    f, M = instance.f, instance.M
    d, n_dof = instance.d, instance.n_dof
    M_f = float(np.linalg.norm(f))
    M_g = max(float(np.linalg.norm(val)) for _, val in instance.bars)
    Rbar2 = 2.0 * R_y * R_y
    if N is None:
        N = int(math.ceil(2.0 * max(M_f, M_g) ** 2 * Rbar2 / eps ** 2))
        if N > 5_000_000:
            raise InputError(
                "theorem budget %d is impractical at this eps; pass N "
                "explicitly or relax eps" % N)
    h_f = eps / M_f ** 2
    h_g = eps / M_g ** 2

    # incidence: dof -> bars touching it
    incidence = [[] for _ in range(n_dof)]
    for i, (idx, _) in enumerate(instance.bars):
        for j in idx:
            incidence[j].append(i)

    y = np.zeros(n_dof)
    scale = 1.0
    p_hat = np.zeros(d)           # <a_i, y> / scale
    tree = MaxTree(2 * d)         # leaves: +p_hat then -p_hat
    norm2 = 0.0
    f_idx = np.nonzero(f)[0]
    mu_counts = np.zeros(2 * d)
    prod_sum = np.zeros(n_dof)
    n_prod = 0
    trace = Trace()
    max_writes = 0

    def apply_sparse(idx, delta):
        nonlocal norm2
        for j, dj in zip(idx, delta):
            yj = y[j] * scale
            norm2 += 2.0 * yj * dj + dj * dj
            y[j] += dj / scale
            for i in incidence[j]:
                bidx, bval = instance.bars[i]
                pos = np.where(bidx == j)[0][0]
                p_hat[i] += bval[pos] * dj / scale
                tree.update(i, p_hat[i])
                tree.update(d + i, -p_hat[i])

    record_every = max(1, N // 200)
    for k in range(N):
        gval = scale * tree.max() - 1.0
        if gval <= eps:
            # productive: ascend on <f, y>
            prod_sum += y * scale
            n_prod += 1
            apply_sparse(f_idx, h_f * f[f_idx])
        else:
            leaf = tree.argmax()
            mu_counts[leaf] += 1
            i = leaf % d
            sign = 1.0 if leaf < d else -1.0
            bidx, bval = instance.bars[i]
            apply_sparse(bidx, -h_g * sign * bval)
        nrm = math.sqrt(max(norm2, 0.0))
        if nrm > R_y:
            scale *= R_y / nrm
            norm2 = R_y * R_y
        max_writes = max(max_writes, tree.writes_last)
        if k % record_every == 0:
            trace.record(k, -float(f @ y) * scale, feas=gval, oracle_calls=k + 1)

    if n_prod == 0:
        return None, None, Report(
            Status.ERROR, None, math.nan, trace=trace,
            message="InvalidPremise: no productive steps; the feasible set "
                    "may be empty inside the ball")
    y_hat = prod_sum / n_prod
    g_hat = max(abs(float(np.dot(val, y_hat[idx])))
                for idx, val in instance.bars) - 1.0
    if g_hat > 0:
        y_hat = y_hat / (1.0 + g_hat)  # shrink onto the feasible set (0 is Slater)
    mu_hat = (h_g / (h_f * n_prod)) * mu_counts
    lam = mu_hat[:d] + mu_hat[d:]
    # dual value of max <f,y> - sum mu_i g_i(y) over the ball:
    w = -f.copy()
    for i in range(d):
        if mu_hat[i] or mu_hat[d + i]:
            bidx, bval = instance.bars[i]
            w[bidx] += (mu_hat[i] - mu_hat[d + i]) * bval
    phi = -R_y * float(np.linalg.norm(w)) - float(np.sum(mu_hat))
    gap = -float(f @ y_hat) - phi  # gap of the minimization form

    lam_total = float(np.sum(lam))
    if lam_total <= 0:
        raise ModelMismatchError("empty multiplier set: constraint never "
                                 "active, the load is not resisted")
    if refine:
        lam_ref = _active_set_refine(instance, y_hat, lam)
        if lam_ref is not None:
            lam = lam_ref
            lam_total = float(np.sum(lam))
    masses = M * lam / lam_total
    A = instance.stiffness(masses)
    x, residual, rank, _ = np.linalg.lstsq(A, f, rcond=None)
    if float(np.linalg.norm(A @ x - f)) > 1e-8 * max(1.0, float(np.linalg.norm(f))):
        raise ModelMismatchError("structural mechanism: A(m) cannot carry f")
    status = Status.CONVERGED if gap <= eps else Status.ITER_BUDGET
    report = Report(status, x, float(f @ x), gap=gap, trace=trace,
                    y_hat=y_hat, multipliers=lam, compliance=float(f @ x),
                    max_tree_writes=max_writes, tree_depth=tree.depth,
                    productive=n_prod)
    return masses, x, report


def _active_set_refine(instance, y_hat, lam, rel_tol=0.15):
    """Re-solve f = sum sigma_i a_i lam_i on the bars the certificate singles
    out as active (|<a_i, y_hat>| near 1 and lam_i significant); returns the
    exact multipliers or None when the candidate fails its checks."""
    f = instance.f
    d = instance.d
    p = np.array([float(np.dot(val, y_hat[idx])) for idx, val in instance.bars])
    lam_cut = rel_tol * float(np.max(lam)) if np.max(lam) > 0 else 0.0
    active = [i for i in range(d)
              if abs(p[i]) >= 1.0 - rel_tol and lam[i] >= lam_cut]
    if not active:
        return None
    cols = np.stack([np.sign(p[i]) * instance.bar_dense(i) for i in active],
                    axis=1)
    sol, *_ = np.linalg.lstsq(cols, f, rcond=None)
    if float(np.linalg.norm(cols @ sol - f)) > 1e-9 * max(1.0, float(np.linalg.norm(f))):
        return None
    if np.any(sol < -1e-9):
        return None
    lam_new = np.zeros(d)
    for i, s in zip(active, np.maximum(sol, 0.0)):
        lam_new[i] = s
    if float(np.sum(lam_new)) <= 0:
        return None
    return lam_new
