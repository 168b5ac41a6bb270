"""Computational graphs with forward- and reverse-mode differentiation.

Graphs are static: built once (through the operator API or the prefix-text
reader), evaluated many times.  Edge partials are cached during the forward
pass, so the backward sweep only multiplies and accumulates.
"""

import math

import numpy as np

from .core import EvaluationError, InputError

_UNARY = {
    "sin": (math.sin, lambda v: math.cos(v)),
    "cos": (math.cos, lambda v: -math.sin(v)),
    "exp": (math.exp, lambda v: math.exp(v)),
    "neg": (lambda v: -v, lambda v: -1.0),
}

# elementary-operation accounting: evaluation cost per node (division is a
# reciprocal plus a multiply, pow goes through exp/log) and the extra
# arithmetic needed for its edge partials (copies and +/-1 are free)
_EVAL_COST = {"+": 1, "-": 1, "*": 1, "/": 2, "pow": 3, "sin": 1, "cos": 1,
              "exp": 1, "log": 1, "neg": 1}
_PARTIAL_COST = {"+": 0, "-": 0, "*": 0, "/": 1, "pow": 3, "sin": 1, "cos": 1,
                 "exp": 0, "log": 1, "neg": 0}


class Node:
    __slots__ = ("op", "parents", "value", "nid")

    def __init__(self, op, parents, nid):
        self.op = op
        self.parents = parents
        self.nid = nid


class CompGraph:
    """DAG of elementary operations with one scalar output.

    Nodes are stored in creation order, which is a topological order by
    construction.  Supported ops: var, const, +, -, *, /, pow, sin, cos,
    exp, log, neg.
    """

    def __init__(self, n_inputs):
        if n_inputs < 1:
            raise InputError("graph needs at least one input")
        self.n = int(n_inputs)
        self.nodes = []
        for i in range(self.n):
            self.nodes.append(Node("var", (i,), i))
        self.output = None

    def _add(self, op, parents):
        node = Node(op, tuple(parents), len(self.nodes))
        self.nodes.append(node)
        return node.nid

    def var(self, i):
        if not 0 <= i < self.n:
            raise InputError("input index out of range")
        return i

    def const(self, value):
        nid = self._add("const", ())
        self.nodes[nid].value = float(value)
        return nid

    def add(self, a, b):
        return self._add("+", (a, b))

    def sub(self, a, b):
        return self._add("-", (a, b))

    def mul(self, a, b):
        return self._add("*", (a, b))

    def div(self, a, b):
        return self._add("/", (a, b))

    def pow(self, a, b):
        return self._add("pow", (a, b))

    def sin(self, a):
        return self._add("sin", (a,))

    def cos(self, a):
        return self._add("cos", (a,))

    def exp(self, a):
        return self._add("exp", (a,))

    def log(self, a):
        return self._add("log", (a,))

    def neg(self, a):
        return self._add("neg", (a,))

    def set_output(self, nid):
        if not 0 <= nid < len(self.nodes):
            raise InputError("unknown node id")
        self.output = nid
        return self

    def _forward(self, x, want_partials):
        """Evaluate all nodes; optionally cache the edge partials.

        Returns (values, partials, op_count) where op_count counts node
        evaluations and partial computations as elementary operations.
        """
        x = np.asarray(x, dtype=float)
        if x.size != self.n:
            raise InputError("expected %d inputs" % self.n)
        vals = [0.0] * len(self.nodes)
        partials = [None] * len(self.nodes) if want_partials else None
        ops = 0
        for node in self.nodes:
            op = node.op
            if op == "var":
                vals[node.nid] = float(x[node.parents[0]])
                continue
            if op == "const":
                vals[node.nid] = node.value
                continue
            ops += _EVAL_COST[op]
            pv = [vals[p] for p in node.parents]
            try:
                if op == "+":
                    val = pv[0] + pv[1]
                    par = (1.0, 1.0)
                elif op == "-":
                    val = pv[0] - pv[1]
                    par = (1.0, -1.0)
                elif op == "*":
                    val = pv[0] * pv[1]
                    par = (pv[1], pv[0])
                elif op == "/":
                    if pv[1] == 0:
                        raise ZeroDivisionError("division by zero")
                    val = pv[0] / pv[1]
                    par = (1.0 / pv[1], -val / pv[1])
                elif op == "pow":
                    if pv[0] <= 0:
                        raise ValueError("pow needs a positive base here")
                    val = pv[0] ** pv[1]
                    par = (pv[1] * pv[0] ** (pv[1] - 1.0), val * math.log(pv[0]))
                elif op == "log":
                    if pv[0] <= 0:
                        raise ValueError("log of a nonpositive value")
                    val = math.log(pv[0])
                    par = (1.0 / pv[0],)
                elif op in _UNARY:
                    fn, dfn = _UNARY[op]
                    val = fn(pv[0])
                    par = (dfn(pv[0]),)
                else:
                    raise InputError("unknown op %r" % op)
            except (ValueError, OverflowError, ZeroDivisionError) as exc:
                raise EvaluationError("node %d (%s): %s" % (node.nid, op, exc),
                                      node_id=node.nid) from exc
            vals[node.nid] = float(val)
            if want_partials:
                partials[node.nid] = par
                ops += _PARTIAL_COST[op]  # partials cached in the forward pass
        return vals, partials, ops

    def evaluate(self, x):
        if self.output is None:
            raise InputError("graph has no output node")
        vals, _, _ = self._forward(x, want_partials=False)
        return vals[self.output]

    def forward_mode(self, x, direction):
        """Value plus the exact directional derivative <grad f, v>."""
        direction = np.asarray(direction, dtype=float)
        if direction.size != self.n:
            raise InputError("direction must have %d entries" % self.n)
        vals, _, _ = self._forward(x, want_partials=False)
        tangent = [0.0] * len(self.nodes)
        for node in self.nodes:
            op = node.op
            if op == "var":
                tangent[node.nid] = float(direction[node.parents[0]])
                continue
            if op == "const":
                continue
            pv = [vals[p] for p in node.parents]
            pt = [tangent[p] for p in node.parents]
            if op == "+":
                t = pt[0] + pt[1]
            elif op == "-":
                t = pt[0] - pt[1]
            elif op == "*":
                t = pt[0] * pv[1] + pv[0] * pt[1]
            elif op == "/":
                t = (pt[0] - vals[node.nid] * pt[1]) / pv[1]
            elif op == "pow":
                t = (pv[1] * pv[0] ** (pv[1] - 1.0) * pt[0]
                     + vals[node.nid] * math.log(pv[0]) * pt[1])
            elif op == "log":
                t = pt[0] / pv[0]
            else:
                t = _UNARY[op][1](pv[0]) * pt[0]
            tangent[node.nid] = t
        return vals[self.output], tangent[self.output]

    def reverse_mode(self, x, count_ops=False):
        """Value and full gradient in one backward sweep over the cached tape.

        With ``count_ops`` also returns (forward_ops, backward_ops) where
        backward_ops counts the forward evaluation, the cached edge partials
        and one accumulation per edge; the total is at most 5x the plain
        forward count by construction.
        """
        if self.output is None:
            raise InputError("graph has no output node")
        vals, partials, fwd_with_partials = self._forward(x, want_partials=True)
        adjoint = [0.0] * len(self.nodes)
        adjoint[self.output] = 1.0
        back_ops = fwd_with_partials
        grad = np.zeros(self.n)
        for node in reversed(self.nodes):
            a = adjoint[node.nid]
            if a == 0.0 and node.op != "var":
                continue
            if node.op == "var":
                grad[node.parents[0]] += a
                continue
            if node.op == "const":
                continue
            for parent, par in zip(node.parents, partials[node.nid]):
                adjoint[parent] += a * par
                back_ops += 2  # one multiply, one accumulate per edge
        if count_ops:
            _, _, fwd_plain = self._forward(x, want_partials=False)
            return vals[self.output], grad, fwd_plain, back_ops
        return vals[self.output], grad


def evaluate(graph, x):
    return graph.evaluate(x)


def forward_mode(graph, x, direction):
    return graph.forward_mode(x, direction)


def reverse_mode(graph, x):
    return graph.reverse_mode(x)


# -- prefix-expression reader ---------------------------------------------------

def _tokenize(text):
    return text.replace("(", " ( ").replace(")", " ) ").split()


def parse_prefix(text):
    """Build a graph from a prefix expression such as
    ``(+ (* x1 x2) (sin x1) (exp x2))``; x1 ... xn name the inputs."""
    tokens = _tokenize(text)
    if not tokens:
        raise InputError("empty expression")
    n = 0
    for tok in tokens:
        if tok.startswith("x") and tok[1:].isdigit():
            n = max(n, int(tok[1:]))
    if n == 0:
        raise InputError("expression references no inputs x1, x2, ...")
    graph = CompGraph(n)
    pos = 0

    def parse():
        nonlocal pos
        if pos >= len(tokens):
            raise InputError("unbalanced parentheses")
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            if pos >= len(tokens):
                raise InputError("unbalanced parentheses")
            op = tokens[pos]
            pos += 1
            args = []
            while pos < len(tokens) and tokens[pos] != ")":
                args.append(parse())
            if pos >= len(tokens):
                raise InputError("unbalanced parentheses")
            pos += 1
            return _apply(graph, op, args)
        if tok == ")":
            raise InputError("unbalanced parentheses")
        if tok.startswith("x") and tok[1:].isdigit():
            return graph.var(int(tok[1:]) - 1)
        return graph.const(float(tok))

    root = parse()
    if pos != len(tokens):
        raise InputError("trailing tokens in expression")
    return graph.set_output(root)


def _apply(graph, op, args):
    binary = {"+": graph.add, "-": graph.sub, "*": graph.mul, "/": graph.div,
              "pow": graph.pow}
    unary = {"sin": graph.sin, "cos": graph.cos, "exp": graph.exp,
             "log": graph.log, "neg": graph.neg}
    if op in binary:
        if len(args) < 2:
            raise InputError("%s needs at least 2 arguments" % op)
        out = args[0]
        for a in args[1:]:  # left fold for variadic + and *
            out = binary[op](out, a)
        return out
    if op in unary:
        if len(args) != 1:
            raise InputError("%s takes one argument" % op)
        return unary[op](args[0])
    raise InputError("unknown operator %r" % op)
