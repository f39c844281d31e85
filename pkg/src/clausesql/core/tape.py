"""Reverse-mode autodiff tape over plain-Python vectors and matrices.

Values are held in Node objects: a vector is a list of floats, a matrix a
list of row lists, a scalar a float. All kernels are deterministic and
allocate fresh lists, so two identical forward passes are bit-identical.

Weight gradients for matvec are not accumulated inside the backward
closures; the (upstream, input) pairs are parked per parameter and folded
into one transposed matrix product at the end of backward(). That keeps
the hot loops inside sum(map(mul, ...)), which is the fastest elementwise
reduction CPython offers.
"""

from __future__ import annotations

import math
from operator import mul

__all__ = ["Node", "Tape", "DimensionError", "NumericError"]


class DimensionError(ValueError):
    """Raised when kernel operands disagree on shape."""


class NumericError(ArithmeticError):
    """Raised on non-finite values where finiteness is required."""


class Node:
    """One tape value: vector, matrix or scalar, plus its gradient slot.

    `req` marks nodes that (transitively) depend on a trainable parameter;
    closures are only recorded for those.
    """

    __slots__ = ("v", "g", "req")

    def __init__(self, v, req=False):
        self.v = v
        self.g = None
        self.req = req

    def __repr__(self):
        if isinstance(self.v, float):
            return f"Node(scalar {self.v:.6g})"
        if self.v and isinstance(self.v[0], list):
            return f"Node(matrix {len(self.v)}x{len(self.v[0])})"
        return f"Node(vector {len(self.v)})"


def _dot(a, b):
    return sum(map(mul, a, b))


def _acc_vec(node, delta):
    g = node.g
    if g is None:
        node.g = list(delta)
    else:
        node.g = [x + y for x, y in zip(g, delta)]


def _acc_scaled(node, s, vec):
    g = node.g
    if g is None:
        node.g = [s * x for x in vec]
    else:
        node.g = [x + s * y for x, y in zip(g, vec)]


def _sigmoid(x):
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


class Tape:
    """Records primitive ops so backward() can replay them in reverse.

    Construct with record=False for inference: values are computed but no
    closures are kept.
    """

    def __init__(self, record=True):
        self.record = record
        self._back = []
        # id(param) -> (param, [upstream vecs], [input vecs]) for deferred
        # matvec weight gradients.
        self._pending = {}

    # ------------------------------------------------------------------
    # bookkeeping

    def backward(self, loss):
        """Propagate d(loss)/d(node) into .g of every participating node."""
        if not isinstance(loss.v, float):
            raise DimensionError("backward seed must be a scalar node")
        loss.g = 1.0
        for fn in reversed(self._back):
            fn()
        for param, gs, xs in self._pending.values():
            self._fold_matvec_grads(param, gs, xs)
        self._pending.clear()

    @staticmethod
    def _fold_matvec_grads(param, gs, xs):
        # dW = sum_u outer(g_u, x_u), computed as one G^T X style product:
        # dW[i][j] = dot(column i of G, column j of X).
        gcols = list(zip(*gs))
        xcols = list(zip(*xs))
        if param.g is None:
            param.g = [[_dot(gc, xc) for xc in xcols] for gc in gcols]
        else:
            param.g = [
                [w + _dot(gc, xc) for w, xc in zip(grow, xcols)]
                for grow, gc in zip(param.g, gcols)
            ]

    def _park(self, param, g, x):
        slot = self._pending.get(id(param))
        if slot is None:
            self._pending[id(param)] = (param, [g], [x])
        else:
            slot[1].append(g)
            slot[2].append(x)

    # ------------------------------------------------------------------
    # primitive ops

    def lookup(self, table, idx):
        """Row `idx` of an embedding matrix node."""
        out = Node(list(table.v[idx]), table.req)
        if self.record and out.req:

            def back():
                if out.g is not None:
                    if table.g is None:
                        table.g = [None] * len(table.v)
                    row = table.g[idx]
                    if row is None:
                        table.g[idx] = list(out.g)
                    else:
                        table.g[idx] = [a + b for a, b in zip(row, out.g)]

            self._back.append(back)
        return out

    def matvec(self, W, x):
        """W @ x for a matrix node W (rows x cols) and vector node x."""
        xv = x.v
        if len(W.v[0]) != len(xv):
            raise DimensionError(
                f"matvec: {len(W.v)}x{len(W.v[0])} @ vector of {len(xv)}"
            )
        out = Node([_dot(row, xv) for row in W.v], W.req or x.req)
        if self.record and out.req:
            Wv = W.v

            def back():
                g = out.g
                if g is None:
                    return
                if x.req:
                    # dL/dx = W^T g; transpose via zip is cheap relative
                    # to the dot products.
                    _acc_vec(x, [_dot(col, g) for col in zip(*Wv)])
                if W.req:
                    self._park(W, g, xv)

            self._back.append(back)
        return out

    def add(self, a, b):
        if len(a.v) != len(b.v):
            raise DimensionError(f"add: {len(a.v)} vs {len(b.v)}")
        out = Node([x + y for x, y in zip(a.v, b.v)], a.req or b.req)
        if self.record and out.req:

            def back():
                g = out.g
                if g is None:
                    return
                if a.req:
                    _acc_vec(a, g)
                if b.req:
                    _acc_vec(b, g)

            self._back.append(back)
        return out

    def add_const(self, a, c):
        """a + c for a constant list c (no gradient into c)."""
        out = Node([x + y for x, y in zip(a.v, c)], a.req)
        if self.record and out.req:

            def back():
                if out.g is not None:
                    _acc_vec(a, out.g)

            self._back.append(back)
        return out

    def mul(self, a, b):
        if len(a.v) != len(b.v):
            raise DimensionError(f"mul: {len(a.v)} vs {len(b.v)}")
        out = Node([x * y for x, y in zip(a.v, b.v)], a.req or b.req)
        if self.record and out.req:
            av, bv = a.v, b.v

            def back():
                g = out.g
                if g is None:
                    return
                if a.req:
                    _acc_vec(a, [x * y for x, y in zip(g, bv)])
                if b.req:
                    _acc_vec(b, [x * y for x, y in zip(g, av)])

            self._back.append(back)
        return out

    def mul_const(self, a, c):
        """Hadamard product with a constant list (dropout masks)."""
        out = Node([x * y for x, y in zip(a.v, c)], a.req)
        if self.record and out.req:

            def back():
                if out.g is not None:
                    _acc_vec(a, [x * y for x, y in zip(out.g, c)])

            self._back.append(back)
        return out

    def sigmoid(self, a):
        out = Node([_sigmoid(x) for x in a.v], a.req)
        if self.record and out.req:
            ov = out.v

            def back():
                if out.g is not None:
                    _acc_vec(a, [g * y * (1.0 - y) for g, y in zip(out.g, ov)])

            self._back.append(back)
        return out

    def tanh(self, a):
        out = Node([math.tanh(x) for x in a.v], a.req)
        if self.record and out.req:
            ov = out.v

            def back():
                if out.g is not None:
                    _acc_vec(a, [g * (1.0 - y * y) for g, y in zip(out.g, ov)])

            self._back.append(back)
        return out

    def narrow(self, a, start, length):
        """Contiguous slice of a vector node."""
        out = Node(a.v[start : start + length], a.req)
        if self.record and out.req:
            n = len(a.v)

            def back():
                g = out.g
                if g is None:
                    return
                full = [0.0] * n
                full[start : start + length] = g
                _acc_vec(a, full)

            self._back.append(back)
        return out

    def concat(self, a, b):
        out = Node(a.v + b.v, a.req or b.req)
        if self.record and out.req:
            na = len(a.v)

            def back():
                g = out.g
                if g is None:
                    return
                if a.req:
                    _acc_vec(a, g[:na])
                if b.req:
                    _acc_vec(b, g[na:])

            self._back.append(back)
        return out

    def dots_cols(self, a, cols):
        """[a . c for c in cols]: attention scores of one query vector
        against a list of column vector nodes."""
        av = a.v
        out = Node([_dot(av, c.v) for c in cols], True)
        if self.record:

            def back():
                g = out.g
                if g is None:
                    return
                if a.req:
                    acc = None
                    for gi, c in zip(g, cols):
                        if acc is None:
                            acc = [gi * x for x in c.v]
                        else:
                            acc = [y + gi * x for y, x in zip(acc, c.v)]
                    _acc_vec(a, acc)
                for gi, c in zip(g, cols):
                    if c.req:
                        _acc_scaled(c, gi, av)

            self._back.append(back)
        return out

    def wsum_cols(self, cols, w):
        """sum_i w[i] * cols[i]: weighted sum of column vector nodes."""
        wv = w.v
        if len(wv) != len(cols):
            raise DimensionError(f"wsum_cols: {len(wv)} weights, {len(cols)} columns")
        acc = [wv[0] * x for x in cols[0].v]
        for wi, c in zip(wv[1:], cols[1:]):
            acc = [y + wi * x for y, x in zip(acc, c.v)]
        out = Node(acc, True)
        if self.record:

            def back():
                g = out.g
                if g is None:
                    return
                if w.req:
                    _acc_vec(w, [_dot(g, c.v) for c in cols])
                for wi, c in zip(wv, cols):
                    if c.req:
                        _acc_scaled(c, wi, g)

            self._back.append(back)
        return out

    def softmax(self, a):
        """Max-subtracted stable softmax over a vector node."""
        v = a.v
        if not v:
            raise DimensionError("softmax of empty vector")
        m = max(v)
        if not math.isfinite(m):
            raise NumericError("softmax over non-finite logits")
        exps = [math.exp(x - m) for x in v]
        z = sum(exps)
        out = Node([e / z for e in exps], a.req)
        if self.record and out.req:
            ov = out.v

            def back():
                g = out.g
                if g is None:
                    return
                s = _dot(g, ov)
                _acc_vec(a, [y * (gi - s) for gi, y in zip(g, ov)])

            self._back.append(back)
        return out

    def cross_entropy(self, probs, gold):
        """-log(probs[gold]) with the input clamped at 1e-12."""
        if not 0 <= gold < len(probs.v):
            raise DimensionError(
                f"gold index {gold} out of range for {len(probs.v)} classes"
            )
        p = probs.v[gold]
        clamped = p if p > 1e-12 else 1e-12
        out = Node(-math.log(clamped), probs.req)
        if self.record and out.req:

            def back():
                g = out.g
                if g is None or p <= 1e-12:
                    return
                delta = [0.0] * len(probs.v)
                delta[gold] = -g / p
                _acc_vec(probs, delta)

            self._back.append(back)
        return out

    def pick(self, a, idx):
        """Entry idx of a vector node, as a scalar node."""
        out = Node(a.v[idx], a.req)
        if self.record and out.req:
            n = len(a.v)

            def back():
                if out.g is not None:
                    delta = [0.0] * n
                    delta[idx] = out.g
                    _acc_vec(a, delta)

            self._back.append(back)
        return out

    def sum_vec(self, a):
        """Sum of a vector node's entries, as a scalar node."""
        out = Node(math.fsum(a.v), a.req)
        if self.record and out.req:
            n = len(a.v)

            def back():
                if out.g is not None:
                    _acc_vec(a, [out.g] * n)

            self._back.append(back)
        return out

    def sum_scalars(self, nodes):
        out = Node(math.fsum(n.v for n in nodes), any(n.req for n in nodes))
        if self.record and out.req:

            def back():
                g = out.g
                if g is None:
                    return
                for n in nodes:
                    if n.req:
                        n.g = g if n.g is None else n.g + g

            self._back.append(back)
        return out

    def scale(self, a, s):
        out = Node([s * x for x in a.v], a.req)
        if self.record and out.req:

            def back():
                if out.g is not None:
                    _acc_vec(a, [s * x for x in out.g])

            self._back.append(back)
        return out
