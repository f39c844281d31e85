"""Named parameter store with Adam moments, plus the update step itself."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from .tape import Node, NumericError

log = logging.getLogger(__name__)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class Matrix:
    """Row-major dense matrix, the interchange form used at the store and
    serialization boundary. Vectors are rows x 1."""

    rows: int
    cols: int
    data: list

    def __post_init__(self):
        if len(self.data) != self.rows * self.cols:
            raise ValueError(
                f"data length {len(self.data)} != {self.rows}x{self.cols}"
            )

    @classmethod
    def from_value(cls, v):
        if isinstance(v, list) and v and isinstance(v[0], list):
            return cls(len(v), len(v[0]), [x for row in v for x in row])
        return cls(len(v), 1, list(v))

    def to_rows(self):
        c = self.cols
        return [self.data[i * c : (i + 1) * c] for i in range(self.rows)]


def _zeros_like(v):
    if v and isinstance(v[0], list):
        return [[0.0] * len(v[0]) for _ in v]
    return [0.0] * len(v)


class ParamStore:
    """name -> parameter Node, with per-parameter Adam moment buffers and a
    shared step counter. Insertion order is the canonical parameter order."""

    def __init__(self):
        self.params: dict[str, Node] = {}
        self.m: dict[str, list] = {}
        self.v: dict[str, list] = {}
        self.t = 0
        # Moments of a parameter stay all-zero until its first nonzero
        # gradient, so the update can be skipped for it entirely.
        self._active: dict[str, bool] = {}
        self._warned_missing: set[str] = set()

    def add(self, name, value):
        if name in self.params:
            raise ValueError(f"duplicate parameter {name!r}")
        node = Node(value, req=True)
        self.params[name] = node
        self.m[name] = _zeros_like(value)
        self.v[name] = _zeros_like(value)
        self._active[name] = False
        return node

    def __getitem__(self, name):
        return self.params[name]

    def __contains__(self, name):
        return name in self.params

    def names(self):
        return list(self.params)

    def zero_grads(self):
        for node in self.params.values():
            node.g = None

    def collect_grads(self):
        """Gradients accumulated on the parameter nodes, as a name -> value
        map. Embedding-style row gradients may hold None rows, which are
        densified here."""
        grads = {}
        for name, node in self.params.items():
            g = node.g
            if g is None:
                continue
            if isinstance(g, list) and g and (g[0] is None or isinstance(g[0], list)):
                width = len(node.v[0])
                g = [row if row is not None else [0.0] * width for row in g]
            grads[name] = g
        return grads


def clip_global_norm(grads, max_norm):
    """Scale the whole gradient map down so its global L2 norm is at most
    max_norm. Returns the pre-clip norm."""
    total = 0.0
    for g in grads.values():
        if g and isinstance(g[0], list):
            for row in g:
                total += sum(x * x for x in row)
        else:
            total += sum(x * x for x in g)
    norm = math.sqrt(total)
    if not math.isfinite(norm):
        raise NumericError("non-finite gradient norm")
    if norm > max_norm and norm > 0.0:
        s = max_norm / norm
        for name, g in grads.items():
            if g and isinstance(g[0], list):
                grads[name] = [[s * x for x in row] for row in g]
            else:
                grads[name] = [s * x for x in g]
    return norm


def _adam_row(p, m, v, g, lr, c1, c2):
    n = len(p)
    for j in range(n):
        gj = g[j]
        mj = ADAM_BETA1 * m[j] + (1.0 - ADAM_BETA1) * gj
        vj = ADAM_BETA2 * v[j] + (1.0 - ADAM_BETA2) * gj * gj
        m[j] = mj
        v[j] = vj
        p[j] -= lr * (mj / c1) / (math.sqrt(vj / c2) + ADAM_EPS)


def adam_step(store, grads, lr):
    """One bias-corrected Adam update over the store.

    Parameters without an entry in `grads` are treated as zero-gradient
    (logged once per name); their values are untouched because their
    moments never left zero.
    """
    if lr <= 0.0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    for name in grads:
        if name not in store.params:
            raise KeyError(f"gradient for unknown parameter {name!r}")
    store.t += 1
    c1 = 1.0 - ADAM_BETA1 ** store.t
    c2 = 1.0 - ADAM_BETA2 ** store.t
    for name, node in store.params.items():
        g = grads.get(name)
        if g is None:
            if not store._active[name]:
                if name not in store._warned_missing:
                    store._warned_missing.add(name)
                    log.debug("no gradient for %s; treating as zero", name)
                continue
            g = _zeros_like(node.v)
        else:
            store._active[name] = True
        p, m, v = node.v, store.m[name], store.v[name]
        if p and isinstance(p[0], list):
            for prow, mrow, vrow, grow in zip(p, m, v, g):
                _adam_row(prow, mrow, vrow, grow, lr, c1, c2)
        else:
            _adam_row(p, m, v, g, lr, c1, c2)
    return store


def check_finite(store):
    """Raise NumericError if any parameter entry is non-finite."""
    isfinite = math.isfinite
    for name, node in store.params.items():
        v = node.v
        rows = v if (v and isinstance(v[0], list)) else [v]
        for row in rows:
            for x in row:
                if not isfinite(x):
                    raise NumericError(f"non-finite value in parameter {name!r}")
