"""Central finite differences against tape gradients."""

from __future__ import annotations

import math
import random

from .tape import NumericError, Tape


def _flat_entries(value):
    """(row, col) index pairs covering one parameter value."""
    if value and isinstance(value[0], list):
        return [(i, j) for i in range(len(value)) for j in range(len(value[0]))]
    return [(None, j) for j in range(len(value))]


def _get(value, i, j):
    return value[j] if i is None else value[i][j]


def _set(value, i, j, x):
    if i is None:
        value[j] = x
    else:
        value[i][j] = x


def grad_check(loss_fn, store, eps=1e-5, max_entries=10000, seed=0):
    """Max relative error between tape gradients and central differences.

    loss_fn(store, tape) must build and return a scalar loss node on the
    given tape, deterministically (no dropout). Every entry of every
    parameter that received a tape gradient is perturbed; if there are more
    than max_entries of them, a seeded random subsample is checked.
    """
    store.zero_grads()
    tape = Tape()
    loss = loss_fn(store, tape)
    if not math.isfinite(loss.v):
        raise NumericError("loss is not finite")
    tape.backward(loss)

    entries = []
    for name, node in store.params.items():
        if node.g is None:
            continue
        for i, j in _flat_entries(node.v):
            entries.append((name, i, j))
    if len(entries) > max_entries:
        entries = random.Random(seed).sample(entries, max_entries)

    def eval_loss():
        out = loss_fn(store, Tape(record=False))
        if not math.isfinite(out.v):
            raise NumericError("loss is not finite")
        return out.v

    worst = 0.0
    for name, i, j in entries:
        node = store.params[name]
        if i is None:
            g = node.g[j]
        else:
            # Embedding-style gradients keep untouched rows as None.
            grow = node.g[i]
            g = 0.0 if grow is None else grow[j]
        orig = _get(node.v, i, j)
        _set(node.v, i, j, orig + eps)
        up = eval_loss()
        _set(node.v, i, j, orig - eps)
        down = eval_loss()
        _set(node.v, i, j, orig)
        fd = (up - down) / (2.0 * eps)
        rel = abs(fd - g) / max(abs(fd) + abs(g), 1e-6)
        if rel > worst:
            worst = rel
    return worst
