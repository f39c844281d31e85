"""Recurrent and regularization kernels built on the tape primitives."""

from __future__ import annotations

from dataclasses import dataclass

from .tape import DimensionError, Node

FORGET_BIAS = 1.0


@dataclass
class LstmState:
    h: Node
    c: Node


def init_matrix(rng, rows, cols):
    """Uniform +-1/sqrt(fan-in) rows; fan-in is the column count."""
    bound = (1.0 / cols) ** 0.5
    return [[rng.uniform(-bound, bound) for _ in range(cols)] for _ in range(rows)]


def init_embedding(rng, rows, cols):
    return [[rng.uniform(-0.1, 0.1) for _ in range(cols)] for _ in range(rows)]


def lstm_bias(hidden):
    """Gate order i, f, o, g; the forget block starts at hidden."""
    b = [0.0] * (4 * hidden)
    for j in range(hidden, 2 * hidden):
        b[j] = FORGET_BIAS
    return b


def lstm_zero_state(tape, hidden):
    zero = Node([0.0] * hidden)
    return LstmState(zero, zero)


def lstm_step(tape, state, x, W, b):
    """Conventional four-gate LSTM cell.

    W stacks the i, f, o, g gate weights as a (4h x (in+h)) matrix applied
    to [x; h]; b is the matching 4h bias.
    """
    hidden = len(state.h.v)
    if len(W.v) != 4 * hidden or len(W.v[0]) != len(x.v) + hidden:
        raise DimensionError(
            f"lstm_step: weights {len(W.v)}x{len(W.v[0])} vs input {len(x.v)}"
            f" and hidden {hidden}"
        )
    z = tape.add(tape.matvec(W, tape.concat(x, state.h)), b)
    i = tape.sigmoid(tape.narrow(z, 0, hidden))
    f = tape.sigmoid(tape.narrow(z, hidden, hidden))
    o = tape.sigmoid(tape.narrow(z, 2 * hidden, hidden))
    g = tape.tanh(tape.narrow(z, 3 * hidden, hidden))
    c = tape.add(tape.mul(f, state.c), tape.mul(i, g))
    h = tape.mul(o, tape.tanh(c))
    return LstmState(h, c)


def lstm_run(tape, xs, W, b, hidden):
    """Hidden states of a unidirectional pass over xs, zero initial state."""
    state = lstm_zero_state(tape, hidden)
    out = []
    for x in xs:
        state = lstm_step(tape, state, x, W, b)
        out.append(state.h)
    return out


def bilstm_encode(tape, xs, Wf, bf, Wb, bb):
    """d-dimensional columns from two independent d/2-unit passes.

    Column i is [forward state at i ; backward state at i].
    """
    if not xs:
        raise DimensionError("bilstm_encode over empty sequence")
    hidden = len(Wf.v) // 4
    fwd = lstm_run(tape, xs, Wf, bf, hidden)
    bwd = list(reversed(lstm_run(tape, list(reversed(xs)), Wb, bb, hidden)))
    return [tape.concat(f, b) for f, b in zip(fwd, bwd)]


def dropout_mask(rng, n, rate, training):
    """Inverted-dropout mask: 0 with probability `rate`, else 1/(1-rate).

    Evaluation (training=False) returns the identity mask.
    """
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return [1.0] * n
    keep = 1.0 / (1.0 - rate)
    return [0.0 if rng.random() < rate else keep for _ in range(n)]
