"""Per-clause column decoders and operator heads.

Every clause owns an attention LSTM decoder whose step count comes from
the sketch: the decoder state attends over the question encoding, the
attentional output is matched against the column encodings by dot product,
and the arg-max column is fed back in as the next input. Operator heads
share the architecture but read the chosen columns as inputs and classify
into their own operator vocabulary.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .core import LstmState, Node, lstm_step
from .encoders import SchemaEncoding

log = logging.getLogger(__name__)

CLAUSES = ("select", "where", "groupBy", "having", "orderBy")

AGGREGATORS = ("none", "max", "min", "count", "sum", "avg")
COMPARISONS = ("=", "!=", ">", "<", ">=", "<=", "like", "in", "not in", "between")
DIRECTIONS = ("asc", "desc")
SUBQUERY_FLAGS = ("value", "subquery")

# clause -> operator head kinds and their vocabularies
OP_HEADS = {
    "select": {"agg": AGGREGATORS},
    "where": {"cmp": COMPARISONS, "sub": SUBQUERY_FLAGS},
    "groupBy": {},
    "having": {"agg": AGGREGATORS, "cmp": COMPARISONS, "sub": SUBQUERY_FLAGS},
    "orderBy": {"agg": AGGREGATORS, "dir": DIRECTIONS},
}

MASK_SCORE = -1e30


class DecodeError(ValueError):
    pass


@dataclass
class ClausePrediction:
    clause: str
    columns: list = field(default_factory=list)
    aggregators: list | None = None
    comparisons: list | None = None
    directions: list | None = None
    subquery_flags: list | None = None

    def validate(self, n_columns):
        for name in ("aggregators", "comparisons", "directions", "subquery_flags"):
            lst = getattr(self, name)
            if lst is not None and len(lst) != len(self.columns):
                raise DecodeError(f"{self.clause}: {name} length mismatch")
        for c in self.columns:
            if not 0 <= c < n_columns:
                raise DecodeError(f"{self.clause}: column index {c} out of range")


def _argmax(values):
    best, best_i = values[0], 0
    for i, v in enumerate(values[1:], start=1):
        if v > best:
            best, best_i = v, i
    return best_i


def sketch_steps(sketch, clause):
    return {
        "select": sketch.num_select,
        "where": sketch.num_where,
        "groupBy": sketch.num_group_by,
        "having": sketch.num_having,
        "orderBy": sketch.num_order_by,
    }[clause]


def _attentional_output(tape, store, prefix, d_t, hq_cols):
    """tanh(W1 d + W2 r) with r the attention-weighted question context."""
    alpha = tape.softmax(tape.dots_cols(d_t, hq_cols))
    r = tape.wsum_cols(hq_cols, alpha)
    return tape.tanh(
        tape.add(
            tape.matvec(store[f"{prefix}.W1"], d_t),
            tape.matvec(store[f"{prefix}.W2"], r),
        )
    )


def _column_step(tape, store, clause, state, x, hq_cols, hcol_cols, masked):
    """One decoder step; returns (new state, probability Node)."""
    prefix = f"col.{clause}"
    state = lstm_step(tape, state, x, store[f"{prefix}.W"], store[f"{prefix}.b"])
    a = _attentional_output(tape, store, prefix, state.h, hq_cols)
    scores = tape.dots_cols(a, hcol_cols)
    if masked:
        bias = [0.0] * len(hcol_cols)
        for i in masked:
            bias[i] = MASK_SCORE
        scores = tape.add_const(scores, bias)
    return state, tape.softmax(scores)


def _zero_state(d):
    zero = Node([0.0] * d)
    return LstmState(zero, zero)


def decode_columns(tape, store, hq_cols, hcol_cols, clause, steps):
    """Greedy column choice for exactly `steps` steps, already-chosen
    columns masked out. Returns (indices, per-step probability Nodes)."""
    if steps < 0:
        raise DecodeError("negative step count")
    if steps > len(hcol_cols):
        log.warning(
            "%s: sketch asked for %d columns but schema has %d; truncating",
            clause,
            steps,
            len(hcol_cols),
        )
        steps = len(hcol_cols)
    d = len(store[f"col.{clause}.start"].v)
    state = _zero_state(d)
    x = store[f"col.{clause}.start"]
    chosen, dists = [], []
    for _ in range(steps):
        state, probs = _column_step(
            tape, store, clause, state, x, hq_cols, hcol_cols, chosen
        )
        idx = _argmax(probs.v)
        chosen.append(idx)
        dists.append(probs)
        x = hcol_cols[idx]
    return chosen, dists


def column_loss(tape, store, hq_cols, hcol_cols, clause, gold_columns):
    """Teacher-forced cross-entropy over the column steps."""
    d = len(store[f"col.{clause}.start"].v)
    state = _zero_state(d)
    x = store[f"col.{clause}.start"]
    losses = []
    prefix = []
    for gold in gold_columns:
        if not 0 <= gold < len(hcol_cols):
            raise DecodeError(f"gold column {gold} out of range")
        state, probs = _column_step(
            tape, store, clause, state, x, hq_cols, hcol_cols, prefix
        )
        losses.append(tape.cross_entropy(probs, gold))
        prefix = prefix + [gold]
        x = hcol_cols[gold]
    return losses


def _operator_step(tape, store, prefix, state, x, hq_cols):
    state = lstm_step(tape, state, x, store[f"{prefix}.W"], store[f"{prefix}.b"])
    a = _attentional_output(tape, store, prefix, state.h, hq_cols)
    logits = tape.add(tape.matvec(store[f"{prefix}.Wo"], a), store[f"{prefix}.bo"])
    return state, tape.softmax(logits)


def decode_operators(tape, store, hq_cols, chosen_cols, clause, kind):
    """One operator per chosen column; the t-th decoder input is the t-th
    chosen column's encoding. Returns (operator surfaces, probability Nodes)."""
    vocab = OP_HEADS[clause][kind]
    prefix = f"op.{clause}.{kind}"
    if not chosen_cols:
        return [], []
    d = len(store[f"{prefix}.W1"].v)
    state = _zero_state(d)
    ops, dists = [], []
    for col in chosen_cols:
        state, probs = _operator_step(tape, store, prefix, state, col, hq_cols)
        ops.append(vocab[_argmax(probs.v)])
        dists.append(probs)
    return ops, dists


def operator_loss(tape, store, hq_cols, gold_col_nodes, clause, kind, gold_ops):
    """Teacher-forced cross-entropy for one operator head."""
    vocab = OP_HEADS[clause][kind]
    prefix = f"op.{clause}.{kind}"
    d = len(store[f"{prefix}.W1"].v)
    state = _zero_state(d)
    losses = []
    for col, gold in zip(gold_col_nodes, gold_ops):
        state, probs = _operator_step(tape, store, prefix, state, col, hq_cols)
        losses.append(tape.cross_entropy(probs, vocab.index(gold)))
    return losses


def predict_subquery_flags(tape, store, hq_cols, chosen_cols, clause):
    """value/subquery decision per chosen column (where/having only)."""
    flags, dists = decode_operators(tape, store, hq_cols, chosen_cols, clause, "sub")
    return flags, dists


def decode_clause(tape, store, hq_cols, schema_enc: SchemaEncoding, sketch, clause,
                  subquery_enabled=True):
    """Full prediction for one clause under the given sketch."""
    steps = sketch_steps(sketch, clause)
    columns, _ = decode_columns(tape, store, hq_cols, schema_enc.cols, clause, steps)
    col_nodes = [schema_enc.cols[i] for i in columns]
    pred = ClausePrediction(clause, columns)
    kinds = OP_HEADS[clause]
    if "agg" in kinds:
        pred.aggregators, _ = decode_operators(tape, store, hq_cols, col_nodes, clause, "agg")
    if "cmp" in kinds:
        pred.comparisons, _ = decode_operators(tape, store, hq_cols, col_nodes, clause, "cmp")
    if "dir" in kinds:
        pred.directions, _ = decode_operators(tape, store, hq_cols, col_nodes, clause, "dir")
    if "sub" in kinds:
        if subquery_enabled:
            pred.subquery_flags, _ = predict_subquery_flags(
                tape, store, hq_cols, col_nodes, clause
            )
        else:
            pred.subquery_flags = ["value"] * len(columns)
    pred.validate(len(schema_enc.cols))
    return pred


def clause_loss(tape, store, hq_cols, schema_enc: SchemaEncoding, gold: ClausePrediction):
    """Teacher-forced loss for one clause: column steps plus every operator
    head the clause owns."""
    gold.validate(len(schema_enc.cols))
    losses = column_loss(tape, store, hq_cols, schema_enc.cols, gold.clause, gold.columns)
    col_nodes = [schema_enc.cols[i] for i in gold.columns]
    kinds = OP_HEADS[gold.clause]
    gold_ops = {
        "agg": gold.aggregators,
        "cmp": gold.comparisons,
        "dir": gold.directions,
        "sub": gold.subquery_flags,
    }
    for kind in kinds:
        ops = gold_ops[kind]
        if ops is None:
            raise DecodeError(f"{gold.clause}: gold {kind} operators missing")
        losses.extend(
            operator_loss(tape, store, hq_cols, col_nodes, gold.clause, kind, ops)
        )
    return losses
