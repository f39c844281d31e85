"""Question and schema encoders.

The question is run through a bi-directional LSTM over trainable word
embeddings. Each schema column is encoded independently: a bi-LSTM over
its "table-name [SEP] column-name type" word sequence, then a learned
scoring vector turns the hidden states into softmax weights whose weighted
sum is the column's fixed-size vector.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import DimensionError, bilstm_encode, dropout_mask
from .schema import Schema


@dataclass
class QuestionEncoding:
    cols: list  # one d-dimensional Node per token
    tokens: list  # the encoded Token sequence


@dataclass
class SchemaEncoding:
    cols: list  # one d-dimensional Node per column, star at index 0
    descriptors: list
    attention: list  # per column, the softmax weights over its tokens
    foreign_keys: list


def _embed_tokens(tape, store, token_ids, training, drop_rng, dropout_rate):
    table = store["embed.table"]
    out = []
    for tid in token_ids:
        e = tape.lookup(table, tid)
        if training and dropout_rate > 0.0:
            mask = dropout_mask(drop_rng, len(e.v), dropout_rate, True)
            e = tape.mul_const(e, mask)
        out.append(e)
    return out


def encode_question(tape, store, tokens, training=False, drop_rng=None, dropout_rate=0.0):
    """Bi-LSTM encoding; dropout hits the embeddings only, and only while
    training."""
    if not tokens:
        raise DimensionError("cannot encode an empty token sequence")
    embeds = _embed_tokens(
        tape, store, [t.vocabulary_id for t in tokens], training, drop_rng, dropout_rate
    )
    cols = bilstm_encode(
        tape,
        embeds,
        store["enc.q.fwd.W"],
        store["enc.q.fwd.b"],
        store["enc.q.bwd.W"],
        store["enc.q.bwd.b"],
    )
    return QuestionEncoding(cols, list(tokens))


def encode_column(tape, store, descriptor, vocab):
    """One column's summary vector and its attention weights."""
    surfaces = descriptor.token_sequence()
    ids = [vocab.id_of(s) for s in surfaces]
    embeds = _embed_tokens(tape, store, ids, False, None, 0.0)
    o_cols = bilstm_encode(
        tape,
        embeds,
        store["enc.col.fwd.W"],
        store["enc.col.fwd.b"],
        store["enc.col.bwd.W"],
        store["enc.col.bwd.b"],
    )
    w = store["enc.col.att.w"]
    scores = tape.dots_cols(w, [tape.tanh(c) for c in o_cols])
    alpha = tape.softmax(scores)
    h = tape.wsum_cols(o_cols, alpha)
    return h, alpha.v


def encode_schema(tape, store, schema: Schema, vocab):
    """Stack of per-column encodings in schema order (star first)."""
    cols = []
    attention = []
    for d in schema.columns:
        h, alpha = encode_column(tape, store, d, vocab)
        cols.append(h)
        attention.append(alpha)
    return SchemaEncoding(cols, list(schema.columns), attention, list(schema.foreign_keys))
