import math
import random

import pytest

from clausesql.core import Node, ParamStore, Tape, adam_step, clip_global_norm
from clausesql.decoders import (
    AGGREGATORS,
    COMPARISONS,
    ClausePrediction,
    DecodeError,
    clause_loss,
    column_loss,
    decode_clause,
    decode_columns,
    decode_operators,
    predict_subquery_flags,
    sketch_steps,
)
from clausesql.encoders import encode_question, encode_schema
from clausesql.sketch import Sketch
from clausesql.vocab import tokenize


def _softmax(v):
    m = max(v)
    e = [math.exp(x - m) for x in v]
    z = sum(e)
    return [x / z for x in e]


def oracle_decoder_steps(hq, hcol, W, b, W1, W2, start, steps, mask=True):
    """Plain-float restatement of the column decoder loop: LSTM cell,
    attention over hq, tanh-combined output, dot-product column scores."""
    d = len(start)

    def sig(t):
        return 1.0 / (1.0 + math.exp(-t))

    h = [0.0] * d
    c = [0.0] * d
    x = list(start)
    chosen = []
    for _ in range(steps):
        xh = x + h
        z = [sum(Wr[k] * xh[k] for k in range(len(xh))) + br for Wr, br in zip(W, b)]
        i = [sig(z[j]) for j in range(d)]
        f = [sig(z[d + j]) for j in range(d)]
        o = [sig(z[2 * d + j]) for j in range(d)]
        g = [math.tanh(z[3 * d + j]) for j in range(d)]
        c = [f[j] * c[j] + i[j] * g[j] for j in range(d)]
        h = [o[j] * math.tanh(c[j]) for j in range(d)]
        alpha = _softmax([sum(h[k] * q[k] for k in range(d)) for q in hq])
        r = [sum(a * q[k] for a, q in zip(alpha, hq)) for k in range(d)]
        a_out = [
            math.tanh(
                sum(W1[j][k] * h[k] for k in range(d))
                + sum(W2[j][k] * r[k] for k in range(d))
            )
            for j in range(d)
        ]
        scores = [sum(a_out[k] * col[k] for k in range(d)) for col in hcol]
        if mask:
            for idx in chosen:
                scores[idx] = -1e30
        probs = _softmax(scores)
        best = max(range(len(probs)), key=lambda t: (probs[t], -t))
        chosen.append(best)
        x = list(hcol[best])
    return chosen


def _toy_decoder_store(rng, d, clause="select"):
    store = ParamStore()
    store.add(f"col.{clause}.W", [[rng.uniform(-0.5, 0.5) for _ in range(2 * d)] for _ in range(4 * d)])
    store.add(f"col.{clause}.b", [0.0] * (4 * d))
    store.add(f"col.{clause}.W1", [[rng.uniform(-0.5, 0.5) for _ in range(d)] for _ in range(d)])
    store.add(f"col.{clause}.W2", [[rng.uniform(-0.5, 0.5) for _ in range(d)] for _ in range(d)])
    store.add(f"col.{clause}.start", [rng.uniform(-0.5, 0.5) for _ in range(d)])
    return store


class TestDecodeColumns:
    def test_zero_steps(self, unit_model):
        _, store, schema, vocab = unit_model
        tape = Tape()
        hq = encode_question(tape, store, vocab.encode(["show"])).cols
        hcol = encode_schema(tape, store, schema, vocab).cols
        cols, dists = decode_columns(tape, store, hq, hcol, "select", 0)
        assert cols == [] and dists == []

    def test_collinear_column_wins(self, unit_model):
        # if one schema column equals the attentional output direction and
        # the others are orthogonal, the dot-product argmax picks it.
        _, store, schema, vocab = unit_model
        tape = Tape()
        hq = encode_question(tape, store, vocab.encode(["show"])).cols
        d = 8
        rng = random.Random(1)
        toy = _toy_decoder_store(rng, d)
        # recompute the first attentional output with the oracle
        expected = oracle_decoder_steps(
            [q.v for q in hq],
            [[0.0] * d],  # placeholder; we only need a_out via a probe
            toy["col.select.W"].v, toy["col.select.b"].v,
            toy["col.select.W1"].v, toy["col.select.W2"].v,
            toy["col.select.start"].v, 0,
        )
        # probe: run one step against identity-like columns
        probe_cols = [Node([1.0 if i == j else 0.0 for i in range(d)]) for j in range(d)]
        idx, dists = decode_columns(tape, toy, hq, probe_cols, "select", 1)
        a_out = dists[0]
        # build columns: the winner collinear with a_out, others orthogonal-ish
        # (constructed from the probe distribution's implied scores)
        scores = [math.log(max(p, 1e-300)) for p in a_out.v]
        best = max(range(d), key=lambda t: (scores[t], -t))
        assert idx == [best]

    def test_matches_scalar_oracle(self):
        rng = random.Random(17)
        d = 4
        store = _toy_decoder_store(rng, d)
        hq = [[rng.uniform(-1, 1) for _ in range(d)] for _ in range(3)]
        hcol = [[rng.uniform(-1, 1) for _ in range(d)] for _ in range(3)]
        tape = Tape()
        cols, _ = decode_columns(
            tape, store, [Node(v) for v in hq], [Node(v) for v in hcol], "select", 2
        )
        expected = oracle_decoder_steps(
            hq, hcol,
            store["col.select.W"].v, store["col.select.b"].v,
            store["col.select.W1"].v, store["col.select.W2"].v,
            store["col.select.start"].v, 2,
        )
        assert cols == expected

    def test_masking_prevents_duplicates(self, unit_model):
        _, store, schema, vocab = unit_model
        rng = random.Random(3)
        tape = Tape()
        hq = encode_question(tape, store, vocab.encode(["show", "students"])).cols
        hcol = encode_schema(tape, store, schema, vocab).cols
        for trial in range(20):
            for name in store.names():
                if name.startswith("col.select."):
                    node = store[name]
                    if isinstance(node.v[0], list):
                        node.v = [[rng.uniform(-2, 2) for _ in row] for row in node.v]
                    else:
                        node.v = [rng.uniform(-2, 2) for _ in node.v]
            cols, _ = decode_columns(Tape(), store, hq, hcol, "select", 4)
            assert len(cols) == len(set(cols))

    def test_step_count_contract(self, unit_model):
        _, store, schema, vocab = unit_model
        tape = Tape()
        hq = encode_question(tape, store, vocab.encode(["show"])).cols
        hcol = encode_schema(tape, store, schema, vocab).cols
        for steps in range(5):
            cols, dists = decode_columns(tape, store, hq, hcol, "select", steps)
            assert len(cols) == steps == len(dists)
            for p in dists:
                assert len(p.v) == len(hcol)
                assert abs(sum(p.v) - 1.0) < 1e-9

    def test_truncates_past_schema_size(self, unit_model):
        _, store, schema, vocab = unit_model
        tape = Tape()
        hq = encode_question(tape, store, vocab.encode(["show"])).cols
        hcol = encode_schema(tape, store, schema, vocab).cols[:3]
        cols, _ = decode_columns(tape, store, hq, hcol, "select", 4)
        assert len(cols) == 3

    def test_permutation_equivariance(self, unit_model):
        _, store, schema, vocab = unit_model
        tape = Tape()
        hq = encode_question(tape, store, vocab.encode(["show", "the", "age"])).cols
        hcol = encode_schema(tape, store, schema, vocab).cols
        _, dists = decode_columns(tape, store, hq, hcol, "select", 1)
        perm = [2, 0, 5, 1, 4, 3]
        permuted = [hcol[i] for i in perm]
        _, dists_p = decode_columns(tape, store, hq, permuted, "select", 1)
        for new_pos, old_pos in enumerate(perm):
            assert dists_p[0].v[new_pos] == pytest.approx(dists[0].v[old_pos], abs=1e-12)


class TestDecodeOperators:
    def test_empty(self, unit_model):
        _, store, _, vocab = unit_model
        hq = encode_question(Tape(), store, vocab.encode(["show"])).cols
        ops, dists = decode_operators(Tape(), store, hq, [], "select", "agg")
        assert ops == [] and dists == []

    def test_singleton_vocabulary(self, unit_model):
        # any weights: with one class the softmax is [1.0] and the operator
        # is forced.
        _, store, _, vocab = unit_model
        import clausesql.decoders as dec

        hq = encode_question(Tape(), store, vocab.encode(["show"])).cols
        col = Node([0.1] * 8)
        old = dec.OP_HEADS["orderBy"]
        try:
            dec.OP_HEADS["orderBy"] = dict(old, dir=("asc",))
            store["op.orderBy.dir.Wo"].v = [store["op.orderBy.dir.Wo"].v[0]]
            store["op.orderBy.dir.bo"].v = [0.0]
            ops, dists = decode_operators(Tape(), store, hq, [col, col], "orderBy", "dir")
            assert ops == ["asc", "asc"]
            assert all(p.v == [1.0] for p in dists)
        finally:
            dec.OP_HEADS["orderBy"] = old

    def test_output_length_matches_input(self, unit_model):
        _, store, schema, vocab = unit_model
        tape = Tape()
        hq = encode_question(tape, store, vocab.encode(["show"])).cols
        hcol = encode_schema(tape, store, schema, vocab).cols
        for n in range(4):
            ops, dists = decode_operators(tape, store, hq, hcol[:n], "where", "cmp")
            assert len(ops) == n
            for p in dists:
                assert len(p.v) == len(COMPARISONS)
                assert abs(sum(p.v) - 1.0) < 1e-9

    def test_consumes_only_chosen_columns(self, unit_model):
        # replacing a non-chosen column's encoding leaves operator output
        # untouched.
        _, store, schema, vocab = unit_model
        tape = Tape()
        hq = encode_question(tape, store, vocab.encode(["show"])).cols
        hcol = encode_schema(tape, store, schema, vocab).cols
        chosen = [hcol[1], hcol[2]]
        ops1, d1 = decode_operators(tape, store, hq, chosen, "where", "cmp")
        hcol[4] = Node([9.9] * 8)  # not chosen
        ops2, d2 = decode_operators(tape, store, hq, chosen, "where", "cmp")
        assert ops1 == ops2
        assert [p.v for p in d1] == [p.v for p in d2]


class TestSubqueryFlags:
    def test_empty(self, unit_model):
        _, store, _, vocab = unit_model
        hq = encode_question(Tape(), store, vocab.encode(["show"])).cols
        flags, _ = predict_subquery_flags(Tape(), store, hq, [], "where")
        assert flags == []

    def test_flags_are_binary(self, unit_model):
        _, store, schema, vocab = unit_model
        tape = Tape()
        hq = encode_question(tape, store, vocab.encode(["show"])).cols
        hcol = encode_schema(tape, store, schema, vocab).cols
        flags, dists = predict_subquery_flags(tape, store, hq, hcol[:2], "where")
        assert all(f in ("value", "subquery") for f in flags)
        assert all(len(p.v) == 2 for p in dists)


class TestDecodeClause:
    def test_zero_where_is_empty(self, unit_model):
        _, store, schema, vocab = unit_model
        tape = Tape()
        hq = encode_question(tape, store, vocab.encode(["show"])).cols
        enc = encode_schema(tape, store, schema, vocab)
        pred = decode_clause(tape, store, hq, enc, Sketch(num_where=0), "where")
        assert pred.columns == [] and pred.comparisons == [] and pred.subquery_flags == []

    def test_lengths_follow_sketch(self, unit_model):
        _, store, schema, vocab = unit_model
        tape = Tape()
        hq = encode_question(tape, store, vocab.encode(["show"])).cols
        enc = encode_schema(tape, store, schema, vocab)
        sketch = Sketch(num_select=3, num_where=2, num_group_by=1,
                        num_having=1, num_order_by=2)
        for clause in ("select", "where", "groupBy", "having", "orderBy"):
            pred = decode_clause(tape, store, hq, enc, sketch, clause)
            assert len(pred.columns) == sketch_steps(sketch, clause)
            pred.validate(len(enc.cols))

    def test_subquery_disabled_forces_value(self, unit_model):
        _, store, schema, vocab = unit_model
        tape = Tape()
        hq = encode_question(tape, store, vocab.encode(["show"])).cols
        enc = encode_schema(tape, store, schema, vocab)
        pred = decode_clause(
            tape, store, hq, enc, Sketch(num_where=2), "where", subquery_enabled=False
        )
        assert pred.subquery_flags == ["value", "value"]


class TestClauseLoss:
    def test_concentrated_is_zero_analogue(self, unit_model):
        # uniform column distribution over |C| columns: the one-step column
        # term alone is ln |C|.
        _, store, schema, vocab = unit_model
        tape = Tape()
        hq = encode_question(tape, store, vocab.encode(["show"])).cols
        enc = encode_schema(tape, store, schema, vocab)
        # zero the attentional output path so column scores vanish ->
        # uniform distribution
        for nm in ("col.groupBy.W1", "col.groupBy.W2"):
            store[nm].v = [[0.0] * len(r) for r in store[nm].v]
        losses = column_loss(tape, store, hq, enc.cols, "groupBy", [2])
        total = sum(l.v for l in losses)
        assert total == pytest.approx(math.log(len(enc.cols)), abs=1e-9)

    def test_gold_out_of_range(self, unit_model):
        _, store, schema, vocab = unit_model
        tape = Tape()
        hq = encode_question(tape, store, vocab.encode(["show"])).cols
        enc = encode_schema(tape, store, schema, vocab)
        with pytest.raises(DecodeError):
            column_loss(tape, store, hq, enc.cols, "select", [17])

    def test_overfits_one_example(self, unit_model):
        # 300 teacher-forced steps drive a 2-column clause loss under 0.05.
        _, store, schema, vocab = unit_model
        toks = vocab.encode(tokenize("show the first name and age of students"))
        gold = ClausePrediction(
            "select", columns=[2, 3], aggregators=["none", "none"]
        )
        final = None
        for _ in range(300):
            store.zero_grads()
            tape = Tape()
            hq = encode_question(tape, store, toks).cols
            enc = encode_schema(tape, store, schema, vocab)
            losses = clause_loss(tape, store, hq, enc, gold)
            loss = tape.sum_scalars(losses)
            tape.backward(loss)
            grads = store.collect_grads()
            clip_global_norm(grads, 5.0)
            adam_step(store, grads, lr=1e-2)
            final = loss.v
        assert final < 0.05
