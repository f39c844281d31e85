"""The eight sketch classification heads.

Each head scores the question encoding with a learned vector, pools it
into a sentence representation by the resulting softmax weights, and
applies an affine softmax classifier. Together the heads fix every
decoder's step count plus the LIMIT / set-operator / connective flags.
"""

from __future__ import annotations

from dataclasses import dataclass

# headId -> ordered class values; the class index is the training target.
SKETCH_HEADS = {
    "numSelect": [1, 2, 3, 4],
    "numWhere": [0, 1, 2, 3, 4],
    "numGroupBy": [0, 1, 2, 3],
    "numHaving": [0, 1, 2],
    "numOrderBy": [0, 1, 2, 3],
    "limit": [False, True],
    "iue": ["none", "intersect", "union", "except"],
    "whereConnective": ["and", "or"],
}

IUE_OPS = ("intersect", "union", "except")


class SketchError(ValueError):
    pass


@dataclass
class Sketch:
    num_select: int = 1
    num_where: int = 0
    num_group_by: int = 0
    num_having: int = 0
    num_order_by: int = 0
    limit: bool = False
    iue: str = "none"
    where_connective: str = "and"

    _FIELDS = (
        ("numSelect", "num_select"),
        ("numWhere", "num_where"),
        ("numGroupBy", "num_group_by"),
        ("numHaving", "num_having"),
        ("numOrderBy", "num_order_by"),
        ("limit", "limit"),
        ("iue", "iue"),
        ("whereConnective", "where_connective"),
    )

    def validate(self):
        for head, attr in self._FIELDS:
            if getattr(self, attr) not in SKETCH_HEADS[head]:
                raise SketchError(f"{head} value {getattr(self, attr)!r} out of range")
        if self.num_select < 1:
            raise SketchError("a query selects at least one expression")
        if self.num_having > 0 and self.num_group_by == 0:
            raise SketchError("HAVING requires GROUP BY")

    def class_indices(self):
        return {
            head: SKETCH_HEADS[head].index(getattr(self, attr))
            for head, attr in self._FIELDS
        }

    @classmethod
    def from_class_indices(cls, indices):
        kwargs = {
            attr: SKETCH_HEADS[head][indices[head]] for head, attr in cls._FIELDS
        }
        return cls(**kwargs)


def _argmax(values):
    """Index of the maximum, first one on ties."""
    best, best_i = values[0], 0
    for i, v in enumerate(values[1:], start=1):
        if v > best:
            best, best_i = v, i
    return best_i


def head_forward(tape, store, hq_cols, head_id):
    """Class probabilities for one head over a question encoding."""
    w = store[f"sketch.{head_id}.w"]
    W = store[f"sketch.{head_id}.W"]
    b = store[f"sketch.{head_id}.b"]
    scores = tape.dots_cols(w, [tape.tanh(c) for c in hq_cols])
    alpha = tape.softmax(scores)
    r = tape.wsum_cols(hq_cols, alpha)
    return tape.softmax(tape.add(tape.matvec(W, r), b))


def predict_sketch(tape, store, hq_cols):
    """Arg-max every head, then repair HAVING-without-GROUP-BY."""
    indices = {}
    for head_id in SKETCH_HEADS:
        probs = head_forward(tape, store, hq_cols, head_id)
        indices[head_id] = _argmax(probs.v)
    sketch = Sketch.from_class_indices(indices)
    if sketch.num_having > 0 and sketch.num_group_by == 0:
        sketch.num_having = 0
    sketch.validate()
    return sketch


def sketch_loss(tape, store, hq_cols, gold: Sketch):
    """Sum of the eight per-head cross-entropies."""
    gold.validate()
    targets = gold.class_indices()
    losses = []
    for head_id in SKETCH_HEADS:
        probs = head_forward(tape, store, hq_cols, head_id)
        losses.append(tape.cross_entropy(probs, targets[head_id]))
    return tape.sum_scalars(losses)
