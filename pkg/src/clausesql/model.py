"""Model configuration, parameter construction, and module selection."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .core import ParamStore, init_embedding, init_matrix, lstm_bias
from .decoders import CLAUSES, OP_HEADS
from .sketch import SKETCH_HEADS
from .vocab import RESERVED, Vocabulary


class ConfigError(ValueError):
    pass


@dataclass
class ModelConfig:
    d: int = 64
    vocab_words: list = field(default_factory=list)
    depth: int = 2  # sub-query recursion cap
    trained_modules: list = field(default_factory=lambda: ["all"])
    seed: int = 0
    schemas: list = field(default_factory=list)  # Spider-style dicts

    def __post_init__(self):
        if self.d % 2 != 0 or self.d < 2:
            raise ConfigError("d must be a positive even number")
        if self.depth < 0:
            raise ConfigError("recursion depth cannot be negative")

    def vocabulary(self):
        return Vocabulary(self.vocab_words)

    def head_sizes(self):
        sizes = {f"sketch.{h}": len(v) for h, v in SKETCH_HEADS.items()}
        for clause, kinds in OP_HEADS.items():
            for kind, vocab in kinds.items():
                sizes[f"op.{clause}.{kind}"] = len(vocab)
        return sizes

    def to_dict(self):
        return {
            "format": "clausesql-model",
            "d": self.d,
            "vocab_size": len(RESERVED) + len(self.vocab_words),
            "vocab_words": list(self.vocab_words),
            "head_sizes": self.head_sizes(),
            "depth": self.depth,
            "trained_modules": list(self.trained_modules),
            "seed": self.seed,
            "schemas": self.schemas,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            d=d["d"],
            vocab_words=list(d["vocab_words"]),
            depth=d["depth"],
            trained_modules=list(d["trained_modules"]),
            seed=d["seed"],
            schemas=d.get("schemas", []),
        )


def build_store(config: ModelConfig):
    """Freshly initialized parameters for every learned module.

    Weight matrices are uniform +-1/sqrt(fan-in), embeddings +-0.1, biases
    zero except the LSTM forget gates at 1. Construction order is fixed, so
    a given (config, seed) always yields the same store.
    """
    rng = random.Random(config.seed)
    d = config.d
    e = h = d // 2
    vocab_size = len(RESERVED) + len(config.vocab_words)
    store = ParamStore()
    store.add("embed.table", init_embedding(rng, vocab_size, e))
    for enc in ("q", "col"):
        for direction in ("fwd", "bwd"):
            store.add(f"enc.{enc}.{direction}.W", init_matrix(rng, 4 * h, e + h))
            store.add(f"enc.{enc}.{direction}.b", lstm_bias(h))
    store.add("enc.col.att.w", init_matrix(rng, 1, d)[0])
    for head_id, values in SKETCH_HEADS.items():
        store.add(f"sketch.{head_id}.w", init_matrix(rng, 1, d)[0])
        store.add(f"sketch.{head_id}.W", init_matrix(rng, len(values), d))
        store.add(f"sketch.{head_id}.b", [0.0] * len(values))
    for clause in CLAUSES:
        store.add(f"col.{clause}.W", init_matrix(rng, 4 * d, 2 * d))
        store.add(f"col.{clause}.b", lstm_bias(d))
        store.add(f"col.{clause}.W1", init_matrix(rng, d, d))
        store.add(f"col.{clause}.W2", init_matrix(rng, d, d))
        store.add(f"col.{clause}.start", init_matrix(rng, 1, d)[0])
        for kind, vocab in OP_HEADS[clause].items():
            prefix = f"op.{clause}.{kind}"
            store.add(f"{prefix}.W", init_matrix(rng, 4 * d, 2 * d))
            store.add(f"{prefix}.b", lstm_bias(d))
            store.add(f"{prefix}.W1", init_matrix(rng, d, d))
            store.add(f"{prefix}.W2", init_matrix(rng, d, d))
            store.add(f"{prefix}.Wo", init_matrix(rng, len(vocab), d))
            store.add(f"{prefix}.bo", [0.0] * len(vocab))
    return store


# ---------------------------------------------------------------------------
# module selection (the --modules flag)

_GROUPS = {
    "encoders": ("embed.", "enc."),
    "sketch": ("sketch.",),
    "col": ("col.",),
    "op": ("op.",),
    "subquery": ("op.where.sub.", "op.having.sub."),
}

ALL_GROUPS = ("encoders", "sketch", "col", "op")


def resolve_modules(tokens):
    """Expand a module-selection list into parameter-name prefixes.

    Tokens: "all", a group name ("encoders", "sketch", "col", "op",
    "subquery"), a specific head like "sketch.numWhere" / "col.where" /
    "op.orderBy.dir", or any of these with a leading "-" to exclude.
    """
    include: list[str] = []
    exclude: list[str] = []
    for raw in tokens:
        token = raw.strip()
        if not token:
            continue
        negate = token.startswith("-")
        name = token[1:] if negate else token
        if name == "all":
            prefixes = [p for g in ALL_GROUPS for p in _GROUPS[g]]
        elif name in _GROUPS:
            prefixes = list(_GROUPS[name])
        elif name.startswith(("sketch.", "col.", "op.", "enc.", "embed.")):
            prefixes = [name if name.endswith(".") else name + "."]
        else:
            raise ConfigError(f"unknown module selector {raw!r}")
        (exclude if negate else include).extend(prefixes)
    if not include:
        include = [p for g in ALL_GROUPS for p in _GROUPS[g]]
    return include, exclude


def selected_param(name, include, exclude):
    dotted = name + "."
    if any(dotted.startswith(p) or name.startswith(p) for p in exclude):
        return False
    return any(dotted.startswith(p) or name.startswith(p) for p in include)


def filter_grads(grads, modules):
    include, exclude = resolve_modules(modules)
    return {
        name: g for name, g in grads.items() if selected_param(name, include, exclude)
    }


def subquery_enabled(modules):
    """Whether the sub-query flag heads are part of the selection."""
    include, exclude = resolve_modules(modules)
    return selected_param("op.where.sub.W", include, exclude)
