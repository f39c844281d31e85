import pytest

from clausesql.model import ModelConfig, build_store
from clausesql.schema import ColumnDescriptor, Schema
from clausesql.vocab import Vocabulary, tokenize


def tiny_schema(db_id="unit_db"):
    cols = [
        ColumnDescriptor(-1, "", "*", True, "other"),
        ColumnDescriptor(0, "student", "id", False, "number"),
        ColumnDescriptor(0, "student", "first_name", False, "text"),
        ColumnDescriptor(0, "student", "age", False, "number"),
        ColumnDescriptor(1, "school", "id", False, "number"),
        ColumnDescriptor(1, "school", "city", False, "text"),
    ]
    return Schema(db_id, ["student", "school"], cols, [(1, 4)])


def tiny_vocab(schema, extra_text=""):
    streams = [d.token_sequence() for d in schema.columns]
    if extra_text:
        streams.append(tokenize(extra_text))
    streams.append(["what", "is", "the", "of", "show", "a", "value"])
    return Vocabulary.build(streams)


@pytest.fixture
def unit_model():
    schema = tiny_schema()
    vocab = tiny_vocab(schema, "how many students are older than a value")
    config = ModelConfig(d=8, vocab_words=vocab.words(), seed=13)
    store = build_store(config)
    return config, store, schema, vocab
