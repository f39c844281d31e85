"""Tokenization and the shared word vocabulary.

Reserved ids: PAD=0, OOV=1, [SEP]=2, [SUB_QUERY]=3, [VAR]=4. Everything
else is assigned in first-seen order when the vocabulary is built.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

PAD = "[PAD]"
OOV = "[OOV]"
SEP = "[SEP]"
SUB_QUERY = "[SUB_QUERY]"
VAR = "[VAR]"

RESERVED = [PAD, OOV, SEP, SUB_QUERY, VAR]

PAD_ID, OOV_ID, SEP_ID, SUB_QUERY_ID, VAR_ID = range(5)

_TOKEN_RE = re.compile(r"\[SEP\]|\[SUB_QUERY\]|\[VAR\]|\[PAD\]|\[OOV\]|\*|[A-Za-z0-9_]+")
_CAMEL_RE = re.compile(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+|\d+")


@dataclass(frozen=True)
class Token:
    surface: str
    vocabulary_id: int


def tokenize(text):
    """Lowercased word tokens; snake_case/camelCase identifiers are split,
    punctuation is dropped except '*' and the reserved bracket tokens."""
    out = []
    for chunk in _TOKEN_RE.findall(text):
        if chunk in RESERVED or chunk == "*":
            out.append(chunk)
            continue
        for part in chunk.split("_"):
            for word in _CAMEL_RE.findall(part):
                out.append(word.lower())
    return out


class Vocabulary:
    def __init__(self, words=()):
        """words: non-reserved surface list in canonical order."""
        self._words = list(RESERVED)
        self._ids = {w: i for i, w in enumerate(self._words)}
        for w in words:
            self._add(w)

    def _add(self, word):
        if word not in self._ids:
            self._ids[word] = len(self._words)
            self._words.append(word)
        return self._ids[word]

    @classmethod
    def build(cls, token_streams):
        """First-seen-order vocabulary over an iterable of surface lists."""
        vocab = cls()
        for stream in token_streams:
            for w in stream:
                vocab._add(w)
        return vocab

    def __len__(self):
        return len(self._words)

    def id_of(self, surface):
        return self._ids.get(surface, OOV_ID)

    def encode(self, surfaces):
        return [Token(s, self.id_of(s)) for s in surfaces]

    def words(self):
        """Non-reserved words, for configuration round-trips."""
        return self._words[len(RESERVED):]
