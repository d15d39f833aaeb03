"""Character and word n-gram counting behind a frozen feature index.

Character n-grams run over the whole normalized sentence, spaces included,
with the Unicode code point as the character unit. Word n-grams are windows
of whitespace tokens joined by single spaces. Feature values are raw counts;
grams unseen at index-build time are silently dropped at vectorization time.
"""

from __future__ import annotations

import struct
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import Corpus, LabeledSentence, tokenize
from .errors import ConfigError, DataError, ModelFormatError

CHAR_ORDERS_ALLOWED = frozenset({2, 3, 4, 5})
WORD_ORDERS_ALLOWED = frozenset({1, 2, 3})

# (kind, order, gram) uniquely identifies a feature.
FeatureKey = tuple[str, int, str]
# Sparse count vector: column id -> count (>= 1).
FeatureVector = dict[int, int]

_NAMED_SETS = {
    "C1": (frozenset({2, 3}), frozenset()),
    "C2": (frozenset({2, 3, 4}), frozenset()),
    "C3": (frozenset({2, 3, 4, 5}), frozenset()),
    "W1": (frozenset(), frozenset({1})),
    "W2": (frozenset(), frozenset({1, 2})),
    "W3": (frozenset(), frozenset({1, 2, 3})),
}

FEATURE_SET_NAMES = tuple(
    list(_NAMED_SETS) + [f"{c}+{w}" for c in ("C1", "C2", "C3") for w in ("W1", "W2", "W3")]
)


@dataclass(frozen=True)
class FeatureSpec:
    """Which n-gram orders are active for featurization."""

    char_orders: frozenset[int] = frozenset()
    word_orders: frozenset[int] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "char_orders", frozenset(self.char_orders))
        object.__setattr__(self, "word_orders", frozenset(self.word_orders))
        if not self.char_orders and not self.word_orders:
            raise ConfigError("feature spec must enable at least one n-gram order")
        bad_c = self.char_orders - CHAR_ORDERS_ALLOWED
        bad_w = self.word_orders - WORD_ORDERS_ALLOWED
        if bad_c:
            raise ConfigError(f"char orders {sorted(bad_c)} outside supported {sorted(CHAR_ORDERS_ALLOWED)}")
        if bad_w:
            raise ConfigError(f"word orders {sorted(bad_w)} outside supported {sorted(WORD_ORDERS_ALLOWED)}")


def feature_set_from_name(name: str) -> FeatureSpec:
    """Resolve a named feature bundle (C1..C3, W1..W3, or 'Ci+Wj')."""
    key = name.strip()
    if key in _NAMED_SETS:
        c, w = _NAMED_SETS[key]
        return FeatureSpec(char_orders=c, word_orders=w)
    if "+" in key:
        left, _, right = key.partition("+")
        if left in ("C1", "C2", "C3") and right in ("W1", "W2", "W3"):
            c = _NAMED_SETS[left][0]
            w = _NAMED_SETS[right][1]
            return FeatureSpec(char_orders=c, word_orders=w)
    raise ConfigError(f"unknown feature set {name!r}; valid names: {', '.join(FEATURE_SET_NAMES)}")


def extract_char_ngrams(text: str, n: int) -> list[str]:
    """All contiguous length-n code-point windows of the sentence, spaces included."""
    if n < 2:
        raise ConfigError(f"char n-gram order must be >= 2, got {n}")
    return [text[i : i + n] for i in range(len(text) - n + 1)]


def extract_word_ngrams(tokens: Sequence[str], n: int) -> list[str]:
    """Contiguous n-token windows joined by single spaces."""
    if n < 1:
        raise ConfigError(f"word n-gram order must be >= 1, got {n}")
    return [" ".join(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


class FeatureIndex:
    """Frozen bijection from (kind, order, gram) keys to dense column ids."""

    _MAGIC = b"NLFIDX1\n"
    _VERSION = 1

    def __init__(self, columns: dict[FeatureKey, int]):
        self._columns = dict(columns)
        ids = sorted(self._columns.values())
        if ids != list(range(len(ids))):
            raise DataError("feature index column ids are not a dense 0-based range")
        self.frozen = True

    def __len__(self) -> int:
        return len(self._columns)

    def __contains__(self, key: FeatureKey) -> bool:
        return key in self._columns

    def column_of(self, key: FeatureKey) -> int | None:
        return self._columns.get(key)

    def items(self) -> list[tuple[FeatureKey, int]]:
        """Entries in column order."""
        return sorted(self._columns.items(), key=lambda kv: kv[1])

    def key_of_column(self) -> list[FeatureKey]:
        """Inverse mapping: column id -> key."""
        out: list[FeatureKey] = [("", 0, "")] * len(self._columns)
        for key, col in self._columns.items():
            out[col] = key
        return out

    def __eq__(self, other) -> bool:
        return isinstance(other, FeatureIndex) and self._columns == other._columns

    def to_bytes(self) -> bytes:
        """Serialize: versioned header, then (kind, order, gram, column) in column order."""
        out = [self._MAGIC, struct.pack("<IQ", self._VERSION, len(self._columns))]
        for (kind, order, gram), col in self.items():
            gram_bytes = gram.encode("utf-8")
            out.append(struct.pack("<BBI", 0 if kind == "char" else 1, order, len(gram_bytes)))
            out.append(gram_bytes)
            out.append(struct.pack("<I", col))
        return b"".join(out)

    @classmethod
    def from_bytes(cls, blob: bytes) -> "FeatureIndex":
        view = memoryview(blob)
        pos = 0

        def take(n: int) -> memoryview:
            nonlocal pos
            if pos + n > len(view):
                raise ModelFormatError("feature index data is truncated")
            chunk = view[pos : pos + n]
            pos += n
            return chunk

        if bytes(take(len(cls._MAGIC))) != cls._MAGIC:
            raise ModelFormatError("not a feature index blob (bad magic)")
        version, count = struct.unpack("<IQ", take(12))
        if version != cls._VERSION:
            raise ModelFormatError(f"unsupported feature index version {version}")
        columns: dict[FeatureKey, int] = {}
        for _ in range(count):
            kind_b, order, gram_len = struct.unpack("<BBI", take(6))
            gram = bytes(take(gram_len)).decode("utf-8")
            (col,) = struct.unpack("<I", take(4))
            kind = "char" if kind_b == 0 else "word"
            columns[(kind, order, gram)] = col
        if pos != len(view):
            raise ModelFormatError("trailing bytes after feature index entries")
        return cls(columns)


def _sentence_grams(text: str, spec: FeatureSpec) -> Iterable[FeatureKey]:
    for n in sorted(spec.char_orders):
        for g in extract_char_ngrams(text, n):
            yield ("char", n, g)
    if spec.word_orders:
        tokens = tokenize(text)
        for n in sorted(spec.word_orders):
            for g in extract_word_ngrams(tokens, n):
                yield ("word", n, g)


def build_feature_index(corpus: Corpus, spec: FeatureSpec) -> FeatureIndex:
    """Collect every n-gram type occurring in the corpus and freeze the column map.

    Column ids follow deterministic (kind, order, lexicographic gram) order.
    """
    if len(corpus) == 0:
        raise DataError("cannot build a feature index from an empty corpus")
    keys: set[FeatureKey] = set()
    for sentence in corpus.sentences:
        keys.update(_sentence_grams(sentence.text, spec))
    columns = {key: col for col, key in enumerate(sorted(keys))}
    return FeatureIndex(columns)


def vectorize(sentence: LabeledSentence | str, index: FeatureIndex, spec: FeatureSpec) -> FeatureVector:
    """Count the sentence's indexed n-grams; out-of-vocabulary grams are dropped."""
    text = sentence.text if isinstance(sentence, LabeledSentence) else sentence
    counts: Counter[int] = Counter()
    for key, cnt in Counter(_sentence_grams(text, spec)).items():
        col = index.column_of(key)
        if col is not None:
            counts[col] += cnt
    return dict(counts)


def vectors_to_csr(vectors: Sequence[FeatureVector], n_columns: int) -> sp.csr_matrix:
    """Stack sparse count vectors into a CSR matrix with sorted column indices."""
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    for r, vec in enumerate(vectors):
        items = sorted(vec.items())
        indptr[r + 1] = indptr[r] + len(items)
        if items:
            c, v = zip(*items)
            cols.append(np.asarray(c, dtype=np.int32))
            vals.append(np.asarray(v, dtype=np.float64))
    indices = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int32)
    data = np.concatenate(vals) if vals else np.zeros(0, dtype=np.float64)
    return sp.csr_matrix((data, indices, indptr), shape=(len(vectors), n_columns))
