"""Corpus loading, normalization, tokenization, and deterministic partitioning.

Sentences are NFC-normalized with whitespace collapsed to single spaces;
tokenization is a plain split on those spaces with no punctuation handling,
so tokens are kept verbatim. Train/test splits and cross-validation folds
are stratified by label and fully determined by (corpus order, seed).
"""

from __future__ import annotations

import math
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, DataError


@dataclass(frozen=True)
class LabeledSentence:
    """A normalized sentence paired with its language label."""

    text: str
    label: str


@dataclass(frozen=True)
class Corpus:
    """An ordered collection of labeled sentences plus the label inventory.

    Every sentence label must belong to the inventory; iteration order is
    the construction order and never changes.
    """

    sentences: tuple[LabeledSentence, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        inventory = set(self.labels)
        if len(inventory) != len(self.labels):
            raise DataError("duplicate labels in corpus inventory")
        for s in self.sentences:
            if s.label not in inventory:
                raise DataError(f"sentence label {s.label!r} not in inventory {self.labels}")

    def __len__(self) -> int:
        return len(self.sentences)

    def indices_by_label(self) -> dict[str, list[int]]:
        out: dict[str, list[int]] = {lab: [] for lab in self.labels}
        for i, s in enumerate(self.sentences):
            out[s.label].append(i)
        return out

    def subset(self, indices: Iterable[int]) -> "Corpus":
        """New corpus with the given sentence indices, in corpus order."""
        picked = tuple(self.sentences[i] for i in sorted(indices))
        return Corpus(sentences=picked, labels=self.labels)

    @staticmethod
    def from_sentences(sentences: Iterable[LabeledSentence]) -> "Corpus":
        """Build a corpus collecting labels in first-seen order."""
        sents = tuple(sentences)
        labels: list[str] = []
        seen: set[str] = set()
        for s in sents:
            if s.label not in seen:
                seen.add(s.label)
                labels.append(s.label)
        return Corpus(sentences=sents, labels=tuple(labels))


@dataclass(frozen=True)
class SplitSpec:
    """How to carve a corpus into train and test portions."""

    train_fraction: float = 0.8
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(f"train_fraction must be in (0,1), got {self.train_fraction}")


@dataclass(frozen=True)
class FoldAssignment:
    """Assignment of every corpus index to one of k cross-validation folds."""

    k: int
    fold_of: dict[int, int]

    def train_indices(self, fold: int) -> list[int]:
        return sorted(i for i, f in self.fold_of.items() if f != fold)

    def heldout_indices(self, fold: int) -> list[int]:
        return sorted(i for i, f in self.fold_of.items() if f == fold)


def normalize_sentence(raw: str) -> str:
    """NFC-normalize and collapse all whitespace runs to single spaces.

    Raises DataError when the input contains no non-whitespace character.
    """
    text = unicodedata.normalize("NFC", raw)
    parts = text.split()
    if not parts:
        raise DataError("sentence contains no non-whitespace characters")
    return " ".join(parts)


def tokenize(text: str) -> list[str]:
    """Whitespace tokens of a normalized sentence, kept verbatim."""
    return text.split(" ")


def _read_tsv(path: Path, sentences: list[LabeledSentence], label_order: list[str], seen: set[str]) -> None:
    try:
        raw_lines = path.read_text(encoding="utf-8").splitlines()
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not valid UTF-8 ({exc})") from exc
    except OSError as exc:
        raise DataError(f"{path}: {exc}") from exc
    for lineno, line in enumerate(raw_lines, start=1):
        if not line.strip():
            continue
        if "\t" not in line:
            raise DataError(f"{path}:{lineno}: expected 'label<TAB>sentence', no tab found")
        label, sent = line.split("\t", 1)
        label = label.strip()
        if not label:
            raise DataError(f"{path}:{lineno}: empty label")
        try:
            text = normalize_sentence(sent)
        except DataError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
        if label not in seen:
            seen.add(label)
            label_order.append(label)
        sentences.append(LabeledSentence(text=text, label=label))


def _read_lines(path: Path, label: str, sentences: list[LabeledSentence]) -> None:
    try:
        raw_lines = path.read_text(encoding="utf-8").splitlines()
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not valid UTF-8 ({exc})") from exc
    except OSError as exc:
        raise DataError(f"{path}: {exc}") from exc
    for lineno, line in enumerate(raw_lines, start=1):
        if not line.strip():
            continue
        try:
            text = normalize_sentence(line)
        except DataError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
        sentences.append(LabeledSentence(text=text, label=label))


def load_corpus(
    source: str | Path | Sequence[str | Path] | Mapping[str, str | Path],
    format: str = "tsv",
) -> Corpus:
    """Load a labeled corpus from disk.

    format="tsv": source is one path or a sequence of paths to files with
    one `label<TAB>sentence` record per line. format="lines": source is a
    mapping label -> path of one-sentence-per-line files.

    Every sentence is normalized; blank lines are skipped; labels are
    collected in first-seen order (tsv) or mapping order (lines).
    """
    sentences: list[LabeledSentence] = []
    label_order: list[str] = []
    if format == "tsv":
        if isinstance(source, Mapping):
            raise ConfigError("tsv format takes a path or sequence of paths, not a mapping")
        paths = [source] if isinstance(source, (str, Path)) else list(source)
        seen: set[str] = set()
        for p in paths:
            _read_tsv(Path(p), sentences, label_order, seen)
    elif format == "lines":
        if not isinstance(source, Mapping):
            raise ConfigError("lines format requires a label -> path mapping")
        for label, p in source.items():
            label_order.append(label)
            _read_lines(Path(p), label, sentences)
    else:
        raise ConfigError(f"unknown corpus format {format!r}; expected 'tsv' or 'lines'")
    return Corpus(sentences=tuple(sentences), labels=tuple(label_order))


def _floor_count(n: int, fraction: float) -> int:
    # epsilon guards against float products like 15*0.8 = 12.000000000000002
    return int(math.floor(n * fraction + 1e-9))


def split_train_test(corpus: Corpus, spec: SplitSpec) -> tuple[Corpus, Corpus]:
    """Partition a corpus into train and test sets.

    Stratified by default: within each label, floor(n * train_fraction)
    sentences go to train and the rest to test. The assignment is a pure
    function of (corpus order, seed); both sides preserve corpus order.
    """
    by_label = corpus.indices_by_label()
    for label in corpus.labels:
        if len(by_label[label]) < 2:
            raise DataError(f"label {label!r} has {len(by_label[label])} sentences; need at least 2 to split")

    train_idx: list[int] = []
    test_idx: list[int] = []
    if spec.stratified:
        for li, label in enumerate(corpus.labels):
            idx = np.array(by_label[label], dtype=np.int64)
            rng = np.random.default_rng([spec.seed, li])
            perm = rng.permutation(len(idx))
            n_train = _floor_count(len(idx), spec.train_fraction)
            train_idx.extend(idx[perm[:n_train]].tolist())
            test_idx.extend(idx[perm[n_train:]].tolist())
    else:
        rng = np.random.default_rng([spec.seed])
        perm = rng.permutation(len(corpus))
        n_train = _floor_count(len(corpus), spec.train_fraction)
        train_idx = perm[:n_train].tolist()
        test_idx = perm[n_train:].tolist()
    return corpus.subset(train_idx), corpus.subset(test_idx)


def make_cv_folds(corpus: Corpus, k: int, seed: int) -> FoldAssignment:
    """Assign every sentence index to one of k stratified folds.

    Within each label the (seeded) shuffled indices are dealt round-robin,
    so per-label fold sizes differ by at most one.
    """
    if k < 1:
        raise ConfigError(f"k must be positive, got {k}")
    by_label = corpus.indices_by_label()
    for label in corpus.labels:
        if len(by_label[label]) < k:
            raise DataError(f"label {label!r} has {len(by_label[label])} sentences; need at least k={k}")

    fold_of: dict[int, int] = {}
    for li, label in enumerate(corpus.labels):
        idx = np.array(by_label[label], dtype=np.int64)
        rng = np.random.default_rng([seed, li, k])
        perm = rng.permutation(len(idx))
        for pos, p in enumerate(perm):
            fold_of[int(idx[p])] = pos % k
    return FoldAssignment(k=k, fold_of=fold_of)
