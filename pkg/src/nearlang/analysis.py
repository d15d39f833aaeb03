"""Lexical overlap and average edit-distance analyses between language vocabularies.

Vocabularies are sets of unique whitespace tokens drawn from a seeded
per-language sentence sample. Overlap counts exact string matches; distance
averages the code-point Levenshtein distance over the full vocabulary cross
product (optionally restricted to equal-length pairs, optionally sampled).
Distance sums are accumulated as integers and divided once at the end, so
results do not depend on accumulation order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from .corpus import Corpus, tokenize
from .errors import ConfigError, DataError


@dataclass(frozen=True)
class SimilarityConfig:
    """Sampling parameters for the similarity analyses."""

    sample_size: int = 10_000
    seed: int = 0
    exact_pairs: bool = True
    pair_sample: int = 100_000

    def __post_init__(self):
        if self.sample_size < 1:
            raise ConfigError(f"sample_size must be positive, got {self.sample_size}")
        if self.pair_sample < 1:
            raise ConfigError(f"pair_sample must be positive, got {self.pair_sample}")


@dataclass(frozen=True, eq=False)
class OverlapMatrix:
    """Symmetric matrix of shared unique-token counts; diagonal = vocabulary sizes."""

    labels: tuple[str, ...]
    counts: np.ndarray  # (L, L) int64

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, OverlapMatrix)
            and self.labels == other.labels
            and np.array_equal(self.counts, other.counts)
        )

    def to_tsv(self) -> str:
        lines = ["\t" + "\t".join(self.labels)]
        for i, lab in enumerate(self.labels):
            lines.append(lab + "\t" + "\t".join(str(int(v)) for v in self.counts[i]))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Symmetric matrix of average pairwise edit distances; diagonal fixed at 0."""

    labels: tuple[str, ...]
    values: np.ndarray  # (L, L) float64
    variant: str  # "overall" | "length_controlled"
    sampled: bool = False
    pair_sample: int | None = None
    seed: int | None = None

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, DistanceMatrix)
            and self.labels == other.labels
            and self.variant == other.variant
            and np.array_equal(self.values, other.values)
        )

    def to_tsv(self) -> str:
        lines = []
        if self.sampled:
            lines.append(f"# sampled pairs={self.pair_sample} seed={self.seed}")
        lines.append("\t" + "\t".join(self.labels))
        for i, lab in enumerate(self.labels):
            lines.append(lab + "\t" + "\t".join(f"{v:.3f}" for v in self.values[i]))
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Edit-distance kernels. The fast path is the Myers/Hyyro bit-parallel scan
# for patterns of at most 64 code points; longer strings fall back to a
# two-row DP. Both paths must agree exactly with a full-table DP.
# ---------------------------------------------------------------------------


@njit(cache=True)
def _build_peq(pa, uniq, masks):
    """Fill sorted unique code points of pa and their position bitmasks; return count."""
    m = pa.shape[0]
    order = np.argsort(pa)
    nu = 0
    for t in range(m):
        i = order[t]
        c = pa[i]
        if nu == 0 or uniq[nu - 1] != c:
            uniq[nu] = c
            masks[nu] = np.uint64(0)
            nu += 1
        masks[nu - 1] |= np.uint64(1) << np.uint64(i)
    return nu


@njit(cache=True)
def _myers_scan(uniq, masks, nu, m, pb):
    one = np.uint64(1)
    zero = np.uint64(0)
    if m == 64:
        vp = np.uint64(0xFFFFFFFFFFFFFFFF)
    else:
        vp = (one << np.uint64(m)) - one
    vn = zero
    score = m
    hbit = one << np.uint64(m - 1)
    for j in range(pb.shape[0]):
        c = pb[j]
        eq = zero
        lo = 0
        hi = nu
        while lo < hi:
            mid = (lo + hi) >> 1
            if uniq[mid] < c:
                lo = mid + 1
            else:
                hi = mid
        if lo < nu and uniq[lo] == c:
            eq = masks[lo]
        x = eq | vn
        d0 = (((eq & vp) + vp) ^ vp) | x
        hp = vn | ~(d0 | vp)
        hn = vp & d0
        if (hp & hbit) != zero:
            score += 1
        elif (hn & hbit) != zero:
            score -= 1
        x = (hp << one) | one
        vp = (hn << one) | ~(d0 | x)
        vn = d0 & x
    return score


@njit(cache=True)
def _lev_dp(pa, pb):
    m = pa.shape[0]
    n = pb.shape[0]
    prev = np.arange(n + 1)
    curr = np.empty(n + 1, dtype=np.int64)
    for i in range(1, m + 1):
        curr[0] = i
        ai = pa[i - 1]
        for j in range(1, n + 1):
            cost = 0 if ai == pb[j - 1] else 1
            best = prev[j] + 1
            if curr[j - 1] + 1 < best:
                best = curr[j - 1] + 1
            if prev[j - 1] + cost < best:
                best = prev[j - 1] + cost
            curr[j] = best
        tmp = prev
        prev = curr
        curr = tmp
    return prev[n]


@njit(cache=True)
def _lev_pair(pa, pb):
    if pa.shape[0] > pb.shape[0]:
        tmp = pa
        pa = pb
        pb = tmp
    m = pa.shape[0]
    if m == 0:
        return pb.shape[0]
    if m <= 64:
        uniq = np.empty(64, dtype=np.int32)
        masks = np.empty(64, dtype=np.uint64)
        nu = _build_peq(pa, uniq, masks)
        return _myers_scan(uniq, masks, nu, m, pb)
    return _lev_dp(pa, pb)


@njit(cache=True)
def _sum_cross(codes_a, off_a, codes_b, off_b, length_controlled):
    """Integer sum of pairwise distances over the full A x B cross product."""
    total = np.int64(0)
    pairs = np.int64(0)
    na = off_a.shape[0] - 1
    nb = off_b.shape[0] - 1
    uniq = np.empty(64, dtype=np.int32)
    masks = np.empty(64, dtype=np.uint64)
    for i in range(na):
        a0 = off_a[i]
        a1 = off_a[i + 1]
        pa = codes_a[a0:a1]
        m = a1 - a0
        use_myers = 1 <= m <= 64
        nu = 0
        if use_myers:
            nu = _build_peq(pa, uniq, masks)
        for j in range(nb):
            b0 = off_b[j]
            b1 = off_b[j + 1]
            lb = b1 - b0
            if length_controlled and lb != m:
                continue
            if m == 0:
                d = lb
            elif lb == 0:
                d = m
            elif use_myers:
                d = _myers_scan(uniq, masks, nu, m, codes_b[b0:b1])
            else:
                d = _lev_pair(pa, codes_b[b0:b1])
            total += d
            pairs += 1
    return total, pairs


@njit(cache=True)
def _sum_sampled(codes_a, off_a, codes_b, off_b, ai, bj):
    total = np.int64(0)
    for t in range(ai.shape[0]):
        i = ai[t]
        j = bj[t]
        total += _lev_pair(codes_a[off_a[i] : off_a[i + 1]], codes_b[off_b[j] : off_b[j + 1]])
    return total


def _encode_tokens(tokens: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    offsets = np.zeros(len(tokens) + 1, dtype=np.int64)
    codes = np.empty(sum(len(t) for t in tokens), dtype=np.int32)
    pos = 0
    for i, tok in enumerate(tokens):
        for ch in tok:
            codes[pos] = ord(ch)
            pos += 1
        offsets[i + 1] = pos
    return codes, offsets


def levenshtein(a: str, b: str) -> int:
    """Minimum insertions + deletions + substitutions over Unicode code points."""
    pa = np.fromiter(map(ord, a), dtype=np.int32, count=len(a))
    pb = np.fromiter(map(ord, b), dtype=np.int32, count=len(b))
    return int(_lev_pair(pa, pb))


# ---------------------------------------------------------------------------
# Vocabulary extraction and the two matrices.
# ---------------------------------------------------------------------------


def unique_tokens(corpus: Corpus, label: str, cfg: SimilarityConfig) -> set[str]:
    """Distinct whitespace tokens from a seeded sample of the label's sentences."""
    if label not in corpus.labels:
        raise DataError(f"label {label!r} not in corpus labels {corpus.labels}")
    label_index = corpus.labels.index(label)
    idx = corpus.indices_by_label()[label]
    size = cfg.sample_size
    if size > len(idx):
        warnings.warn(
            f"sample_size {size} exceeds {label!r} corpus size {len(idx)}; clamping",
            stacklevel=2,
        )
        size = len(idx)
    rng = np.random.default_rng([cfg.seed, label_index])
    chosen = rng.choice(len(idx), size=size, replace=False)
    tokens: set[str] = set()
    for p in chosen:
        tokens.update(tokenize(corpus.sentences[idx[int(p)]].text))
    return tokens


def overlap_matrix(corpus: Corpus, cfg: SimilarityConfig) -> OverlapMatrix:
    """Exact-match shared-token counts for every label pair."""
    if len(corpus.labels) < 2:
        raise DataError("overlap matrix requires at least 2 labels")
    vocabs = [unique_tokens(corpus, lab, cfg) for lab in corpus.labels]
    n = len(vocabs)
    counts = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        counts[i, i] = len(vocabs[i])
        for j in range(i + 1, n):
            shared = len(vocabs[i] & vocabs[j])
            counts[i, j] = shared
            counts[j, i] = shared
    return OverlapMatrix(labels=corpus.labels, counts=counts)


def _equal_length_groups(a_tokens: list[str], b_tokens: list[str]):
    """Common-length groups and the total equal-length pair count."""
    a_by_len: dict[int, list[int]] = {}
    for i, t in enumerate(a_tokens):
        a_by_len.setdefault(len(t), []).append(i)
    b_by_len: dict[int, list[int]] = {}
    for j, t in enumerate(b_tokens):
        b_by_len.setdefault(len(t), []).append(j)
    groups = []
    total = 0
    for length in sorted(set(a_by_len) & set(b_by_len)):
        ai = a_by_len[length]
        bj = b_by_len[length]
        groups.append((ai, bj))
        total += len(ai) * len(bj)
    return groups, total


def avg_edit_distance(
    a_tokens: set[str],
    b_tokens: set[str],
    variant: str = "overall",
    *,
    exact_pairs: bool = True,
    pair_sample: int = 100_000,
    seed: int | Sequence[int] = 0,
) -> float:
    """Mean Levenshtein distance over unique-token pairs of two vocabularies.

    variant="overall" averages over the full cross product;
    variant="length_controlled" restricts to pairs of equal code-point
    length. With exact_pairs=False a seeded uniform sample (with
    replacement) of pair_sample pairs estimates the mean instead.
    """
    if variant not in ("overall", "length_controlled"):
        raise ConfigError(f"unknown variant {variant!r}")
    if not a_tokens or not b_tokens:
        raise DataError("avg_edit_distance requires non-empty token sets")
    a_list = sorted(a_tokens)
    b_list = sorted(b_tokens)
    codes_a, off_a = _encode_tokens(a_list)
    codes_b, off_b = _encode_tokens(b_list)

    if exact_pairs:
        total, pairs = _sum_cross(codes_a, off_a, codes_b, off_b, variant == "length_controlled")
        if pairs == 0:
            raise DataError("no equal-length token pair between the two vocabularies")
        return int(total) / int(pairs)

    rng = np.random.default_rng(seed)
    if variant == "overall":
        flat = rng.integers(0, len(a_list) * len(b_list), size=pair_sample)
        ai = (flat // len(b_list)).astype(np.int64)
        bj = (flat % len(b_list)).astype(np.int64)
    else:
        groups, total_eq = _equal_length_groups(a_list, b_list)
        if total_eq == 0:
            raise DataError("no equal-length token pair between the two vocabularies")
        sizes = np.array([len(ai) * len(bj) for ai, bj in groups], dtype=np.int64)
        bounds = np.cumsum(sizes)
        flat = rng.integers(0, total_eq, size=pair_sample)
        which = np.searchsorted(bounds, flat, side="right")
        ai = np.empty(pair_sample, dtype=np.int64)
        bj = np.empty(pair_sample, dtype=np.int64)
        for t in range(pair_sample):
            g = int(which[t])
            rem = int(flat[t]) - (int(bounds[g - 1]) if g > 0 else 0)
            ga, gb = groups[g]
            ai[t] = ga[rem // len(gb)]
            bj[t] = gb[rem % len(gb)]
    total = _sum_sampled(codes_a, off_a, codes_b, off_b, ai, bj)
    return int(total) / int(pair_sample)


def distance_matrix(corpus: Corpus, cfg: SimilarityConfig, variant: str = "overall") -> DistanceMatrix:
    """Average edit distance for every label pair; diagonal fixed at 0."""
    if len(corpus.labels) < 2:
        raise DataError("distance matrix requires at least 2 labels")
    vocabs = [unique_tokens(corpus, lab, cfg) for lab in corpus.labels]
    n = len(vocabs)
    values = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(i + 1, n):
            d = avg_edit_distance(
                vocabs[i],
                vocabs[j],
                variant,
                exact_pairs=cfg.exact_pairs,
                pair_sample=cfg.pair_sample,
                seed=[cfg.seed, i, j],
            )
            values[i, j] = d
            values[j, i] = d
    return DistanceMatrix(
        labels=corpus.labels,
        values=values,
        variant=variant,
        sampled=not cfg.exact_pairs,
        pair_sample=None if cfg.exact_pairs else cfg.pair_sample,
        seed=None if cfg.exact_pairs else cfg.seed,
    )
