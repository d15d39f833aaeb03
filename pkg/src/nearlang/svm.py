"""One-vs-rest linear SVM with a deterministic SMO solver and C grid search.

The binary solver minimizes the classic biased hinge objective

    0.5 ||w||^2 + c * sum_i max(0, 1 - y_i (w . x_i + b))

via maximal-violating-pair SMO on the dual, keeping the bias exact (it is
not folded into the regularizer). The kernel maintains the primal weight
vector and the dual gradient incrementally over CSR/CSC views of the data,
so training is deterministic given the data order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from numba import njit

from .corpus import Corpus, make_cv_folds, normalize_sentence
from .errors import ConfigError, DataError, ModelFormatError
from .features import (
    FeatureIndex,
    FeatureSpec,
    FeatureVector,
    build_feature_index,
    vectorize,
    vectors_to_csr,
)

_MODEL_MAGIC = b"NRLNGML1"
_MODEL_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    """Solver and model-selection parameters."""

    c_grid: tuple[float, ...] = (0.01, 0.1, 1.0, 10.0, 100.0)
    k_folds: int = 5
    seed: int = 0
    tolerance: float = 1e-4
    max_epochs: int = 1000

    def __post_init__(self):
        object.__setattr__(self, "c_grid", tuple(float(c) for c in self.c_grid))
        if not self.c_grid:
            raise ConfigError("c_grid must be non-empty")
        if any(c <= 0 for c in self.c_grid):
            raise ConfigError("c_grid values must be strictly positive")
        if list(self.c_grid) != sorted(set(self.c_grid)):
            raise ConfigError("c_grid must be strictly ascending")
        if self.k_folds < 2:
            raise ConfigError(f"k_folds must be >= 2, got {self.k_folds}")
        if self.tolerance <= 0:
            raise ConfigError("tolerance must be positive")
        if self.max_epochs < 1:
            raise ConfigError("max_epochs must be positive")


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Per-class weight vectors and biases over a frozen feature index."""

    classes: tuple[str, ...]
    weights: np.ndarray  # (n_classes, n_features) float64
    biases: np.ndarray  # (n_classes,) float64
    feature_spec: FeatureSpec
    feature_index: FeatureIndex
    chosen_c: float


@dataclass
class SvmSolution:
    """Solver output for one binary problem, including the per-epoch objective trace."""

    weights: np.ndarray
    bias: float
    objective_trace: np.ndarray  # dual objective at start, each epoch boundary, and termination
    updates: int
    gap: float  # final maximal KKT violation
    converged: bool


@njit(cache=True)
def _smo_kernel(y, csr_p, csr_i, csr_v, csc_p, csc_i, csc_v, sqn, n_features, c, tol, max_epochs):
    n = y.shape[0]
    alpha = np.zeros(n)
    G = np.full(n, -1.0)  # dual gradient: y_t * (w . x_t) - 1
    w = np.zeros(n_features)
    trace = np.empty(max_epochs + 2)
    trace[0] = 0.0
    n_trace = 1
    updates = 0
    max_updates = max_epochs * n
    m_val = -np.inf
    M_val = np.inf
    converged = False

    while True:
        # maximal violating pair over -y*G
        m_val = -np.inf
        M_val = np.inf
        i = -1
        j = -1
        for t in range(n):
            yg = -y[t] * G[t]
            if (y[t] > 0.0 and alpha[t] < c) or (y[t] < 0.0 and alpha[t] > 0.0):
                if yg > m_val:
                    m_val = yg
                    i = t
            if (y[t] > 0.0 and alpha[t] > 0.0) or (y[t] < 0.0 and alpha[t] < c):
                if yg < M_val:
                    M_val = yg
                    j = t
        if i == -1 or j == -1 or m_val - M_val < tol:
            converged = True
            break
        if updates >= max_updates:
            break

        # eta = ||x_i - x_j||^2 via sorted-index row merge
        kij = 0.0
        pi = csr_p[i]
        pj = csr_p[j]
        ei = csr_p[i + 1]
        ej = csr_p[j + 1]
        while pi < ei and pj < ej:
            ci = csr_i[pi]
            cj = csr_i[pj]
            if ci == cj:
                kij += csr_v[pi] * csr_v[pj]
                pi += 1
                pj += 1
            elif ci < cj:
                pi += 1
            else:
                pj += 1
        eta = sqn[i] + sqn[j] - 2.0 * kij

        up_i = (c - alpha[i]) if y[i] > 0.0 else alpha[i]
        up_j = alpha[j] if y[j] > 0.0 else (c - alpha[j])
        if eta > 1e-12:
            delta = (m_val - M_val) / eta
        else:
            delta = np.inf
        if up_i < delta:
            delta = up_i
        if up_j < delta:
            delta = up_j

        # snap to exact bounds so the free/bound distinction stays exact
        if delta == up_i:
            alpha[i] = c if y[i] > 0.0 else 0.0
        else:
            alpha[i] += y[i] * delta
        if delta == up_j:
            alpha[j] = 0.0 if y[j] > 0.0 else c
        else:
            alpha[j] -= y[j] * delta

        # w += delta * (x_i - x_j); G_t += y_t * delta * (K_it - K_jt)
        for p in range(csr_p[i], csr_p[i + 1]):
            col = csr_i[p]
            coef = delta * csr_v[p]
            w[col] += coef
            for q in range(csc_p[col], csc_p[col + 1]):
                r = csc_i[q]
                G[r] += y[r] * coef * csc_v[q]
        for p in range(csr_p[j], csr_p[j + 1]):
            col = csr_i[p]
            coef = delta * csr_v[p]
            w[col] -= coef
            for q in range(csc_p[col], csc_p[col + 1]):
                r = csc_i[q]
                G[r] -= y[r] * coef * csc_v[q]

        updates += 1
        if updates % n == 0:
            ww = 0.0
            for f in range(n_features):
                ww += w[f] * w[f]
            sa = 0.0
            for t in range(n):
                sa += alpha[t]
            trace[n_trace] = 0.5 * ww - sa
            n_trace += 1

    ww = 0.0
    for f in range(n_features):
        ww += w[f] * w[f]
    sa = 0.0
    for t in range(n):
        sa += alpha[t]
    trace[n_trace] = 0.5 * ww - sa
    n_trace += 1
    return alpha, G, w, m_val, M_val, updates, trace, n_trace, converged


def solve_binary_csr(X: sp.csr_matrix, y: np.ndarray, c: float, cfg: TrainConfig) -> SvmSolution:
    """Run the SMO solver on prepared CSR data; returns weights, bias, and diagnostics."""
    if c <= 0:
        raise ConfigError(f"c must be positive, got {c}")
    y = np.asarray(y, dtype=np.float64)
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise DataError("labels for the binary solver must be +1 or -1")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise DataError("binary training requires at least one example of each sign")
    if X.nnz and not np.all(np.isfinite(X.data)):
        raise DataError("feature values must be finite")

    X = X.tocsr()
    X.sort_indices()
    Xc = X.tocsc()
    Xc.sort_indices()
    sqn = np.asarray(X.multiply(X).sum(axis=1)).ravel()

    alpha, G, w, m_val, M_val, updates, trace, n_trace, converged = _smo_kernel(
        y,
        X.indptr.astype(np.int64),
        X.indices.astype(np.int64),
        X.data.astype(np.float64),
        Xc.indptr.astype(np.int64),
        Xc.indices.astype(np.int64),
        Xc.data.astype(np.float64),
        sqn,
        X.shape[1],
        float(c),
        float(cfg.tolerance),
        int(cfg.max_epochs),
    )

    free = (alpha != 0.0) & (alpha != c)
    if free.any():
        b = float(np.mean(-y[free] * G[free]))
    elif np.isfinite(m_val) and np.isfinite(M_val):
        b = float((m_val + M_val) / 2.0)
    elif np.isfinite(m_val):
        b = float(m_val)
    elif np.isfinite(M_val):
        b = float(M_val)
    else:
        b = 0.0
    gap = float(m_val - M_val) if np.isfinite(m_val) and np.isfinite(M_val) else 0.0
    return SvmSolution(
        weights=w,
        bias=b,
        objective_trace=trace[:n_trace].copy(),
        updates=int(updates),
        gap=gap,
        converged=bool(converged),
    )


def train_binary_svm(
    vectors: Sequence[FeatureVector],
    y: Sequence[int],
    c: float,
    cfg: TrainConfig,
) -> tuple[np.ndarray, float]:
    """Train one binary hinge-loss SVM; returns (weight vector, bias).

    The feature dimension is inferred as 1 + the largest column id present.
    """
    n_features = 0
    for vec in vectors:
        if vec:
            n_features = max(n_features, max(vec) + 1)
    X = vectors_to_csr(list(vectors), n_features)
    sol = solve_binary_csr(X, np.asarray(list(y), dtype=np.float64), c, cfg)
    return sol.weights, sol.bias


def train_ovr(train: Corpus, spec: FeatureSpec, c: float, cfg: TrainConfig) -> LinearModel:
    """Train one binary SVM per label (that label vs the rest) on a shared index."""
    if len(train.labels) < 2:
        raise DataError(f"one-vs-rest training requires at least 2 labels, got {len(train.labels)}")
    index = build_feature_index(train, spec)
    vectors = [vectorize(s, index, spec) for s in train.sentences]
    X = vectors_to_csr(vectors, len(index))
    gold = np.array([train.labels.index(s.label) for s in train.sentences], dtype=np.int64)

    weights = np.zeros((len(train.labels), len(index)))
    biases = np.zeros(len(train.labels))
    for k, _label in enumerate(train.labels):
        y = np.where(gold == k, 1.0, -1.0)
        sol = solve_binary_csr(X, y, c, cfg)
        weights[k] = sol.weights
        biases[k] = sol.bias
    return LinearModel(
        classes=train.labels,
        weights=weights,
        biases=biases,
        feature_spec=spec,
        feature_index=index,
        chosen_c=float(c),
    )


def decision_values(model: LinearModel, v: FeatureVector) -> np.ndarray:
    """Per-class scores w_k . v + b_k."""
    if not v:
        return model.biases.copy()
    cols = np.fromiter(v.keys(), dtype=np.int64, count=len(v))
    vals = np.fromiter(v.values(), dtype=np.float64, count=len(v))
    return model.weights[:, cols] @ vals + model.biases


def predict(model: LinearModel, sentence: str) -> str:
    """Label a raw sentence: normalize, vectorize, argmax of decision values.

    Ties break toward the earliest class; all-OOV (or effectively empty)
    input is still labeled via the biases alone.
    """
    try:
        text = normalize_sentence(sentence)
    except DataError:
        vec: FeatureVector = {}
    else:
        vec = vectorize(text, model.feature_index, model.feature_spec)
    scores = decision_values(model, vec)
    return model.classes[int(np.argmax(scores))]


def _predict_csr(X: sp.csr_matrix, weights: np.ndarray, biases: np.ndarray) -> np.ndarray:
    scores = X @ weights.T + biases
    return np.argmax(scores, axis=1)


def grid_search(
    train: Corpus,
    spec: FeatureSpec,
    cfg: TrainConfig,
) -> tuple[float, list[tuple[float, float]]]:
    """k-fold cross-validated search over c_grid.

    Per fold, the feature index is rebuilt from the training folds only.
    Returns (best_c, [(c, mean_cv_accuracy), ...]) where best_c is the
    smallest C attaining the maximum mean accuracy.
    """
    folds = make_cv_folds(train, cfg.k_folds, cfg.seed)

    # Per-fold featurization is independent of C, so cache it across the grid.
    fold_data = []
    for f in range(cfg.k_folds):
        tr_idx = folds.train_indices(f)
        ho_idx = folds.heldout_indices(f)
        tr_corpus = train.subset(tr_idx)
        index = build_feature_index(tr_corpus, spec)
        Xtr = vectors_to_csr([vectorize(s, index, spec) for s in tr_corpus.sentences], len(index))
        ytr = np.array([train.labels.index(s.label) for s in tr_corpus.sentences], dtype=np.int64)
        ho_sents = [train.sentences[i] for i in ho_idx]
        Xho = vectors_to_csr([vectorize(s, index, spec) for s in ho_sents], len(index))
        yho = np.array([train.labels.index(s.label) for s in ho_sents], dtype=np.int64)
        fold_data.append((Xtr, ytr, Xho, yho))

    n_classes = len(train.labels)
    per_c: list[tuple[float, float]] = []
    for c in cfg.c_grid:
        accs = []
        for Xtr, ytr, Xho, yho in fold_data:
            weights = np.zeros((n_classes, Xtr.shape[1]))
            biases = np.zeros(n_classes)
            for k in range(n_classes):
                sol = solve_binary_csr(Xtr, np.where(ytr == k, 1.0, -1.0), c, cfg)
                weights[k] = sol.weights
                biases[k] = sol.bias
            pred = _predict_csr(Xho, weights, biases)
            accs.append(float(np.mean(pred == yho)))
        per_c.append((c, float(np.mean(accs))))

    best_c, best_acc = per_c[0]
    for c, acc in per_c[1:]:
        if acc > best_acc:
            best_c, best_acc = c, acc
    return best_c, per_c


def save_model(model: LinearModel, path: str | Path) -> None:
    """Write the model in the versioned binary format (bit-exact round trip)."""
    out = [_MODEL_MAGIC, struct.pack("<I", _MODEL_VERSION)]
    char_orders = sorted(model.feature_spec.char_orders)
    word_orders = sorted(model.feature_spec.word_orders)
    out.append(struct.pack(f"<B{len(char_orders)}B", len(char_orders), *char_orders))
    out.append(struct.pack(f"<B{len(word_orders)}B", len(word_orders), *word_orders))
    index_blob = model.feature_index.to_bytes()
    out.append(struct.pack("<Q", len(index_blob)))
    out.append(index_blob)
    out.append(struct.pack("<I", len(model.classes)))
    for name in model.classes:
        raw = name.encode("utf-8")
        out.append(struct.pack("<I", len(raw)))
        out.append(raw)
    n_features = model.weights.shape[1]
    out.append(struct.pack("<Q", n_features))
    for k in range(len(model.classes)):
        out.append(struct.pack("<d", float(model.biases[k])))
        out.append(np.ascontiguousarray(model.weights[k], dtype="<f8").tobytes())
    out.append(struct.pack("<d", model.chosen_c))
    Path(path).write_bytes(b"".join(out))


def load_model(path: str | Path) -> LinearModel:
    """Read a model file; truncation or version mismatch raises ModelFormatError."""
    blob = Path(path).read_bytes()
    view = memoryview(blob)
    pos = 0

    def take(n: int) -> memoryview:
        nonlocal pos
        if pos + n > len(view):
            raise ModelFormatError(f"{path}: model file is truncated")
        chunk = view[pos : pos + n]
        pos += n
        return chunk

    if bytes(take(len(_MODEL_MAGIC))) != _MODEL_MAGIC:
        raise ModelFormatError(f"{path}: not a model file (bad magic)")
    (version,) = struct.unpack("<I", take(4))
    if version != _MODEL_VERSION:
        raise ModelFormatError(f"{path}: unsupported model format version {version}")

    (n_char,) = struct.unpack("<B", take(1))
    char_orders = struct.unpack(f"<{n_char}B", take(n_char)) if n_char else ()
    (n_word,) = struct.unpack("<B", take(1))
    word_orders = struct.unpack(f"<{n_word}B", take(n_word)) if n_word else ()
    spec = FeatureSpec(char_orders=frozenset(char_orders), word_orders=frozenset(word_orders))

    (index_len,) = struct.unpack("<Q", take(8))
    index = FeatureIndex.from_bytes(bytes(take(index_len)))

    (n_classes,) = struct.unpack("<I", take(4))
    classes = []
    for _ in range(n_classes):
        (name_len,) = struct.unpack("<I", take(4))
        classes.append(bytes(take(name_len)).decode("utf-8"))

    (n_features,) = struct.unpack("<Q", take(8))
    if n_features != len(index):
        raise ModelFormatError(f"{path}: weight length {n_features} != index size {len(index)}")
    weights = np.zeros((n_classes, n_features))
    biases = np.zeros(n_classes)
    for k in range(n_classes):
        (biases[k],) = struct.unpack("<d", take(8))
        weights[k] = np.frombuffer(take(8 * n_features), dtype="<f8")
    (chosen_c,) = struct.unpack("<d", take(8))
    if pos != len(view):
        raise ModelFormatError(f"{path}: trailing bytes after model payload")
    return LinearModel(
        classes=tuple(classes),
        weights=weights,
        biases=biases,
        feature_spec=spec,
        feature_index=index,
        chosen_c=chosen_c,
    )
