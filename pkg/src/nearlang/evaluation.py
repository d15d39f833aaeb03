"""Accuracy, per-class precision/recall/F1, confusion matrices, and error reports.

Metrics are kept at full precision internally; rendering rounds accuracy to
a percentage with 3 decimals and per-class scores to 2 decimals. Precision
and recall with an empty denominator are defined as 0 (and F1 as 0).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import Corpus
from .errors import DataError
from .svm import LinearModel, decision_values, vectorize


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Counts with rows = actual label, columns = predicted label."""

    labels: tuple[str, ...]
    counts: np.ndarray  # (L, L) int64

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ConfusionMatrix)
            and self.labels == other.labels
            and np.array_equal(self.counts, other.counts)
        )

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def trace(self) -> int:
        return int(np.trace(self.counts))

    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    def to_tsv(self) -> str:
        lines = ["\t" + "\t".join(self.labels)]
        for i, lab in enumerate(self.labels):
            lines.append(lab + "\t" + "\t".join(str(int(v)) for v in self.counts[i]))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_tsv(cls, text: str) -> "ConfusionMatrix":
        rows = [line.split("\t") for line in text.splitlines() if line]
        labels = tuple(rows[0][1:])
        counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
        for i, row in enumerate(rows[1:]):
            if row[0] != labels[i]:
                raise DataError(f"confusion matrix row label {row[0]!r} != column label {labels[i]!r}")
            counts[i] = [int(v) for v in row[1:]]
        return cls(labels=labels, counts=counts)


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True, eq=False)
class EvalReport:
    accuracy: float
    per_class: dict[str, ClassMetrics]
    macro_f1: float
    confusion: ConfusionMatrix

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, EvalReport)
            and self.accuracy == other.accuracy
            and self.per_class == other.per_class
            and self.macro_f1 == other.macro_f1
            and self.confusion == other.confusion
        )

    def weighted_f1(self) -> float:
        """Support-weighted mean of per-class F1."""
        total = sum(m.support for m in self.per_class.values())
        return sum(m.f1 * m.support for m in self.per_class.values()) / total


@dataclass(frozen=True)
class ErrorRecord:
    """One misclassified sentence with its decision scores."""

    text: str
    actual: str
    predicted: str
    margin: float  # top score minus runner-up score; small = most confusable
    scores: tuple[float, ...]  # per class, in model class order


def confusion_matrix(gold: Sequence[str], pred: Sequence[str], labels: Sequence[str]) -> ConfusionMatrix:
    """Tally (actual, predicted) pairs into an L x L matrix."""
    if len(gold) != len(pred):
        raise DataError(f"gold and pred lengths differ: {len(gold)} vs {len(pred)}")
    labels = tuple(labels)
    pos = {lab: i for i, lab in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for g, p in zip(gold, pred):
        if g not in pos:
            raise DataError(f"gold label {g!r} not in inventory {labels}")
        if p not in pos:
            raise DataError(f"predicted label {p!r} not in inventory {labels}")
        counts[pos[g], pos[p]] += 1
    return ConfusionMatrix(labels=labels, counts=counts)


def per_class_metrics(cm: ConfusionMatrix) -> dict[str, ClassMetrics]:
    """Precision, recall, F1, and support for every class."""
    col_sums = cm.counts.sum(axis=0)
    row_sums = cm.counts.sum(axis=1)
    out: dict[str, ClassMetrics] = {}
    for k, lab in enumerate(cm.labels):
        tp = int(cm.counts[k, k])
        precision = tp / int(col_sums[k]) if col_sums[k] else 0.0
        recall = tp / int(row_sums[k]) if row_sums[k] else 0.0
        f1 = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
        out[lab] = ClassMetrics(precision=precision, recall=recall, f1=f1, support=int(row_sums[k]))
    return out


def accuracy(cm: ConfusionMatrix) -> float:
    """trace / total."""
    if cm.total == 0:
        raise DataError("cannot compute accuracy of an empty confusion matrix")
    return cm.trace / cm.total


def evaluate_predictions(gold: Sequence[str], pred: Sequence[str], labels: Sequence[str]) -> EvalReport:
    cm = confusion_matrix(gold, pred, labels)
    per_class = per_class_metrics(cm)
    macro_f1 = float(np.mean([m.f1 for m in per_class.values()]))
    return EvalReport(accuracy=accuracy(cm), per_class=per_class, macro_f1=macro_f1, confusion=cm)


def evaluate_model(model: LinearModel, test: Corpus) -> tuple[EvalReport, list["ErrorRecord"]]:
    """Score a model on a test corpus; also returns the misclassification report."""
    unknown = [lab for lab in test.labels if lab not in model.classes]
    if unknown:
        raise DataError(f"test labels {unknown} not among model classes {model.classes}")
    gold: list[str] = []
    pred: list[str] = []
    errors: list[ErrorRecord] = []
    for sentence in test.sentences:
        vec = vectorize(sentence, model.feature_index, model.feature_spec)
        scores = decision_values(model, vec)
        predicted = model.classes[int(np.argmax(scores))]
        gold.append(sentence.label)
        pred.append(predicted)
        if predicted != sentence.label:
            top, runner = np.partition(scores, -2)[-2:][::-1] if len(scores) > 1 else (scores[0], scores[0])
            errors.append(
                ErrorRecord(
                    text=sentence.text,
                    actual=sentence.label,
                    predicted=predicted,
                    margin=float(top - runner),
                    scores=tuple(float(s) for s in scores),
                )
            )
    errors.sort(key=lambda e: e.margin)
    report = evaluate_predictions(gold, pred, model.classes)
    return report, errors


def error_report(model: LinearModel, test: Corpus) -> list[ErrorRecord]:
    """All misclassified sentences with scores, most confusable (smallest margin) first."""
    _, errors = evaluate_model(model, test)
    return errors


# ---------------------------------------------------------------------------
# Rendering and machine-readable round trip.
# ---------------------------------------------------------------------------

_METRICS_HEADER = "# nearlang metrics v1"


def render_report(report: EvalReport) -> str:
    """Human-readable table: accuracy % at 3 decimals, class scores at 2."""
    width = max(len("label"), *(len(lab) for lab in report.per_class))
    lines = [f"accuracy: {report.accuracy * 100:.3f}%", ""]
    lines.append(f"{'label':<{width}}  precision  recall  f1    support")
    for lab, m in report.per_class.items():
        lines.append(f"{lab:<{width}}  {m.precision:<9.2f}  {m.recall:<6.2f}  {m.f1:<4.2f}  {m.support}")
    lines.append("")
    lines.append(f"macro F1: {report.macro_f1:.2f}")
    return "\n".join(lines) + "\n"


def metrics_to_tsv(report: EvalReport) -> str:
    """Machine-readable metrics at full float precision."""
    lines = [
        _METRICS_HEADER,
        f"accuracy\t{report.accuracy!r}",
        f"macro_f1\t{report.macro_f1!r}",
        "label\tprecision\trecall\tf1\tsupport",
    ]
    for lab, m in report.per_class.items():
        lines.append(f"{lab}\t{m.precision!r}\t{m.recall!r}\t{m.f1!r}\t{m.support}")
    return "\n".join(lines) + "\n"


def read_eval_report(metrics_text: str, confusion_text: str) -> EvalReport:
    """Parse the metrics TSV + confusion TSV pair back into an EvalReport."""
    lines = metrics_text.strip().splitlines()
    if not lines or lines[0] != _METRICS_HEADER:
        raise DataError("not a metrics file (missing header)")
    acc = None
    macro = None
    per_class: dict[str, ClassMetrics] = {}
    for line in lines[1:]:
        parts = line.split("\t")
        if parts[0] == "accuracy":
            acc = float(parts[1])
        elif parts[0] == "macro_f1":
            macro = float(parts[1])
        elif parts[0] == "label":
            continue
        else:
            per_class[parts[0]] = ClassMetrics(
                precision=float(parts[1]),
                recall=float(parts[2]),
                f1=float(parts[3]),
                support=int(parts[4]),
            )
    if acc is None or macro is None:
        raise DataError("metrics file is missing accuracy or macro_f1")
    cm = ConfusionMatrix.from_tsv(confusion_text)
    return EvalReport(accuracy=acc, per_class=per_class, macro_f1=macro, confusion=cm)


def errors_to_tsv(errors: Sequence[ErrorRecord], classes: Sequence[str]) -> str:
    header = "text\tactual\tpredicted\tmargin\t" + "\t".join(classes)
    lines = [header]
    for e in errors:
        scores = "\t".join(repr(s) for s in e.scores)
        lines.append(f"{e.text}\t{e.actual}\t{e.predicted}\t{e.margin!r}\t{scores}")
    return "\n".join(lines) + "\n"
