"""Evaluation metrics: confusion matrix, per-class P/R/F1, weighted-F1.

Conventions
-----------
* Confusion matrix rows are gold labels, columns are predicted labels.
* Every 0/0 ratio (precision, recall, or F1 of an absent class) is defined
  as 0.0, the dominant convention in published emotion-recognition work.
* Weighted-F1 averages per-class F1 with weights support_c / n, so classes
  with zero gold support contribute nothing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .labels import LABELS, NUM_LABELS, EmotionLabel


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """7x7 integer counts; rows = gold label, columns = predicted label."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (NUM_LABELS, NUM_LABELS):
            raise ValueError(f"confusion matrix must be {NUM_LABELS}x{NUM_LABELS}, got {counts.shape}")
        if (counts < 0).any():
            raise ValueError("confusion matrix counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    def support(self, label: EmotionLabel) -> int:
        return int(self.counts[int(label)].sum())

    def __eq__(self, other) -> bool:
        return isinstance(other, ConfusionMatrix) and bool(np.array_equal(self.counts, other.counts))


@dataclass(frozen=True)
class ClassScores:
    support: int
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class ScoreReport:
    """All scores derived from one confusion matrix."""

    per_class: tuple[ClassScores, ...]
    weighted_f1: float
    macro_f1: float
    accuracy: float
    n: int

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "weighted_f1": self.weighted_f1,
            "per_class": {
                label.canonical_name: {
                    "support": scores.support,
                    "precision": scores.precision,
                    "recall": scores.recall,
                    "f1": scores.f1,
                }
                for label, scores in zip(LABELS, self.per_class)
            },
        }


def confusion(golds: Sequence[EmotionLabel], preds: Sequence[EmotionLabel]) -> ConfusionMatrix:
    """Count (gold, predicted) pairs into a confusion matrix."""
    if len(golds) != len(preds):
        raise ValueError(f"gold/pred length mismatch: {len(golds)} vs {len(preds)}")
    if len(golds) == 0:
        raise ValueError("cannot build a confusion matrix from zero pairs")
    counts = np.zeros((NUM_LABELS, NUM_LABELS), dtype=np.int64)
    for g, p in zip(golds, preds):
        counts[int(g), int(p)] += 1
    return ConfusionMatrix(counts)


def _safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


def per_class_prf(cm: ConfusionMatrix) -> tuple[ClassScores, ...]:
    """Per-class precision, recall, and F1 with the 0/0 -> 0 convention."""
    counts = cm.counts
    tp = np.diag(counts)
    pred_totals = counts.sum(axis=0)
    gold_totals = counts.sum(axis=1)
    out = []
    for c in range(NUM_LABELS):
        precision = _safe_div(float(tp[c]), float(pred_totals[c]))
        recall = _safe_div(float(tp[c]), float(gold_totals[c]))
        f1 = _safe_div(2.0 * precision * recall, precision + recall)
        out.append(ClassScores(support=int(gold_totals[c]), precision=precision, recall=recall, f1=f1))
    return tuple(out)


def weighted_f1(cm: ConfusionMatrix) -> float:
    """Support-weighted mean of per-class F1: sum_c (support_c / n) * f1_c."""
    if cm.n < 1:
        raise ValueError("weighted_f1 requires at least one scored pair")
    per_class = per_class_prf(cm)
    n = cm.n
    return sum((scores.support / n) * scores.f1 for scores in per_class)


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.n < 1:
        raise ValueError("accuracy requires at least one scored pair")
    return float(np.trace(cm.counts)) / cm.n


def macro_f1(cm: ConfusionMatrix) -> float:
    """Unweighted mean F1 over all 7 classes (absent classes contribute 0)."""
    if cm.n < 1:
        raise ValueError("macro_f1 requires at least one scored pair")
    per_class = per_class_prf(cm)
    return sum(scores.f1 for scores in per_class) / NUM_LABELS


def score_report(cm: ConfusionMatrix) -> ScoreReport:
    """Compute the full score report from one confusion matrix.

    weighted_f1 is computed from the same per-class values reported, so the
    report is internally consistent by construction.
    """
    per_class = per_class_prf(cm)
    n = cm.n
    wf1 = sum((scores.support / n) * scores.f1 for scores in per_class)
    mf1 = sum(scores.f1 for scores in per_class) / NUM_LABELS
    return ScoreReport(per_class=per_class, weighted_f1=wf1, macro_f1=mf1, accuracy=accuracy(cm), n=n)


def score_labels(golds: Sequence[EmotionLabel], preds: Sequence[EmotionLabel]) -> ScoreReport:
    """Convenience: confusion + score_report in one call."""
    return score_report(confusion(golds, preds))


def class_counts(golds: Sequence[EmotionLabel]) -> Mapping[EmotionLabel, int]:
    out = {label: 0 for label in LABELS}
    for g in golds:
        out[EmotionLabel(int(g))] += 1
    return out
