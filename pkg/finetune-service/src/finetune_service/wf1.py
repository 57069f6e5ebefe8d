"""Weighted F1 over the seven emotion classes.

Per-class F1 weighted by gold support. A class with neither gold nor
predicted examples contributes zero (the 0/0 = 0 convention), matching
how the benchmark harness scores its reports.
"""

from collections.abc import Sequence

from .labels import NUM_LABELS


def weighted_f1(gold: Sequence[int], pred: Sequence[int]) -> float:
    if len(gold) != len(pred):
        raise ValueError(f"length mismatch: {len(gold)} gold vs {len(pred)} predicted")
    if not gold:
        raise ValueError("weighted F1 needs at least one example")
    n = len(gold)
    total = 0.0
    for klass in range(NUM_LABELS):
        support = sum(1 for g in gold if g == klass)
        if support == 0:
            continue
        true_positive = sum(1 for g, p in zip(gold, pred) if g == klass and p == klass)
        predicted = sum(1 for p in pred if p == klass)
        precision = true_positive / predicted if predicted else 0.0
        recall = true_positive / support
        if precision + recall == 0.0:
            f1 = 0.0
        else:
            f1 = 2.0 * precision * recall / (precision + recall)
        total += support * f1
    return total / n
