"""The seven MELD emotion classes in their fixed canonical order.

The ordinal mapping is the axis of every confusion matrix and probability
vector in this package, so it must never change between runs.
"""

from __future__ import annotations

import enum


class EmotionLabel(enum.IntEnum):
    ANGER = 0
    DISGUST = 1
    FEAR = 2
    JOY = 3
    NEUTRAL = 4
    SADNESS = 5
    SURPRISE = 6

    @classmethod
    def parse(cls, name: str) -> "EmotionLabel":
        """Parse a label name case-insensitively; reject anything else."""
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown emotion label: {name!r}") from None

    @property
    def canonical_name(self) -> str:
        return self.name.lower()


LABELS: tuple[EmotionLabel, ...] = tuple(EmotionLabel)
LABEL_NAMES: tuple[str, ...] = tuple(label.canonical_name for label in LABELS)
NUM_LABELS: int = len(LABELS)
