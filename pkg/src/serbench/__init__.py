"""serbench: a speech emotion recognition benchmark harness.

Converts MELD speech to text (external ASR worker or gold-transcript
oracle), classifies the text into the seven MELD emotions, and scores the
result with weighted-F1 next to published reference numbers.
"""

__version__ = "0.1.0"

from .labels import LABELS, LABEL_NAMES, NUM_LABELS, EmotionLabel  # noqa: F401
