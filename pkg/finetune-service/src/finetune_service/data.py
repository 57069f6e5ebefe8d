"""Transcript CSV loading.

The interchange format is the CSV the benchmark harness exports: a
header row `utterance_key,split,text,emotion` followed by one normalized
utterance per line. Columns bind by header name, so extra columns and
reordering are tolerated.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

from .errors import DataError
from .labels import LABEL_TO_INDEX

REQUIRED_COLUMNS = ("utterance_key", "split", "text", "emotion")


@dataclass(frozen=True)
class TranscriptExample:
    utterance_key: str
    split: str
    text: str
    label: int


def read_transcripts(path: str | Path) -> list[TranscriptExample]:
    """Parse a transcript CSV into labeled examples.

    Raises DataError for a missing file, missing columns, an unknown
    emotion value (with its line number), or an empty file.
    """
    path = Path(path)
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read transcripts {path}: {exc}") from exc

    examples: list[TranscriptExample] = []
    with handle:
        reader = csv.DictReader(handle)
        fieldnames = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if c not in fieldnames]
        if missing:
            raise DataError(f"{path}: missing required columns: {', '.join(missing)}")
        for line_num, row in enumerate(reader, start=2):
            emotion = (row["emotion"] or "").strip().lower()
            if emotion not in LABEL_TO_INDEX:
                raise DataError(
                    f"{path} line {line_num}: unknown emotion {row['emotion']!r}"
                )
            examples.append(
                TranscriptExample(
                    utterance_key=row["utterance_key"] or "",
                    split=row["split"] or "",
                    text=row["text"] or "",
                    label=LABEL_TO_INDEX[emotion],
                )
            )
    if not examples:
        raise DataError(f"{path}: no examples")
    return examples
