"""Exception types and the shared warning tally."""

from __future__ import annotations

from dataclasses import dataclass, field


class SerbenchError(Exception):
    """Base class for all harness-specific failures."""


class SchemaError(SerbenchError):
    """Input file does not match the expected schema (e.g. missing CSV column)."""


class RowError(SerbenchError):
    """A single data row is invalid; carries the 1-based line number."""

    def __init__(self, line_num: int, message: str):
        super().__init__(f"row {line_num}: {message}")
        self.line_num = line_num


class IntegrityError(SerbenchError):
    """Dataset-level consistency violation (e.g. duplicate utterance keys)."""


class MediaNotFoundError(SerbenchError):
    """A referenced media or audio file is missing; carries the utterance key."""

    def __init__(self, utterance_key: str, path: str):
        super().__init__(f"media not found for {utterance_key}: {path}")
        self.utterance_key = utterance_key
        self.path = path


class ExtractionError(SerbenchError):
    """External media-extraction tool failed or produced a bad file."""


class BackendError(SerbenchError):
    """A pluggable backend (ASR worker, remote classifier) failed hard."""


class ProtocolError(SerbenchError):
    """A backend violated its wire protocol."""


class ContractError(SerbenchError):
    """A backend response violated a data contract (e.g. bad distribution)."""


class ConfigError(SerbenchError):
    """Experiment configuration is invalid."""


@dataclass
class WarningTally:
    """Mutable counter for tolerated-but-noteworthy events during a run.

    Passed optionally into parsing/caching entry points so callers that care
    (the CLI summary, the experiment report) can surface the counts.
    """

    decode_errors: int = 0
    cache_corruption: int = 0
    notes: list[str] = field(default_factory=list)

    @property
    def total(self) -> int:
        return self.decode_errors + self.cache_corruption

    def note(self, message: str) -> None:
        self.notes.append(message)
