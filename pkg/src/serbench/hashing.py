"""Content digests used for cache keys and provenance fields."""

from __future__ import annotations

import hashlib
from pathlib import Path


def file_digest(path: str | Path) -> str:
    """SHA-256 hex digest of a file's content."""
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def text_digest(text: str) -> str:
    """SHA-256 hex digest of a string's UTF-8 encoding."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
