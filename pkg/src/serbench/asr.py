"""Speech-to-text backends, text normalization, transcript caching, WER.

Two backend kinds exist:

* ``oracle`` returns the gold transcript (the ideal-converter setting), so
  downstream behavior can be isolated from recognition quality.
* ``external`` talks to a worker subprocess over a newline-delimited JSON
  protocol (see :class:`AsrWorkerClient`), so any recognition engine that
  speaks the protocol can be plugged in without linking it into the harness.
"""

from __future__ import annotations

import hashlib
import json
import os
import shlex
import subprocess
import threading
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from .dataset import UtteranceRecord
from .errors import BackendError, ProtocolError, WarningTally
from .hashing import file_digest, text_digest

DEFAULT_REQUEST_TIMEOUT = 120.0  # seconds per utterance

ORACLE_BACKEND_ID = "oracle@1"


def normalize_text(s: str) -> str:
    """Normalize text for cross-backend comparison.

    Lowercase; replace every character that is not a letter, digit,
    apostrophe, or whitespace with a space; collapse whitespace runs; strip.
    Idempotent: normalize_text(normalize_text(s)) == normalize_text(s).
    """
    lowered = s.lower()
    kept = [
        ch if (ch.isalpha() or ch.isdigit() or ch == "'" or ch.isspace()) else " "
        for ch in lowered
    ]
    return " ".join("".join(kept).split())


@dataclass(frozen=True)
class Transcript:
    """Backend-attributed transcript for one utterance.

    ``text`` is always the normalized form of ``raw_text``; construction
    enforces this so a Transcript can never carry unnormalized text.
    """

    utterance_key: str
    text: str
    raw_text: str
    backend_id: str
    audio_digest: str | None = None

    def __post_init__(self):
        if not self.backend_id:
            raise ValueError("backend_id must be nonempty")
        if self.text != normalize_text(self.raw_text):
            raise ValueError(
                f"transcript text for {self.utterance_key!r} is not the normalized raw text"
            )

    @property
    def is_degenerate(self) -> bool:
        return self.text == ""

    def to_dict(self) -> dict:
        return {
            "utterance_key": self.utterance_key,
            "text": self.text,
            "raw_text": self.raw_text,
            "backend_id": self.backend_id,
            "audio_digest": self.audio_digest,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Transcript":
        return cls(
            utterance_key=data["utterance_key"],
            text=data["text"],
            raw_text=data["raw_text"],
            backend_id=data["backend_id"],
            audio_digest=data.get("audio_digest"),
        )


def make_transcript(
    utterance_key: str, raw_text: str, backend_id: str, audio_digest: str | None = None
) -> Transcript:
    """Build a Transcript, normalizing the raw backend output."""
    return Transcript(
        utterance_key=utterance_key,
        text=normalize_text(raw_text),
        raw_text=raw_text,
        backend_id=backend_id,
        audio_digest=audio_digest,
    )


@dataclass(frozen=True)
class AsrBackendDescriptor:
    """Names a transcription backend and, for external ones, how to launch it."""

    backend_id: str
    kind: str  # "oracle" | "external"
    launch_spec: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("oracle", "external"):
            raise ValueError(f"unknown ASR backend kind: {self.kind!r}")
        if self.kind == "oracle" and self.launch_spec is not None:
            raise ValueError("oracle backends take no launch_spec")
        if self.launch_spec is not None and isinstance(self.launch_spec, (list, str)):
            spec = self.launch_spec
            argv = tuple(shlex.split(spec)) if isinstance(spec, str) else tuple(spec)
            object.__setattr__(self, "launch_spec", argv)


ORACLE_BACKEND = AsrBackendDescriptor(backend_id=ORACLE_BACKEND_ID, kind="oracle")


def oracle_transcribe(record: UtteranceRecord) -> Transcript:
    """Transcribe by copying the gold transcript (ideal-converter backend)."""
    return make_transcript(record.utterance_key, record.gold_text, ORACLE_BACKEND_ID)


class AsrWorkerClient:
    """Client for an external ASR worker speaking newline-delimited JSON.

    Protocol (one JSON object per line, worker flushes after each write):

    * handshake: the worker's first stdout line is ``{"backend_id": "name@ver"}``
    * request:   ``{"id": "<utterance_key>", "audio": "<absolute wav path>"}``
    * response:  ``{"id": ..., "text": ...}`` or ``{"id": ..., "error": ...}``

    Responses may arrive out of order; they are matched to requests by id.
    Multiple threads may have requests in flight on one client. EOF on the
    worker's stdin signals shutdown.
    """

    def __init__(
        self,
        backend: AsrBackendDescriptor,
        *,
        request_timeout: float = DEFAULT_REQUEST_TIMEOUT,
    ):
        if backend.kind != "external":
            raise ValueError("AsrWorkerClient requires an external backend")
        if not backend.launch_spec:
            raise ValueError(f"backend {backend.backend_id!r} has no launch_spec")
        self.descriptor = backend
        self.request_timeout = request_timeout
        self.backend_id: str | None = None
        self.requests_sent = 0
        self._proc: subprocess.Popen | None = None
        self._reader: threading.Thread | None = None
        self._lock = threading.Lock()
        self._cond = threading.Condition(self._lock)
        self._results: dict[str, dict] = {}
        self._pending: set[str] = set()
        self._fatal: Exception | None = None
        self._handshake_done = threading.Event()

    # -- lifecycle -----------------------------------------------------

    @property
    def started(self) -> bool:
        return self._proc is not None

    def start(self) -> None:
        if self._proc is not None:
            return
        argv = list(self.descriptor.launch_spec)
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise BackendError(f"cannot launch ASR worker {argv!r}: {exc}") from exc
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()
        if not self._handshake_done.wait(self.request_timeout):
            self.close()
            raise BackendError(f"ASR worker {self.descriptor.backend_id!r}: no handshake")
        with self._lock:
            if self._fatal is not None:
                raise self._fatal

    def close(self) -> None:
        proc = self._proc
        if proc is None:
            return
        try:
            if proc.stdin and not proc.stdin.closed:
                proc.stdin.close()
            proc.wait(timeout=10)
        except (OSError, subprocess.TimeoutExpired):
            proc.kill()
            proc.wait()
        finally:
            self._proc = None

    def __enter__(self) -> "AsrWorkerClient":
        self.start()
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    # -- protocol ------------------------------------------------------

    def _read_loop(self) -> None:
        assert self._proc is not None and self._proc.stdout is not None
        for line in self._proc.stdout:
            line = line.strip()
            if not line:
                continue
            try:
                message = json.loads(line)
                if not isinstance(message, dict):
                    raise ValueError("not a JSON object")
            except ValueError:
                self._abort(ProtocolError(f"malformed worker response line: {line!r}"))
                return
            if self.backend_id is None and "backend_id" in message:
                self.backend_id = str(message["backend_id"])
                self._handshake_done.set()
                continue
            if "id" not in message:
                self._abort(ProtocolError(f"worker response without id: {line!r}"))
                return
            rid = str(message["id"])
            unknown = False
            with self._cond:
                if rid in self._pending:
                    self._pending.discard(rid)
                    self._results[rid] = message
                    self._cond.notify_all()
                else:
                    unknown = True
            if unknown:
                self._abort(ProtocolError(f"worker response for unknown request id {rid!r}"))
                return
        self._abort(BackendError(f"ASR worker {self.descriptor.backend_id!r} exited"))

    def _abort(self, exc: Exception) -> None:
        with self._cond:
            if self._fatal is None:
                self._fatal = exc
            self._pending.clear()
            self._cond.notify_all()
        self._handshake_done.set()

    def transcribe(self, utterance_key: str, audio_path: str | Path) -> str:
        """Send one request and block until its response arrives.

        Returns the raw transcript text. Raises BackendError on worker
        error/exit/timeout and ProtocolError on malformed traffic.
        """
        if self._proc is None:
            self.start()
        with self._cond:
            if self._fatal is not None:
                raise self._fatal
            self._pending.add(utterance_key)
        request = {"id": utterance_key, "audio": str(Path(audio_path).absolute())}
        try:
            assert self._proc is not None and self._proc.stdin is not None
            self._proc.stdin.write(json.dumps(request) + "\n")
            self._proc.stdin.flush()
        except (OSError, ValueError) as exc:
            with self._cond:
                self._pending.discard(utterance_key)
            raise BackendError(f"cannot write to ASR worker: {exc}") from exc
        self.requests_sent += 1
        with self._cond:
            deadline_ok = self._cond.wait_for(
                lambda: utterance_key in self._results or self._fatal is not None,
                timeout=self.request_timeout,
            )
            if self._fatal is not None:
                raise self._fatal
            if not deadline_ok:
                self._pending.discard(utterance_key)
                raise BackendError(
                    f"ASR worker timed out after {self.request_timeout}s on {utterance_key!r}"
                )
            response = self._results.pop(utterance_key)
        if "error" in response:
            raise BackendError(f"ASR worker error on {utterance_key!r}: {response['error']}")
        if "text" not in response:
            raise ProtocolError(f"worker response has neither text nor error: {response!r}")
        return str(response["text"])


def external_transcribe(
    backend: AsrBackendDescriptor,
    audio_path: str | Path,
    utterance_key: str,
    *,
    client: AsrWorkerClient | None = None,
    request_timeout: float = DEFAULT_REQUEST_TIMEOUT,
) -> Transcript:
    """Transcribe one audio file via an external worker.

    When no client is passed, a worker is launched for this single request
    and shut down afterwards; callers with many utterances should hold one
    AsrWorkerClient and pass it in.
    """
    audio_path = Path(audio_path)
    if not audio_path.is_file():
        raise FileNotFoundError(f"audio file not found: {audio_path}")
    digest = file_digest(audio_path)
    if client is not None:
        raw = client.transcribe(utterance_key, audio_path)
        backend_id = client.backend_id or backend.backend_id
        return make_transcript(utterance_key, raw, backend_id, digest)
    with AsrWorkerClient(backend, request_timeout=request_timeout) as ephemeral:
        raw = ephemeral.transcribe(utterance_key, audio_path)
        backend_id = ephemeral.backend_id or backend.backend_id
        return make_transcript(utterance_key, raw, backend_id, digest)


# -- word error rate -------------------------------------------------------


def word_edit_distance(reference: Sequence[str], hypothesis: Sequence[str]) -> int:
    """Word-level Levenshtein distance with unit costs (S + D + I)."""
    a, b = reference, hypothesis
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, tok_a in enumerate(a, 1):
        cur = [i]
        for j, tok_b in enumerate(b, 1):
            cost = 0 if tok_a == tok_b else 1
            cur.append(min(prev[j] + 1, cur[-1] + 1, prev[j - 1] + cost))
        prev = cur
    return prev[-1]


def word_error_rate(reference: str, hypothesis: str) -> float:
    """(S + D + I) / N over normalized, whitespace-split tokens.

    N is the reference token count, so insertion-heavy hypotheses can push
    the value above 1.0. An empty normalized reference has no defined WER.
    """
    ref_tokens = normalize_text(reference).split()
    hyp_tokens = normalize_text(hypothesis).split()
    if not ref_tokens:
        raise ValueError("word_error_rate: reference is empty after normalization")
    return word_edit_distance(ref_tokens, hyp_tokens) / len(ref_tokens)


# -- transcript cache ------------------------------------------------------


def _fs_safe(name: str) -> str:
    return "".join(ch if (ch.isalnum() or ch in "@._-+") else "_" for ch in name)


def cache_entry_path(cache_dir: str | Path, backend_id: str, content_digest: str) -> Path:
    """Cache layout: cache_dir/<backend_id>/<key-hash>.json.

    The key hashed into the filename is the (content digest, backend id)
    pair, so the same audio under two backends occupies two entries.
    """
    key_hash = hashlib.sha256(f"{content_digest}|{backend_id}".encode("utf-8")).hexdigest()
    return Path(cache_dir) / _fs_safe(backend_id) / f"{key_hash}.json"


def _load_cache_entry(path: Path, utterance_key: str) -> Transcript | None:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        transcript = Transcript.from_dict(data)
    except (OSError, ValueError, KeyError, TypeError):
        return None
    if transcript.utterance_key != utterance_key:
        # Same audio content can back multiple utterances; reattribute.
        transcript = replace(transcript, utterance_key=utterance_key)
    return transcript


def _store_cache_entry(path: Path, transcript: Transcript) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.{os.getpid()}.{threading.get_ident()}.tmp")
    with open(tmp, "w", encoding="utf-8") as f:
        json.dump(transcript.to_dict(), f, ensure_ascii=False)
    os.replace(tmp, path)


def cached_transcribe(
    backend: AsrBackendDescriptor,
    record: UtteranceRecord,
    cache_dir: str | Path,
    *,
    client: AsrWorkerClient | None = None,
    request_timeout: float = DEFAULT_REQUEST_TIMEOUT,
    tally: WarningTally | None = None,
) -> Transcript:
    """Transcribe through a content-addressed cache.

    Cache hits return the stored transcript without touching the backend;
    corrupt entries count one warning, get replaced, and otherwise behave
    like misses. Writes go through a temp file plus atomic rename, so
    concurrent writers are safe (last writer wins).
    """
    if backend.kind == "oracle":
        content_digest = text_digest(record.gold_text)
    elif backend.kind == "external":
        if record.audio_path is None:
            raise BackendError(f"record {record.utterance_key!r} has no audio_path")
        content_digest = file_digest(record.audio_path)
    else:  # pragma: no cover - descriptor constructor rejects other kinds
        raise ValueError(f"unknown backend kind: {backend.kind!r}")

    path = cache_entry_path(cache_dir, backend.backend_id, content_digest)
    if path.exists():
        cached = _load_cache_entry(path, record.utterance_key)
        if cached is not None:
            return cached
        if tally is not None:
            tally.cache_corruption += 1
            tally.note(f"corrupt cache entry replaced: {path}")

    if backend.kind == "oracle":
        transcript = oracle_transcribe(record)
    else:
        transcript = external_transcribe(
            backend,
            record.audio_path,
            record.utterance_key,
            client=client,
            request_timeout=request_timeout,
        )
    _store_cache_entry(path, transcript)
    return transcript
