"""
The external ASR worker protocol and the transcript cache
=========================================================

An ASR engine plugs in as a subprocess speaking newline-delimited JSON:
a handshake line, then one response per request, matched by id. This
demo writes a toy worker, drives it through the client, and shows the
content-addressed cache answering the second pass without the worker.
"""

import sys
import tempfile
from pathlib import Path

from serbench.asr import AsrBackendDescriptor, AsrWorkerClient, cached_transcribe
from serbench.dataset import UtteranceRecord
from serbench.labels import EmotionLabel

# a complete worker: handshake, then {"id", "audio"} -> {"id", "text"}
WORKER_SOURCE = '''\
import json, sys

print(json.dumps({"backend_id": "toy-engine@1"}), flush=True)
for line in sys.stdin:
    request = json.loads(line)
    text = "transcribed " + request["audio"].rsplit("/", 1)[-1]
    print(json.dumps({"id": request["id"], "text": text}), flush=True)
'''

with tempfile.TemporaryDirectory() as workdir:
    workdir = Path(workdir)
    worker_path = workdir / "toy_worker.py"
    worker_path.write_text(WORKER_SOURCE, encoding="utf-8")
    audio_path = workdir / "clip.wav"
    audio_path.write_bytes(b"pretend this is 16 kHz mono PCM")

    backend = AsrBackendDescriptor(
        backend_id="toy-engine@1",
        kind="external",
        launch_spec=(sys.executable, str(worker_path)),
    )

    # the raw client: one blocking request against the worker subprocess
    with AsrWorkerClient(backend) as client:
        print(f"handshake backend id: {client.backend_id}")
        print(f"response: {client.transcribe('demo/0/0', audio_path)!r}")

    record = UtteranceRecord(
        utterance_key="demo/0/0",
        dialogue_id=0,
        utterance_id=0,
        split="test",
        speaker="Ross",
        gold_text="does not matter here",
        emotion=EmotionLabel.NEUTRAL,
        audio_path=str(audio_path),
    )
    cache_dir = workdir / "cache"

    # first pass launches the worker and stores the transcript
    with AsrWorkerClient(backend) as client:
        transcript = cached_transcribe(backend, record, cache_dir, client=client)
        print(f"first pass: {transcript.text!r} ({client.requests_sent} request sent)")

    # second pass: pure cache hit, the worker is never even started
    client = AsrWorkerClient(backend)
    transcript = cached_transcribe(backend, record, cache_dir, client=client)
    print(f"second pass: {transcript.text!r} (worker started: {client.started})")

    entries = sorted(p.relative_to(cache_dir) for p in cache_dir.rglob("*.json"))
    print(f"cache layout: {entries[0]}")
