import json
import sys
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

from serbench.labels import LABEL_NAMES, EmotionLabel

STUB_DIR = Path(__file__).parent / "stubs"
ASR_STUB = STUB_DIR / "asr_worker_stub.py"
FAKE_TOOL = STUB_DIR / "fake_media_tool.py"

MELD_HEADER = (
    "Sr No.,Utterance,Speaker,Emotion,Sentiment,Dialogue_ID,Utterance_ID,"
    "Season,Episode,StartTime,EndTime"
)


def asr_stub_spec(*extra: str) -> tuple[str, ...]:
    """Launch template for the scriptable ASR worker."""
    return (sys.executable, str(ASR_STUB), *extra)


def fake_tool_template() -> tuple[str, ...]:
    """Extraction-tool template with the ffmpeg argument shape."""
    return (
        sys.executable,
        str(FAKE_TOOL),
        "-nostdin",
        "-y",
        "-i",
        "{input}",
        "-ac",
        "1",
        "-ar",
        "16000",
        "-c:a",
        "pcm_s16le",
        "-f",
        "wav",
        "{output}",
    )


def meld_csv_text(rows: list[dict]) -> str:
    """Render MELD-style CSV text from row dicts (raw values, pre-quoted)."""
    lines = [MELD_HEADER]
    for i, row in enumerate(rows):
        lines.append(
            ",".join(
                [
                    str(row.get("sr", i + 1)),
                    row["utterance"],
                    row.get("speaker", "Chandler"),
                    row["emotion"],
                    row.get("sentiment", "neutral"),
                    str(row["dialogue_id"]),
                    str(row["utterance_id"]),
                    str(row.get("season", 1)),
                    str(row.get("episode", 1)),
                    row.get("start", '"0:00:01,000"'),
                    row.get("end", '"0:00:02,000"'),
                ]
            )
        )
    return "\n".join(lines) + "\n"


# Ten test-split utterances with known class counts:
# anger x3, joy x2, neutral x2, sadness x1, surprise x1, disgust x1.
TEN_UTTERANCE_ROWS = [
    {"utterance": "You did WHAT?", "emotion": "anger", "dialogue_id": 0, "utterance_id": 0},
    {"utterance": "That is outrageous!", "emotion": "anger", "dialogue_id": 0, "utterance_id": 1},
    {"utterance": "Stop it right now.", "emotion": "anger", "dialogue_id": 0, "utterance_id": 2},
    {"utterance": "This is wonderful news!", "emotion": "joy", "dialogue_id": 1, "utterance_id": 0},
    {"utterance": "I love it here.", "emotion": "joy", "dialogue_id": 1, "utterance_id": 1},
    {"utterance": "The meeting is at ten.", "emotion": "neutral", "dialogue_id": 2, "utterance_id": 0},
    {"utterance": "Please pass the salt.", "emotion": "neutral", "dialogue_id": 2, "utterance_id": 1},
    {"utterance": "I miss her so much.", "emotion": "sadness", "dialogue_id": 3, "utterance_id": 0},
    {"utterance": "Oh. My. God.", "emotion": "surprise", "dialogue_id": 4, "utterance_id": 0},
    {"utterance": "That smell is disgusting.", "emotion": "disgust", "dialogue_id": 5, "utterance_id": 0},
]


@pytest.fixture
def ten_utterance_csv(tmp_path: Path) -> Path:
    path = tmp_path / "test_sent_emo.csv"
    path.write_text(meld_csv_text(TEN_UTTERANCE_ROWS), encoding="utf-8")
    return path


@pytest.fixture
def toy_corpus() -> list[tuple[str, EmotionLabel]]:
    """Linearly separable two-class training corpus."""
    return [("happy great joy", EmotionLabel.JOY)] * 20 + [
        ("angry furious mad", EmotionLabel.ANGER)
    ] * 20


class ClassifyStub:
    """Configurable in-process classify-protocol server."""

    def __init__(self):
        self.mode = "ok"
        self.model_id = "stub-classifier@1"
        self.text_labels: dict[str, str] = {}
        self.requests: list[list[str]] = []
        self.failures_remaining = 0
        self._server: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None

    @property
    def url(self) -> str:
        host, port = self._server.server_address
        return f"http://{host}:{port}"

    def distribution_for(self, text: str) -> dict[str, float]:
        label = self.text_labels.get(text)
        if label is None:
            return {name: 1.0 / 7.0 for name in LABEL_NAMES}
        return {name: 0.4 if name == label else 0.1 for name in LABEL_NAMES}

    def start(self):
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def _send_json(self, status: int, body: dict):
                payload = json.dumps(body).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def do_GET(self):
                if self.path == "/v1/health":
                    self._send_json(200, {"model_id": stub.model_id})
                else:
                    self._send_json(404, {"error": "not found"})

            def do_POST(self):
                if self.path != "/v1/classify":
                    self._send_json(404, {"error": "not found"})
                    return
                length = int(self.headers.get("Content-Length", "0"))
                body = json.loads(self.rfile.read(length) or b"{}")
                texts = body.get("texts", [])
                stub.requests.append(list(texts))
                if stub.mode == "http-500" or (
                    stub.mode == "flaky-then-ok" and stub.failures_remaining > 0
                ):
                    stub.failures_remaining -= 1
                    self._send_json(500, {"error": "induced server failure"})
                    return
                if stub.mode == "not-json":
                    payload = b"<html>definitely not json</html>"
                    self.send_response(200)
                    self.send_header("Content-Length", str(len(payload)))
                    self.end_headers()
                    self.wfile.write(payload)
                    return
                distributions = []
                for text in texts:
                    dist = stub.distribution_for(text)
                    if stub.mode == "bad-sum":
                        dist = {name: 0.1 for name in LABEL_NAMES}  # sums to 0.7
                    elif stub.mode == "missing-key":
                        dist = {name: p for name, p in dist.items() if name != "fear"}
                    distributions.append(dist)
                if stub.mode == "drop-one":
                    distributions = distributions[:-1]
                self._send_json(200, {"model_id": stub.model_id, "distributions": distributions})

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    def stop(self):
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()


@pytest.fixture
def classify_server():
    stub = ClassifyStub()
    stub.start()
    yield stub
    stub.stop()


# One "[PASS]/[FAIL] <criterion>" line per acceptance criterion, echoed in
# the terminal summary so the verdicts survive pytest's output capture.
ACCEPTANCE_RESULTS: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)
