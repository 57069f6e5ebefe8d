"""Behavioral acceptance gate.

Each test pins one end-to-end guarantee of the harness and records a
"[PASS]/[FAIL] <guarantee>" line that pytest echoes in its terminal
summary (see conftest.pytest_terminal_summary). Oracles here are
independent reimplementations: pair-enumeration scoring, full-matrix edit
distance, central finite differences.
"""

import itertools
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from conftest import ACCEPTANCE_RESULTS, ClassifyStub, asr_stub_spec
from serbench.asr import (
    AsrBackendDescriptor,
    AsrWorkerClient,
    oracle_transcribe,
    word_error_rate,
)
from serbench.classifier import (
    BaselineHyper,
    argmax_label,
    classify_baseline,
    classify_remote,
    fit_baseline,
    objective_and_gradient,
    training_accuracy,
)
from serbench.dataset import build_manifest
from serbench.errors import BackendError, ContractError, ProtocolError
from serbench.labels import LABELS, NUM_LABELS, EmotionLabel
from serbench.metrics import ClassScores, ScoreReport, score_labels
from serbench.runner import (
    ExperimentReport,
    MethodResult,
    render_report,
    run_experiment,
)
from test_asr import make_record, oracle_distance
from test_metrics import oracle_scores
from test_runner import external_run_config


def check(name: str, body) -> None:
    """Run one guarantee, record its verdict line, and fail the test on FAIL."""
    try:
        detail = body()
        ok = True
    except BaseException as exc:  # any escape is a FAIL, not an error
        detail = f"{type(exc).__name__}: {exc}"
        ok = False
    line = f"[{'PASS' if ok else 'FAIL'}] {name}" + (f" ({detail})" if detail else "")
    ACCEPTANCE_RESULTS.append(line)
    assert ok, line


# 1 -------------------------------------------------------------------------


def test_scoring_matches_bruteforce_oracle_on_1000_instances():
    def body():
        rng = np.random.default_rng(2024)
        started = time.perf_counter()
        for case in range(1000):
            n = int(rng.integers(1, 13))
            golds = [LABELS[i] for i in rng.integers(0, NUM_LABELS, size=n)]
            preds = [LABELS[i] for i in rng.integers(0, NUM_LABELS, size=n)]
            report = score_labels(golds, preds)
            expected, wf1, mf1, acc = oracle_scores(golds, preds)
            assert abs(report.weighted_f1 - wf1) <= 1e-12
            assert abs(report.macro_f1 - mf1) <= 1e-12
            assert abs(report.accuracy - acc) <= 1e-12
            for got, (support, precision, recall, f1) in zip(report.per_class, expected):
                assert got.support == support
                assert abs(got.precision - precision) <= 1e-12
                assert abs(got.recall - recall) <= 1e-12
                assert abs(got.f1 - f1) <= 1e-12
        elapsed = time.perf_counter() - started
        assert elapsed < 5.0, f"took {elapsed:.2f}s, bound is 5s"
        return f"1000 instances, n <= 12, tolerance 1e-12, {elapsed:.2f}s"

    check("weighted-F1 and per-class P/R/F1 match a pair-enumeration oracle", body)


# 2 -------------------------------------------------------------------------


def test_weighted_f1_frozen_hand_cases():
    def body():
        a, b = EmotionLabel.ANGER, EmotionLabel.JOY
        two_thirds = score_labels([a, a, b], [a, b, b]).weighted_f1
        assert abs(two_thirds - 2.0 / 3.0) <= 1e-12, two_thirds
        one_third = score_labels([a, b], [a, a]).weighted_f1
        assert abs(one_third - 1.0 / 3.0) <= 1e-12, one_third
        perfect = score_labels([a, b, a], [a, b, a]).weighted_f1
        assert perfect == 1.0, perfect
        return "2/3, 1/3, and 1.0 reproduced exactly"

    check("weighted-F1 hand cases", body)


# 3 -------------------------------------------------------------------------


def test_wer_equals_oracle_for_all_short_sequence_pairs():
    def body():
        tokens = ("a", "b", "c")
        seqs = [list(p) for n in range(0, 7) for p in itertools.product(tokens, repeat=n)]
        hyp_strs = [" ".join(s) for s in seqs]
        started = time.perf_counter()
        pairs = 0
        for ref in seqs:
            if not ref:
                with pytest.raises(ValueError):
                    word_error_rate("", "anything")
                continue
            ref_str = " ".join(ref)
            n = len(ref)
            for hyp, hyp_str in zip(seqs, hyp_strs):
                assert word_error_rate(ref_str, hyp_str) == oracle_distance(ref, hyp) / n
                pairs += 1
        elapsed = time.perf_counter() - started

        assert word_error_rate("the cat sat", "the cat sat") == 0.0
        assert abs(word_error_rate("the cat sat", "the bat") - 2.0 / 3.0) <= 1e-15
        assert word_error_rate("three word reference", "") == 1.0
        return f"all {pairs} pairs up to length 6 over 3 tokens, {elapsed:.1f}s; fixed cases 0, 2/3, 1.0"

    check("word error rate equals full-matrix edit-distance oracle exhaustively", body)


# 4 -------------------------------------------------------------------------


def test_oracle_backend_has_zero_wer_on_every_record():
    def body():
        rng = np.random.default_rng(31)
        words = ["oh", "right", "FINE", "really", "what", "no", "I'm", "10", "Joey"]
        junk = ["...", "?!", "--", ""]
        records = []
        for i in range(200):
            size = int(rng.integers(1, 9))
            parts = [words[j] for j in rng.integers(0, len(words), size=size)]
            parts.insert(int(rng.integers(0, size + 1)), junk[int(rng.integers(0, 4))])
            records.append(
                make_record(key=f"test/{i // 10}/{i % 10}", text=" ".join(parts))
            )
        manifest = build_manifest(records, "test")
        zero = 0
        for record in manifest.records:
            transcript = oracle_transcribe(record)
            assert word_error_rate(record.gold_text, transcript.raw_text) == 0.0
            zero += 1
        assert zero == len(manifest) == 200
        return "200/200 records at WER 0 against normalized gold"

    check("gold-transcript backend reproduces every reference exactly", body)


# 5 -------------------------------------------------------------------------


def test_training_gradient_and_separable_corpus():
    def body():
        rng = np.random.default_rng(424242)
        from scipy import sparse

        n, vocab_size = 23, 17
        mask = rng.random((n, vocab_size)) < 0.4
        features = sparse.csr_matrix(rng.normal(size=(n, vocab_size)) * mask)
        targets = np.zeros((n, NUM_LABELS))
        for i in range(n):
            targets[i, rng.integers(0, NUM_LABELS)] = 1.0
        weights = rng.normal(scale=0.5, size=(NUM_LABELS, vocab_size))
        bias = rng.normal(scale=0.5, size=NUM_LABELS)
        l2 = 1e-4
        _, grad_w, grad_b = objective_and_gradient(weights, bias, features, targets, l2)

        def loss_at(w, b):
            return objective_and_gradient(w, b, features, targets, l2)[0]

        eps = 1e-6
        worst = 0.0
        for point in range(10):
            if point % 2:
                k = int(rng.integers(0, NUM_LABELS))
                b_plus, b_minus = bias.copy(), bias.copy()
                b_plus[k] += eps
                b_minus[k] -= eps
                fd = (loss_at(weights, b_plus) - loss_at(weights, b_minus)) / (2 * eps)
                analytic = grad_b[k]
            else:
                i = int(rng.integers(0, NUM_LABELS))
                j = int(rng.integers(0, vocab_size))
                w_plus, w_minus = weights.copy(), weights.copy()
                w_plus[i, j] += eps
                w_minus[i, j] -= eps
                fd = (loss_at(w_plus, bias) - loss_at(w_minus, bias)) / (2 * eps)
                analytic = grad_w[i, j]
            rel = abs(fd - analytic) / max(abs(fd), abs(analytic), 1e-8)
            worst = max(worst, rel)
            assert rel < 1e-5, f"relative error {rel:.3e} at point {point}"

        corpus = [("happy great joy", EmotionLabel.JOY)] * 20 + [
            ("angry furious mad", EmotionLabel.ANGER)
        ] * 20
        model = fit_baseline(corpus, BaselineHyper())  # default epochs
        accuracy = training_accuracy(model, corpus)
        assert accuracy == 1.0, f"training accuracy {accuracy}"
        return f"worst relative error {worst:.2e} over 10 points; separable corpus at 100%"

    check("analytic gradient matches central finite differences", body)


# 6 -------------------------------------------------------------------------


def test_repeat_runs_byte_identical_with_zero_backend_invocations(
    tmp_path, ten_utterance_csv
):
    def body():
        count_file = tmp_path / "requests.log"
        config = external_run_config(
            tmp_path, ten_utterance_csv, "--count-file", str(count_file)
        )
        first = render_report(run_experiment(config), "json")
        invocations_first = count_file.read_text(encoding="utf-8").count("\n")
        assert invocations_first == 10, invocations_first

        second = render_report(run_experiment(config), "json")
        invocations_second = (
            count_file.read_text(encoding="utf-8").count("\n") - invocations_first
        )
        assert second == first, "reports differ between identical runs"
        assert invocations_second == 0, f"{invocations_second} uncached requests"
        return "byte-identical JSON, 0 of 10 utterances re-requested on second run"

    check("repeat runs are byte-identical and fully cached", body)


# 7 -------------------------------------------------------------------------


def test_report_carries_published_rows_and_delta_arithmetic():
    def body():
        placeholder = tuple(ClassScores(0, 0.0, 0.0, 0.0) for _ in range(NUM_LABELS))
        scores = ScoreReport(
            per_class=placeholder, weighted_f1=0.604, macro_f1=0.0, accuracy=0.0, n=2610
        )
        result = MethodResult(
            name="gold-transcripts",
            backend_id="oracle@1",
            classifier_id="served-model@1",
            config={},
            scores=scores,
        )
        report = ExperimentReport(
            eval_split="test", n_utterances=2610, methods=[result], config={}, seed=42
        )
        markdown = render_report(report, "markdown")
        for row in (
            "| SpeechFormer (reference) | Speech | - | 41.9 |",
            "| SpeechFormer++ (reference) | Speech | - | 47.0 |",
            "| DWFormer (reference) | Speech | - | 48.5 |",
            "| DST (reference) | Speech | - | 48.8 |",
            "| Modality-Conversion (reference) | Speech | Converting to Text Modality | 43.1 |",
            "| Modality-Conversion++ (reference) | Speech | Converting to Text Modality | 60.4 |",
        ):
            assert row in markdown, f"missing row: {row}"
        assert "| gold-transcripts (measured) | Speech | Converting to Text Modality | 60.4 |" in markdown
        assert abs(result.delta_vs_best_points - 11.6) < 1e-9
        assert "- gold-transcripts: +11.6 points" in markdown

        payload = json.loads(render_report(report, "json"))
        listed = {row["method"]: row["wf1_percent"] for row in payload["literature"]}
        assert listed == {
            "SpeechFormer": 41.9,
            "SpeechFormer++": 47.0,
            "DWFormer": 48.5,
            "DST": 48.8,
            "Modality-Conversion": 43.1,
            "Modality-Conversion++": 60.4,
        }
        assert payload["best_literature"]["wf1_percent"] == 48.8
        return "six published rows rendered; 0.604 measured gives +11.6 vs 48.8"

    check("report fidelity: published rows and delta against best reference", body)


# 8 -------------------------------------------------------------------------


def test_stub_backends_drive_documented_error_paths(tmp_path):
    def body():
        audio = tmp_path / "a.wav"
        audio.write_bytes(b"pcm")
        checks = []

        def stub(*args):
            return AsrBackendDescriptor(
                backend_id="stub-asr@1", kind="external", launch_spec=asr_stub_spec(*args)
            )

        text_map = tmp_path / "map.json"
        text_map.write_text(
            json.dumps({"k/0": "first answer", "k/1": "second answer"}), encoding="utf-8"
        )
        with AsrWorkerClient(stub("--mode", "reverse-pairs", "--text-map", str(text_map))) as client:
            with ThreadPoolExecutor(2) as pool:
                futures = {
                    key: pool.submit(client.transcribe, key, audio) for key in ("k/0", "k/1")
                }
                assert futures["k/0"].result(timeout=30) == "first answer"
                assert futures["k/1"].result(timeout=30) == "second answer"
        checks.append("out-of-order ids")

        with AsrWorkerClient(stub("--mode", "malformed")) as client:
            with pytest.raises(ProtocolError):
                client.transcribe("k/0", audio)
        checks.append("malformed line")

        with AsrWorkerClient(stub("--mode", "unknown-id")) as client:
            with pytest.raises(ProtocolError):
                client.transcribe("k/0", audio)
        checks.append("unknown id")

        with AsrWorkerClient(stub("--error-on", "k/0")) as client:
            with pytest.raises(BackendError):
                client.transcribe("k/0", audio)
            assert client.transcribe("k/1", audio) == "hello world"
        checks.append("per-utterance error")

        server = ClassifyStub()
        server.start()
        try:
            for mode, pattern in (
                ("bad-sum", "sum"),
                ("missing-key", "fear"),
                ("drop-one", "distributions"),
            ):
                server.mode = mode
                with pytest.raises(ContractError, match=pattern):
                    classify_remote(server.url, ["a", "b", "c"])
            server.mode = "flaky-then-ok"
            server.failures_remaining = 2
            assert len(classify_remote(server.url, ["text"], backoff=0.01)) == 1
        finally:
            server.stop()
        checks.append("invalid distributions and retry")

        for module in ("torch", "transformers", "fastapi", "uvicorn"):
            assert module not in sys.modules, f"{module} loaded by the harness"
        checks.append("no model-serving imports")
        return ", ".join(checks)

    check("scripted stub backends drive every documented error path", body)


# sanity: classifier predictions stay valid distributions under this gate ----


def test_thousand_random_texts_give_valid_distributions():
    def body():
        rng = np.random.default_rng(55)
        corpus = [("aa bb cc", EmotionLabel.JOY), ("bb cc dd", EmotionLabel.ANGER)] * 4
        model = fit_baseline(corpus, BaselineHyper(epochs=3))
        words = ["aa", "bb", "cc", "dd", "zz"]
        for _ in range(1000):
            text = " ".join(rng.choice(words, size=rng.integers(0, 7)))
            dist = classify_baseline(model, text)
            assert abs(sum(dist.probs) - 1.0) <= 1e-9
            assert argmax_label(dist) in LABELS
        return "1000 texts, sums within 1e-9"

    check("classifier outputs are valid distributions for arbitrary text", body)
