"""End-to-end experiment orchestration and Table-style reporting.

A method = one ASR backend (oracle or external worker) paired with one
classifier backend (native baseline or remote classify endpoint). Each
configured method is run over the evaluation split, scored with
weighted-F1, and rendered next to the published reference rows.
"""

from __future__ import annotations

import concurrent.futures
import json
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .asr import (
    ORACLE_BACKEND_ID,
    AsrBackendDescriptor,
    AsrWorkerClient,
    Transcript,
    cached_transcribe,
    normalize_text,
    word_error_rate,
)
from .classifier import (
    argmax_label,
    classify_baseline,
    classify_remote,
    load_baseline_model,
    remote_model_id,
)
from .dataset import (
    SPLITS,
    DatasetManifest,
    UtteranceRecord,
    attach_audio_paths,
    manifest_from_csv,
)
from .errors import ConfigError, SerbenchError, WarningTally
from .metrics import ScoreReport, confusion, score_report

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

REPORT_SCHEMA_VERSION = 1


# -- reference rows ----------------------------------------------------------


@dataclass(frozen=True)
class ReferenceRow:
    """One published WF1 number rendered for comparison, never recomputed."""

    method: str
    input_modality: str
    conversion: str
    wf1_percent: float
    citation: str


# Published speech-based baselines on MELD; the delta of every measured
# method is taken against the best of these.
SPEECH_BASELINE_ROWS: tuple[ReferenceRow, ...] = (
    ReferenceRow("SpeechFormer", "Speech", "-", 41.9, "reported MELD test WF1 for SpeechFormer"),
    ReferenceRow("SpeechFormer++", "Speech", "-", 47.0, "reported MELD test WF1 for SpeechFormer++"),
    ReferenceRow("DWFormer", "Speech", "-", 48.5, "reported MELD test WF1 for DWFormer"),
    ReferenceRow("DST", "Speech", "-", 48.8, "reported MELD test WF1 for DST"),
)

# Reported results for the modality-conversion methods this harness
# reimplements (ASR path and gold-transcript path).
CONVERSION_REFERENCE_ROWS: tuple[ReferenceRow, ...] = (
    ReferenceRow(
        "Modality-Conversion", "Speech", "Converting to Text Modality", 43.1,
        "reported MELD WF1, ASR conversion + fine-tuned text classifier",
    ),
    ReferenceRow(
        "Modality-Conversion++", "Speech", "Converting to Text Modality", 60.4,
        "reported MELD WF1, gold transcripts + fine-tuned text classifier",
    ),
)

ALL_REFERENCE_ROWS: tuple[ReferenceRow, ...] = SPEECH_BASELINE_ROWS + CONVERSION_REFERENCE_ROWS

BEST_SPEECH_BASELINE: ReferenceRow = max(SPEECH_BASELINE_ROWS, key=lambda row: row.wf1_percent)


# -- configuration -----------------------------------------------------------


@dataclass(frozen=True)
class ClassifierConfig:
    kind: str  # "baseline" | "remote"
    model_path: str | None = None
    endpoint: str | None = None

    def __post_init__(self):
        if self.kind == "baseline":
            if not self.model_path:
                raise ConfigError("baseline classifier needs model_path")
        elif self.kind == "remote":
            if not self.endpoint:
                raise ConfigError("remote classifier needs endpoint")
        else:
            raise ConfigError(f"unknown classifier kind: {self.kind!r}")

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.model_path is not None:
            out["model_path"] = self.model_path
        if self.endpoint is not None:
            out["endpoint"] = self.endpoint
        return out


@dataclass(frozen=True)
class MethodConfig:
    name: str
    asr: AsrBackendDescriptor
    classifier: ClassifierConfig

    def to_dict(self) -> dict:
        asr: dict = {"backend_id": self.asr.backend_id, "kind": self.asr.kind}
        if self.asr.launch_spec is not None:
            asr["launch_spec"] = list(self.asr.launch_spec)
        return {"name": self.name, "asr": asr, "classifier": self.classifier.to_dict()}


@dataclass(frozen=True)
class ExperimentConfig:
    csv_paths: dict[str, str]
    methods: tuple[MethodConfig, ...]
    media_root: str | None = None
    audio_dir: str | None = None
    eval_split: str = "test"
    cache_dir: str = "cache"
    seed: int = 42
    report_out: str = "report"
    parallelism: int = 4
    remote_batch_size: int = 64
    request_timeout: float = 120.0

    def validate(self) -> None:
        if self.eval_split not in SPLITS:
            raise ConfigError(f"unknown eval_split {self.eval_split!r}")
        if self.eval_split not in self.csv_paths:
            raise ConfigError(f"eval_split {self.eval_split!r} has no CSV in the dataset config")
        if not self.methods:
            raise ConfigError("no methods configured")
        names = [m.name for m in self.methods]
        if len(set(names)) != len(names):
            raise ConfigError(f"method names are not unique: {names}")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")

    def method(self, name: str) -> MethodConfig:
        for method in self.methods:
            if method.name == name:
                return method
        raise ConfigError(f"no method named {name!r} in config")

    def to_dict(self) -> dict:
        return {
            "dataset": {
                "csv": dict(sorted(self.csv_paths.items())),
                "media_root": self.media_root,
                "audio_dir": self.audio_dir,
            },
            "methods": [m.to_dict() for m in self.methods],
            "eval_split": self.eval_split,
            "cache_dir": self.cache_dir,
            "seed": self.seed,
            "report_out": self.report_out,
            "parallelism": self.parallelism,
            "remote_batch_size": self.remote_batch_size,
            "request_timeout": self.request_timeout,
        }


def _build_method_config(raw: dict, base: Path) -> MethodConfig:
    try:
        name = raw["name"]
        asr_raw = raw["asr"]
        clf_raw = raw["classifier"]
    except KeyError as exc:
        raise ConfigError(f"method config missing key: {exc}") from None
    launch_spec = asr_raw.get("launch_spec")
    try:
        asr = AsrBackendDescriptor(
            backend_id=asr_raw["backend_id"],
            kind=asr_raw.get("kind", "external"),
            launch_spec=launch_spec,
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"method {name!r}: bad ASR backend: {exc}") from None
    model_path = clf_raw.get("model_path")
    classifier = ClassifierConfig(
        kind=clf_raw.get("kind", "baseline"),
        model_path=str(base / model_path) if model_path else None,
        endpoint=clf_raw.get("endpoint"),
    )
    return MethodConfig(name=name, asr=asr, classifier=classifier)


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    """Load and validate a TOML experiment config.

    Relative paths are resolved against the config file's directory.
    """
    path = Path(path)
    try:
        with open(path, "rb") as f:
            raw = tomllib.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
    base = path.parent.resolve()

    dataset = raw.get("dataset", {})
    csv_raw = dataset.get("csv", {})
    if not isinstance(csv_raw, dict) or not csv_raw:
        raise ConfigError(f"{path}: [dataset.csv] must map splits to CSV paths")
    unknown_splits = set(csv_raw) - set(SPLITS)
    if unknown_splits:
        raise ConfigError(f"{path}: unknown split(s) in dataset.csv: {sorted(unknown_splits)}")
    csv_paths = {split: str(base / p) for split, p in csv_raw.items()}

    methods_raw = raw.get("methods", [])
    if not isinstance(methods_raw, list) or not methods_raw:
        raise ConfigError(f"{path}: at least one [[methods]] entry is required")
    methods = tuple(_build_method_config(m, base) for m in methods_raw)

    config = ExperimentConfig(
        csv_paths=csv_paths,
        methods=methods,
        media_root=str(base / dataset["media_root"]) if dataset.get("media_root") else None,
        audio_dir=str(base / dataset["audio_dir"]) if dataset.get("audio_dir") else None,
        eval_split=raw.get("eval_split", "test"),
        cache_dir=str(base / raw.get("cache_dir", "cache")),
        seed=int(raw.get("seed", 42)),
        report_out=str(base / raw.get("report_out", "report")),
        parallelism=int(raw.get("parallelism", 4)),
        remote_batch_size=int(raw.get("remote_batch_size", 64)),
        request_timeout=float(raw.get("request_timeout", 120.0)),
    )
    config.validate()
    return config


# -- results -----------------------------------------------------------------


@dataclass
class MethodResult:
    name: str
    backend_id: str
    classifier_id: str
    config: dict
    scores: ScoreReport | None = None
    mean_wer: float | None = None
    degenerate_count: int = 0
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None

    @property
    def wf1_percent(self) -> float | None:
        return self.scores.weighted_f1 * 100.0 if self.scores else None

    @property
    def delta_vs_best_points(self) -> float | None:
        if self.scores is None:
            return None
        return self.wf1_percent - BEST_SPEECH_BASELINE.wf1_percent

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "status": "failed" if self.failed else "ok",
            "error": self.error,
            "backend_id": self.backend_id,
            "classifier_id": self.classifier_id,
            "scores": self.scores.to_dict() if self.scores else None,
            "wf1_percent": self.wf1_percent,
            "delta_vs_best_literature_points": self.delta_vs_best_points,
            "mean_wer": self.mean_wer,
            "degenerate_transcripts": self.degenerate_count,
            "config": self.config,
        }


@dataclass
class ExperimentReport:
    eval_split: str
    n_utterances: int
    methods: list[MethodResult]
    config: dict
    seed: int
    versions: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "eval_split": self.eval_split,
            "n_utterances": self.n_utterances,
            "seed": self.seed,
            "versions": self.versions,
            "literature": [
                {
                    "method": row.method,
                    "input_modality": row.input_modality,
                    "using_modality_conversion": row.conversion,
                    "wf1_percent": row.wf1_percent,
                    "kind": "reference",
                    "citation": row.citation,
                }
                for row in ALL_REFERENCE_ROWS
            ],
            "best_literature": {
                "method": BEST_SPEECH_BASELINE.method,
                "wf1_percent": BEST_SPEECH_BASELINE.wf1_percent,
            },
            "methods": [m.to_dict() for m in self.methods],
            "config": self.config,
        }


def _tool_versions() -> dict:
    return {
        "python": platform.python_version(),
        "serbench": __version__,
        "numpy": np.__version__,
    }


# -- execution ---------------------------------------------------------------


def _transcribe_all(
    method: MethodConfig,
    records: Sequence[UtteranceRecord],
    config: ExperimentConfig,
    tally: WarningTally | None,
) -> list[Transcript]:
    """Transcribe records in manifest order through the cache.

    Transcriptions may complete out of order under the parallelism bound;
    results are reassembled in input order for scoring. The external worker
    is launched lazily, so a fully cached split never spawns it.
    """
    client: AsrWorkerClient | None = None
    if method.asr.kind == "external":
        client = AsrWorkerClient(method.asr, request_timeout=config.request_timeout)

    def one(record: UtteranceRecord) -> Transcript:
        return cached_transcribe(
            method.asr,
            record,
            config.cache_dir,
            client=client,
            request_timeout=config.request_timeout,
            tally=tally,
        )

    try:
        if config.parallelism <= 1 or len(records) <= 1:
            return [one(r) for r in records]
        with concurrent.futures.ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            return list(pool.map(one, records))
    finally:
        if client is not None and client.started:
            client.close()


def _classify_all(
    method: MethodConfig, texts: Sequence[str], config: ExperimentConfig
) -> list:
    if method.classifier.kind == "baseline":
        model = load_baseline_model(method.classifier.model_path)
        return [classify_baseline(model, text) for text in texts]
    distributions = []
    for start in range(0, len(texts), config.remote_batch_size):
        batch = list(texts[start : start + config.remote_batch_size])
        distributions.extend(
            classify_remote(method.classifier.endpoint, batch, timeout=config.request_timeout)
        )
    return distributions


def _classifier_id(method: MethodConfig) -> str:
    if method.classifier.kind == "baseline":
        return load_baseline_model(method.classifier.model_path).model_id
    return remote_model_id(method.classifier.endpoint)


def _run_method(
    method: MethodConfig,
    manifest: DatasetManifest,
    config: ExperimentConfig,
    tally: WarningTally | None,
) -> MethodResult:
    records: Sequence[UtteranceRecord] = manifest.records
    if method.asr.kind == "external":
        if not config.audio_dir:
            raise ConfigError(f"method {method.name!r} needs dataset.audio_dir for external ASR")
        records = attach_audio_paths(records, config.audio_dir)

    classifier_id = _classifier_id(method)
    transcripts = _transcribe_all(method, records, config, tally)
    backend_id = transcripts[0].backend_id if transcripts else method.asr.backend_id

    distributions = _classify_all(method, [t.text for t in transcripts], config)
    preds = [argmax_label(d) for d in distributions]
    golds = [r.emotion for r in records]
    scores = score_report(confusion(golds, preds))

    mean_wer: float | None = None
    if method.asr.kind == "external":
        wers = [
            word_error_rate(record.gold_text, transcript.text)
            for record, transcript in zip(records, transcripts)
            if normalize_text(record.gold_text)
        ]
        mean_wer = sum(wers) / len(wers) if wers else None

    return MethodResult(
        name=method.name,
        backend_id=backend_id,
        classifier_id=classifier_id,
        config=method.to_dict(),
        scores=scores,
        mean_wer=mean_wer,
        degenerate_count=sum(1 for t in transcripts if t.is_degenerate),
    )


def run_experiment(
    config: ExperimentConfig, *, tally: WarningTally | None = None
) -> ExperimentReport:
    """Run every configured method over the evaluation split and score it.

    A method that fails hard is marked failed in the report with its error;
    the remaining methods still run. Identical config, seed, and inputs
    produce a byte-identical machine-readable report.
    """
    config.validate()
    manifest = manifest_from_csv(
        config.csv_paths[config.eval_split], config.eval_split, tally=tally
    )
    if len(manifest) == 0:
        raise ValueError(f"evaluation split {config.eval_split!r} is empty")

    results: list[MethodResult] = []
    for method in config.methods:
        try:
            results.append(_run_method(method, manifest, config, tally))
        except Exception as exc:  # method isolation: record and continue
            results.append(
                MethodResult(
                    name=method.name,
                    backend_id=method.asr.backend_id,
                    classifier_id=method.classifier.kind,
                    config=method.to_dict(),
                    error=f"{type(exc).__name__}: {exc}",
                )
            )

    return ExperimentReport(
        eval_split=config.eval_split,
        n_utterances=len(manifest),
        methods=results,
        config=config.to_dict(),
        seed=config.seed,
        versions=_tool_versions(),
    )


# -- rendering ---------------------------------------------------------------


def _fmt_pct(value: float) -> str:
    return f"{value:.1f}"


def render_report(report: ExperimentReport, format: str = "markdown") -> str:
    """Render a report as a Table-1-style markdown document or canonical JSON.

    Both renderings draw every number from the same report object; the
    markdown shows percentages rounded to one decimal, the JSON keeps full
    precision.
    """
    if format == "json":
        return json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"
    if format != "markdown":
        raise ValueError(f"unknown report format: {format!r}")

    lines = [
        "# Speech emotion recognition comparison",
        "",
        f"Evaluation split: `{report.eval_split}` ({report.n_utterances} utterances), seed {report.seed}.",
        "",
        "| Method | Input Modality | Using Modality Conversion | WF1(%) |",
        "|---|---|---|---|",
    ]
    for row in ALL_REFERENCE_ROWS:
        lines.append(
            f"| {row.method} (reference) | {row.input_modality} | {row.conversion} "
            f"| {_fmt_pct(row.wf1_percent)} |"
        )
    for result in report.methods:
        if result.failed:
            lines.append(
                f"| {result.name} (measured) | Speech | Converting to Text Modality | failed |"
            )
        else:
            lines.append(
                f"| {result.name} (measured) | Speech | Converting to Text Modality "
                f"| {_fmt_pct(result.wf1_percent)} |"
            )
    lines.append("")
    lines.append(
        f"Delta vs best speech-based reference "
        f"({BEST_SPEECH_BASELINE.method}, {_fmt_pct(BEST_SPEECH_BASELINE.wf1_percent)} WF1):"
    )
    for result in report.methods:
        if result.failed:
            lines.append(f"- {result.name}: failed ({result.error})")
        else:
            lines.append(f"- {result.name}: {result.delta_vs_best_points:+.1f} points")
    lines.append("")

    for result in report.methods:
        lines.append(f"## {result.name}")
        lines.append("")
        if result.failed:
            lines.append(f"Failed: `{result.error}`")
            lines.append("")
            continue
        scores = result.scores
        lines.append(f"- ASR backend: `{result.backend_id}`")
        lines.append(f"- Classifier: `{result.classifier_id}`")
        lines.append(f"- Weighted F1: {_fmt_pct(result.wf1_percent)}%")
        lines.append(f"- Accuracy: {_fmt_pct(scores.accuracy * 100)}%")
        lines.append(f"- Macro F1: {_fmt_pct(scores.macro_f1 * 100)}%")
        if result.mean_wer is not None:
            lines.append(f"- Mean WER vs gold: {result.mean_wer:.4f}")
        lines.append(f"- Degenerate (empty) transcripts: {result.degenerate_count}")
        lines.append("")
    return "\n".join(lines)


def write_report_files(report: ExperimentReport, report_out: str | Path) -> tuple[Path, Path]:
    """Write <report_out>.json and <report_out>.md; returns both paths."""
    report_out = Path(report_out)
    report_out.parent.mkdir(parents=True, exist_ok=True)
    json_path = report_out.with_name(report_out.name + ".json")
    md_path = report_out.with_name(report_out.name + ".md")
    json_path.write_text(render_report(report, "json"), encoding="utf-8")
    md_path.write_text(render_report(report, "markdown"), encoding="utf-8")
    return json_path, md_path


# -- transcript export -------------------------------------------------------


def export_transcripts(
    config: ExperimentConfig,
    split: str,
    method_name: str,
    out_path: str | Path,
    *,
    tally: WarningTally | None = None,
) -> int:
    """Write the transcript-training CSV for one method's ASR backend.

    Columns: utterance_key,split,text,emotion (normalized text). This is
    the interchange a downstream fine-tuning job trains on. Per-utterance
    backend failures go to ``<out_path>.errors.jsonl``; the return value is
    the failure count (nonzero means the export is incomplete).
    """
    import csv as _csv

    method = config.method(method_name)
    if split not in config.csv_paths:
        raise ConfigError(f"split {split!r} has no CSV in the dataset config")
    manifest = manifest_from_csv(config.csv_paths[split], split, tally=tally)
    records: Sequence[UtteranceRecord] = manifest.records
    if method.asr.kind == "external":
        if not config.audio_dir:
            raise ConfigError(f"method {method_name!r} needs dataset.audio_dir for external ASR")
        records = attach_audio_paths(records, config.audio_dir)

    client: AsrWorkerClient | None = None
    if method.asr.kind == "external":
        client = AsrWorkerClient(method.asr, request_timeout=config.request_timeout)

    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    errors_path = out_path.with_name(out_path.name + ".errors.jsonl")
    failures: list[dict] = []
    try:
        with open(out_path, "w", encoding="utf-8", newline="") as f:
            writer = _csv.writer(f)
            writer.writerow(["utterance_key", "split", "text", "emotion"])
            for record in records:
                try:
                    transcript = cached_transcribe(
                        method.asr,
                        record,
                        config.cache_dir,
                        client=client,
                        request_timeout=config.request_timeout,
                        tally=tally,
                    )
                except (SerbenchError, OSError, ValueError) as exc:
                    failures.append(
                        {"utterance_key": record.utterance_key, "error": f"{type(exc).__name__}: {exc}"}
                    )
                    continue
                writer.writerow(
                    [record.utterance_key, split, transcript.text, record.emotion.canonical_name]
                )
    finally:
        if client is not None and client.started:
            client.close()

    if failures:
        with open(errors_path, "w", encoding="utf-8") as f:
            for entry in failures:
                f.write(json.dumps(entry, ensure_ascii=False) + "\n")
    return len(failures)
