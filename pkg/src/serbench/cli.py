"""Command-line surface.

Exit codes: 0 success, 1 execution failure, 2 usage or config error.
Diagnostics go to stderr; data and summaries go to stdout.
"""

from __future__ import annotations

import argparse
import shlex
import sys
from pathlib import Path

from .asr import normalize_text, word_edit_distance
from .classifier import BaselineHyper, fit_baseline, save_baseline_model
from .dataset import (
    DEFAULT_EXTRACT_TEMPLATE,
    SPLITS,
    attach_audio_paths,
    build_manifest,
    extract_audio,
    parse_meld_csv,
    write_manifest,
)
from .errors import ConfigError, SerbenchError, WarningTally
from .hashing import file_digest
from .labels import LABELS, EmotionLabel
from .runner import (
    export_transcripts,
    load_experiment_config,
    run_experiment,
    write_report_files,
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _cmd_ingest(args: argparse.Namespace) -> int:
    tally = WarningTally()
    records = parse_meld_csv(args.csv, args.split, tally=tally)
    if args.media_root and args.audio_out:
        tool = tuple(shlex.split(args.extract_tool)) if args.extract_tool else DEFAULT_EXTRACT_TEMPLATE
        extracted = 0
        for record in records:
            extract_audio(record, args.media_root, args.audio_out, tool=tool)
            extracted += 1
        records = attach_audio_paths(records, args.audio_out)
        print(f"extracted {extracted} audio files to {args.audio_out}")
    manifest = build_manifest(records, args.split, source_digest=file_digest(args.csv))
    write_manifest(manifest, args.manifest_out)
    print(f"wrote manifest: {args.manifest_out}")
    print(f"records: {len(manifest)}")
    counts = " ".join(
        f"{label.canonical_name}={manifest.class_counts[label]}" for label in LABELS
    )
    print(f"class counts: {counts}")
    print(f"degenerate: {len(manifest.degenerate_keys)}")
    print(f"warnings: {tally.total}")
    return EXIT_OK


def _cmd_run(args: argparse.Namespace) -> int:
    config = load_experiment_config(args.config)
    report = run_experiment(config)
    json_path, md_path = write_report_files(report, config.report_out)
    print(f"wrote report: {json_path}")
    print(f"wrote report: {md_path}")
    ok = 0
    for result in report.methods:
        if result.failed:
            print(f"{result.name}: FAILED ({result.error})")
        else:
            print(f"{result.name}: WF1 {result.wf1_percent:.1f}%")
            ok += 1
    return EXIT_OK if ok else EXIT_FAILURE


def _cmd_export(args: argparse.Namespace) -> int:
    config = load_experiment_config(args.config)
    failures = export_transcripts(config, args.split, args.backend, args.out)
    print(f"wrote transcripts: {args.out}")
    if failures:
        print(f"failed utterances: {failures} (see {args.out}.errors.jsonl)", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def _read_lines(path: str) -> list[str]:
    return Path(path).read_text(encoding="utf-8").splitlines()


def _cmd_wer(args: argparse.Namespace) -> int:
    refs = _read_lines(args.ref_file)
    hyps = _read_lines(args.hyp_file)
    if len(refs) != len(hyps):
        print(f"line count mismatch: {len(refs)} refs vs {len(hyps)} hyps", file=sys.stderr)
        return EXIT_FAILURE
    total_edits = 0
    total_ref_tokens = 0
    for ref, hyp in zip(refs, hyps):
        ref_tokens = normalize_text(ref).split()
        hyp_tokens = normalize_text(hyp).split()
        total_edits += word_edit_distance(ref_tokens, hyp_tokens)
        total_ref_tokens += len(ref_tokens)
    if total_ref_tokens == 0:
        print("no reference tokens after normalization", file=sys.stderr)
        return EXIT_FAILURE
    print(f"{total_edits / total_ref_tokens:.4f}")
    return EXIT_OK


def _cmd_train_baseline(args: argparse.Namespace) -> int:
    import csv as _csv

    corpus: list[tuple[str, EmotionLabel]] = []
    with open(args.transcripts, "r", encoding="utf-8", newline="") as f:
        reader = _csv.DictReader(f)
        for column in ("text", "emotion"):
            if reader.fieldnames is None or column not in reader.fieldnames:
                print(f"transcripts CSV missing column: {column}", file=sys.stderr)
                return EXIT_FAILURE
        for row in reader:
            corpus.append((normalize_text(row["text"]), EmotionLabel.parse(row["emotion"])))
    hyper = BaselineHyper(
        l2_lambda=args.l2_lambda,
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
    )
    losses: list[float] = []
    model = fit_baseline(corpus, hyper, epoch_losses=losses)
    save_baseline_model(model, args.model_out)
    print(f"wrote model: {args.model_out}")
    print(f"examples: {len(corpus)}  vocabulary: {model.vocab_size}")
    if losses:
        print(f"loss: {losses[0]:.6f} -> {losses[-1]:.6f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="serbench",
        description="Speech emotion recognition benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a MELD CSV, optionally extract audio, write a manifest")
    p.add_argument("--csv", required=True, help="MELD metadata CSV for one split")
    p.add_argument("--split", required=True, choices=SPLITS)
    p.add_argument("--media-root", help="directory holding the split's media clips")
    p.add_argument("--audio-out", help="directory for extracted 16 kHz mono WAV files")
    p.add_argument(
        "--extract-tool",
        help="extraction command template with {input} and {output} placeholders "
        "(default: ffmpeg to 16 kHz mono s16 WAV)",
    )
    p.add_argument("--manifest-out", required=True, help="output manifest JSONL path")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("run", help="run every configured method and write the report")
    p.add_argument("--config", required=True, help="experiment TOML config")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("export", help="export transcripts as training CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--split", required=True, choices=SPLITS)
    p.add_argument("--backend", required=True, help="method name whose ASR backend to use")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=_cmd_export)

    p = sub.add_parser(
        "wer",
        help="corpus word error rate between two line-aligned files",
        description=(
            "Computes corpus-level WER by pooling edits over all lines "
            "(total edits / total reference tokens), not by averaging "
            "per-line rates."
        ),
    )
    p.add_argument("--ref-file", required=True, help="reference text, one utterance per line")
    p.add_argument("--hyp-file", required=True, help="hypothesis text, one utterance per line")
    p.set_defaults(func=_cmd_wer)

    p = sub.add_parser("train-baseline", help="train the bag-of-words baseline classifier")
    p.add_argument("--transcripts", required=True, help="transcript CSV (utterance_key,split,text,emotion)")
    p.add_argument("--model-out", required=True, help="output model JSON path")
    p.add_argument("--l2-lambda", type=float, default=BaselineHyper.l2_lambda)
    p.add_argument("--learning-rate", type=float, default=BaselineHyper.learning_rate)
    p.add_argument("--epochs", type=int, default=BaselineHyper.epochs)
    p.add_argument("--batch-size", type=int, default=BaselineHyper.batch_size)
    p.add_argument("--seed", type=int, default=BaselineHyper.seed)
    p.set_defaults(func=_cmd_train_baseline)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SerbenchError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
