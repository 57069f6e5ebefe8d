"""
Running a configured experiment and rendering the comparison table
==================================================================

Wires the pieces end to end on a synthetic split: gold-transcript ASR
feeds the baseline classifier, the predictions are scored with weighted
F1, and the report renders the measured row under the published
reference rows with its delta against the best speech-based method.
"""

import tempfile
from pathlib import Path

from serbench.classifier import BaselineHyper, fit_baseline, save_baseline_model
from serbench.labels import EmotionLabel
from serbench.runner import (
    ClassifierConfig,
    ExperimentConfig,
    MethodConfig,
    render_report,
    run_experiment,
)
from serbench.asr import ORACLE_BACKEND

CSV_TEXT = """\
Utterance,Speaker,Emotion,Dialogue_ID,Utterance_ID,StartTime,EndTime
angry furious mad,Ross,anger,0,0,,
so angry and furious,Ross,anger,0,1,,
happy great joy,Monica,joy,1,0,,
what a happy great day,Monica,joy,1,1,,
the meeting is at ten,Chandler,neutral,2,0,,
please send the agenda,Chandler,neutral,2,1,,
"""

with tempfile.TemporaryDirectory() as workdir:
    workdir = Path(workdir)
    csv_path = workdir / "test.csv"
    csv_path.write_text(CSV_TEXT, encoding="utf-8")

    # train the text classifier on the same phrasing the split uses
    corpus = [
        ("angry furious mad", EmotionLabel.ANGER),
        ("so angry and furious", EmotionLabel.ANGER),
        ("happy great joy", EmotionLabel.JOY),
        ("what a happy great day", EmotionLabel.JOY),
        ("the meeting is at ten", EmotionLabel.NEUTRAL),
        ("please send the agenda", EmotionLabel.NEUTRAL),
    ]
    model_path = workdir / "model.json"
    save_baseline_model(fit_baseline(corpus, BaselineHyper(epochs=40)), model_path)

    config = ExperimentConfig(
        csv_paths={"test": str(csv_path)},
        methods=(
            MethodConfig(
                name="gold-transcripts-baseline",
                asr=ORACLE_BACKEND,
                classifier=ClassifierConfig(kind="baseline", model_path=str(model_path)),
            ),
        ),
        cache_dir=str(workdir / "cache"),
        report_out=str(workdir / "report"),
    )

    report = run_experiment(config)
    print(render_report(report, "markdown"))
