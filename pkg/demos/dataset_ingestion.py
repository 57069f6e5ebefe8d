"""
Ingesting a MELD-style metadata CSV into a validated manifest
=============================================================

Parses one split's CSV (columns bound by header name, standard quoting),
builds a sorted manifest with per-class counts, and round-trips it
through the JSONL manifest format.
"""

import tempfile
from pathlib import Path

from serbench.dataset import manifest_from_csv, read_manifest, write_manifest
from serbench.labels import LABELS

CSV_TEXT = """\
Sr No.,Utterance,Speaker,Emotion,Sentiment,Dialogue_ID,Utterance_ID,Season,Episode,StartTime,EndTime
1,You did WHAT?,Ross,anger,negative,0,0,1,1,"0:00:01,000","0:00:02,500"
2,"Well, ""fine"", then.",Rachel,anger,negative,0,1,1,1,"0:00:03,000","0:00:04,000"
3,This is wonderful news!,Monica,joy,positive,1,0,1,1,"0:00:05,000","0:00:06,000"
4,The meeting is at ten.,Chandler,neutral,neutral,1,1,1,1,"0:00:07,000","0:00:08,000"
5,Oh. My. God.,Janice,surprise,positive,2,0,1,1,"0:00:09,000","0:00:10,000"
"""

with tempfile.TemporaryDirectory() as workdir:
    csv_path = Path(workdir) / "test_sent_emo.csv"
    csv_path.write_text(CSV_TEXT, encoding="utf-8")

    # one call: parse, validate, sort by (dialogue, utterance), count classes
    manifest = manifest_from_csv(csv_path, "test")
    print(f"records: {len(manifest)}")
    print(f"source digest: {manifest.source_digest[:16]}...")

    # quoted fields with embedded commas and doubled quotes come through intact
    tricky = manifest.records[1]
    print(f"tricky row -> key={tricky.utterance_key} text={tricky.gold_text!r}")
    print(f"media clip: {tricky.media_path}")

    # class counts always cover all seven labels, in ordinal order
    for label in LABELS:
        print(f"  {label.canonical_name:<9} {manifest.class_counts[label]}")

    # the JSONL manifest round-trips exactly: records, counts, digest
    out = Path(workdir) / "manifest.jsonl"
    write_manifest(manifest, out)
    loaded = read_manifest(out)
    print(f"round trip equal: {loaded.records == manifest.records}")
