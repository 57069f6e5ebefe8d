import csv
import json
from pathlib import Path

import pytest
import torch
from tokenizers import Tokenizer
from tokenizers.models import WordLevel
from tokenizers.pre_tokenizers import Whitespace
from tokenizers.processors import TemplateProcessing
from transformers import (
    PreTrainedTokenizerFast,
    RobertaConfig,
    RobertaForSequenceClassification,
)

from finetune_service.labels import LABELS
from finetune_service.training import FinetuneConfig, finetune

# One distinctive keyword triple per emotion, so tiny corpora are
# linearly separable and a few epochs suffice.
KEYWORDS = {
    "anger": "angry furious mad",
    "disgust": "gross yuck nasty",
    "fear": "scared afraid worried",
    "joy": "happy great joy",
    "neutral": "calm fine okay",
    "sadness": "sad tears lonely",
    "surprise": "whoa shocked unexpected",
}

FILLER = ["i", "am", "so", "this", "is", "very", "feel", "really", "today"]


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory) -> Path:
    """A local random-init encoder checkpoint with a word-level tokenizer."""
    path = tmp_path_factory.mktemp("tiny-checkpoint")

    vocab = {"<s>": 0, "<pad>": 1, "</s>": 2, "<unk>": 3}
    for phrase in KEYWORDS.values():
        for word in phrase.split():
            vocab[word] = len(vocab)
    for word in FILLER:
        vocab[word] = len(vocab)

    tokenizer = Tokenizer(WordLevel(vocab, unk_token="<unk>"))
    tokenizer.pre_tokenizer = Whitespace()
    tokenizer.post_processor = TemplateProcessing(
        single="<s> $A </s>",
        pair="<s> $A </s> </s> $B </s>",
        special_tokens=[("<s>", 0), ("</s>", 2)],
    )
    fast = PreTrainedTokenizerFast(
        tokenizer_object=tokenizer,
        model_max_length=64,
        bos_token="<s>",
        eos_token="</s>",
        unk_token="<unk>",
        pad_token="<pad>",
        cls_token="<s>",
        sep_token="</s>",
    )
    fast.save_pretrained(path)

    torch.manual_seed(7)
    config = RobertaConfig(
        vocab_size=len(vocab),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=66,
        pad_token_id=1,
        bos_token_id=0,
        eos_token_id=2,
        type_vocab_size=1,
        num_labels=len(LABELS),
        id2label={i: name for i, name in enumerate(LABELS)},
        label2id={name: i for i, name in enumerate(LABELS)},
    )
    RobertaForSequenceClassification(config).save_pretrained(path)
    return path


def write_transcripts(path: Path, rows: list[tuple[str, str, str, str]]) -> Path:
    """rows: (utterance_key, split, text, emotion)."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["utterance_key", "split", "text", "emotion"])
        writer.writerows(rows)
    return path


def keyword_rows(split: str, per_label: int, vary: bool = False) -> list[tuple]:
    """A separable corpus: per_label keyword utterances for each emotion."""
    rows = []
    for label, phrase in KEYWORDS.items():
        for i in range(per_label):
            text = f"{FILLER[i % len(FILLER)]} {phrase}" if vary else phrase
            rows.append((f"{split}/{len(rows)}/0", split, text, label))
    return rows


@pytest.fixture(scope="session")
def toy_corpus(tmp_path_factory) -> dict:
    base = tmp_path_factory.mktemp("toy-corpus")
    train = write_transcripts(base / "train.csv", keyword_rows("train", 6, vary=True))
    dev = write_transcripts(base / "dev.csv", keyword_rows("dev", 2, vary=True))
    return {"train": train, "dev": dev}


@pytest.fixture(scope="session")
def trained_bundle(tiny_checkpoint, toy_corpus, tmp_path_factory) -> Path:
    """A bundle fine-tuned on the toy corpus, shared across service tests."""
    out = tmp_path_factory.mktemp("trained")
    config = FinetuneConfig(
        train_csv=str(toy_corpus["train"]),
        dev_csv=str(toy_corpus["dev"]),
        output_dir=str(out),
        base_checkpoint=str(tiny_checkpoint),
        learning_rate=5e-3,
        epochs=12,
        batch_size=8,
        max_sequence_tokens=32,
        seed=42,
    )
    return finetune(config)


def bundle_metadata(bundle_dir: Path) -> dict:
    with open(bundle_dir / "metadata.json", encoding="utf-8") as f:
        return json.load(f)


ACCEPTANCE_RESULTS: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(line)
