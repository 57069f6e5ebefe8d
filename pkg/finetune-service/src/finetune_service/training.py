"""Fine-tune a pretrained encoder into a seven-way emotion classifier.

Reads train and dev transcript CSVs, trains a sequence-classification
head with cross-entropy, evaluates dev weighted F1 after every epoch,
and writes the checkpoint that scored best as the bundle.
"""

import hashlib
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import torch
from transformers import AutoModelForSequenceClassification, AutoTokenizer

from .data import TranscriptExample, read_transcripts
from .errors import TrainingError
from .inference import LoadedModel
from .labels import LABELS, NUM_LABELS
from .wf1 import weighted_f1

# The published approach fine-tunes a RoBERTa-base model from the
# TweetEval emotion line; the exact checkpoint is configurable.
DEFAULT_CHECKPOINT = "cardiffnlp/twitter-roberta-base-emotion"


@dataclass(frozen=True)
class FinetuneConfig:
    train_csv: str
    dev_csv: str
    output_dir: str
    base_checkpoint: str = DEFAULT_CHECKPOINT
    learning_rate: float = 2e-5
    epochs: int = 5
    batch_size: int = 16
    max_sequence_tokens: int = 128
    seed: int = 42

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.max_sequence_tokens < 1:
            raise ValueError(
                f"max_sequence_tokens must be >= 1, got {self.max_sequence_tokens}"
            )

    def echo(self) -> dict:
        """The config as recorded in bundle metadata and the training log."""
        return asdict(self)


def _model_id(config: FinetuneConfig, train_digest: str, dev_digest: str) -> str:
    payload = json.dumps(
        {
            "base_checkpoint": config.base_checkpoint,
            "learning_rate": config.learning_rate,
            "epochs": config.epochs,
            "batch_size": config.batch_size,
            "max_sequence_tokens": config.max_sequence_tokens,
            "seed": config.seed,
            "train": train_digest,
            "dev": dev_digest,
        },
        sort_keys=True,
    )
    return "finetuned-emotion@" + hashlib.sha256(payload.encode("utf-8")).hexdigest()[:8]


def _file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(65536), b""):
            h.update(block)
    return h.hexdigest()


def _encode(tokenizer, texts: list[str], max_sequence_tokens: int, device):
    encoded = tokenizer(
        texts,
        padding=True,
        truncation=True,
        max_length=max_sequence_tokens,
        return_tensors="pt",
    )
    return {k: v.to(device) for k, v in encoded.items()}


def _dev_weighted_f1(
    model, tokenizer, dev: list[TranscriptExample], max_sequence_tokens: int
) -> float:
    loaded = LoadedModel(
        model_id="", model=model, tokenizer=tokenizer, max_sequence_tokens=max_sequence_tokens
    )
    model.eval()
    predictions = loaded.predict_labels([ex.text for ex in dev])
    model.train()
    return weighted_f1([ex.label for ex in dev], predictions)


def finetune(config: FinetuneConfig) -> Path:
    """Train per the config and return the written bundle directory.

    The bundle holds the best-dev-WF1 checkpoint, the tokenizer, and
    metadata.json (model_id, config echo, per-epoch history). A
    training_log.json with the same history lands next to the bundle in
    output_dir. Raises DataError for bad input rows and TrainingError if
    the loss goes non-finite.
    """
    train = read_transcripts(config.train_csv)
    dev = read_transcripts(config.dev_csv)

    torch.manual_seed(config.seed)
    tokenizer = AutoTokenizer.from_pretrained(config.base_checkpoint)
    model = AutoModelForSequenceClassification.from_pretrained(
        config.base_checkpoint, num_labels=NUM_LABELS, ignore_mismatched_sizes=True
    )
    device = "cuda" if torch.cuda.is_available() else "cpu"
    model.to(device)
    optimizer = torch.optim.AdamW(model.parameters(), lr=config.learning_rate)
    shuffler = torch.Generator().manual_seed(config.seed)

    history: list[dict] = []
    best_state: dict | None = None
    best_epoch = 0
    best_dev_wf1 = -1.0

    model.train()
    for epoch in range(1, config.epochs + 1):
        order = torch.randperm(len(train), generator=shuffler).tolist()
        epoch_losses: list[float] = []
        for start in range(0, len(order), config.batch_size):
            batch = [train[i] for i in order[start : start + config.batch_size]]
            encoded = _encode(
                tokenizer, [ex.text for ex in batch], config.max_sequence_tokens, device
            )
            labels = torch.tensor([ex.label for ex in batch], device=device)
            output = model(**encoded, labels=labels)
            loss_value = output.loss.item()
            if not math.isfinite(loss_value):
                raise TrainingError(
                    f"non-finite training loss {loss_value!r} at epoch {epoch}"
                )
            optimizer.zero_grad()
            output.loss.backward()
            optimizer.step()
            epoch_losses.append(loss_value)

        train_loss = sum(epoch_losses) / len(epoch_losses)
        dev_wf1 = _dev_weighted_f1(model, tokenizer, dev, config.max_sequence_tokens)
        history.append({"epoch": epoch, "train_loss": train_loss, "dev_wf1": dev_wf1})
        print(f"epoch {epoch}: train loss {train_loss:.4f}  dev WF1 {dev_wf1 * 100:.1f}%")
        if dev_wf1 > best_dev_wf1:
            best_dev_wf1 = dev_wf1
            best_epoch = epoch
            best_state = {k: v.detach().cpu().clone() for k, v in model.state_dict().items()}

    assert best_state is not None
    model.load_state_dict(best_state)
    model.eval()

    output_dir = Path(config.output_dir)
    bundle_dir = output_dir / "bundle"
    bundle_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(bundle_dir)
    tokenizer.save_pretrained(bundle_dir)

    metadata = {
        "model_id": _model_id(
            config, _file_digest(config.train_csv), _file_digest(config.dev_csv)
        ),
        "labels": list(LABELS),
        "config": config.echo(),
        "best_epoch": best_epoch,
        "best_dev_wf1": best_dev_wf1,
        "history": history,
    }
    with open(bundle_dir / "metadata.json", "w", encoding="utf-8") as f:
        json.dump(metadata, f, indent=2, sort_keys=True)
        f.write("\n")
    with open(output_dir / "training_log.json", "w", encoding="utf-8") as f:
        json.dump({"config": config.echo(), "history": history}, f, indent=2, sort_keys=True)
        f.write("\n")

    print(f"best epoch {best_epoch} (dev WF1 {best_dev_wf1 * 100:.1f}%), bundle: {bundle_dir}")
    return bundle_dir
