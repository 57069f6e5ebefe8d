"""Batched inference over a loaded bundle."""

import json
from dataclasses import dataclass
from pathlib import Path

import torch
from transformers import AutoModelForSequenceClassification, AutoTokenizer

from .errors import BundleError
from .labels import NUM_LABELS

INFERENCE_BATCH_SIZE = 32


@dataclass
class LoadedModel:
    model_id: str
    model: object
    tokenizer: object
    max_sequence_tokens: int

    def classify(self, texts: list[str]) -> list[list[float]]:
        """Probability rows over the seven classes, one per input text.

        Logits come out of the head in float32; the softmax runs in
        float64 so each row sums to 1 well within wire tolerance. The
        model stays in evaluation mode, so identical input yields
        identical output.
        """
        rows: list[list[float]] = []
        with torch.no_grad():
            for start in range(0, len(texts), INFERENCE_BATCH_SIZE):
                chunk = texts[start : start + INFERENCE_BATCH_SIZE]
                encoded = self.tokenizer(
                    chunk,
                    padding=True,
                    truncation=True,
                    max_length=self.max_sequence_tokens,
                    return_tensors="pt",
                )
                encoded = {k: v.to(self.model.device) for k, v in encoded.items()}
                logits = self.model(**encoded).logits
                probs = torch.softmax(logits.double(), dim=-1)
                rows.extend(probs.cpu().tolist())
        return rows

    def predict_labels(self, texts: list[str]) -> list[int]:
        return [max(range(NUM_LABELS), key=row.__getitem__) for row in self.classify(texts)]


def load_bundle(bundle_dir: str | Path) -> LoadedModel:
    """Load a trained bundle directory for inference."""
    bundle_dir = Path(bundle_dir)
    metadata_path = bundle_dir / "metadata.json"
    if not metadata_path.is_file():
        raise BundleError(f"not a model bundle (no metadata.json): {bundle_dir}")
    with open(metadata_path, encoding="utf-8") as f:
        metadata = json.load(f)
    try:
        model_id = metadata["model_id"]
        max_sequence_tokens = int(metadata["config"]["max_sequence_tokens"])
    except (KeyError, TypeError, ValueError) as exc:
        raise BundleError(f"malformed bundle metadata in {bundle_dir}: {exc}") from exc

    tokenizer = AutoTokenizer.from_pretrained(bundle_dir)
    model = AutoModelForSequenceClassification.from_pretrained(bundle_dir)
    if model.config.num_labels != NUM_LABELS:
        raise BundleError(
            f"bundle head has {model.config.num_labels} labels, expected {NUM_LABELS}"
        )
    model.eval()
    device = "cuda" if torch.cuda.is_available() else "cpu"
    model.to(device)
    return LoadedModel(
        model_id=model_id,
        model=model,
        tokenizer=tokenizer,
        max_sequence_tokens=max_sequence_tokens,
    )
