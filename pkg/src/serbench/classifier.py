"""Text-to-emotion classifiers behind a common distribution contract.

Two backends:

* a natively trained bag-of-words softmax regression (TF-IDF features,
  mini-batch gradient descent), so the whole harness runs with no model
  server at all;
* a remote backend speaking the classify HTTP protocol, used to plug in a
  served transformer model.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import requests
from scipy import sparse

from .errors import BackendError, ContractError, SchemaError
from .hashing import text_digest
from .labels import LABEL_NAMES, NUM_LABELS, EmotionLabel

MODEL_SCHEMA_VERSION = 1
DISTRIBUTION_SUM_TOLERANCE = 1e-6


@dataclass(frozen=True)
class EmotionDistribution:
    """Probability vector over the 7 emotion classes, in ordinal order."""

    probs: tuple[float, ...]

    def __post_init__(self):
        if len(self.probs) != NUM_LABELS:
            raise ValueError(f"distribution must have {NUM_LABELS} entries, got {len(self.probs)}")
        for i, p in enumerate(self.probs):
            if not (0.0 <= p <= 1.0) or not math.isfinite(p):
                raise ValueError(f"probability out of [0, 1] at index {i}: {p}")
        total = sum(self.probs)
        if abs(total - 1.0) > DISTRIBUTION_SUM_TOLERANCE:
            raise ValueError(f"probabilities sum to {total}, not 1.0")

    @classmethod
    def from_array(cls, probs: Sequence[float]) -> "EmotionDistribution":
        return cls(tuple(float(p) for p in probs))


def argmax_label(dist: EmotionDistribution) -> EmotionLabel:
    """Most probable label; exact ties go to the lowest ordinal."""
    return EmotionLabel(int(np.argmax(dist.probs)))


@dataclass(frozen=True)
class BaselineHyper:
    """Training hyperparameters for the bag-of-words baseline."""

    l2_lambda: float = 1e-4
    learning_rate: float = 0.1
    epochs: int = 30
    batch_size: int = 64
    seed: int = 42

    def to_dict(self) -> dict:
        return {
            "l2_lambda": self.l2_lambda,
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "seed": self.seed,
        }


@dataclass
class BaselineModel:
    """Bag-of-words softmax regression over a TF-IDF vocabulary."""

    vocabulary: dict[str, int]
    idf: np.ndarray  # (V,)
    weights: np.ndarray  # (NUM_LABELS, V)
    bias: np.ndarray  # (NUM_LABELS,)
    l2_lambda: float
    trained_on_digest: str
    hyper: dict = field(default_factory=dict)

    @property
    def vocab_size(self) -> int:
        return len(self.vocabulary)

    @property
    def model_id(self) -> str:
        digest = self.trained_on_digest[:8] if self.trained_on_digest else "untrained"
        return f"baseline-bow@{MODEL_SCHEMA_VERSION}+{digest}"


def _featurize_tokens(
    tokens: Sequence[str], vocabulary: Mapping[str, int], idf: np.ndarray
) -> dict[int, float]:
    counts: dict[int, int] = {}
    for token in tokens:
        idx = vocabulary.get(token)
        if idx is not None:
            counts[idx] = counts.get(idx, 0) + 1
    if not counts:
        return {}
    values = {idx: count * float(idf[idx]) for idx, count in counts.items()}
    norm = math.sqrt(sum(v * v for v in values.values()))
    if norm == 0.0:
        return {}
    return {idx: v / norm for idx, v in values.items()}


def featurize(text: str, model: BaselineModel) -> dict[int, float]:
    """TF-IDF sparse features, L2-normalized; OOV tokens are ignored.

    Expects normalized text (whitespace tokenization). The zero vector
    (empty text, all-OOV text) stays zero.
    """
    return _featurize_tokens(text.split(), model.vocabulary, model.idf)


def _rows_to_csr(rows: Sequence[dict[int, float]], vocab_size: int) -> sparse.csr_matrix:
    data: list[float] = []
    indices: list[int] = []
    indptr = [0]
    for row in rows:
        for idx in sorted(row):
            indices.append(idx)
            data.append(row[idx])
        indptr.append(len(indices))
    return sparse.csr_matrix(
        (np.asarray(data), np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(len(rows), vocab_size),
    )


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def objective_and_gradient(
    weights: np.ndarray,
    bias: np.ndarray,
    features: sparse.spmatrix,
    targets: np.ndarray,
    l2_lambda: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean softmax cross-entropy plus (l2/2)*||W||^2, with its gradient.

    ``features`` is (n, V) sparse, ``targets`` is (n, NUM_LABELS) one-hot.
    Returns (loss, grad_weights, grad_bias).
    """
    n = features.shape[0]
    logits = features @ weights.T + bias
    probs = _softmax_rows(logits)
    # cross-entropy against the one-hot targets
    eps = np.finfo(float).tiny
    ce = -np.mean(np.log(np.maximum((probs * targets).sum(axis=1), eps)))
    loss = ce + 0.5 * l2_lambda * float((weights * weights).sum())
    delta = (probs - targets) / n  # (n, NUM_LABELS)
    grad_weights = (features.T @ delta).T + l2_lambda * weights
    grad_bias = delta.sum(axis=0)
    return float(loss), np.asarray(grad_weights), grad_bias


def corpus_digest(corpus: Sequence[tuple[str, EmotionLabel]]) -> str:
    lines = [f"{int(label)}\t{text}" for text, label in corpus]
    return text_digest("\n".join(lines))


def fit_baseline(
    corpus: Sequence[tuple[str, EmotionLabel]],
    hyper: BaselineHyper | None = None,
    *,
    epoch_losses: list[float] | None = None,
) -> BaselineModel:
    """Train the bag-of-words softmax baseline.

    Vocabulary keeps tokens with document frequency >= 2;
    idf(t) = ln((1+N)/(1+df(t))) + 1. Optimization is mini-batch gradient
    descent with shuffling driven solely by ``hyper.seed``, so identical
    inputs and hyperparameters reproduce the identical model. When
    ``epoch_losses`` is given it receives the full-corpus objective at
    initialization and after each epoch.
    """
    if not corpus:
        raise ValueError("fit_baseline: corpus is empty")
    hyper = hyper or BaselineHyper()

    n_docs = len(corpus)
    doc_tokens = [text.split() for text, _ in corpus]
    df: dict[str, int] = {}
    for tokens in doc_tokens:
        for token in set(tokens):
            df[token] = df.get(token, 0) + 1
    vocabulary = {token: i for i, token in enumerate(sorted(t for t, c in df.items() if c >= 2))}
    vocab_size = len(vocabulary)
    idf = np.zeros(vocab_size)
    for token, idx in vocabulary.items():
        idf[idx] = math.log((1 + n_docs) / (1 + df[token])) + 1.0

    rows = [_featurize_tokens(tokens, vocabulary, idf) for tokens in doc_tokens]
    features = _rows_to_csr(rows, vocab_size)
    targets = np.zeros((n_docs, NUM_LABELS))
    for i, (_, label) in enumerate(corpus):
        targets[i, int(label)] = 1.0

    weights = np.zeros((NUM_LABELS, vocab_size))
    bias = np.zeros(NUM_LABELS)
    if epoch_losses is not None:
        loss, _, _ = objective_and_gradient(weights, bias, features, targets, hyper.l2_lambda)
        epoch_losses.append(loss)

    rng = np.random.default_rng(hyper.seed)
    for _ in range(hyper.epochs):
        perm = rng.permutation(n_docs)
        for start in range(0, n_docs, hyper.batch_size):
            batch = perm[start : start + hyper.batch_size]
            _, grad_w, grad_b = objective_and_gradient(
                weights, bias, features[batch], targets[batch], hyper.l2_lambda
            )
            weights -= hyper.learning_rate * grad_w
            bias -= hyper.learning_rate * grad_b
        if epoch_losses is not None:
            loss, _, _ = objective_and_gradient(weights, bias, features, targets, hyper.l2_lambda)
            epoch_losses.append(loss)

    return BaselineModel(
        vocabulary=vocabulary,
        idf=idf,
        weights=weights,
        bias=bias,
        l2_lambda=hyper.l2_lambda,
        trained_on_digest=corpus_digest(corpus),
        hyper=hyper.to_dict(),
    )


def classify_baseline(model: BaselineModel, text: str) -> EmotionDistribution:
    """softmax(W . featurize(text) + b)."""
    scores = model.bias.astype(float).copy()
    for idx, value in featurize(text, model).items():
        scores += model.weights[:, idx] * value
    probs = _softmax_rows(scores[None, :])[0]
    return EmotionDistribution.from_array(probs)


def training_accuracy(model: BaselineModel, corpus: Sequence[tuple[str, EmotionLabel]]) -> float:
    hits = sum(
        1 for text, label in corpus if argmax_label(classify_baseline(model, text)) == label
    )
    return hits / len(corpus)


# -- persistence -------------------------------------------------------------


def save_baseline_model(model: BaselineModel, path: str | Path) -> None:
    """Write the model as a single versioned JSON document."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "schema_version": MODEL_SCHEMA_VERSION,
        "vocabulary": model.vocabulary,
        "idf": model.idf.tolist(),
        "weights": model.weights.tolist(),  # row-major: NUM_LABELS rows of V
        "bias": model.bias.tolist(),
        "l2_lambda": model.l2_lambda,
        "hyper": model.hyper,
        "trained_on_digest": model.trained_on_digest,
    }
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    with open(tmp, "w", encoding="utf-8") as f:
        json.dump(doc, f, ensure_ascii=False)
    os.replace(tmp, path)


def load_baseline_model(path: str | Path) -> BaselineModel:
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    version = doc.get("schema_version")
    if version != MODEL_SCHEMA_VERSION:
        raise SchemaError(f"{path}: unsupported model schema_version {version!r}")
    try:
        model = BaselineModel(
            vocabulary={str(k): int(v) for k, v in doc["vocabulary"].items()},
            idf=np.asarray(doc["idf"], dtype=float),
            weights=np.asarray(doc["weights"], dtype=float),
            bias=np.asarray(doc["bias"], dtype=float),
            l2_lambda=float(doc["l2_lambda"]),
            trained_on_digest=str(doc["trained_on_digest"]),
            hyper=dict(doc.get("hyper", {})),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{path}: malformed model document: {exc}") from exc
    if model.weights.shape != (NUM_LABELS, len(model.vocabulary)):
        raise SchemaError(
            f"{path}: weights shape {model.weights.shape} does not match vocabulary"
        )
    if not np.isfinite(model.weights).all() or not np.isfinite(model.bias).all():
        raise SchemaError(f"{path}: non-finite parameters")
    return model


# -- remote classify protocol -------------------------------------------------


def _parse_distribution(entry: object, index: int) -> EmotionDistribution:
    if not isinstance(entry, dict):
        raise ContractError(f"distribution {index}: expected an object, got {type(entry).__name__}")
    missing = [name for name in LABEL_NAMES if name not in entry]
    if missing:
        raise ContractError(f"distribution {index}: missing label key(s): {', '.join(missing)}")
    try:
        probs = tuple(float(entry[name]) for name in LABEL_NAMES)
    except (TypeError, ValueError) as exc:
        raise ContractError(f"distribution {index}: non-numeric probability: {exc}") from None
    try:
        return EmotionDistribution(probs)
    except ValueError as exc:
        raise ContractError(f"distribution {index}: {exc}") from None


def classify_remote(
    endpoint: str,
    texts: Sequence[str],
    *,
    timeout: float = 60.0,
    max_retries: int = 3,
    backoff: float = 0.5,
    session: requests.Session | None = None,
) -> list[EmotionDistribution]:
    """Classify a batch of texts via the classify HTTP protocol.

    Sends one POST /v1/classify request for the whole batch and preserves
    input order. Connection errors and 5xx responses are retried up to
    ``max_retries`` times with exponential backoff; every returned
    distribution is validated before anything is returned.
    """
    url = endpoint.rstrip("/") + "/v1/classify"
    payload = {"texts": list(texts)}
    http = session or requests
    response = None
    last_error: Exception | None = None
    for attempt in range(max_retries + 1):
        if attempt:
            time.sleep(backoff * (2 ** (attempt - 1)))
        try:
            response = http.post(url, json=payload, timeout=timeout)
        except requests.RequestException as exc:
            last_error = exc
            continue
        if response.status_code >= 500:
            last_error = BackendError(
                f"classify endpoint returned {response.status_code}: {response.text[:500]}"
            )
            continue
        break
    if response is None:
        raise BackendError(f"classify endpoint unreachable after retries: {last_error}")
    if response.status_code >= 500:
        raise BackendError(
            f"classify endpoint still failing after retries: {response.status_code}"
        )
    if not (200 <= response.status_code < 300):
        raise BackendError(
            f"classify endpoint returned {response.status_code}: {response.text[:500]}"
        )
    try:
        body = response.json()
    except ValueError as exc:
        raise ContractError(f"classify response is not JSON: {exc}") from None
    distributions = body.get("distributions")
    if not isinstance(distributions, list):
        raise ContractError("classify response has no distributions list")
    if len(distributions) != len(texts):
        raise ContractError(
            f"classify returned {len(distributions)} distributions for {len(texts)} texts"
        )
    return [_parse_distribution(entry, i) for i, entry in enumerate(distributions)]


def remote_model_id(endpoint: str, *, timeout: float = 10.0) -> str:
    """GET /v1/health and return the served model id."""
    url = endpoint.rstrip("/") + "/v1/health"
    try:
        response = requests.get(url, timeout=timeout)
    except requests.RequestException as exc:
        raise BackendError(f"classify endpoint health check failed: {exc}") from exc
    if response.status_code != 200:
        raise BackendError(f"classify endpoint health check returned {response.status_code}")
    try:
        return str(response.json()["model_id"])
    except (ValueError, KeyError) as exc:
        raise ContractError(f"health response missing model_id: {exc}") from None
