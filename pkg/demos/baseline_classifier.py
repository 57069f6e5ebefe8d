"""
Training and using the bag-of-words baseline classifier
=======================================================

TF-IDF features over a df >= 2 vocabulary feed a softmax regression
trained with seeded mini-batch gradient descent, so the same corpus and
hyperparameters always give the same model.
"""

import tempfile
from pathlib import Path

from serbench.classifier import (
    BaselineHyper,
    argmax_label,
    classify_baseline,
    fit_baseline,
    load_baseline_model,
    save_baseline_model,
    training_accuracy,
)
from serbench.labels import EmotionLabel

# a small separable corpus (texts are already normalized)
corpus = (
    [("happy great joy wonderful", EmotionLabel.JOY)] * 15
    + [("angry furious mad outraged", EmotionLabel.ANGER)] * 15
    + [("fine okay meeting ten", EmotionLabel.NEUTRAL)] * 15
)

losses = []
model = fit_baseline(corpus, BaselineHyper(epochs=10, seed=42), epoch_losses=losses)
print(f"vocabulary size: {model.vocab_size}")
print(f"model id: {model.model_id}")
print(f"objective: {losses[0]:.4f} (init) -> {losses[-1]:.4f} (epoch {len(losses) - 1})")
print(f"training accuracy: {training_accuracy(model, corpus):.0%}")
print()

# classify_baseline returns a full distribution over the 7 classes
for text in ("happy great day", "so furious right now", "unseen words only"):
    dist = classify_baseline(model, text)
    label = argmax_label(dist)
    print(f"{text!r:<24} -> {label.canonical_name:<8} p={dist.probs[label]:.3f}")

# all-unknown text gets the bias-only distribution, never an error
print()

with tempfile.TemporaryDirectory() as workdir:
    path = Path(workdir) / "model.json"
    save_baseline_model(model, path)
    loaded = load_baseline_model(path)
    same = classify_baseline(loaded, "happy great day") == classify_baseline(
        model, "happy great day"
    )
    print(f"saved {path.stat().st_size} bytes, reload predicts identically: {same}")
