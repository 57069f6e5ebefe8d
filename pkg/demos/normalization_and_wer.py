"""
Text normalization and word error rate
======================================

Shows the normalization every transcript passes through before scoring,
then word error rate (S+D+I over reference length) on aligned examples,
including the pooled corpus form the CLI's `wer` subcommand computes.
"""

from serbench.asr import normalize_text, word_edit_distance, word_error_rate

# lowercase; strip everything but letters, digits, apostrophes; collapse runs
for raw in ("I'm   FINE... really", "Oh. My. God.", "It's 10 o'clock!", "?!"):
    print(f"{raw!r:<28} -> {normalize_text(raw)!r}")

print()

# WER compares normalized token sequences; N is the reference length
cases = [
    ("the cat sat", "the cat sat"),   # identical: 0
    ("the cat sat", "the bat"),       # substitution + deletion: 2/3
    ("three word reference", ""),     # everything deleted: 1.0
    ("a", "a b c"),                   # insertions push WER past 1.0
    ("The CAT sat.", "the cat sat"),  # normalization eats case and punctuation
]
for ref, hyp in cases:
    print(f"WER({ref!r}, {hyp!r}) = {word_error_rate(ref, hyp):.4f}")

print()

# corpus WER pools edits over all lines instead of averaging per-line rates:
# 1 edit over 5 reference tokens is 0.2, not mean(1/3, 0) = 0.1667
refs = ["the cat sat", "hello there"]
hyps = ["the bat sat", "hello there"]
edits = sum(
    word_edit_distance(normalize_text(r).split(), normalize_text(h).split())
    for r, h in zip(refs, hyps)
)
tokens = sum(len(normalize_text(r).split()) for r in refs)
print(f"pooled corpus WER: {edits}/{tokens} = {edits / tokens:.4f}")
per_line = [word_error_rate(r, h) for r, h in zip(refs, hyps)]
print(f"mean of per-line WERs (not what the CLI reports): {sum(per_line) / 2:.4f}")
